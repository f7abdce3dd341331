#ifndef LOCTEST_OUTCOME_HPP
#define LOCTEST_OUTCOME_HPP

#include <map>
#include <optional>
#include <string>

namespace loctest {

/// Decision record shared by every test in the library. Region-based tests
/// fill threshold with the squared credible radius; chi-square tests fill it
/// with the critical value at their significance level and also set p_value.
struct TestOutcome {
  std::string method;
  double statistic = 0.0;
  double threshold = 0.0;
  bool reject = false;
  std::optional<double> p_value;
  std::map<std::string, double> diagnostics;
};

}  // namespace loctest

#endif
