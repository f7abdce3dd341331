#ifndef LOCTEST_IO_HPP
#define LOCTEST_IO_HPP

#include <iosfwd>
#include <string>
#include <string_view>

#include "loctest/matrix.hpp"

namespace loctest {

// Reads a headerless CSV of reals, one observation per row, consistent row
// width. Blank lines are skipped; with skip_header the first non-blank line
// is discarded. Malformed input raises parse_error carrying the 1-based line
// number.
Matrix read_csv(std::istream& in, bool skip_header = false);
Matrix read_csv_file(const std::string& path, bool skip_header = false);

// Parses a comma-separated vector literal like "0.1,-0.2".
Vector parse_vector(std::string_view text);

// Writes comma-separated rows with enough digits to round-trip doubles.
void write_csv(std::ostream& out, const Matrix& values);
void write_csv_file(const std::string& path, const Matrix& values);

// Formats a double with round-trip precision (shortest exact form).
std::string format_double(double value);

}  // namespace loctest

#endif  // LOCTEST_IO_HPP
