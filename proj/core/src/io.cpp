#include "loctest/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "loctest/errors.hpp"

namespace loctest {

namespace {

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

std::string_view trim(std::string_view field) {
  const auto first = field.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = field.find_last_not_of(" \t\r");
  return field.substr(first, last - first + 1);
}

double parse_field(std::string_view field, std::size_t line_no) {
  const std::string_view body = trim(field);
  if (body.empty())
    throw parse_error("empty field", line_no);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
  if (ec != std::errc{} || ptr != body.data() + body.size())
    throw parse_error("not a number: '" + std::string(body) + "'", line_no);
  return value;
}

void parse_line(std::string_view line, std::size_t line_no, std::vector<double>& out) {
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    const std::string_view field =
        comma == std::string_view::npos ? line.substr(start) : line.substr(start, comma - start);
    out.push_back(parse_field(field, line_no));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
}

}  // namespace

Matrix read_csv(std::istream& in, bool skip_header) {
  std::vector<double> values;
  std::size_t cols = 0, rows = 0;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = skip_header;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    row.clear();
    parse_line(line, line_no, row);
    if (cols == 0) {
      cols = row.size();
    } else if (row.size() != cols) {
      throw parse_error("expected " + std::to_string(cols) + " fields, got " +
                            std::to_string(row.size()),
                        line_no);
    }
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw parse_error("no data rows", line_no == 0 ? 1 : line_no);
  Matrix out(rows, cols);
  std::copy(values.begin(), values.end(), out.data());
  return out;
}

Matrix read_csv_file(const std::string& path, bool skip_header) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'", 1);
  return read_csv(in, skip_header);
}

Vector parse_vector(std::string_view text) {
  std::vector<double> out;
  parse_line(text, 1, out);
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

void write_csv(std::ostream& out, const Matrix& values) {
  for (std::size_t i = 0; i < values.rows(); ++i) {
    for (std::size_t j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      out << format_double(values(i, j));
    }
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Matrix& values) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open '" + path + "' for writing", 1);
  write_csv(out, values);
  if (!out.good()) throw parse_error("write failed for '" + path + "'", 1);
}

}  // namespace loctest
