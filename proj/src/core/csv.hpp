#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace netadjust::csv {

// Minimal reader for the headered, comma-separated, unquoted numeric files
// this tool exchanges. Columns are addressed by name; extra columns are
// ignored.
class Reader {
 public:
  Reader(std::istream& in, std::string source, std::vector<std::string> required);

  bool next();
  std::size_t line() const { return line_; }
  const std::string& source() const { return source_; }

  int integer(std::size_t column) const;
  double real(std::size_t column) const;
  std::string_view text(std::size_t column) const;

  [[noreturn]] void fail(const std::string& what) const;

 private:
  std::istream& in_;
  std::string source_;
  std::vector<std::size_t> positions_;
  std::vector<std::string> names_;
  std::string buffer_;
  std::vector<std::string_view> fields_;
  std::size_t line_ = 0;
};

std::string format_double(double value);

}  // namespace netadjust::csv
