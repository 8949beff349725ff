#include "csv.hpp"

#include <charconv>
#include <cstdio>
#include <istream>

#include "netadjust/error.hpp"

namespace netadjust::csv {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? comma : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Reader::Reader(std::istream& in, std::string source, std::vector<std::string> required)
    : in_(in), source_(std::move(source)), names_(std::move(required)) {
  if (!std::getline(in_, buffer_)) {
    throw Error(ErrorCode::kSchema, source_ + ": missing header");
  }
  line_ = 1;
  // Strip a UTF-8 byte-order mark.
  if (buffer_.size() >= 3 && buffer_.compare(0, 3, "\xEF\xBB\xBF") == 0) buffer_.erase(0, 3);
  auto header = split(buffer_);
  for (const auto& name : names_) {
    std::size_t pos = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) {
        pos = i;
        break;
      }
    }
    if (pos == header.size()) {
      throw Error(ErrorCode::kSchema, source_ + ": header lacks column '" + name + "'");
    }
    positions_.push_back(pos);
  }
}

bool Reader::next() {
  while (std::getline(in_, buffer_)) {
    ++line_;
    std::string_view view(buffer_);
    while (!view.empty() && (view.back() == '\r' || view.back() == ' ')) view.remove_suffix(1);
    if (view.empty()) continue;
    fields_ = split(view);
    for (auto pos : positions_) {
      if (pos >= fields_.size()) fail("too few fields");
    }
    return true;
  }
  return false;
}

std::string_view Reader::text(std::size_t column) const { return fields_[positions_.at(column)]; }

int Reader::integer(std::size_t column) const {
  auto field = text(column);
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    fail("column '" + names_[column] + "': expected integer, got '" + std::string(field) + "'");
  }
  return value;
}

double Reader::real(std::size_t column) const {
  auto field = text(column);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    fail("column '" + names_[column] + "': expected number, got '" + std::string(field) + "'");
  }
  return value;
}

void Reader::fail(const std::string& what) const {
  throw Error(ErrorCode::kSchema, source_ + ":" + std::to_string(line_) + ": " + what);
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 12);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

}  // namespace netadjust::csv
