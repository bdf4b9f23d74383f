#include "lelab/format.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lelab/error.hpp"

namespace lelab {

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 15);
  return std::string(buf, res.ptr);
}

std::string format_tag(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

std::string CsvTable::str() const {
  std::ostringstream out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  emit(header_);
  for (const auto& row : rows_) emit(row);
  return out.str();
}

void CsvTable::write(const std::string& path) const {
  std::ofstream file(path, std::ios::binary);
  ensure(static_cast<bool>(file), ErrorKind::InvalidArgument, "cannot open " + path + " for writing");
  file << str();
}

}  // namespace lelab
