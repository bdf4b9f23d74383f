#pragma once

#include <span>
#include <string>
#include <vector>

namespace lelab {

/// Locale-independent decimal rendering with 15 significant digits.
std::string format_real(double value);

/// Compact rendering of an exponent for file names (10 -> "10", 12.5 -> "12.5").
std::string format_tag(double value);

/// Minimal CSV assembly; every file gets a header row and uses '\n' line ends.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace lelab
