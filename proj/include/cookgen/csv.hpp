#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "cookgen/errors.hpp"

namespace cookgen {

// Comma-separated, header row, '.' decimal. Numbers use %.10g so reruns
// with equal inputs produce byte-identical files.
class CsvWriter {
 public:
  using Cell = std::variant<std::string, double, long long>;

  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw FormatError("cannot open '" + path.string() + "' for writing");
    columns_ = header.size();
    for (size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != columns_)
      throw InvalidArgument("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(columns_));
    for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << format(cells[i]);
    out_ << '\n';
    out_.flush();
  }

  static std::string format(const Cell& c) {
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", std::get<double>(c));
    return buf;
  }

 private:
  std::ofstream out_;
  size_t columns_ = 0;
};

}  // namespace cookgen
