#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace absorbmc {

/// Round-trip-exact decimal form of a double (17 significant digits, '.'
/// decimal point, no locale dependence).
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

using CsvValue = std::variant<std::int64_t, double, std::string>;

/// Comma-separated writer: one header row, '.' decimals, LF line endings.
class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void header(const std::vector<std::string>& names) { write_row_strings(names); }

    void row(const std::vector<CsvValue>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (const CsvValue& v : values) {
            if (std::holds_alternative<std::int64_t>(v))
                cells.push_back(std::to_string(std::get<std::int64_t>(v)));
            else if (std::holds_alternative<double>(v))
                cells.push_back(format_double(std::get<double>(v)));
            else
                cells.push_back(std::get<std::string>(v));
        }
        write_row_strings(cells);
    }

  private:
    void write_row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ostream& out_;
};

}  // namespace absorbmc
