#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mrpval::csv {

// Shortest round-trip representation; NaN is written as "NA".
std::string format(double value);

std::vector<std::string> split_line(std::string_view line);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Throws ParseError when the column is absent.
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;
};

// Reads a header line followed by rows; rows must match the header width.
Table read(std::istream& in);

double parse_double(std::string_view field);  // "NA" -> NaN
long long parse_int(std::string_view field);

// Writes `content` to `path` only when the file is absent or differs.
// Returns true when the file was (re)written.
bool write_if_changed(const std::string& path, const std::string& content);

}  // namespace mrpval::csv
