#include "mrpval/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <sstream>

#include "mrpval/errors.hpp"

namespace mrpval {

namespace {

std::string join_ids(const std::vector<std::size_t>& ids) {
    std::ostringstream os;
    const std::size_t shown = std::min<std::size_t>(ids.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) os << (i ? "," : "") << ids[i];
    if (ids.size() > shown) os << ",... (" << ids.size() << " total)";
    return os.str();
}

}  // namespace

UnobservedCell::UnobservedCell(std::vector<std::size_t> cells)
    : Error("cells lack required observations: " + join_ids(cells)), cells_(std::move(cells)) {}

namespace csv {

std::string format(double value) {
    if (std::isnan(value)) return "NA";
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) throw Error("cannot format value");
    return std::string(buf.data(), ptr);
}

std::vector<std::string> split_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(std::move(field));
    return out;
}

std::size_t Table::column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("missing column: " + std::string(name));
    return static_cast<std::size_t>(std::distance(header.begin(), it));
}

bool Table::has_column(std::string_view name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

Table read(std::istream& in) {
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV input");
    t.header = split_line(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto row = split_line(line);
        if (row.size() != t.header.size()) {
            throw ParseError("line " + std::to_string(lineno) + ": expected " +
                             std::to_string(t.header.size()) + " fields, got " +
                             std::to_string(row.size()));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

double parse_double(std::string_view field) {
    if (field == "NA" || field == "nan" || field == "NaN") return std::nan("");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError("not a number: '" + std::string(field) + "'");
    }
    return v;
}

long long parse_int(std::string_view field) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError("not an integer: '" + std::string(field) + "'");
    }
    return v;
}

bool write_if_changed(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (fs::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        std::string existing((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (existing == content) return false;
    }
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open for writing: " + tmp);
        out << content;
    }
    fs::rename(tmp, path);
    return true;
}

}  // namespace csv
}  // namespace mrpval
