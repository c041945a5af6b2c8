#include "mrpval/draws.hpp"

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

#include "mrpval/csv.hpp"
#include "mrpval/errors.hpp"

namespace mrpval {

std::vector<double> DrawMatrix::column(std::size_t j) const {
    std::vector<double> out(draws_);
    for (std::size_t b = 0; b < draws_; ++b) out[b] = data_[b * cells_ + j];
    return out;
}

void DrawMatrix::set_column(std::size_t j, std::span<const double> values) {
    if (values.size() != draws_) throw LengthMismatch("column length does not match draw count");
    for (std::size_t b = 0; b < draws_; ++b) data_[b * cells_ + j] = values[b];
}

std::vector<double> DrawMatrix::column_means() const {
    std::vector<double> m(cells_, 0.0);
    for (std::size_t b = 0; b < draws_; ++b) {
        const double* r = data_.data() + b * cells_;
        for (std::size_t j = 0; j < cells_; ++j) m[j] += r[j];
    }
    for (auto& v : m) v /= static_cast<double>(draws_);
    return m;
}

void write_draws_csv(std::ostream& out, const DrawMatrix& m) {
    for (std::size_t j = 0; j < m.num_cells(); ++j) out << (j ? ",c" : "c") << j;
    out << '\n';
    for (std::size_t b = 0; b < m.num_draws(); ++b) {
        for (std::size_t j = 0; j < m.num_cells(); ++j) out << (j ? "," : "") << csv::format(m(b, j));
        out << '\n';
    }
}

DrawMatrix read_draws_csv(std::istream& in) {
    const auto t = csv::read(in);
    DrawMatrix m(t.rows.size(), t.header.size());
    for (std::size_t b = 0; b < t.rows.size(); ++b) {
        for (std::size_t j = 0; j < t.header.size(); ++j) m(b, j) = csv::parse_double(t.rows[b][j]);
    }
    return m;
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary draw format assumes little-endian");

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ParseError("truncated binary draws");
    return v;
}

}  // namespace

void write_draws_binary(std::ostream& out, const DrawMatrix& m) {
    put<std::uint64_t>(out, m.num_draws());
    put<std::uint64_t>(out, m.num_cells());
    out.write(reinterpret_cast<const char*>(m.data().data()),
              static_cast<std::streamsize>(m.data().size() * sizeof(double)));
}

DrawMatrix read_draws_binary(std::istream& in) {
    const auto draws = get<std::uint64_t>(in);
    const auto cells = get<std::uint64_t>(in);
    DrawMatrix m(draws, cells);
    for (std::size_t b = 0; b < draws; ++b) {
        for (std::size_t j = 0; j < cells; ++j) m(b, j) = get<double>(in);
    }
    return m;
}

}  // namespace mrpval
