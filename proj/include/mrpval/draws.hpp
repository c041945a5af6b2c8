#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace mrpval {

// B x J matrix of per-draw cell quantities, row-major (row = draw).
class DrawMatrix {
public:
    DrawMatrix() = default;
    DrawMatrix(std::size_t draws, std::size_t cells, double fill = 0.0)
        : draws_(draws), cells_(cells), data_(draws * cells, fill) {}

    std::size_t num_draws() const noexcept { return draws_; }
    std::size_t num_cells() const noexcept { return cells_; }

    double operator()(std::size_t b, std::size_t j) const { return data_[b * cells_ + j]; }
    double& operator()(std::size_t b, std::size_t j) { return data_[b * cells_ + j]; }

    std::span<const double> row(std::size_t b) const { return {data_.data() + b * cells_, cells_}; }
    std::span<double> row(std::size_t b) { return {data_.data() + b * cells_, cells_}; }

    std::vector<double> column(std::size_t j) const;
    void set_column(std::size_t j, std::span<const double> values);
    std::vector<double> column_means() const;

    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const DrawMatrix&, const DrawMatrix&) = default;

private:
    std::size_t draws_ = 0;
    std::size_t cells_ = 0;
    std::vector<double> data_;
};

// Header c0..c{J-1}, one row per draw.
void write_draws_csv(std::ostream& out, const DrawMatrix& m);
DrawMatrix read_draws_csv(std::istream& in);

// Little-endian: uint64 draws, uint64 cells, then draws*cells doubles.
void write_draws_binary(std::ostream& out, const DrawMatrix& m);
DrawMatrix read_draws_binary(std::istream& in);

}  // namespace mrpval
