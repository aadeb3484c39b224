#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace wfopt {

/// Dense row-major matrix of doubles. Particles, velocities and decision
/// matrices all use this type.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double &operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    std::span<double> row(std::size_t r) { return flat().subspan(r * cols_, cols_); }
    std::span<const double> row(std::size_t r) const { return flat().subspan(r * cols_, cols_); }

    bool operator==(const Matrix &) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double frobenius_distance(const Matrix &a, const Matrix &b) {
    assert(a.rows() == b.rows() && a.cols() == b.cols());
    double sum = 0.0;
    auto fa = a.flat();
    auto fb = b.flat();
    for (std::size_t i = 0; i < fa.size(); ++i) {
        const double d = fa[i] - fb[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

} // namespace wfopt
