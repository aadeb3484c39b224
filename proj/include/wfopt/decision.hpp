#pragma once

#include "error.hpp"
#include "matrix.hpp"

#include <cstddef>
#include <string>

namespace wfopt {

/// n x (m + 2) design matrix: columns 0 and 1 hold turbine x and y in
/// meters, column 2 + j holds each turbine's yaw (radians, relative to the
/// flow of wind state j).
class DecisionMatrix {
public:
    DecisionMatrix() = default;
    DecisionMatrix(std::size_t turbines, std::size_t states) : m_(turbines, states + 2) {}

    /// Wraps an existing n x (m + 2) matrix.
    explicit DecisionMatrix(Matrix m) : m_(std::move(m)) {
        detail::require(m_.cols() >= 2, "decision matrix needs at least the two position columns");
    }

    std::size_t turbines() const { return m_.rows(); }
    std::size_t states() const { return m_.cols() - 2; }

    double &x(std::size_t i) { return m_(i, 0); }
    double &y(std::size_t i) { return m_(i, 1); }
    double &yaw(std::size_t i, std::size_t j) { return m_(i, 2 + j); }
    double x(std::size_t i) const { return m_(i, 0); }
    double y(std::size_t i) const { return m_(i, 1); }
    double yaw(std::size_t i, std::size_t j) const { return m_(i, 2 + j); }

    /// n x 2 position block.
    Matrix positions() const {
        Matrix p(turbines(), 2);
        for (std::size_t i = 0; i < turbines(); ++i) {
            p(i, 0) = x(i);
            p(i, 1) = y(i);
        }
        return p;
    }

    /// n x m yaw block.
    Matrix yaws() const {
        Matrix g(turbines(), states());
        for (std::size_t i = 0; i < turbines(); ++i) {
            for (std::size_t j = 0; j < states(); ++j) {
                g(i, j) = yaw(i, j);
            }
        }
        return g;
    }

    void set_positions(const Matrix &p) {
        detail::require(p.rows() == turbines() && p.cols() == 2, "position block has wrong shape");
        for (std::size_t i = 0; i < turbines(); ++i) {
            x(i) = p(i, 0);
            y(i) = p(i, 1);
        }
    }

    void set_yaws(const Matrix &g) {
        detail::require(g.rows() == turbines() && g.cols() == states(), "yaw block has wrong shape");
        for (std::size_t i = 0; i < turbines(); ++i) {
            for (std::size_t j = 0; j < states(); ++j) {
                yaw(i, j) = g(i, j);
            }
        }
    }

    /// Zero misalignment for every turbine and state.
    DecisionMatrix greedy() const {
        DecisionMatrix g(turbines(), states());
        g.set_positions(positions());
        return g;
    }

    const Matrix &matrix() const { return m_; }
    Matrix &matrix() { return m_; }

    bool operator==(const DecisionMatrix &) const = default;

private:
    Matrix m_;
};

inline DecisionMatrix make_decision(const Matrix &positions, const Matrix &yaws) {
    detail::require(positions.cols() == 2, "positions must be n x 2");
    detail::require(yaws.rows() == positions.rows(), "yaw rows must match turbine count");
    DecisionMatrix X(positions.rows(), yaws.cols());
    X.set_positions(positions);
    X.set_yaws(yaws);
    return X;
}

} // namespace wfopt
