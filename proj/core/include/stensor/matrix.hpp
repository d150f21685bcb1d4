// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stensor {

/// Minimal dense row-major matrix of doubles. Desk-scale only; the big
/// operand (B') is never materialized through this type.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool operator==(const Matrix&) const = default;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: dimension mismatch");
    Matrix d(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t t = 0; t < a.cols; ++t) {
            const double av = a.at(i, t);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) d.at(i, j) += av * b.at(t, j);
        }
    return d;
}

}  // namespace stensor
