// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "stensor/matrix.hpp"
#include "stensor/stencil.hpp"

namespace stensor {

/// Tensor-core fragment extents. K must be divisible by 4.
struct FragmentShape {
    std::size_t m = 16, k = 32, n = 8;
};

inline constexpr FragmentShape kFragSparse{16, 32, 8};
inline constexpr FragmentShape kFragDense{16, 16, 8};

struct EmulationConfig {
    Precision value_precision = Precision::exact64;
    // accumulation is fixed by precision: 32-bit for round16, exact for exact64
};

/// Compressed 2:4 operand: two kept values per 4-group plus their 2-bit
/// in-group positions (pos0 < pos1), one byte per group: pos0 | pos1 << 2.
struct Sparse24Matrix {
    std::size_t rows = 0;
    std::size_t logical_cols = 0;          // divisible by 4
    std::vector<double> values;            // rows x logical_cols/2
    std::vector<std::uint8_t> meta;        // rows x logical_cols/4

    std::size_t groups_per_row() const { return logical_cols / 4; }
    double value_at(std::size_t r, std::size_t slot) const {
        return values[r * (logical_cols / 2) + slot];
    }
    std::uint8_t meta_at(std::size_t r, std::size_t grp) const {
        return meta[r * (logical_cols / 4) + grp];
    }
};

Sparse24Matrix compress_24(const Matrix& dense);
Matrix decompress(const Sparse24Matrix& sparse);

/// D = (decompressed A) x B + C on one fragment. With round16, A and B
/// entries are rounded to the binary16 grid and products accumulate in
/// 32-bit floats; with exact64 everything is double.
Matrix sparse_mma_fragment(const Sparse24Matrix& a, const Matrix& b, const Matrix& c,
                           const FragmentShape& frag, const EmulationConfig& cfg);

/// Lazily materializes B entries; rows within [0, b_rows), cols within
/// [0, b_cols) as passed to tiled_sparse_matmul.
using ColumnProvider = std::function<double(std::size_t row, std::size_t col)>;

struct TiledResult {
    Matrix d;                      // a.rows x b_cols
    std::uint64_t issued_mma = 0;  // fragment ops actually executed
};

TiledResult tiled_sparse_matmul(const Sparse24Matrix& a, const ColumnProvider& b,
                                std::size_t b_cols, const FragmentShape& frag,
                                const EmulationConfig& cfg);

/// Little-endian binary dump / load (format documented in docs/formats.md).
void dump_sparse24(std::ostream& out, const Sparse24Matrix& s, Precision tag);
Sparse24Matrix load_sparse24(std::istream& in, Precision* tag_out = nullptr);

}  // namespace stensor
