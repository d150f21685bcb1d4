// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "stensor/matrix.hpp"
#include "stensor/stencil.hpp"

namespace stensor {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

/// Reference into the input grid produced by the lazy b_map; `flat == npos`
/// marks a ZERO (padding) entry.
struct BRef {
    std::size_t flat = npos;
    bool is_zero() const { return flat == npos; }
};

/// Stencil flattening output: kernel row vector A plus the implicit im2row
/// matrix B, defined by an index map instead of materialized storage.
struct FlattenedForm {
    std::vector<double> a_vector;  // length k_total = prod(kext)
    int dims = 0;
    std::array<int, 3> kext{1, 1, 1};      // kernel extent per axis
    std::vector<std::size_t> grid_dims;    // input extents
    std::vector<std::size_t> out_dims;     // N_i - k + 1 per axis
    std::size_t b_rows = 0, b_cols = 0;    // b_dims = (k_total, output_count)

    BRef b_at(std::size_t row, std::size_t col) const;
};

/// Two-level staircase descriptor: block_count blocks of block_size columns,
/// stencil extent k at both levels. Innermost z_factor (3D only) is a dense
/// per-unit factor expanded by cross-product during matching.
struct StairMeta {
    std::size_t block_count = 0;
    std::size_t block_size = 0;
    int k = 0;
};

/// Morphed (flatten + crush) layout. A is the staircase kernel matrix; B'
/// stays implicit through b_at(). After the permutation-invariant transform
/// is applied, col_origin maps permuted A-column / B-row positions back to
/// pre-permutation column indices (npos for appended zero columns).
struct MorphedLayout {
    Matrix a;                          // m' x (k' + padding after PIT)
    std::vector<std::uint8_t> structural;  // band pattern mask, same shape as a
    int r1 = 1, r2 = 1;
    int dims = 0;
    std::array<int, 3> kext{1, 1, 1};
    std::vector<std::size_t> grid_dims;
    std::vector<std::size_t> out_dims;      // true output extents per axis
    std::size_t padded_out_y = 1;           // morph-vertical output extent, padded to r2
    std::size_t padded_out_x = 1;           // morph-horizontal output extent, padded to r1
    std::size_t m_prime = 0, k_prime = 0, n_prime = 0;
    StairMeta stair;
    std::size_t z_factor = 1;
    std::vector<std::size_t> col_origin;    // size a.cols; identity before PIT

    bool structural_at(std::size_t r, std::size_t c) const {
        return structural[r * a.cols + c] != 0;
    }
    BRef b_at(std::size_t row, std::size_t col) const;

    struct OutPos {
        bool valid = false;      // false for virtual-padding positions
        std::size_t flat = 0;    // row-major index into the output interior
    };
    /// The fixed bijection between product cells and output positions.
    OutPos output_position(std::size_t a_row, std::size_t b_col) const;
};

FlattenedForm flatten(const StencilSpec& spec, std::span<const std::size_t> grid_dims);

MorphedLayout crush(const FlattenedForm& flat, int r1, int r2);

/// (m', k', n') for a k x k kernel on an m x n grid under (r1, r2) morphing,
/// with virtual padding making the output extents divisible.
struct MorphDims {
    std::size_t m_prime, k_prime, n_prime;
};
MorphDims morph_dims(int k, std::size_t m, std::size_t n, int r1, int r2);

/// Generalized shape for any dimensionality (used by the performance model).
MorphDims morph_shape(int dims, int k, std::span<const std::size_t> grid_dims, int r1, int r2);

struct StaircaseCheck {
    bool ok = true;
    std::size_t row = 0, col = 0;  // first violation when !ok
};

/// Self-similar staircase verification of a morphed layout (global block
/// pattern plus every nonzero block), on the structural mask.
StaircaseCheck verify_staircase(const MorphedLayout& layout);

/// Single-level predicate: A[r][c] != 0  <=>  r <= c <= r + k - 1.
StaircaseCheck staircase_check(const Matrix& a, int k);

/// Materializes one B' entry.
double b_entry(const MorphedLayout& layout, const Grid& grid, std::size_t row, std::size_t col);

/// Desk-scale helper: materialize B' (or post-PIT B'') as a dense matrix.
Matrix materialize_b(const MorphedLayout& layout, const Grid& grid);
Matrix materialize_b(const FlattenedForm& flat, const Grid& grid);

}  // namespace stensor
