// SPDX-License-Identifier: Apache-2.0
#include "stensor/layout.hpp"

#include <stdexcept>

namespace stensor {

namespace {

constexpr int kMergeBound = 16;  // beyond one fragment extent k' growth has no payoff

std::size_t ceil_to(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

struct Axes {
    int kx = 1, ky = 1, kz = 1;
    std::size_t gx = 1, gy = 1, gz = 1;  // grid extents
    std::size_t ox = 1, oy = 1, oz = 1;  // output extents
};

Axes split_axes(int dims, const std::array<int, 3>& kext, std::span<const std::size_t> grid,
                std::span<const std::size_t> out) {
    Axes ax;
    ax.kx = kext[dims - 1];
    ax.gx = grid[dims - 1];
    ax.ox = out[dims - 1];
    if (dims >= 2) {
        ax.ky = kext[dims - 2];
        ax.gy = grid[dims - 2];
        ax.oy = out[dims - 2];
    }
    if (dims == 3) {
        ax.kz = kext[0];
        ax.gz = grid[0];
        ax.oz = out[0];
    }
    return ax;
}

}  // namespace

BRef FlattenedForm::b_at(std::size_t row, std::size_t col) const {
    // row: kernel cell, row-major over kext; col: placement, row-major over out_dims
    std::size_t cell = row, place = col;
    std::size_t flat = 0;
    std::array<std::size_t, 3> kcoord{}, pcoord{};
    for (int a = dims; a-- > 0;) {
        kcoord[a] = cell % static_cast<std::size_t>(kext[a]);
        cell /= static_cast<std::size_t>(kext[a]);
        pcoord[a] = place % out_dims[a];
        place /= out_dims[a];
    }
    for (int a = 0; a < dims; ++a) flat = flat * grid_dims[a] + pcoord[a] + kcoord[a];
    return BRef{flat};
}

FlattenedForm flatten(const StencilSpec& spec, std::span<const std::size_t> grid_dims) {
    validate(spec);
    if (grid_dims.size() != static_cast<std::size_t>(spec.dims))
        throw std::invalid_argument("grid dimensionality does not match stencil");
    for (auto d : grid_dims)
        if (d < static_cast<std::size_t>(spec.k))
            throw std::invalid_argument("grid smaller than kernel");

    FlattenedForm f;
    f.a_vector = dense_weights(spec);
    f.dims = spec.dims;
    for (int a = 0; a < spec.dims; ++a) f.kext[a] = spec.k;
    f.grid_dims.assign(grid_dims.begin(), grid_dims.end());
    std::size_t n_out = 1;
    for (auto d : grid_dims) {
        f.out_dims.push_back(d - static_cast<std::size_t>(spec.k) + 1);
        n_out *= f.out_dims.back();
    }
    f.b_rows = f.a_vector.size();
    f.b_cols = n_out;
    return f;
}

MorphDims morph_dims(int k, std::size_t m, std::size_t n, int r1, int r2) {
    if (r1 < 1 || r2 < 1) throw std::invalid_argument("merge factors must be >= 1");
    const std::size_t oy = m - static_cast<std::size_t>(k) + 1;
    const std::size_t ox = n - static_cast<std::size_t>(k) + 1;
    MorphDims d;
    d.m_prime = static_cast<std::size_t>(r1) * static_cast<std::size_t>(r2);
    d.k_prime = static_cast<std::size_t>(k + r1 - 1) * static_cast<std::size_t>(k + r2 - 1);
    d.n_prime = ceil_to(oy, static_cast<std::size_t>(r2)) / static_cast<std::size_t>(r2) *
                (ceil_to(ox, static_cast<std::size_t>(r1)) / static_cast<std::size_t>(r1));
    return d;
}

MorphDims morph_shape(int dims, int k, std::span<const std::size_t> grid_dims, int r1, int r2) {
    if (r1 < 1 || r2 < 1) throw std::invalid_argument("merge factors must be >= 1");
    if (dims == 1 && r2 != 1) throw std::invalid_argument("1D morphing requires r2 = 1");
    const std::size_t uk = static_cast<std::size_t>(k);
    MorphDims d;
    d.m_prime = static_cast<std::size_t>(r1) * static_cast<std::size_t>(r2);
    const int kx = k, ky = dims >= 2 ? k : 1, kz = dims == 3 ? k : 1;
    d.k_prime = static_cast<std::size_t>(kz) * static_cast<std::size_t>(ky + r2 - 1) *
                static_cast<std::size_t>(kx + r1 - 1);
    const std::size_t ox = grid_dims[dims - 1] - uk + 1;
    const std::size_t oy = dims >= 2 ? grid_dims[dims - 2] - uk + 1 : 1;
    const std::size_t oz = dims == 3 ? grid_dims[0] - uk + 1 : 1;
    d.n_prime = oz * (ceil_to(oy, static_cast<std::size_t>(r2)) / static_cast<std::size_t>(r2)) *
                (ceil_to(ox, static_cast<std::size_t>(r1)) / static_cast<std::size_t>(r1));
    return d;
}

MorphedLayout crush(const FlattenedForm& flat, int r1, int r2) {
    if (r1 < 1 || r2 < 1) throw std::invalid_argument("merge factors must be >= 1");
    if (r1 > kMergeBound || r2 > kMergeBound)
        throw std::invalid_argument("merge factor exceeds fragment bound");
    if (flat.dims == 1 && r2 != 1) throw std::invalid_argument("1D morphing requires r2 = 1");

    MorphedLayout lay;
    lay.r1 = r1;
    lay.r2 = r2;
    lay.dims = flat.dims;
    lay.kext = flat.kext;
    lay.grid_dims = flat.grid_dims;
    lay.out_dims = flat.out_dims;

    const Axes ax = split_axes(flat.dims, flat.kext, flat.grid_dims, flat.out_dims);
    lay.padded_out_x = ceil_to(ax.ox, static_cast<std::size_t>(r1));
    lay.padded_out_y = ceil_to(ax.oy, static_cast<std::size_t>(r2));

    const std::size_t wv = static_cast<std::size_t>(ax.kx + r1 - 1);
    const std::size_t wu = static_cast<std::size_t>(ax.ky + r2 - 1);
    lay.z_factor = static_cast<std::size_t>(ax.kz);
    lay.m_prime = static_cast<std::size_t>(r1) * static_cast<std::size_t>(r2);
    lay.k_prime = wv * wu * lay.z_factor;
    lay.n_prime =
        ax.oz * (lay.padded_out_y / static_cast<std::size_t>(r2)) * (lay.padded_out_x / static_cast<std::size_t>(r1));
    lay.stair = StairMeta{wu, wv, ax.kx};

    lay.a = Matrix(lay.m_prime, lay.k_prime);
    lay.structural.assign(lay.m_prime * lay.k_prime, 0);
    for (std::size_t row = 0; row < lay.m_prime; ++row) {
        const std::size_t dx = row / static_cast<std::size_t>(r2);
        const std::size_t dy = row % static_cast<std::size_t>(r2);
        for (std::size_t v = 0; v < wv; ++v) {
            if (v < dx || v >= dx + static_cast<std::size_t>(ax.kx)) continue;
            for (std::size_t u = 0; u < wu; ++u) {
                if (u < dy || u >= dy + static_cast<std::size_t>(ax.ky)) continue;
                for (std::size_t z = 0; z < lay.z_factor; ++z) {
                    // canonical order: z slowest, then u, v fastest, so the
                    // r1 = r2 = 1 layout coincides with the flattened form
                    const std::size_t col = (z * wu + u) * wv + v;
                    const std::size_t widx =
                        (z * static_cast<std::size_t>(ax.ky) + (u - dy)) * static_cast<std::size_t>(ax.kx) +
                        (v - dx);
                    lay.a.at(row, col) = flat.a_vector[widx];
                    lay.structural[row * lay.k_prime + col] = 1;
                }
            }
        }
    }
    lay.col_origin.resize(lay.k_prime);
    for (std::size_t j = 0; j < lay.k_prime; ++j) lay.col_origin[j] = j;
    return lay;
}

BRef MorphedLayout::b_at(std::size_t row, std::size_t col) const {
    if (row >= a.cols || col >= n_prime) throw std::out_of_range("b_at index out of range");
    const std::size_t j = col_origin[row];
    if (j == npos) return BRef{};  // appended zero column

    const Axes ax = split_axes(dims, kext, grid_dims, out_dims);
    const std::size_t wu = stair.block_count, wv = stair.block_size;
    const std::size_t z = j / (wu * wv);
    const std::size_t u = (j % (wu * wv)) / wv;
    const std::size_t v = j % wv;

    const std::size_t tx_count = padded_out_x / static_cast<std::size_t>(r1);
    const std::size_t tx = col % tx_count;
    const std::size_t ty = (col / tx_count) % (padded_out_y / static_cast<std::size_t>(r2));
    const std::size_t zo = col / (tx_count * (padded_out_y / static_cast<std::size_t>(r2)));

    const std::size_t x = tx * static_cast<std::size_t>(r1) + v;
    if (x >= ax.gx) return BRef{};
    std::size_t flat = x;
    if (dims >= 2) {
        const std::size_t y = ty * static_cast<std::size_t>(r2) + u;
        if (y >= ax.gy) return BRef{};
        flat = y * ax.gx + x;
        if (dims == 3) flat += (zo + z) * ax.gy * ax.gx;
    }
    return BRef{flat};
}

MorphedLayout::OutPos MorphedLayout::output_position(std::size_t a_row, std::size_t b_col) const {
    const Axes ax = split_axes(dims, kext, grid_dims, out_dims);
    const std::size_t dx = a_row / static_cast<std::size_t>(r2);
    const std::size_t dy = a_row % static_cast<std::size_t>(r2);
    const std::size_t tx_count = padded_out_x / static_cast<std::size_t>(r1);
    const std::size_t ty_count = padded_out_y / static_cast<std::size_t>(r2);
    const std::size_t tx = b_col % tx_count;
    const std::size_t ty = (b_col / tx_count) % ty_count;
    const std::size_t zo = b_col / (tx_count * ty_count);

    const std::size_t x = tx * static_cast<std::size_t>(r1) + dx;
    const std::size_t y = ty * static_cast<std::size_t>(r2) + dy;
    OutPos p;
    if (x >= ax.ox || y >= ax.oy) return p;
    p.valid = true;
    p.flat = x;
    if (dims >= 2) p.flat = y * ax.ox + x;
    if (dims == 3) p.flat += zo * ax.oy * ax.ox;
    return p;
}

StaircaseCheck verify_staircase(const MorphedLayout& layout) {
    // canonical in-order check: column position q itself names the
    // (z, u, v) unit, so permuted (post-PIT) layouts do not pass
    const std::size_t wu = layout.stair.block_count, wv = layout.stair.block_size;
    const Axes ax = split_axes(layout.dims, layout.kext, layout.grid_dims, layout.out_dims);
    for (std::size_t row = 0; row < layout.a.rows; ++row) {
        const std::size_t dx = row / static_cast<std::size_t>(layout.r2);
        const std::size_t dy = row % static_cast<std::size_t>(layout.r2);
        for (std::size_t q = 0; q < layout.a.cols; ++q) {
            bool expected = false;
            if (q < wu * wv * layout.z_factor && layout.col_origin[q] == q) {
                const std::size_t u = (q % (wu * wv)) / wv;
                const std::size_t v = q % wv;
                expected = v >= dx && v < dx + static_cast<std::size_t>(ax.kx) && u >= dy &&
                           u < dy + static_cast<std::size_t>(ax.ky);
            } else if (layout.col_origin[q] != npos && layout.col_origin[q] != q) {
                return {false, row, q};  // column out of canonical position
            }
            if (layout.structural_at(row, q) != expected) return {false, row, q};
        }
    }
    return {};
}

StaircaseCheck staircase_check(const Matrix& a, int k) {
    for (std::size_t r = 0; r < a.rows; ++r)
        for (std::size_t c = 0; c < a.cols; ++c) {
            const bool in_band = c >= r && c <= r + static_cast<std::size_t>(k) - 1;
            if ((a.at(r, c) != 0.0) != in_band) return {false, r, c};
        }
    return {};
}

double b_entry(const MorphedLayout& layout, const Grid& grid, std::size_t row, std::size_t col) {
    const BRef ref = layout.b_at(row, col);
    return ref.is_zero() ? 0.0 : grid.values[ref.flat];
}

Matrix materialize_b(const MorphedLayout& layout, const Grid& grid) {
    Matrix b(layout.a.cols, layout.n_prime);
    for (std::size_t r = 0; r < b.rows; ++r)
        for (std::size_t c = 0; c < b.cols; ++c) b.at(r, c) = b_entry(layout, grid, r, c);
    return b;
}

Matrix materialize_b(const FlattenedForm& flat, const Grid& grid) {
    Matrix b(flat.b_rows, flat.b_cols);
    for (std::size_t r = 0; r < b.rows; ++r)
        for (std::size_t c = 0; c < b.cols; ++c) {
            const BRef ref = flat.b_at(r, c);
            b.at(r, c) = grid.values[ref.flat];
        }
    return b;
}

}  // namespace stensor
