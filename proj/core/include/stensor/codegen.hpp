// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stensor/convert.hpp"
#include "stensor/emulator.hpp"
#include "stensor/layout.hpp"
#include "stensor/perf.hpp"
#include "stensor/stencil.hpp"

namespace stensor {

/// Thread-block geometry used by the emitted kernel (benchmark defaults:
/// 1024 for 1D, 32x64 for 2D, 8x64 for 3D).
struct BlockConfig {
    std::size_t x = 32, y = 64;
    std::size_t threads() const { return x * y; }
};
BlockConfig default_block_config(int dims);

/// Host-precomputed global addresses for the shared-memory staging tile.
/// Each block covers cols_per_block consecutive operand columns; entries are
/// element-unit offsets relative to the block base (-1 for ZERO slots), so
/// no division or modulus survives into the emitted inner loop.
struct LookupTable {
    std::size_t b_rows = 0;         // operand rows staged per block
    std::size_t cols_per_block = 0;
    std::size_t block_count = 0;
    BlockConfig block_config;
    std::vector<std::int64_t> base;     // per block, flat grid element index
    std::vector<std::int64_t> entries;  // block-major, then row-major (b_rows x cols_per_block)

    std::int64_t entry(std::size_t blk, std::size_t row, std::size_t col) const {
        return entries[(blk * b_rows + row) * cols_per_block + col];
    }
};
inline constexpr std::int64_t kLutZero = -1;

LookupTable build_lut(const MorphedLayout& layout, const BlockConfig& block);

/// Gather through the LUT; reproduces the materialized operand exactly.
Matrix gather_b(const LookupTable& lut, const MorphedLayout& layout, const Grid& grid);

struct KernelPlan {
    std::string stencil_name;
    int dims = 0;
    int k = 0;
    std::vector<std::size_t> grid_dims;
    MorphedLayout layout;   // post-PIT, 4-aligned
    Permutation perm;
    Sparse24Matrix a2;      // compressed kernel operand
    FragmentShape fragment;
    LookupTable lut;
    BlockConfig block;
    Precision precision = Precision::exact64;
    std::size_t p = 0;           // matching zero columns
    std::size_t align_cols = 0;  // alignment zero columns
    bool used_blossom = false;
};

/// Builds and re-validates a plan (check_24, permutation bijectivity).
KernelPlan make_plan(std::string stencil_name, const MorphedLayout& layout,
                     const Conversion& cv, const HardwareDescriptor& hw,
                     Precision precision);

/// Deterministic GPU-dialect source text: three-stage double-buffered
/// pipeline with LUT-driven loads and metadata-driven sparse MMA calls.
/// Tables above blob_threshold elements reference external blobs instead of
/// being embedded.
std::string emit_kernel(const KernelPlan& plan, std::size_t blob_threshold = 1 << 16);

/// Structural lint of emitted kernel text: three stage markers present and
/// buffer indices alternate. Returns an empty string on success, else a
/// diagnostic.
std::string lint_kernel(const std::string& text);

struct VerificationResult {
    std::string status = "unverified-scale";  // verified | mismatch | conversion-failed | unverified-scale
    double max_abs_err = 0, max_rel_err = 0;
    std::size_t bad_row = 0, bad_col = 0;  // for conversion-failed
};

/// JSON compile report (schema in docs/formats.md).
std::string emit_report(const KernelPlan& plan, const PerfEstimate& perf,
                        const VerificationResult& verification,
                        std::uint64_t issued_mma, double model_gstencil);

}  // namespace stensor
