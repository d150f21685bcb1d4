// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stensor {

enum class StencilShape { star, box };
enum class Precision { exact64, round16 };

struct StencilPoint {
    std::array<int, 3> off{};  // axis order: slowest..fastest; unused axes 0
    double weight = 0.0;
};

/// A stencil kernel: d-dimensional weighted neighborhood of extent k per axis
/// (k odd). Points are kept sorted lexicographically by offset (row-major
/// over the kernel hypercube); only declared points are stored, but
/// dense_weights() expands to the full k^d cube with explicit zeros.
struct StencilSpec {
    std::string name;
    int dims = 0;
    StencilShape shape = StencilShape::box;
    int k = 0;
    std::vector<StencilPoint> points;

    int radius() const { return (k - 1) / 2; }
    std::size_t kernel_cells() const;  // k^dims
};

struct Grid {
    std::vector<std::size_t> dims;  // extent per axis, slowest..fastest
    std::vector<double> values;     // row-major
    Precision precision = Precision::exact64;

    std::size_t size() const;
    double at(std::span<const std::size_t> idx) const;
};

struct Throughput {
    double gstencils_per_sec = 0.0;
    std::uint64_t iterations = 0;
    std::vector<std::size_t> point_counts;
    double seconds = 0.0;
};

/// Validates invariants; throws std::invalid_argument on violation.
void validate(const StencilSpec& spec);

/// Kernel weights expanded to the full k^dims hypercube, row-major, with
/// explicit zeros for absent positions.
std::vector<double> dense_weights(const StencilSpec& spec);

/// Parses the plain-text key/value spec document (see docs/formats.md).
StencilSpec parse_stencil_spec(std::string_view text);

/// Named benchmark presets: Heat-1D, 1D5P, Heat-2D, Box-2D9P, Star-2D13P,
/// Box-2D49P, Heat-3D, Box-3D27P.
StencilSpec stencil_preset(std::string_view name);
std::vector<std::string> preset_names();
bool is_preset(std::string_view name);

/// Ground-truth evaluator. Returns the interior region only (extent
/// N_i - k + 1 per axis after each step), always accumulating in 64-bit
/// reals regardless of grid precision.
Grid direct_apply(const StencilSpec& spec, const Grid& grid, std::uint64_t steps);

/// Discrete self-convolution of the kernel t times; one application of the
/// fused kernel equals t applications of the original on the common interior.
StencilSpec fuse_time_steps(const StencilSpec& spec, std::uint64_t t);

/// GStencil/s: T * prod(N_i) / (t * 1e9).
Throughput gstencil_rate(std::uint64_t iterations, std::span<const std::size_t> dims,
                         double t_sec);

/// Seeded grid with dyadic values in [0,1) (8 fractional bits), so exact64
/// pipelines reproduce the oracle bit-exactly regardless of summation order.
Grid random_grid(std::span<const std::size_t> dims, std::uint64_t seed,
                 Precision precision = Precision::exact64);

}  // namespace stensor
