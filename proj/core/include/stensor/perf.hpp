// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stensor/emulator.hpp"
#include "stensor/stencil.hpp"

namespace stensor {

struct HardwareDescriptor {
    std::string name;
    double cpi_tcu = 0;            // cycles per MMA instruction
    double f = 0;                  // core frequency, Hz
    double n_tcu = 0;              // tensor-core count
    double bw_g = 0;               // global-memory bandwidth, bytes/s
    double bw_s = 0;               // shared-memory bandwidth, bytes/s
    FragmentShape fragment{16, 32, 8};
    double bytes_per_element = 2;  // operand payload size
};

struct PerfEstimate {
    int r1 = 1, r2 = 1;
    std::size_t m_prime = 0, k_prime = 0, n_prime = 0;
    std::uint64_t n_mma = 0;
    double data_r = 0, data_w = 0;            // global bytes
    double data_trans_r = 0, data_trans_w = 0;  // shared-memory bytes
    double t_compute = 0, t_memory = 0, t_total = 0;  // seconds
};

std::uint64_t n_mma(std::size_t m_prime, std::size_t k_prime, std::size_t n_prime,
                    const FragmentShape& frag);

PerfEstimate estimate(const HardwareDescriptor& hw, int dims,
                      std::span<const std::size_t> grid_dims, int k, int r1, int r2);

struct ExploreResult {
    PerfEstimate best;
    std::vector<PerfEstimate> ranked;  // ascending t_total, deterministic tie-break
};

/// Exhaustive argmin of t_total over (r1, r2) in [1, r1_max] x [1, r2_max];
/// ties broken by smaller r1*r2, then smaller r1. 1D stencils pin r2 = 1.
ExploreResult explore_layouts(const HardwareDescriptor& hw, const StencilSpec& spec,
                              std::span<const std::size_t> grid_dims, int r1_max = 16,
                              int r2_max = 16);

/// Plain-text key/value hardware descriptor (see docs/formats.md).
HardwareDescriptor parse_hw_descriptor(const std::string& text);
HardwareDescriptor hw_preset(const std::string& name);  // a100-sparse, a100-dense
std::vector<std::string> hw_preset_names();

}  // namespace stensor
