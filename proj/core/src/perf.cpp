// SPDX-License-Identifier: Apache-2.0
#include "stensor/perf.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "stensor/layout.hpp"

namespace stensor {

namespace {

void check_hw(const HardwareDescriptor& hw) {
    if (hw.cpi_tcu <= 0 || hw.f <= 0 || hw.n_tcu <= 0 || hw.bw_g <= 0 || hw.bw_s <= 0 ||
        hw.bytes_per_element <= 0 || hw.fragment.m == 0 || hw.fragment.k == 0 ||
        hw.fragment.n == 0)
        throw std::invalid_argument("degenerate hardware descriptor");
}

// Grid extent entering the shared-memory transfer volume k'(m/2 + n').
// Read as the morph-vertical grid extent; 1D layouts have no vertical
// sliding window, so the term degenerates to 1.
double transfer_m_extent(int dims, std::span<const std::size_t> grid_dims) {
    return dims >= 2 ? static_cast<double>(grid_dims[static_cast<std::size_t>(dims) - 2]) : 1.0;
}

}  // namespace

std::uint64_t n_mma(std::size_t m_prime, std::size_t k_prime, std::size_t n_prime,
                    const FragmentShape& frag) {
    if (m_prime == 0 || k_prime == 0 || n_prime == 0)
        throw std::invalid_argument("dimensions must be positive");
    const auto ceil_div = [](std::size_t a, std::size_t b) { return (a + b - 1) / b; };
    return static_cast<std::uint64_t>(ceil_div(m_prime, frag.m)) *
           ceil_div(k_prime, frag.k) * ceil_div(n_prime, frag.n);
}

PerfEstimate estimate(const HardwareDescriptor& hw, int dims,
                      std::span<const std::size_t> grid_dims, int k, int r1, int r2) {
    check_hw(hw);
    const MorphDims md = morph_shape(dims, k, grid_dims, r1, r2);

    PerfEstimate e;
    e.r1 = r1;
    e.r2 = r2;
    e.m_prime = md.m_prime;
    e.k_prime = md.k_prime;
    e.n_prime = md.n_prime;
    e.n_mma = n_mma(md.m_prime, md.k_prime, md.n_prime, hw.fragment);
    e.t_compute = static_cast<double>(e.n_mma) * hw.cpi_tcu / (hw.f * hw.n_tcu);

    double in_cells = 1, out_cells = 1;
    for (std::size_t a = 0; a < static_cast<std::size_t>(dims); ++a) {
        in_cells *= static_cast<double>(grid_dims[a]);
        out_cells *= static_cast<double>(grid_dims[a] - static_cast<std::size_t>(k) + 1);
    }
    e.data_r = in_cells * hw.bytes_per_element;
    e.data_w = out_cells * hw.bytes_per_element;
    const double trans = static_cast<double>(e.k_prime) *
                         (transfer_m_extent(dims, grid_dims) / 2.0 +
                          static_cast<double>(e.n_prime)) *
                         hw.bytes_per_element;
    e.data_trans_r = trans;
    e.data_trans_w = trans;
    e.t_memory = std::max((e.data_r + e.data_w) / hw.bw_g,
                          (e.data_trans_w + e.data_trans_r) / hw.bw_s);
    e.t_total = std::max(e.t_compute, e.t_memory);
    return e;
}

ExploreResult explore_layouts(const HardwareDescriptor& hw, const StencilSpec& spec,
                              std::span<const std::size_t> grid_dims, int r1_max,
                              int r2_max) {
    check_hw(hw);
    if (r1_max < 1 || r2_max < 1) throw std::invalid_argument("empty search space");
    if (spec.dims == 1) r2_max = 1;

    ExploreResult res;
    for (int r1 = 1; r1 <= r1_max; ++r1)
        for (int r2 = 1; r2 <= r2_max; ++r2)
            res.ranked.push_back(estimate(hw, spec.dims, grid_dims, spec.k, r1, r2));
    std::stable_sort(res.ranked.begin(), res.ranked.end(),
                     [](const PerfEstimate& a, const PerfEstimate& b) {
                         if (a.t_total != b.t_total) return a.t_total < b.t_total;
                         if (a.r1 * a.r2 != b.r1 * b.r2) return a.r1 * a.r2 < b.r1 * b.r2;
                         return a.r1 < b.r1;
                     });
    res.best = res.ranked.front();
    return res;
}

HardwareDescriptor parse_hw_descriptor(const std::string& text) {
    HardwareDescriptor hw;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        if (key == "name") {
            hw.name = val;
            continue;
        }
        double num = 0;
        try {
            num = std::stod(val);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad numeric value for key '" + key + "'");
        }
        if (key == "cpi_tcu") hw.cpi_tcu = num;
        else if (key == "f") hw.f = num;
        else if (key == "n_tcu") hw.n_tcu = num;
        else if (key == "bw_g") hw.bw_g = num;
        else if (key == "bw_s") hw.bw_s = num;
        else if (key == "bytes_per_element") hw.bytes_per_element = num;
        else if (key == "frag_m") hw.fragment.m = static_cast<std::size_t>(num);
        else if (key == "frag_k") hw.fragment.k = static_cast<std::size_t>(num);
        else if (key == "frag_n") hw.fragment.n = static_cast<std::size_t>(num);
        else throw std::invalid_argument("unknown hardware descriptor key '" + key + "'");
    }
    check_hw(hw);
    if (hw.fragment.k % 4 != 0) throw std::invalid_argument("frag_k must be divisible by 4");
    return hw;
}

HardwareDescriptor hw_preset(const std::string& name) {
    HardwareDescriptor hw;
    hw.name = name;
    hw.f = 1.41e9;
    hw.n_tcu = 432;  // 108 SMs x 4 TCUs
    hw.bw_g = 1.555e12;
    hw.bw_s = 19.49e12;
    hw.bytes_per_element = 2;
    if (name == "a100-sparse") {
        hw.cpi_tcu = 16;
        hw.fragment = kFragSparse;
    } else if (name == "a100-dense") {
        hw.cpi_tcu = 32;
        hw.fragment = kFragDense;
    } else {
        throw std::invalid_argument("unknown hardware preset '" + name + "'");
    }
    return hw;
}

std::vector<std::string> hw_preset_names() { return {"a100-sparse", "a100-dense"}; }

}  // namespace stensor
