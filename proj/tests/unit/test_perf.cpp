// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "stensor/layout.hpp"
#include "stensor/perf.hpp"

using namespace stensor;

TEST_CASE("n_mma ceiling arithmetic") {
    CHECK(n_mma(4, 16, 4, FragmentShape{16, 16, 8}) == 1);
    CHECK(n_mma(16, 32, 8, FragmentShape{16, 32, 8}) == 1);
    CHECK(n_mma(8, 80, 2048, FragmentShape{16, 32, 8}) == 768);
    CHECK_THROWS(n_mma(0, 16, 4, FragmentShape{16, 16, 8}));
}

TEST_CASE("estimate responds linearly to hardware knobs") {
    const auto hw = hw_preset("a100-sparse");
    const std::array<std::size_t, 2> dims{512, 512};
    const auto base = estimate(hw, 2, dims, 3, 2, 2);

    auto fast = hw;
    fast.n_tcu *= 2;
    const auto e2 = estimate(fast, 2, dims, 3, 2, 2);
    CHECK(e2.t_compute == doctest::Approx(base.t_compute / 2));
    CHECK(e2.t_memory == base.t_memory);

    const auto e11 = estimate(hw, 2, dims, 3, 1, 1);
    CHECK(static_cast<double>(base.n_mma) / static_cast<double>(e11.n_mma) ==
          doctest::Approx(static_cast<double>(n_mma(4, 16, 255 * 255, hw.fragment)) /
                          static_cast<double>(n_mma(1, 9, 510 * 510, hw.fragment))));

    auto broken = hw;
    broken.f = 0;
    CHECK_THROWS(estimate(broken, 2, dims, 3, 1, 1));
}

TEST_CASE("A100 golden fixture: Heat-2D 10240^2, r1=r2=2") {
    const auto hw = hw_preset("a100-sparse");
    const std::array<std::size_t, 2> dims{10240, 10240};
    const auto e = estimate(hw, 2, dims, 3, 2, 2);
    CHECK(e.m_prime == 4);
    CHECK(e.k_prime == 16);
    CHECK(e.n_prime == 26204161);
    CHECK(e.n_mma == 3275521);
    CHECK(e.data_r == 209715200.0);
    CHECK(e.data_w == 209633288.0);
    CHECK(e.data_trans_r == 838696992.0);
    CHECK(e.data_trans_w == 838696992.0);
    CHECK(e.t_compute == doctest::Approx(8.603942737063304e-05).epsilon(1e-12));
    CHECK(e.t_memory == doctest::Approx(0.00026967748424437297).epsilon(1e-12));
    CHECK(e.t_total == e.t_memory);

    // independent re-derivation of every term
    const auto md = morph_shape(2, 3, dims, 2, 2);
    const double nm = std::ceil(md.m_prime / 16.0) * std::ceil(md.k_prime / 32.0) *
                      std::ceil(md.n_prime / 8.0);
    CHECK(static_cast<double>(e.n_mma) == nm);
    CHECK(e.t_compute == doctest::Approx(nm * 16.0 / (1.41e9 * 432.0)).epsilon(1e-12));
    const double trans = static_cast<double>(md.k_prime) *
                         (10240.0 / 2.0 + static_cast<double>(md.n_prime)) * 2.0;
    CHECK(e.data_trans_r == trans);
    CHECK(e.t_memory ==
          doctest::Approx(std::max((e.data_r + e.data_w) / 1.555e12, 2.0 * trans / 19.49e12))
              .epsilon(1e-12));
}

TEST_CASE("explore_layouts") {
    const auto hw = hw_preset("a100-sparse");
    const auto spec = stencil_preset("Box-2D49P");
    const std::array<std::size_t, 2> dims{200, 220};

    // singleton search space
    const auto one = explore_layouts(hw, spec, dims, 1, 1);
    CHECK(one.ranked.size() == 1);
    CHECK(one.best.r1 == 1);
    CHECK(one.best.r2 == 1);

    // full search equals an independent re-scan of the model
    const auto full = explore_layouts(hw, spec, dims);
    CHECK(full.ranked.size() == 256);
    PerfEstimate best;
    best.t_total = 1e300;
    for (int r1 = 1; r1 <= 16; ++r1)
        for (int r2 = 1; r2 <= 16; ++r2) {
            const auto e = estimate(hw, 2, dims, spec.k, r1, r2);
            const bool better =
                e.t_total < best.t_total ||
                (e.t_total == best.t_total &&
                 (e.r1 * e.r2 < best.r1 * best.r2 ||
                  (e.r1 * e.r2 == best.r1 * best.r2 && e.r1 < best.r1)));
            if (best.t_total == 1e300 || better) best = e;
        }
    CHECK(full.best.r1 == best.r1);
    CHECK(full.best.r2 == best.r2);
    CHECK(full.best.t_total == best.t_total);

    // ranked order is non-decreasing in t_total
    for (std::size_t i = 1; i < full.ranked.size(); ++i)
        CHECK(full.ranked[i - 1].t_total <= full.ranked[i].t_total);

    CHECK_THROWS(explore_layouts(hw, spec, dims, 0, 1));
}

TEST_CASE("argmin is invariant under uniform rescaling") {
    const auto spec = stencil_preset("Heat-2D");
    const std::array<std::size_t, 2> dims{384, 384};
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 20; ++trial) {
        HardwareDescriptor hw;
        hw.cpi_tcu = 1 + static_cast<double>(rng() % 64);
        hw.f = 1e8 * static_cast<double>(1 + rng() % 40);
        hw.n_tcu = static_cast<double>(1 + rng() % 512);
        hw.bw_g = 1e10 * static_cast<double>(1 + rng() % 500);
        hw.bw_s = 1e10 * static_cast<double>(1 + rng() % 5000);
        hw.fragment = (rng() & 1) ? kFragSparse : kFragDense;
        hw.bytes_per_element = (rng() & 1) ? 2 : 4;

        const double scale = 0.125 + static_cast<double>(rng() % 64);
        auto scaled = hw;
        scaled.bw_g *= scale;
        scaled.bw_s *= scale;
        scaled.f *= scale;  // scales the compute rate f*n_tcu/cpi the same way

        const auto a = explore_layouts(hw, spec, dims, 8, 8);
        const auto b = explore_layouts(scaled, spec, dims, 8, 8);
        CHECK(a.best.r1 == b.best.r1);
        CHECK(a.best.r2 == b.best.r2);
    }
}

TEST_CASE("monotonicity: t_compute non-decreasing in n_mma") {
    const auto hw = hw_preset("a100-dense");
    const auto spec = stencil_preset("Box-2D9P");
    const std::array<std::size_t, 2> dims{300, 300};
    const auto ex = explore_layouts(hw, spec, dims);
    for (const auto& a : ex.ranked)
        for (const auto& b : ex.ranked)
            if (a.n_mma <= b.n_mma) CHECK(a.t_compute <= b.t_compute);
}

TEST_CASE("hardware descriptor parsing and presets") {
    const auto hw = parse_hw_descriptor(
        "# toy part\n"
        "name = toy\n"
        "cpi_tcu = 8\n"
        "f = 1e9\n"
        "n_tcu = 16\n"
        "bw_g = 1e12\n"
        "bw_s = 8e12\n"
        "bytes_per_element = 2\n"
        "frag_m = 16\nfrag_k = 32\nfrag_n = 8\n");
    CHECK(hw.name == "toy");
    CHECK(hw.cpi_tcu == 8);
    CHECK(hw.fragment.k == 32);

    CHECK_THROWS(parse_hw_descriptor("cpi_tcu = 8\n"));            // missing fields
    CHECK_THROWS(parse_hw_descriptor("name=x\nwhatever = 3\n"));   // unknown key
    CHECK_THROWS(parse_hw_descriptor("name=x\ncpi_tcu = abc\n"));  // bad number

    const auto sparse = hw_preset("a100-sparse");
    const auto dense = hw_preset("a100-dense");
    CHECK(sparse.cpi_tcu * 2 == dense.cpi_tcu);  // sparse TCUs run 2x
    CHECK(sparse.fragment.k == 32);
    CHECK(dense.fragment.k == 16);
    CHECK(sparse.f == dense.f);
    CHECK_THROWS(hw_preset("h100"));
    CHECK(hw_preset_names().size() == 2);
}
