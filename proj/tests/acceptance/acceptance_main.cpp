// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: each criterion prints exactly one pass/fail line.
// Exit status is nonzero when any criterion fails.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "stensor/pipeline.hpp"

using namespace stensor;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
    std::printf("criterion %d: %s (%s)\n", criterion, ok ? "PASS" : "FAIL",
                detail.c_str());
    if (!ok) ++failures;
}

double now_sec() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct Compiled {
    StencilSpec spec;
    std::vector<std::size_t> dims;
    MorphedLayout converted;
    Sparse24Matrix a2;
    FragmentShape frag;
};

Compiled compile_once(const char* preset, std::vector<std::size_t> dims) {
    Compiled c;
    c.spec = stencil_preset(preset);
    c.dims = std::move(dims);
    const auto hw = hw_preset("a100-sparse");
    const auto ex = explore_layouts(hw, c.spec, c.dims, 4, 4);
    const auto lay = crush(flatten(c.spec, c.dims), ex.best.r1, ex.best.r2);
    const auto cv = convert_layout(lay);
    c.converted = cv.converted;
    c.a2 = compress_24(cv.converted.a);
    c.frag = hw.fragment;
    return c;
}

// one emulated end-to-end run; returns (max_abs, max_rel) against the oracle
std::pair<double, double> run_once(const Compiled& c, Precision prec,
                                   std::uint64_t seed) {
    const Grid g = random_grid(c.dims, seed, prec);
    const Grid want = direct_apply(c.spec, g, 1);
    const EmulationConfig cfg{prec};
    const auto tr = tiled_sparse_matmul(
        c.a2,
        [&](std::size_t r, std::size_t col) { return b_entry(c.converted, g, r, col); },
        c.converted.n_prime, c.frag, cfg);
    double max_abs = 0, max_rel = 0;
    for (std::size_t r = 0; r < tr.d.rows; ++r)
        for (std::size_t col = 0; col < tr.d.cols; ++col) {
            const auto pos = c.converted.output_position(r, col);
            if (!pos.valid) continue;
            const double abs = std::fabs(tr.d.at(r, col) - want.values[pos.flat]);
            max_abs = std::max(max_abs, abs);
            max_rel = std::max(
                max_rel, abs / std::max(1e-6, std::fabs(want.values[pos.flat])));
        }
    return {max_abs, max_rel};
}

void criterion_1() {
    const double t0 = now_sec();
    bool ok = true;
    std::string worst;
    for (const auto& name : preset_names()) {
        const auto spec = stencil_preset(name);
        std::vector<std::size_t> dims;
        switch (spec.dims) {
            case 1: dims = {65536}; break;
            case 2: dims = {96, 96}; break;
            default: dims = {40, 40, 40}; break;
        }
        const Compiled c = compile_once(name.c_str(), dims);
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto [abs64, rel64] = run_once(c, Precision::exact64, seed);
            if (abs64 != 0.0) {
                ok = false;
                worst = name + " exact64 abs=" + std::to_string(abs64);
            }
            const auto [abs16, rel16] = run_once(c, Precision::round16, seed);
            if (rel16 > 1e-2) {
                ok = false;
                worst = name + " round16 rel=" + std::to_string(rel16);
            }
        }
    }
    std::ostringstream d;
    d << "8 presets x 20 seeds x 2 precisions, " << std::fixed << now_sec() - t0
      << " s" << (worst.empty() ? "" : "; " + worst);
    report(1, ok, d.str());
}

void criterion_2() {
    const double t0 = now_sec();
    bool ok = true;
    std::size_t cases = 0;
    for (std::size_t m = 1; m * 1 <= 12; ++m)
        for (std::size_t g = 1; m * g <= 12; ++g)
            for (int k = 1; k <= static_cast<int>(g); ++k) {
                const auto match = hierarchical_match(m, g, k);
                const auto exact =
                    min_padding_bruteforce(descriptor_conflict_graph(m, g, k));
                ++cases;
                if (match.zero_columns != exact) ok = false;
            }
    std::ostringstream d;
    d << cases << " staircase descriptors vs exhaustive oracle, " << std::fixed
      << now_sec() - t0 << " s";
    report(2, ok, d.str());
}

void criterion_3() {
    std::mt19937_64 rng(2024);
    bool ok = true;
    int runs = 0;
    while (runs < 100) {
        const int dims = 1 + static_cast<int>(rng() % 3);
        const int k = dims == 3 ? 3 : 3 + 2 * static_cast<int>(rng() % 3);
        std::vector<std::size_t> gd;
        for (int a = 0; a < dims; ++a)
            gd.push_back(static_cast<std::size_t>(k) + rng() % 12);
        const int r1 = 1 + static_cast<int>(rng() % 6);
        const int r2 = dims == 1 ? 1 : 1 + static_cast<int>(rng() % 6);
        // full box stencil of the drawn extent and dimensionality
        std::ostringstream doc;
        doc << "name = b\ndims = " << dims << "\nshape = box\nk = " << k << "\n";
        const int r = (k - 1) / 2;
        std::array<int, 3> off{};
        auto emit = [&](auto&& self, int axis) -> void {
            if (axis == dims) {
                doc << "point =";
                for (int a = 0; a < dims; ++a) doc << ' ' << off[static_cast<std::size_t>(a)];
                doc << " : 1\n";
                return;
            }
            for (int v = -r; v <= r; ++v) {
                off[static_cast<std::size_t>(axis)] = v;
                self(self, axis + 1);
            }
        };
        emit(emit, 0);
        const StencilSpec spec = parse_stencil_spec(doc.str());
        const auto lay = crush(flatten(spec, gd), r1, r2);
        ++runs;
        // per-level reading: columns whose window coordinates differ by >= k
        // on either axis must never conflict
        const auto graph = build_conflict_graph_structural(lay);
        const std::size_t wv = lay.stair.block_size, wu = lay.stair.block_count;
        for (std::size_t i = 0; i < graph.node_count && ok; ++i)
            for (std::size_t j = i + 1; j < graph.node_count; ++j) {
                const std::size_t ui = (i % (wu * wv)) / wv, vi = i % wv;
                const std::size_t uj = (j % (wu * wv)) / wv, vj = j % wv;
                const std::size_t du = ui > uj ? ui - uj : uj - ui;
                const std::size_t dv = vi > vj ? vi - vj : vj - vi;
                if ((du >= static_cast<std::size_t>(spec.k) ||
                     dv >= static_cast<std::size_t>(spec.k)) &&
                    graph.has_edge(i, j)) {
                    ok = false;
                    break;
                }
            }
    }
    report(3, ok, "100 random morphed layouts, k in {3,5,7}");
}

void criterion_4() {
    std::mt19937_64 rng(4040);
    bool ok = true;
    for (int trial = 0; trial < 50; ++trial) {
        const int dims = 1 + static_cast<int>(rng() % 2);
        const int k = 3 + 2 * static_cast<int>(rng() % 2);
        std::ostringstream doc;
        doc << "name = t\ndims = " << dims << "\nshape = box\nk = " << k << "\n";
        const int r = (k - 1) / 2;
        if (dims == 1) {
            for (int x = -r; x <= r; ++x)
                doc << "point = " << x << " : " << 1 + rng() % 9 << "\n";
        } else {
            for (int y = -r; y <= r; ++y)
                for (int x = -r; x <= r; ++x)
                    doc << "point = " << y << ' ' << x << " : " << 1 + rng() % 9 << "\n";
        }
        const auto spec = parse_stencil_spec(doc.str());
        std::vector<std::size_t> gd;
        for (int a = 0; a < dims; ++a)
            gd.push_back(static_cast<std::size_t>(k) + 4 + rng() % 8);
        const int r1 = 1 + static_cast<int>(rng() % 4);
        const int r2 = dims == 1 ? 1 : 1 + static_cast<int>(rng() % 4);
        const auto lay = crush(flatten(spec, gd), r1, r2);
        const auto cv = convert_layout(lay);

        Grid g = random_grid(gd, 1000 + static_cast<std::uint64_t>(trial));
        for (auto& v : g.values) v = std::floor(v * 256.0);  // integer grid
        const Matrix before = matmul(lay.a, materialize_b(lay, g));
        const Matrix after = matmul(cv.converted.a, materialize_b(cv.converted, g));
        if (!(before == after)) ok = false;
    }
    report(4, ok, "50 integer-weight desk layouts, permuted product exact");
}

void criterion_5() {
    bool ok = true;
    // every converted operand passes the checker
    for (const auto& name : preset_names()) {
        const auto spec = stencil_preset(name);
        std::vector<std::size_t> gd(static_cast<std::size_t>(spec.dims),
                                    static_cast<std::size_t>(spec.k) + 9);
        for (int r1 = 1; r1 <= 3; ++r1)
            for (int r2 = 1; r2 <= (spec.dims == 1 ? 1 : 3); ++r2) {
                const auto cv = convert_layout(crush(flatten(spec, gd), r1, r2));
                if (!check_24(cv.converted.a)) ok = false;
            }
    }
    // compress/decompress round-trip on 1000 random 2:4 matrices
    std::mt19937_64 rng(555);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t rows = 1 + rng() % 8, groups = 1 + rng() % 8;
        Matrix a(rows, groups * 4);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t g = 0; g < groups; ++g) {
                const int count = static_cast<int>(rng() % 3);
                std::array<int, 4> slots{0, 1, 2, 3};
                std::shuffle(slots.begin(), slots.end(), rng);
                for (int i = 0; i < count; ++i)
                    a.at(r, 4 * g + static_cast<std::size_t>(
                                        slots[static_cast<std::size_t>(i)])) =
                        static_cast<double>(1 + rng() % 99);
            }
        if (!(decompress(compress_24(a)) == a)) ok = false;
    }
    report(5, ok, "all converted operands 2:4; 1000 exact round-trips");
}

void criterion_6() {
    bool ok = true;
    const auto hw = hw_preset("a100-sparse");
    const EmulationConfig cfg{Precision::exact64};
    for (const auto& name : preset_names()) {
        const auto spec = stencil_preset(name);
        std::vector<std::size_t> gd;
        switch (spec.dims) {
            case 1: gd = {512}; break;
            case 2: gd = {40, 40}; break;
            default: gd = {16, 16, 16}; break;
        }
        const auto flat = flatten(spec, gd);
        const Grid g = random_grid(gd, 66);
        for (int r1 = 1; r1 <= 4; ++r1)
            for (int r2 = 1; r2 <= (spec.dims == 1 ? 1 : 4); ++r2) {
                const auto cv = convert_layout(crush(flat, r1, r2));
                const auto a2 = compress_24(cv.converted.a);
                const auto tr = tiled_sparse_matmul(
                    a2,
                    [&](std::size_t r, std::size_t c) {
                        return b_entry(cv.converted, g, r, c);
                    },
                    cv.converted.n_prime, hw.fragment, cfg);
                const auto analytic = n_mma(cv.converted.a.rows, cv.converted.a.cols,
                                            cv.converted.n_prime, hw.fragment);
                if (tr.issued_mma != analytic) ok = false;
            }
    }
    // worked dimensions: k=3, r1=r2=2 -> (m', k') = (4, 16)
    const auto md = morph_dims(3, 64, 64, 2, 2);
    if (md.m_prime != 4 || md.k_prime != 16) ok = false;
    report(6, ok, "issued_mma equals the ceiling formula on every candidate");
}

void criterion_7() {
    const auto spec = stencil_preset("Box-2D9P");
    const std::array<std::size_t, 2> dims{5, 5};
    const auto flat = flatten(spec, dims);
    bool ok = flat.a_vector.size() == 9 && flat.b_rows == 9 && flat.b_cols == 9;
    const Grid g = random_grid(dims, 7);
    const Matrix b = materialize_b(flat, g);
    // independent im2row: window (dy, dx) at placement (y, x)
    for (int dy = 0; dy < 3 && ok; ++dy)
        for (int dx = 0; dx < 3; ++dx)
            for (std::size_t y = 0; y < 3; ++y)
                for (std::size_t x = 0; x < 3; ++x) {
                    const double want =
                        g.values[(y + static_cast<std::size_t>(dy)) * 5 + x +
                                 static_cast<std::size_t>(dx)];
                    if (b.at(static_cast<std::size_t>(dy * 3 + dx), y * 3 + x) != want)
                        ok = false;
                }
    report(7, ok, "3x3 kernel on 5x5 grid: A length 9, B 9x9, im2row bit-exact");
}

void criterion_8() {
    std::mt19937_64 rng(8888);
    const auto spec = stencil_preset("Heat-2D");
    const std::array<std::size_t, 2> dims{320, 320};
    bool ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        HardwareDescriptor hw;
        hw.cpi_tcu = 1 + static_cast<double>(rng() % 64);
        hw.f = 1e8 * static_cast<double>(1 + rng() % 40);
        hw.n_tcu = static_cast<double>(1 + rng() % 512);
        hw.bw_g = 1e10 * static_cast<double>(1 + rng() % 500);
        hw.bw_s = 1e10 * static_cast<double>(1 + rng() % 5000);
        hw.fragment = (rng() & 1) ? kFragSparse : kFragDense;
        hw.bytes_per_element = (rng() & 1) ? 2 : 4;
        auto scaled = hw;
        const double s = 0.25 + static_cast<double>(rng() % 32);
        scaled.bw_g *= s;
        scaled.bw_s *= s;
        scaled.f *= s;
        const auto a = explore_layouts(hw, spec, dims, 8, 8);
        const auto b = explore_layouts(scaled, spec, dims, 8, 8);
        if (a.best.r1 != b.best.r1 || a.best.r2 != b.best.r2) ok = false;
    }
    report(8, ok, "argmin invariant under uniform rescaling, 20 descriptors");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_9() {
    namespace fs = std::filesystem;
    const fs::path d1 = fs::temp_directory_path() / "stensor_acc_a";
    const fs::path d2 = fs::temp_directory_path() / "stensor_acc_b";
    fs::remove_all(d1);
    fs::remove_all(d2);
    CompileRequest req;
    req.spec = stencil_preset("Box-2D9P");
    req.grid_dims = {48, 48};
    req.hw = hw_preset("a100-sparse");
    req.r_max = 4;
    req.seed = 17;
    req.out_dir = d1.string();
    run_compile(req);
    req.out_dir = d2.string();
    run_compile(req);
    bool ok = true;
    for (const char* f : {"kernel.cu", "report.json", "a2.s24", "lut.bin"})
        ok = ok && fs::exists(d1 / f) && slurp(d1 / f) == slurp(d2 / f);
    fs::remove_all(d1);
    fs::remove_all(d2);
    report(9, ok, "repeated compile emits byte-identical artifacts");
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    std::printf("%s\n", failures == 0 ? "ALL CRITERIA PASS" : "CRITERIA FAILED");
    return failures == 0 ? 0 : 1;
}
