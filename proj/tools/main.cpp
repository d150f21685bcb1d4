// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "stensor/pipeline.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

stensor::StencilSpec load_stencil(const std::string& arg) {
    if (stensor::is_preset(arg)) return stensor::stencil_preset(arg);
    return stensor::parse_stencil_spec(slurp(arg));
}

stensor::HardwareDescriptor load_hw(const std::string& arg) {
    for (const auto& n : stensor::hw_preset_names())
        if (n == arg) return stensor::hw_preset(arg);
    return stensor::parse_hw_descriptor(slurp(arg));
}

std::vector<std::size_t> parse_grid(const std::string& arg) {
    std::vector<std::size_t> dims;
    std::string tok;
    for (char c : arg + ",") {
        if (c == ',' || c == 'x' || c == 'X') {
            if (!tok.empty()) dims.push_back(std::stoull(tok));
            tok.clear();
        } else {
            tok += c;
        }
    }
    if (dims.empty() || dims.size() > 3)
        throw std::runtime_error("grid must list 1-3 extents, e.g. 64x64");
    return dims;
}

stensor::Precision parse_precision(const std::string& p) {
    if (p == "exact64") return stensor::Precision::exact64;
    if (p == "round16") return stensor::Precision::round16;
    throw std::runtime_error("precision must be exact64 or round16");
}

void print_candidates(std::ostream& out, const std::vector<stensor::PerfEstimate>& ranked,
                      bool csv) {
    if (csv)
        out << "r1,r2,t_compute,t_memory,t_total,n_mma,m_prime,k_prime,n_prime\n";
    else
        std::fprintf(stdout, "%4s %4s %14s %14s %14s %12s\n", "r1", "r2", "t_compute",
                     "t_memory", "t_total", "n_mma");
    for (const auto& e : ranked) {
        if (csv) {
            out << e.r1 << ',' << e.r2 << ',' << e.t_compute << ',' << e.t_memory << ','
                << e.t_total << ',' << e.n_mma << ',' << e.m_prime << ',' << e.k_prime
                << ',' << e.n_prime << '\n';
        } else {
            std::fprintf(stdout, "%4d %4d %14.6e %14.6e %14.6e %12llu\n", e.r1, e.r2,
                         e.t_compute, e.t_memory, e.t_total,
                         static_cast<unsigned long long>(e.n_mma));
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stencil-to-sparse-tensor-core compiler"};
    app.require_subcommand(1);

    std::string stencil_arg, grid_arg, hw_arg = "a100-sparse", out_dir, precision_arg = "exact64";
    std::string csv_path;
    int r1 = 0, r2 = 0;
    std::uint64_t fuse = 1, seed = 1;
    bool corrupt = false;

    auto add_common = [&](CLI::App* cmd, bool need_grid) {
        cmd->add_option("--stencil", stencil_arg, "preset name or spec file")->required();
        auto* g = cmd->add_option("--grid", grid_arg, "grid extents, e.g. 64x64");
        if (need_grid) g->required();
        cmd->add_option("--hw", hw_arg, "hardware preset name or descriptor file");
        cmd->add_option("--fuse", fuse, "temporal fusion factor");
        cmd->add_option("--precision", precision_arg, "exact64 | round16");
        cmd->add_option("--seed", seed, "verification grid seed");
    };

    auto* compile = app.add_subcommand("compile", "compile, verify, and emit artifacts");
    add_common(compile, true);
    compile->add_option("--r1", r1, "fix horizontal merge factor");
    compile->add_option("--r2", r2, "fix vertical merge factor");
    compile->add_option("--out", out_dir, "artifact output directory");
    compile->add_flag("--corrupt-permutation", corrupt)->group("");  // test hook

    auto* explore = app.add_subcommand("explore", "rank all (r1, r2) candidates");
    add_common(explore, true);
    explore->add_option("--csv", csv_path, "also write the table as CSV");

    auto* verify = app.add_subcommand("verify", "run all presets against the oracle");
    verify->add_option("--hw", hw_arg, "hardware preset name or descriptor file");
    verify->add_option("--precision", precision_arg, "exact64 | round16");
    verify->add_option("--seed", seed, "verification grid seed");

    auto* presets = app.add_subcommand("presets", "list stencil and hardware presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (presets->parsed()) {
            for (const auto& n : stensor::preset_names()) {
                const auto s = stensor::stencil_preset(n);
                std::printf("%-12s dims=%d k=%d points=%zu %s\n", n.c_str(), s.dims, s.k,
                            s.points.size(),
                            s.shape == stensor::StencilShape::star ? "star" : "box");
            }
            for (const auto& n : stensor::hw_preset_names()) std::printf("hw: %s\n", n.c_str());
            return 0;
        }

        if (verify->parsed()) {
            const auto hw = load_hw(hw_arg);
            const auto prec = parse_precision(precision_arg);
            bool all_ok = true;
            for (const auto& n : stensor::preset_names()) {
                stensor::CompileRequest req;
                req.spec = stensor::stencil_preset(n);
                switch (req.spec.dims) {
                    case 1: req.grid_dims = {256}; break;
                    case 2: req.grid_dims = {64, 64}; break;
                    default: req.grid_dims = {24, 24, 24}; break;
                }
                req.hw = hw;
                req.precision = prec;
                req.seed = seed;
                req.r_max = 4;
                const auto res = stensor::run_compile(req);
                std::printf("%-12s %-10s max_abs=%.3e max_rel=%.3e\n", n.c_str(),
                            res.verification.status.c_str(), res.verification.max_abs_err,
                            res.verification.max_rel_err);
                all_ok = all_ok && res.verification.status == "verified";
            }
            return all_ok ? 0 : 1;
        }

        stensor::CompileRequest req;
        req.spec = load_stencil(stencil_arg);
        req.grid_dims = parse_grid(grid_arg);
        req.hw = load_hw(hw_arg);
        req.fuse = fuse;
        req.precision = parse_precision(precision_arg);
        req.seed = seed;

        if (explore->parsed()) {
            stensor::StencilSpec spec = req.spec;
            if (fuse > 1) spec = stensor::fuse_time_steps(spec, fuse);
            const auto ex = stensor::explore_layouts(req.hw, spec, req.grid_dims);
            print_candidates(std::cout, ex.ranked, false);
            if (!csv_path.empty()) {
                std::ofstream csv(csv_path);
                print_candidates(csv, ex.ranked, true);
            }
            return 0;
        }

        // compile
        if (r1 > 0) req.r1 = r1;
        if (r2 > 0) req.r2 = r2;
        if (r1 > 0 && r2 == 0) req.r2 = 1;
        req.out_dir = out_dir;
        req.corrupt_permutation = corrupt;
        const auto res = stensor::run_compile(req);
        std::printf("r1=%d r2=%d p=%zu n_mma=%llu issued_mma=%llu status=%s\n",
                    res.plan.layout.r1, res.plan.layout.r2, res.plan.p,
                    static_cast<unsigned long long>(res.perf.n_mma),
                    static_cast<unsigned long long>(res.issued_mma),
                    res.verification.status.c_str());
        std::printf("model: t_total=%.6e s, %.6f GStencil/s\n", res.perf.t_total,
                    res.model_gstencil);
        if (res.emulation_seconds > 0)
            std::printf("emulation wall time: %.3f s\n", res.emulation_seconds);
        return res.ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
