// SPDX-License-Identifier: Apache-2.0
#include "stensor/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "stensor/layout.hpp"

namespace stensor {

namespace {

// Swap two converted columns so that some 4-group ends up with 3 nonzeros,
// modeling a permutation bug. Returns the first violating (row, col).
bool corrupt_converted(MorphedLayout& lay, std::size_t& bad_r, std::size_t& bad_c) {
    Matrix& a = lay.a;
    for (std::size_t i = 0; i < a.cols; ++i)
        for (std::size_t j = i + 1; j < a.cols; ++j) {
            for (std::size_t r = 0; r < a.rows; ++r) std::swap(a.at(r, i), a.at(r, j));
            for (std::size_t r = 0; r < a.rows; ++r)
                for (std::size_t g = 0; g < a.cols / 4; ++g) {
                    int nz = 0;
                    for (std::size_t l = 0; l < 4; ++l)
                        if (a.at(r, 4 * g + l) != 0.0) ++nz;
                    if (nz > 2) {
                        for (std::size_t rr = 0; rr < a.rows; ++rr) {
                            std::swap(lay.structural[rr * a.cols + i],
                                      lay.structural[rr * a.cols + j]);
                        }
                        std::swap(lay.col_origin[i], lay.col_origin[j]);
                        bad_r = r;
                        bad_c = 4 * g;
                        return true;
                    }
                }
            for (std::size_t r = 0; r < a.rows; ++r) std::swap(a.at(r, i), a.at(r, j));
        }
    return false;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace

CompileResult run_compile(const CompileRequest& request) {
    CompileResult res;

    StencilSpec spec = request.spec;
    if (request.fuse > 1) spec = fuse_time_steps(spec, request.fuse);
    if (request.grid_dims.size() != static_cast<std::size_t>(spec.dims))
        throw std::invalid_argument("grid dimensionality does not match stencil");

    int r1, r2;
    if (request.r1 && request.r2) {
        r1 = *request.r1;
        r2 = spec.dims == 1 ? 1 : *request.r2;
        res.perf = estimate(request.hw, spec.dims, request.grid_dims, spec.k, r1, r2);
        res.ranked = {res.perf};
    } else {
        const ExploreResult ex =
            explore_layouts(request.hw, spec, request.grid_dims, request.r_max,
                            request.r_max);
        res.perf = ex.best;
        res.ranked = ex.ranked;
        r1 = ex.best.r1;
        r2 = ex.best.r2;
    }

    const FlattenedForm flat = flatten(spec, request.grid_dims);
    const MorphedLayout morphed = crush(flat, r1, r2);
    Conversion cv = convert_layout(morphed);

    if (request.corrupt_permutation) {
        std::size_t br = 0, bc = 0;
        if (!corrupt_converted(cv.converted, br, bc))
            throw std::runtime_error("corruption hook found no breakable column pair");
        res.verification.status = "conversion-failed";
        res.verification.bad_row = br;
        res.verification.bad_col = bc;
        // still emit the report for the failure path; no plan can be built
        KernelPlan stub;
        stub.stencil_name = spec.name;
        stub.dims = spec.dims;
        stub.k = spec.k;
        stub.grid_dims = request.grid_dims;
        stub.layout = cv.converted;
        stub.perm = cv.perm;
        stub.fragment = request.hw.fragment;
        stub.block = default_block_config(spec.dims);
        stub.precision = request.precision;
        stub.p = cv.p;
        stub.align_cols = cv.align_cols;
        stub.used_blossom = cv.used_blossom;
        res.plan = stub;
        res.report_json = emit_report(stub, res.perf, res.verification, 0, 0.0);
        if (!request.out_dir.empty()) {
            std::filesystem::create_directories(request.out_dir);
            write_file(std::filesystem::path(request.out_dir) / "report.json",
                       res.report_json);
        }
        res.ok = false;
        return res;
    }

    res.plan = make_plan(spec.name, morphed, cv, request.hw, request.precision);
    res.kernel_text = emit_kernel(res.plan);

    // desk-scale verification against the direct oracle
    bool desk = true;
    for (auto d : request.grid_dims) desk = desk && d <= kVerifyCap;
    if (desk) {
        const Grid grid = random_grid(request.grid_dims, request.seed, request.precision);
        const Grid expect = direct_apply(spec, grid, 1);

        const EmulationConfig cfg{request.precision};
        const MorphedLayout& lay = res.plan.layout;
        const auto t0 = std::chrono::steady_clock::now();
        const TiledResult tr = tiled_sparse_matmul(
            res.plan.a2,
            [&](std::size_t row, std::size_t col) { return b_entry(lay, grid, row, col); },
            lay.n_prime, res.plan.fragment, cfg);
        res.emulation_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.issued_mma = tr.issued_mma;

        double max_abs = 0, max_rel = 0;
        bool mismatch = false;
        for (std::size_t r = 0; r < tr.d.rows; ++r)
            for (std::size_t c = 0; c < tr.d.cols; ++c) {
                const auto pos = lay.output_position(r, c);
                if (!pos.valid) continue;
                const double want = expect.values[pos.flat];
                const double got = tr.d.at(r, c);
                const double abs = std::fabs(got - want);
                const double rel = abs / std::max(1e-30, std::fabs(want));
                max_abs = std::max(max_abs, abs);
                max_rel = std::max(max_rel, rel);
                if (request.precision == Precision::exact64) {
                    if (abs != 0.0) mismatch = true;
                } else if (rel > 1e-2 && abs > 1e-6) {
                    mismatch = true;
                }
            }
        res.verification.status = mismatch ? "mismatch" : "verified";
        res.verification.max_abs_err = max_abs;
        res.verification.max_rel_err = max_rel;
    } else {
        res.verification.status = "unverified-scale";
        res.issued_mma = res.perf.n_mma;  // not emulated at this scale
    }

    // throughput is reported from the model time, keeping artifacts
    // independent of host wall clock
    const Throughput tp =
        gstencil_rate(std::max<std::uint64_t>(request.fuse, 1), request.grid_dims,
                      res.perf.t_total);
    res.model_gstencil = tp.gstencils_per_sec;

    res.report_json = emit_report(res.plan, res.perf, res.verification, res.issued_mma,
                                  res.model_gstencil);

    if (!request.out_dir.empty()) {
        const std::filesystem::path dir(request.out_dir);
        std::filesystem::create_directories(dir);
        write_file(dir / "kernel.cu", res.kernel_text);
        write_file(dir / "report.json", res.report_json);
        {
            std::ofstream blob(dir / "a2.s24", std::ios::binary);
            dump_sparse24(blob, res.plan.a2, request.precision);
        }
        {
            std::ofstream blob(dir / "lut.bin", std::ios::binary);
            auto put64 = [&blob](std::int64_t v) {
                unsigned char buf[8];
                for (int i = 0; i < 8; ++i)
                    buf[i] = static_cast<unsigned char>(
                        (static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
                blob.write(reinterpret_cast<const char*>(buf), 8);
            };
            put64(static_cast<std::int64_t>(res.plan.lut.block_count));
            put64(static_cast<std::int64_t>(res.plan.lut.b_rows));
            put64(static_cast<std::int64_t>(res.plan.lut.cols_per_block));
            for (auto b : res.plan.lut.base) put64(b);
            for (auto e : res.plan.lut.entries) put64(e);
        }
    }

    res.ok = res.verification.status == "verified" ||
             res.verification.status == "unverified-scale";
    return res;
}

}  // namespace stensor
