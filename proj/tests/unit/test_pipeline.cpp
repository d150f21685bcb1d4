// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "stensor/pipeline.hpp"

using namespace stensor;

namespace {

CompileRequest base_request(const char* preset, std::vector<std::size_t> dims) {
    CompileRequest req;
    req.spec = stencil_preset(preset);
    req.grid_dims = std::move(dims);
    req.hw = hw_preset("a100-sparse");
    req.r_max = 4;
    return req;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("run_compile verifies Heat-2D at desk scale") {
    const auto res = run_compile(base_request("Heat-2D", {64, 64}));
    CHECK(res.ok);
    CHECK(res.verification.status == "verified");
    CHECK(res.verification.max_abs_err == 0.0);
    CHECK(res.issued_mma == res.perf.n_mma);
    CHECK(lint_kernel(res.kernel_text).empty());
}

TEST_CASE("explore choice matches compile choice") {
    auto req = base_request("Box-2D9P", {48, 48});
    const auto res = run_compile(req);
    const auto ex = explore_layouts(req.hw, req.spec, req.grid_dims, req.r_max, req.r_max);
    CHECK(res.plan.layout.r1 == ex.best.r1);
    CHECK(res.plan.layout.r2 == ex.best.r2);
}

TEST_CASE("fixed morph factors are honored") {
    auto req = base_request("Heat-2D", {32, 32});
    req.r1 = 3;
    req.r2 = 2;
    const auto res = run_compile(req);
    CHECK(res.plan.layout.r1 == 3);
    CHECK(res.plan.layout.r2 == 2);
    CHECK(res.verification.status == "verified");
}

TEST_CASE("identity stencil compiles with near-total sparsity") {
    CompileRequest req;
    req.spec = parse_stencil_spec(
        "name = ident\ndims = 2\nshape = star\nk = 1\npoint = 0 0 : 1\n");
    req.grid_dims = {16, 16};
    req.hw = hw_preset("a100-sparse");
    req.r_max = 2;
    const auto res = run_compile(req);
    CHECK(res.ok);
    const auto j = nlohmann::json::parse(res.report_json);
    CHECK(j["zero_columns"].get<std::size_t>() == res.plan.p);
    CHECK(j.contains("sparsity_ratio"));
}

TEST_CASE("round16 stays within tolerance") {
    auto req = base_request("Box-2D49P", {64, 64});
    req.precision = Precision::round16;
    const auto res = run_compile(req);
    CHECK(res.verification.status == "verified");
    CHECK(res.verification.max_rel_err <= 1e-2);
}

TEST_CASE("temporal fusion verifies against the fused oracle") {
    auto req = base_request("Heat-1D", {128});
    req.fuse = 3;
    const auto res = run_compile(req);
    CHECK(res.verification.status == "verified");
    CHECK(res.plan.k == 7);
}

TEST_CASE("corrupt permutation reports conversion-failed") {
    auto req = base_request("Heat-2D", {32, 32});
    req.corrupt_permutation = true;
    const auto res = run_compile(req);
    CHECK_FALSE(res.ok);
    CHECK(res.verification.status == "conversion-failed");
    const auto j = nlohmann::json::parse(res.report_json);
    CHECK(j["verification"]["status"] == "conversion-failed");
    CHECK(j["verification"].contains("bad_row"));
}

TEST_CASE("above the desk cap compiles but stays unverified") {
    const auto res = run_compile(base_request("Heat-1D", {100000}));
    CHECK(res.ok);
    CHECK(res.verification.status == "unverified-scale");
}

TEST_CASE("artifacts are byte-identical across runs") {
    namespace fs = std::filesystem;
    const fs::path d1 = fs::temp_directory_path() / "stensor_det_a";
    const fs::path d2 = fs::temp_directory_path() / "stensor_det_b";
    fs::remove_all(d1);
    fs::remove_all(d2);

    auto req = base_request("Box-2D9P", {40, 40});
    req.seed = 99;
    req.out_dir = d1.string();
    run_compile(req);
    req.out_dir = d2.string();
    run_compile(req);

    for (const char* f : {"kernel.cu", "report.json", "a2.s24", "lut.bin"}) {
        CHECK(fs::exists(d1 / f));
        CHECK(slurp(d1 / f) == slurp(d2 / f));
    }
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("grid dimensionality mismatch surfaces") {
    CHECK_THROWS(run_compile(base_request("Heat-2D", {64})));
}
