// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stensor/codegen.hpp"
#include "stensor/perf.hpp"
#include "stensor/stencil.hpp"

namespace stensor {

inline constexpr std::size_t kVerifyCap = 256;  // per-axis materialization cap

struct CompileRequest {
    StencilSpec spec;
    std::vector<std::size_t> grid_dims;
    HardwareDescriptor hw;
    std::optional<int> r1, r2;       // fixed morph factors; explored when absent
    int r_max = 16;                  // exploration bound per factor
    std::uint64_t fuse = 1;
    Precision precision = Precision::exact64;
    std::uint64_t seed = 1;
    std::string out_dir;             // empty: no artifacts written
    bool corrupt_permutation = false;  // test hook for the failure path
};

struct CompileResult {
    bool ok = false;
    KernelPlan plan;
    PerfEstimate perf;
    std::vector<PerfEstimate> ranked;
    VerificationResult verification;
    std::uint64_t issued_mma = 0;
    double model_gstencil = 0;
    double emulation_seconds = 0;    // wall clock of the emulated run (not reported)
    std::string kernel_text;
    std::string report_json;
};

CompileResult run_compile(const CompileRequest& request);

}  // namespace stensor
