// SPDX-License-Identifier: Apache-2.0
#include "stensor/codegen.hpp"

#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace stensor {

BlockConfig default_block_config(int dims) {
    switch (dims) {
        case 1: return {1024, 1};
        case 2: return {32, 64};
        case 3: return {8, 64};
        default: throw std::invalid_argument("unsupported dimensionality");
    }
}

LookupTable build_lut(const MorphedLayout& layout, const BlockConfig& block) {
    if (block.x == 0 || block.y == 0) throw std::invalid_argument("empty block config");
    LookupTable lut;
    lut.block_config = block;
    lut.b_rows = layout.a.cols;
    lut.cols_per_block = std::min<std::size_t>(block.x, layout.n_prime);
    lut.block_count = (layout.n_prime + lut.cols_per_block - 1) / lut.cols_per_block;

    const std::size_t gx = layout.grid_dims[static_cast<std::size_t>(layout.dims) - 1];
    const std::size_t gy =
        layout.dims >= 2 ? layout.grid_dims[static_cast<std::size_t>(layout.dims) - 2] : 1;
    const std::size_t tx_count = layout.padded_out_x / static_cast<std::size_t>(layout.r1);
    const std::size_t ty_count = layout.padded_out_y / static_cast<std::size_t>(layout.r2);
    std::size_t grid_cells = 1;
    for (auto d : layout.grid_dims) grid_cells *= d;

    lut.base.resize(lut.block_count);
    lut.entries.assign(lut.block_count * lut.b_rows * lut.cols_per_block, kLutZero);
    for (std::size_t blk = 0; blk < lut.block_count; ++blk) {
        const std::size_t col0 = blk * lut.cols_per_block;
        const std::size_t tx0 = col0 % tx_count;
        const std::size_t ty0 = (col0 / tx_count) % ty_count;
        const std::size_t zo0 = col0 / (tx_count * ty_count);
        lut.base[blk] = static_cast<std::int64_t>(
            zo0 * gy * gx + ty0 * static_cast<std::size_t>(layout.r2) * gx +
            tx0 * static_cast<std::size_t>(layout.r1));
        for (std::size_t c = 0; c < lut.cols_per_block; ++c) {
            const std::size_t col = col0 + c;
            if (col >= layout.n_prime) break;  // ragged last block keeps sentinels
            for (std::size_t r = 0; r < lut.b_rows; ++r) {
                const BRef ref = layout.b_at(r, col);
                if (ref.is_zero()) continue;
                if (ref.flat >= grid_cells)
                    throw std::out_of_range("lookup slot maps outside the grid");
                lut.entries[(blk * lut.b_rows + r) * lut.cols_per_block + c] =
                    static_cast<std::int64_t>(ref.flat) - lut.base[blk];
            }
        }
    }
    return lut;
}

Matrix gather_b(const LookupTable& lut, const MorphedLayout& layout, const Grid& grid) {
    Matrix b(lut.b_rows, layout.n_prime);
    for (std::size_t col = 0; col < layout.n_prime; ++col) {
        const std::size_t blk = col / lut.cols_per_block;
        const std::size_t c = col % lut.cols_per_block;
        for (std::size_t r = 0; r < lut.b_rows; ++r) {
            const std::int64_t e = lut.entry(blk, r, c);
            if (e == kLutZero) continue;
            b.at(r, col) = grid.values[static_cast<std::size_t>(lut.base[blk] + e)];
        }
    }
    return b;
}

KernelPlan make_plan(std::string stencil_name, const MorphedLayout& layout,
                     const Conversion& cv, const HardwareDescriptor& hw,
                     Precision precision) {
    if (!check_24(cv.converted.a))
        throw std::invalid_argument("plan operand violates the 2:4 constraint");
    std::vector<std::uint8_t> seen(cv.perm.size(), 0);
    for (auto o : cv.perm.order) {
        if (o >= cv.perm.size() || seen[o])
            throw std::invalid_argument("plan permutation is not a bijection");
        seen[o] = 1;
    }
    KernelPlan plan;
    plan.stencil_name = std::move(stencil_name);
    plan.dims = layout.dims;
    plan.k = layout.kext[static_cast<std::size_t>(layout.dims) - 1];
    plan.grid_dims = layout.grid_dims;
    plan.layout = cv.converted;
    plan.perm = cv.perm;
    plan.a2 = compress_24(cv.converted.a);
    plan.fragment = hw.fragment;
    plan.block = default_block_config(layout.dims);
    plan.lut = build_lut(cv.converted, plan.block);
    plan.precision = precision;
    plan.p = cv.p;
    plan.align_cols = cv.align_cols;
    plan.used_blossom = cv.used_blossom;
    return plan;
}

namespace {

void emit_u8_table(std::ostream& out, const std::string& name,
                   const std::vector<std::uint8_t>& data, std::size_t threshold) {
    if (data.size() > threshold) {
        out << "// external blob: " << name << ".bin (" << data.size() << " bytes)\n";
        out << "extern __constant__ unsigned char " << name << "[" << data.size() << "];\n";
        return;
    }
    out << "__constant__ unsigned char " << name << "[" << data.size() << "] = {";
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (i % 24 == 0) out << "\n    ";
        out << static_cast<unsigned>(data[i]) << (i + 1 < data.size() ? "," : "");
    }
    out << "\n};\n";
}

void emit_i64_table(std::ostream& out, const std::string& name,
                    const std::vector<std::int64_t>& data, std::size_t threshold) {
    if (data.size() > threshold) {
        out << "// external blob: " << name << ".bin (" << data.size() * 8 << " bytes)\n";
        out << "extern __constant__ long long " << name << "[" << data.size() << "];\n";
        return;
    }
    out << "__constant__ long long " << name << "[" << data.size() << "] = {";
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (i % 12 == 0) out << "\n    ";
        out << data[i] << (i + 1 < data.size() ? "," : "");
    }
    out << "\n};\n";
}

}  // namespace

std::string emit_kernel(const KernelPlan& plan, std::size_t blob_threshold) {
    const std::size_t kt_count =
        (plan.layout.a.cols + plan.fragment.k - 1) / plan.fragment.k;
    const std::size_t tile_rows = kt_count * plan.fragment.k;
    const std::size_t tile_cols = plan.lut.cols_per_block;

    std::ostringstream out;
    out << "// auto-generated sparse stencil kernel: " << plan.stencil_name << "\n";
    out << "// morph r1=" << plan.layout.r1 << " r2=" << plan.layout.r2
        << " operand " << plan.layout.a.rows << "x" << plan.layout.a.cols
        << " columns " << plan.layout.n_prime << "\n";
    out << "// fragment " << plan.fragment.m << "x" << plan.fragment.k << "x"
        << plan.fragment.n << ", block " << plan.block.x << "x" << plan.block.y
        << ", precision "
        << (plan.precision == Precision::round16 ? "round16" : "exact64") << "\n\n";

    emit_u8_table(out, "a2_meta", plan.a2.meta, blob_threshold);
    emit_i64_table(out, "lut_base", plan.lut.base, blob_threshold);
    emit_i64_table(out, "lut_rel", plan.lut.entries, blob_threshold);
    out << "\n";

    const char* elem = plan.precision == Precision::round16 ? "half" : "double";
    out << "__global__ void stencil_sptc_kernel(const " << elem
        << "* __restrict__ g_in, " << elem << "* __restrict__ g_out) {\n";
    out << "    __shared__ " << elem << " tile[2][" << tile_rows << "][" << tile_cols
        << "];\n";
    out << "    frag_acc acc;\n";
    out << "    int buf = 0;\n";
    out << "    // stage 1: asynchronous LUT-driven global-to-shared loads\n";
    out << "    lut_load_async(tile[buf], g_in + lut_base[blockIdx.x], lut_rel, "
        << plan.lut.b_rows << ", " << tile_cols << ");\n";
    out << "    cp_async_wait();\n";
    out << "    for (int t = 0; t < n_tiles; ++t) {\n";
    out << "        // stage 2: metadata-driven sparse MMA interleaved with the next load\n";
    out << "        if (t + 1 < n_tiles)\n";
    out << "            lut_load_async(tile[buf ^ 1], g_in + lut_base[blockIdx.x + t + 1], "
           "lut_rel, "
        << plan.lut.b_rows << ", " << tile_cols << ");\n";
    for (std::size_t kt = 0; kt < kt_count; ++kt)
        out << "        sptc_mma_" << plan.fragment.m << "x" << plan.fragment.k << "x"
            << plan.fragment.n << "(acc, frag_a[" << kt << "], tile[buf] + "
            << kt * plan.fragment.k << ", a2_meta, " << kt << ");\n";
    out << "        cp_async_wait();\n";
    out << "        buf ^= 1;\n";
    out << "        // stage 3: write back finished output fragments\n";
    out << "        store_output(g_out, acc, t);\n";
    out << "    }\n";
    out << "}\n";
    return out.str();
}

std::string lint_kernel(const std::string& text) {
    for (const char* marker : {"// stage 1", "// stage 2", "// stage 3"})
        if (text.find(marker) == std::string::npos)
            return std::string("missing marker: ") + marker;
    if (text.find("buf ^= 1") == std::string::npos) return "missing buffer swap";
    if (text.find("tile[buf]") == std::string::npos ||
        text.find("tile[buf ^ 1]") == std::string::npos)
        return "buffer indices do not alternate";
    return {};
}

std::string emit_report(const KernelPlan& plan, const PerfEstimate& perf,
                        const VerificationResult& verification,
                        std::uint64_t issued_mma, double model_gstencil) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["stencil"] = plan.stencil_name;
    j["dims"] = plan.dims;
    j["k"] = plan.k;
    j["grid"] = plan.grid_dims;
    j["precision"] = plan.precision == Precision::round16 ? "round16" : "exact64";
    j["r1"] = plan.layout.r1;
    j["r2"] = plan.layout.r2;
    j["m_prime"] = plan.layout.a.rows;
    j["k_prime"] = plan.layout.a.cols;
    j["n_prime"] = plan.layout.n_prime;
    j["zero_columns"] = plan.p;
    j["align_columns"] = plan.align_cols;
    j["used_blossom"] = plan.used_blossom;

    std::size_t nnz = 0;
    for (double v : plan.layout.a.data)
        if (v != 0.0) ++nnz;
    j["sparsity_ratio"] =
        1.0 - static_cast<double>(nnz) /
                  static_cast<double>(plan.layout.a.rows * plan.layout.a.cols);

    j["n_mma"] = perf.n_mma;
    j["issued_mma"] = issued_mma;
    j["t_compute"] = perf.t_compute;
    j["t_memory"] = perf.t_memory;
    j["t_total"] = perf.t_total;
    j["model_gstencils_per_sec"] = model_gstencil;

    nlohmann::ordered_json v;
    v["status"] = verification.status;
    v["max_abs_err"] = verification.max_abs_err;
    v["max_rel_err"] = verification.max_rel_err;
    if (verification.status == "conversion-failed") {
        v["bad_row"] = verification.bad_row;
        v["bad_col"] = verification.bad_col;
    }
    j["verification"] = v;
    return j.dump(2) + "\n";
}

}  // namespace stensor
