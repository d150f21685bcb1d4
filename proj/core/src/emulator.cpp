// SPDX-License-Identifier: Apache-2.0
#include "stensor/emulator.hpp"

#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "stensor/convert.hpp"
#include "stensor/fp16.hpp"

namespace stensor {

namespace {

void check_frag(const FragmentShape& frag) {
    if (frag.m == 0 || frag.k == 0 || frag.n == 0 || frag.k % 4 != 0)
        throw std::invalid_argument("invalid fragment shape");
}

template <typename T>
void put_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!in) throw std::runtime_error("truncated sparse24 stream");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return static_cast<T>(v);
}

}  // namespace

Sparse24Matrix compress_24(const Matrix& dense) {
    if (dense.cols % 4 != 0)
        throw std::invalid_argument("column count must be divisible by 4");
    Sparse24Matrix s;
    s.rows = dense.rows;
    s.logical_cols = dense.cols;
    s.values.assign(dense.rows * dense.cols / 2, 0.0);
    s.meta.assign(dense.rows * dense.cols / 4, 0);
    for (std::size_t r = 0; r < dense.rows; ++r)
        for (std::size_t g = 0; g < dense.cols / 4; ++g) {
            int pos[2] = {-1, -1};
            double val[2] = {0.0, 0.0};
            int nz = 0;
            for (int l = 0; l < 4; ++l) {
                const double v = dense.at(r, 4 * g + l);
                if (v != 0.0) {
                    if (nz == 2) throw std::invalid_argument("4-group has more than 2 nonzeros");
                    pos[nz] = l;
                    val[nz] = v;
                    ++nz;
                }
            }
            if (nz == 0) {
                pos[0] = 0;  // 0:4 canonical slots
                pos[1] = 1;
            } else if (nz == 1) {
                pos[1] = pos[0] == 0 ? 1 : 0;  // smallest unused slot, value 0
                if (pos[1] > pos[0]) {
                    // keep pos0 < pos1
                } else {
                    std::swap(pos[0], pos[1]);
                    std::swap(val[0], val[1]);
                }
            }
            s.values[r * (dense.cols / 2) + 2 * g] = val[0];
            s.values[r * (dense.cols / 2) + 2 * g + 1] = val[1];
            s.meta[r * (dense.cols / 4) + g] =
                static_cast<std::uint8_t>(pos[0] | (pos[1] << 2));
        }
    return s;
}

Matrix decompress(const Sparse24Matrix& s) {
    Matrix d(s.rows, s.logical_cols);
    for (std::size_t r = 0; r < s.rows; ++r)
        for (std::size_t g = 0; g < s.groups_per_row(); ++g) {
            const std::uint8_t m = s.meta_at(r, g);
            const int p0 = m & 3, p1 = (m >> 2) & 3;
            if (p0 >= p1) throw std::invalid_argument("metadata positions must be increasing");
            d.at(r, 4 * g + static_cast<std::size_t>(p0)) = s.value_at(r, 2 * g);
            d.at(r, 4 * g + static_cast<std::size_t>(p1)) = s.value_at(r, 2 * g + 1);
        }
    return d;
}

Matrix sparse_mma_fragment(const Sparse24Matrix& a, const Matrix& b, const Matrix& c,
                           const FragmentShape& frag, const EmulationConfig& cfg) {
    check_frag(frag);
    if (a.rows != frag.m || a.logical_cols != frag.k || b.rows != frag.k ||
        b.cols != frag.n || c.rows != frag.m || c.cols != frag.n)
        throw std::invalid_argument("fragment shape mismatch");
    const bool half = cfg.value_precision == Precision::round16;
    Matrix d(frag.m, frag.n);
    for (std::size_t i = 0; i < frag.m; ++i)
        for (std::size_t j = 0; j < frag.n; ++j) {
            if (half) {
                float acc = static_cast<float>(c.at(i, j));
                for (std::size_t g = 0; g < a.groups_per_row(); ++g) {
                    const std::uint8_t m = a.meta_at(i, g);
                    for (int slot = 0; slot < 2; ++slot) {
                        const int pos = (m >> (2 * slot)) & 3;
                        const float av = round_to_half(static_cast<float>(a.value_at(i, 2 * g + slot)));
                        const float bv = round_to_half(
                            static_cast<float>(b.at(4 * g + static_cast<std::size_t>(pos), j)));
                        acc += av * bv;
                    }
                }
                d.at(i, j) = static_cast<double>(acc);
            } else {
                double acc = c.at(i, j);
                for (std::size_t g = 0; g < a.groups_per_row(); ++g) {
                    const std::uint8_t m = a.meta_at(i, g);
                    for (int slot = 0; slot < 2; ++slot) {
                        const int pos = (m >> (2 * slot)) & 3;
                        acc += a.value_at(i, 2 * g + slot) *
                               b.at(4 * g + static_cast<std::size_t>(pos), j);
                    }
                }
                d.at(i, j) = acc;
            }
        }
    return d;
}

TiledResult tiled_sparse_matmul(const Sparse24Matrix& a, const ColumnProvider& b,
                                std::size_t b_cols, const FragmentShape& frag,
                                const EmulationConfig& cfg) {
    check_frag(frag);
    const std::size_t mt = (a.rows + frag.m - 1) / frag.m;
    const std::size_t kt = (a.logical_cols + frag.k - 1) / frag.k;
    const std::size_t nt = (b_cols + frag.n - 1) / frag.n;
    TiledResult out;
    out.d = Matrix(a.rows, b_cols);

    for (std::size_t ti = 0; ti < mt; ++ti)
        for (std::size_t tj = 0; tj < nt; ++tj) {
            Matrix c(frag.m, frag.n);  // per-tile accumulator, starts at 0
            for (std::size_t tk = 0; tk < kt; ++tk) {
                // slice a (frag.m x frag.k) sub-fragment of A, zero-filled
                Sparse24Matrix af;
                af.rows = frag.m;
                af.logical_cols = frag.k;
                af.values.assign(frag.m * frag.k / 2, 0.0);
                af.meta.assign(frag.m * frag.k / 4, 0);
                for (std::size_t g = 0; g < frag.k / 4; ++g)
                    for (std::size_t r = 0; r < frag.m; ++r)
                        af.meta[r * (frag.k / 4) + g] = 0 | (1 << 2);  // 0:4 canonical
                for (std::size_t r = 0; r < frag.m; ++r) {
                    const std::size_t sr = ti * frag.m + r;
                    if (sr >= a.rows) continue;
                    for (std::size_t g = 0; g < frag.k / 4; ++g) {
                        const std::size_t sg = tk * (frag.k / 4) + g;
                        if (sg >= a.groups_per_row()) continue;
                        af.meta[r * (frag.k / 4) + g] = a.meta_at(sr, sg);
                        af.values[r * (frag.k / 2) + 2 * g] = a.value_at(sr, 2 * sg);
                        af.values[r * (frag.k / 2) + 2 * g + 1] = a.value_at(sr, 2 * sg + 1);
                    }
                }
                // materialize the B fragment, zero-filled at ragged edges
                Matrix bf(frag.k, frag.n);
                for (std::size_t r = 0; r < frag.k; ++r) {
                    const std::size_t br = tk * frag.k + r;
                    if (br >= a.logical_cols) continue;
                    for (std::size_t jc = 0; jc < frag.n; ++jc) {
                        const std::size_t bc = tj * frag.n + jc;
                        if (bc >= b_cols) continue;
                        bf.at(r, jc) = b(br, bc);
                    }
                }
                c = sparse_mma_fragment(af, bf, c, frag, cfg);
                ++out.issued_mma;
            }
            for (std::size_t r = 0; r < frag.m; ++r) {
                const std::size_t dr = ti * frag.m + r;
                if (dr >= a.rows) continue;
                for (std::size_t jc = 0; jc < frag.n; ++jc) {
                    const std::size_t dc = tj * frag.n + jc;
                    if (dc >= b_cols) continue;
                    out.d.at(dr, dc) = c.at(r, jc);
                }
            }
        }
    return out;
}

void dump_sparse24(std::ostream& out, const Sparse24Matrix& s, Precision tag) {
    out.write("S24\0", 4);
    put_le<std::uint64_t>(out, s.rows);
    put_le<std::uint64_t>(out, s.logical_cols);
    put_le<std::uint32_t>(out, tag == Precision::round16 ? 1u : 0u);
    for (double v : s.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        put_le<std::uint64_t>(out, bits);
    }
    out.write(reinterpret_cast<const char*>(s.meta.data()),
              static_cast<std::streamsize>(s.meta.size()));
}

Sparse24Matrix load_sparse24(std::istream& in, Precision* tag_out) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "S24\0", 4) != 0)
        throw std::runtime_error("bad sparse24 magic");
    Sparse24Matrix s;
    s.rows = get_le<std::uint64_t>(in);
    s.logical_cols = get_le<std::uint64_t>(in);
    const std::uint32_t tag = get_le<std::uint32_t>(in);
    if (s.logical_cols % 4 != 0) throw std::runtime_error("bad sparse24 column count");
    if (tag_out) *tag_out = tag ? Precision::round16 : Precision::exact64;
    s.values.resize(s.rows * s.logical_cols / 2);
    for (double& v : s.values) {
        const std::uint64_t bits = get_le<std::uint64_t>(in);
        std::memcpy(&v, &bits, sizeof v);
    }
    s.meta.resize(s.rows * s.logical_cols / 4);
    in.read(reinterpret_cast<char*>(s.meta.data()),
            static_cast<std::streamsize>(s.meta.size()));
    if (!in) throw std::runtime_error("truncated sparse24 stream");
    return s;
}

}  // namespace stensor
