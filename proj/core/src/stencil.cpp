// SPDX-License-Identifier: Apache-2.0
#include "stensor/stencil.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace stensor {

namespace {

std::size_t product(std::span<const std::size_t> v) {
    std::size_t p = 1;
    for (auto x : v) p *= x;
    return p;
}

bool offset_less(const StencilPoint& a, const StencilPoint& b) { return a.off < b.off; }

int nonzero_components(const StencilPoint& p, int dims) {
    int n = 0;
    for (int a = 0; a < dims; ++a)
        if (p.off[a] != 0) ++n;
    return n;
}

}  // namespace

std::size_t StencilSpec::kernel_cells() const {
    std::size_t c = 1;
    for (int a = 0; a < dims; ++a) c *= static_cast<std::size_t>(k);
    return c;
}

std::size_t Grid::size() const {
    std::size_t p = 1;
    for (auto d : dims) p *= d;
    return p;
}

double Grid::at(std::span<const std::size_t> idx) const {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < dims.size(); ++a) flat = flat * dims[a] + idx[a];
    return values[flat];
}

void validate(const StencilSpec& spec) {
    if (spec.dims < 1 || spec.dims > 3) throw std::invalid_argument("dims must be 1, 2 or 3");
    if (spec.k < 1 || spec.k % 2 == 0) throw std::invalid_argument("k must be odd and >= 1");
    if (spec.points.empty()) throw std::invalid_argument("stencil has no points");
    const int r = spec.radius();
    for (const auto& p : spec.points) {
        for (int a = 0; a < 3; ++a) {
            if (a >= spec.dims && p.off[a] != 0)
                throw std::invalid_argument("offset component beyond dimensionality");
            if (p.off[a] < -r || p.off[a] > r)
                throw std::invalid_argument("offset outside kernel radius");
        }
        if (spec.shape == StencilShape::star && nonzero_components(p, spec.dims) > 1)
            throw std::invalid_argument("star stencil offset has more than one nonzero component");
    }
    for (std::size_t i = 1; i < spec.points.size(); ++i)
        if (spec.points[i - 1].off == spec.points[i].off)
            throw std::invalid_argument("duplicate offset");
}

std::vector<double> dense_weights(const StencilSpec& spec) {
    std::vector<double> w(spec.kernel_cells(), 0.0);
    const int r = spec.radius();
    for (const auto& p : spec.points) {
        std::size_t flat = 0;
        for (int a = 0; a < spec.dims; ++a)
            flat = flat * static_cast<std::size_t>(spec.k) + static_cast<std::size_t>(p.off[a] + r);
        w[flat] += p.weight;
    }
    return w;
}

namespace {

StencilSpec finalize(StencilSpec spec) {
    std::sort(spec.points.begin(), spec.points.end(), offset_less);
    validate(spec);
    return spec;
}

StencilSpec make_star(std::string name, int dims, int k, double center, double arm) {
    StencilSpec s;
    s.name = std::move(name);
    s.dims = dims;
    s.shape = StencilShape::star;
    s.k = k;
    s.points.push_back({{0, 0, 0}, center});
    for (int a = 0; a < dims; ++a)
        for (int o = 1; o <= (k - 1) / 2; ++o) {
            StencilPoint p{};
            p.off[a] = o;
            p.weight = arm;
            s.points.push_back(p);
            p.off[a] = -o;
            s.points.push_back(p);
        }
    return finalize(std::move(s));
}

StencilSpec make_box(std::string name, int dims, int k, double center, double other) {
    StencilSpec s;
    s.name = std::move(name);
    s.dims = dims;
    s.shape = StencilShape::box;
    s.k = k;
    const int r = (k - 1) / 2;
    std::array<int, 3> o{};
    auto rec = [&](auto&& self, int axis) -> void {
        if (axis == dims) {
            const bool is_center = o == std::array<int, 3>{0, 0, 0};
            s.points.push_back({o, is_center ? center : other});
            return;
        }
        for (int v = -r; v <= r; ++v) {
            o[axis] = v;
            self(self, axis + 1);
        }
        o[axis] = 0;
    };
    rec(rec, 0);
    return finalize(std::move(s));
}

}  // namespace

StencilSpec stencil_preset(std::string_view name) {
    // Table-2 shapes; weights are symmetric positive dyadic rationals
    // summing to 1 (see README).
    if (name == "Heat-1D") {
        StencilSpec s{"Heat-1D", 1, StencilShape::star, 3, {}};
        s.points = {{{-1, 0, 0}, 0.25}, {{0, 0, 0}, 0.5}, {{1, 0, 0}, 0.25}};
        return finalize(std::move(s));
    }
    if (name == "1D5P") {
        StencilSpec s{"1D5P", 1, StencilShape::star, 5, {}};
        s.points = {{{-2, 0, 0}, 0.0625},
                    {{-1, 0, 0}, 0.25},
                    {{0, 0, 0}, 0.375},
                    {{1, 0, 0}, 0.25},
                    {{2, 0, 0}, 0.0625}};
        return finalize(std::move(s));
    }
    if (name == "Heat-2D") return make_star("Heat-2D", 2, 3, 0.5, 0.125);
    if (name == "Box-2D9P") return make_box("Box-2D9P", 2, 3, 0.5, 0.0625);
    if (name == "Star-2D13P") return make_star("Star-2D13P", 2, 7, 0.25, 0.0625);
    if (name == "Box-2D49P") return make_box("Box-2D49P", 2, 7, 0.25, 0.015625);
    if (name == "Heat-3D") return make_star("Heat-3D", 3, 3, 0.25, 0.125);
    if (name == "Box-3D27P") return make_box("Box-3D27P", 3, 3, 0.1875, 0.03125);
    throw std::invalid_argument("unknown stencil preset: " + std::string(name));
}

std::vector<std::string> preset_names() {
    return {"Heat-1D", "1D5P", "Heat-2D", "Box-2D9P", "Star-2D13P", "Box-2D49P", "Heat-3D", "Box-3D27P"};
}

bool is_preset(std::string_view name) {
    for (const auto& n : preset_names())
        if (n == name) return true;
    return false;
}

StencilSpec parse_stencil_spec(std::string_view text) {
    StencilSpec spec;
    bool have_name = false, have_dims = false, have_shape = false, have_k = false;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("stencil spec line " + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "name") {
            spec.name = val;
            have_name = true;
        } else if (key == "dims") {
            spec.dims = std::stoi(val);
            have_dims = true;
        } else if (key == "shape") {
            if (val == "star")
                spec.shape = StencilShape::star;
            else if (val == "box")
                spec.shape = StencilShape::box;
            else
                throw std::invalid_argument("shape must be star or box");
            have_shape = true;
        } else if (key == "k") {
            spec.k = std::stoi(val);
            have_k = true;
        } else if (key == "point") {
            if (!have_dims) throw std::invalid_argument("dims must precede point lines");
            const auto colon = val.find(':');
            if (colon == std::string::npos)
                throw std::invalid_argument("point line missing ':' separator");
            std::istringstream os(val.substr(0, colon));
            StencilPoint p{};
            for (int a = 0; a < spec.dims; ++a)
                if (!(os >> p.off[a])) throw std::invalid_argument("point has too few offset components");
            int extra;
            if (os >> extra) throw std::invalid_argument("point has too many offset components");
            p.weight = std::stod(val.substr(colon + 1));
            spec.points.push_back(p);
        } else {
            throw std::invalid_argument("unknown key: " + key);
        }
    }
    if (!have_name || !have_dims || !have_shape || !have_k)
        throw std::invalid_argument("stencil spec missing required field (name/dims/shape/k)");
    return finalize(std::move(spec));
}

Grid direct_apply(const StencilSpec& spec, const Grid& grid, std::uint64_t steps) {
    validate(spec);
    if (steps == 0) throw std::invalid_argument("steps must be >= 1");
    if (grid.dims.size() != static_cast<std::size_t>(spec.dims))
        throw std::invalid_argument("grid dimensionality does not match stencil");

    Grid cur = grid;
    const int r = spec.radius();
    for (std::uint64_t s = 0; s < steps; ++s) {
        for (auto d : cur.dims)
            if (d < static_cast<std::size_t>(spec.k))
                throw std::invalid_argument("grid smaller than kernel");
        Grid out;
        out.precision = cur.precision;
        for (auto d : cur.dims) out.dims.push_back(d - static_cast<std::size_t>(spec.k) + 1);
        out.values.assign(product(out.dims), 0.0);

        std::vector<std::size_t> idx(cur.dims.size(), 0);
        const std::size_t n_out = out.values.size();
        for (std::size_t flat = 0; flat < n_out; ++flat) {
            // decompose flat -> output index
            std::size_t rem = flat;
            for (std::size_t a = cur.dims.size(); a-- > 0;) {
                idx[a] = rem % out.dims[a];
                rem /= out.dims[a];
            }
            double acc = 0.0;
            for (const auto& p : spec.points) {
                std::size_t src = 0;
                for (std::size_t a = 0; a < cur.dims.size(); ++a)
                    src = src * cur.dims[a] +
                          (idx[a] + static_cast<std::size_t>(static_cast<int>(r) + p.off[a]));
                acc += p.weight * cur.values[src];
            }
            out.values[flat] = acc;
        }
        cur = std::move(out);
    }
    return cur;
}

StencilSpec fuse_time_steps(const StencilSpec& spec, std::uint64_t t) {
    validate(spec);
    if (t == 0) throw std::invalid_argument("fusion factor must be >= 1");
    if (t == 1) return spec;

    const int d = spec.dims;
    // repeated discrete convolution of the dense kernel
    auto convolve = [d](const std::vector<double>& a, int ka, const std::vector<double>& b,
                        int kb) {
        const int kc = ka + kb - 1;
        auto cells = [d](int k) {
            std::size_t c = 1;
            for (int i = 0; i < d; ++i) c *= static_cast<std::size_t>(k);
            return c;
        };
        std::vector<double> c(cells(kc), 0.0);
        std::vector<int> ia(d, 0), ib(d, 0);
        const std::size_t na = cells(ka), nb = cells(kb);
        for (std::size_t x = 0; x < na; ++x) {
            if (a[x] == 0.0) continue;
            std::size_t rx = x;
            for (int ax = d; ax-- > 0;) {
                ia[ax] = static_cast<int>(rx % static_cast<std::size_t>(ka));
                rx /= static_cast<std::size_t>(ka);
            }
            for (std::size_t y = 0; y < nb; ++y) {
                if (b[y] == 0.0) continue;
                std::size_t ry = y;
                for (int ax = d; ax-- > 0;) {
                    ib[ax] = static_cast<int>(ry % static_cast<std::size_t>(kb));
                    ry /= static_cast<std::size_t>(kb);
                }
                std::size_t flat = 0;
                for (int ax = 0; ax < d; ++ax)
                    flat = flat * static_cast<std::size_t>(kc) +
                           static_cast<std::size_t>(ia[ax] + ib[ax]);
                c[flat] += a[x] * b[y];
            }
        }
        return c;
    };

    std::vector<double> acc = dense_weights(spec);
    int k_acc = spec.k;
    const std::vector<double> base = acc;
    for (std::uint64_t i = 1; i < t; ++i) {
        acc = convolve(acc, k_acc, base, spec.k);
        k_acc += spec.k - 1;
    }

    StencilSpec fused;
    fused.name = spec.name + "-fused" + std::to_string(t);
    fused.dims = d;
    fused.k = k_acc;
    const int r = (k_acc - 1) / 2;
    std::vector<int> idx(d, 0);
    for (std::size_t flat = 0; flat < acc.size(); ++flat) {
        if (acc[flat] == 0.0) continue;
        std::size_t rem = flat;
        StencilPoint p{};
        for (int ax = d; ax-- > 0;) {
            p.off[ax] = static_cast<int>(rem % static_cast<std::size_t>(k_acc)) - r;
            rem /= static_cast<std::size_t>(k_acc);
        }
        p.weight = acc[flat];
        fused.points.push_back(p);
    }
    // classify: star iff every point sits on an axis
    fused.shape = StencilShape::star;
    for (const auto& p : fused.points)
        if (nonzero_components(p, d) > 1) {
            fused.shape = StencilShape::box;
            break;
        }
    return finalize(std::move(fused));
}

Throughput gstencil_rate(std::uint64_t iterations, std::span<const std::size_t> dims,
                         double t_sec) {
    if (!(t_sec > 0.0)) throw std::invalid_argument("time must be positive");
    Throughput th;
    th.iterations = iterations;
    th.point_counts.assign(dims.begin(), dims.end());
    th.seconds = t_sec;
    th.gstencils_per_sec =
        static_cast<double>(iterations) * static_cast<double>(product(dims)) / (t_sec * 1e9);
    return th;
}

Grid random_grid(std::span<const std::size_t> dims, std::uint64_t seed, Precision precision) {
    Grid g;
    g.dims.assign(dims.begin(), dims.end());
    g.precision = precision;
    g.values.resize(product(dims));
    std::mt19937_64 rng(seed);
    for (auto& v : g.values) v = static_cast<double>(rng() & 0xff) / 256.0;
    return g;
}

}  // namespace stensor
