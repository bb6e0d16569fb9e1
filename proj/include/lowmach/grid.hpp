#pragma once

// Uniform cell-centred grids on a box, scalar/vector fields and midpoint-rule
// norms over optional measurement windows.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lowmach/error.hpp"

namespace lowmach {

enum class Boundary { NeumannBox, Periodic };

inline std::string to_string(Boundary b) { return b == Boundary::Periodic ? "periodic" : "neumann"; }

inline Boundary boundary_from_string(const std::string& s) {
    if (s == "periodic") return Boundary::Periodic;
    if (s == "neumann" || s == "neumann-box") return Boundary::NeumannBox;
    throw ConfigError("unknown boundary '" + s + "'");
}

struct Grid {
    int dim = 2;
    int nx = 4, ny = 1;
    double x0 = 0.0, y0 = 0.0;   // lower-left corner
    double lx = 1.0, ly = 1.0;   // extents
    Boundary boundary = Boundary::NeumannBox;

    static Grid make_1d(int n, double length, Boundary b = Boundary::NeumannBox, double origin = 0.0) {
        Grid g;
        g.dim = 1;
        g.nx = n;
        g.ny = 1;
        g.lx = length;
        g.ly = 1.0;
        g.x0 = origin;
        g.boundary = b;
        g.validate();
        return g;
    }
    static Grid make_2d(int nx, int ny, double lx, double ly, Boundary b = Boundary::NeumannBox,
                        double x0 = 0.0, double y0 = 0.0) {
        Grid g;
        g.dim = 2;
        g.nx = nx;
        g.ny = ny;
        g.lx = lx;
        g.ly = ly;
        g.x0 = x0;
        g.y0 = y0;
        g.boundary = b;
        g.validate();
        return g;
    }

    void validate() const {
        if (dim != 1 && dim != 2) throw PreconditionError("grid dimension must be 1 or 2");
        if (nx < 4 || (dim == 2 && ny < 4)) throw PreconditionError("grid needs at least 4 points per axis");
        if (dim == 1 && ny != 1) throw PreconditionError("1D grid must have ny == 1");
        if (!(lx > 0.0) || !(ly > 0.0)) throw PreconditionError("grid extents must be positive");
    }

    std::size_t size() const { return std::size_t(nx) * std::size_t(ny); }
    double hx() const { return lx / nx; }
    double hy() const { return dim == 2 ? ly / ny : 1.0; }
    double cell_volume() const { return hx() * hy(); }
    double x(int i) const { return x0 + (i + 0.5) * hx(); }
    double y(int j) const { return dim == 2 ? y0 + (j + 0.5) * hy() : 0.0; }
    std::size_t index(int i, int j) const { return std::size_t(j) * nx + i; }
    double x_hi() const { return x0 + lx; }
    double y_hi() const { return y0 + ly; }

    bool operator==(const Grid& o) const {
        return dim == o.dim && nx == o.nx && ny == o.ny && x0 == o.x0 && y0 == o.y0 && lx == o.lx &&
               ly == o.ly && boundary == o.boundary;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (a != b) throw PreconditionError(std::string("grid mismatch: ") + what);
}

struct ScalarField {
    Grid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
    ScalarField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size()) throw PreconditionError("value count does not match grid");
    }

    double& operator()(int i, int j = 0) { return values[grid.index(i, j)]; }
    double operator()(int i, int j = 0) const { return values[grid.index(i, j)]; }
    double& operator[](std::size_t k) { return values[k]; }
    double operator[](std::size_t k) const { return values[k]; }
    std::size_t size() const { return values.size(); }

    bool all_finite() const {
        return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
    }

    ScalarField& operator+=(const ScalarField& o) {
        require_same_grid(grid, o.grid, "scalar +=");
        for (std::size_t k = 0; k < values.size(); ++k) values[k] += o.values[k];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        require_same_grid(grid, o.grid, "scalar -=");
        for (std::size_t k = 0; k < values.size(); ++k) values[k] -= o.values[k];
        return *this;
    }
    ScalarField& operator*=(double s) {
        for (auto& v : values) v *= s;
        return *this;
    }
};

inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(double s, ScalarField a) { return a *= s; }

struct VectorField {
    Grid grid;
    std::vector<double> x;
    std::vector<double> y;

    VectorField() = default;
    explicit VectorField(const Grid& g, double fill = 0.0) : grid(g), x(g.size(), fill), y(g.size(), fill) {}
    VectorField(const ScalarField& cx, const ScalarField& cy) : grid(cx.grid), x(cx.values), y(cy.values) {
        require_same_grid(cx.grid, cy.grid, "vector components");
    }

    ScalarField component(int c) const { return ScalarField(grid, c == 0 ? x : y); }
    std::size_t size() const { return x.size(); }
    double magnitude(std::size_t k) const { return std::hypot(x[k], y[k]); }

    VectorField& operator+=(const VectorField& o) {
        require_same_grid(grid, o.grid, "vector +=");
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] += o.x[k];
            y[k] += o.y[k];
        }
        return *this;
    }
    VectorField& operator-=(const VectorField& o) {
        require_same_grid(grid, o.grid, "vector -=");
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] -= o.x[k];
            y[k] -= o.y[k];
        }
        return *this;
    }
    VectorField& operator*=(double s) {
        for (auto& v : x) v *= s;
        for (auto& v : y) v *= s;
        return *this;
    }
};

inline VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
inline VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
inline VectorField operator*(double s, VectorField a) { return a *= s; }

inline ScalarField sample(const Grid& g, const std::function<double(double, double)>& f) {
    ScalarField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) out(i, j) = f(g.x(i), g.y(j));
    return out;
}

inline VectorField sample_vector(const Grid& g, const std::function<double(double, double)>& fx,
                                 const std::function<double(double, double)>& fy) {
    return VectorField(sample(g, fx), sample(g, fy));
}

inline double max_abs(const ScalarField& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

inline double max_abs(const VectorField& f) {
    double m = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) m = std::max(m, f.magnitude(k));
    return m;
}

/// Discrete L2 inner product (midpoint rule).
inline double inner(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid, b.grid, "inner product");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s * a.grid.cell_volume();
}

inline double inner(const VectorField& a, const VectorField& b) {
    require_same_grid(a.grid, b.grid, "inner product");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a.x[k] * b.x[k] + a.y[k] * b.y[k];
    return s * a.grid.cell_volume();
}

// --------------------------------------------------------------- windows

struct Window {
    double x_lo, x_hi, y_lo = -1e300, y_hi = 1e300;

    bool contains(double x, double y) const { return x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi; }
    bool inside(const Grid& g) const {
        const bool xin = x_lo >= g.x0 && x_hi <= g.x_hi();
        const bool yin = g.dim == 1 || (y_lo >= g.y0 && y_hi <= g.y_hi());
        return xin && yin;
    }
};

/// Node mask of cells whose centres lie in the window (all cells when absent).
inline std::vector<char> window_mask(const Grid& g, const std::optional<Window>& w) {
    std::vector<char> mask(g.size(), 1);
    if (!w) return mask;
    if (!w->inside(g)) throw PreconditionError("window must lie inside the grid box");
    std::size_t count = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const bool in = w->contains(g.x(i), g.y(j));
            mask[g.index(i, j)] = in;
            count += in;
        }
    if (count == 0) throw PreconditionError("window contains no grid cells");
    return mask;
}

enum class NormKind { L2, L53, Linf, H1 };

inline NormKind norm_from_string(const std::string& s) {
    if (s == "L2") return NormKind::L2;
    if (s == "L5/3" || s == "L53") return NormKind::L53;
    if (s == "Linf") return NormKind::Linf;
    if (s == "H1") return NormKind::H1;
    throw ConfigError("unknown norm '" + s + "'");
}

namespace detail {

inline double lp_from_pointwise(const Grid& g, const std::vector<double>& mag, const std::vector<char>& mask,
                                NormKind kind) {
    if (kind == NormKind::Linf) {
        double m = 0.0;
        for (std::size_t k = 0; k < mag.size(); ++k)
            if (mask[k]) m = std::max(m, mag[k]);
        return m;
    }
    const double p = kind == NormKind::L53 ? 5.0 / 3.0 : 2.0;
    double s = 0.0;
    for (std::size_t k = 0; k < mag.size(); ++k)
        if (mask[k]) s += kind == NormKind::L53 ? std::pow(mag[k], p) : mag[k] * mag[k];
    s *= g.cell_volume();
    return kind == NormKind::L53 ? std::pow(s, 1.0 / p) : std::sqrt(s);
}

/// Squared gradient magnitude from centred differences, one-sided at box walls.
inline std::vector<double> grad_sq(const ScalarField& f) {
    const Grid& g = f.grid;
    std::vector<double> out(g.size(), 0.0);
    auto d = [&](int i, int j, int axis) {
        const int n = axis == 0 ? g.nx : g.ny;
        const double h = axis == 0 ? g.hx() : g.hy();
        const int k = axis == 0 ? i : j;
        auto val = [&](int kk) {
            if (g.boundary == Boundary::Periodic) kk = (kk + n) % n;
            return axis == 0 ? f(kk, j) : f(i, kk);
        };
        if (g.boundary == Boundary::Periodic || (k > 0 && k < n - 1)) return (val(k + 1) - val(k - 1)) / (2 * h);
        if (k == 0) return (val(1) - val(0)) / h;
        return (val(n - 1) - val(n - 2)) / h;
    };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double s = d(i, j, 0);
            s *= s;
            if (g.dim == 2) {
                const double dy = d(i, j, 1);
                s += dy * dy;
            }
            out[g.index(i, j)] = s;
        }
    return out;
}

}  // namespace detail

inline double norm(const ScalarField& f, NormKind kind, const std::optional<Window>& window = std::nullopt) {
    const auto mask = window_mask(f.grid, window);
    std::vector<double> mag(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) mag[k] = std::abs(f[k]);
    if (kind != NormKind::H1) return detail::lp_from_pointwise(f.grid, mag, mask, kind);
    const auto g2 = detail::grad_sq(f);
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k)
        if (mask[k]) s += mag[k] * mag[k] + g2[k];
    return std::sqrt(s * f.grid.cell_volume());
}

inline double norm(const VectorField& f, NormKind kind, const std::optional<Window>& window = std::nullopt) {
    const auto mask = window_mask(f.grid, window);
    std::vector<double> mag(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) mag[k] = f.magnitude(k);
    if (kind != NormKind::H1) return detail::lp_from_pointwise(f.grid, mag, mask, kind);
    const auto gx = detail::grad_sq(f.component(0));
    const auto gy = detail::grad_sq(f.component(1));
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k)
        if (mask[k]) s += mag[k] * mag[k] + gx[k] + gy[k];
    return std::sqrt(s * f.grid.cell_volume());
}

}  // namespace lowmach
