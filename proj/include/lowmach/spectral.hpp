#pragma once

// Eigen-expansions of the Neumann Laplacian on a box (cosine family for
// scalars, sine family for normal components), the periodic Fourier basis,
// and the operators built on them: spectral derivatives, Neumann Poisson
// solves, the Helmholtz projection and the band-pass regularizer.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>
#include <utility>
#include <vector>

#include "lowmach/error.hpp"
#include "lowmach/grid.hpp"

namespace lowmach {

/// Per-axis expansion family on a Neumann box. Even: cos(pi k (x-x0)/L),
/// k = 0..N-1. Odd: sin(pi (k+1) (x-x0)/L), k = 0..N-1.
enum class Parity { Even, Odd };

struct Basis {
    Parity px = Parity::Even;
    Parity py = Parity::Even;
    bool operator==(const Basis&) const = default;
};

inline constexpr Basis kScalarBasis{Parity::Even, Parity::Even};
inline constexpr Basis kXComponentBasis{Parity::Odd, Parity::Even};
inline constexpr Basis kYComponentBasis{Parity::Even, Parity::Odd};
inline constexpr Basis kStreamBasis{Parity::Odd, Parity::Odd};

using cplx = std::complex<double>;

/// Expansion amplitudes: f(x_n) = sum_k c_k phi_k(x_n). Real-valued (stored
/// with zero imaginary part) on a Neumann box, complex on periodic grids.
struct SpectralCoeffs {
    Grid grid;
    Basis basis;
    std::vector<cplx> c;

    cplx& operator()(int kx, int ky = 0) { return c[grid.index(kx, ky)]; }
    cplx operator()(int kx, int ky = 0) const { return c[grid.index(kx, ky)]; }
};

namespace detail {

constexpr double pi = std::numbers::pi;

class PlanCache {
public:
    using Key = std::tuple<int, int, int, int, int>;  // nx, ny, kind_x, kind_y (or -1/-2 for dft), dim

    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan r2r(int nx, int ny, int dim, fftw_r2r_kind kx, fftw_r2r_kind ky) {
        const Key key{nx, ny, int(kx), int(ky), dim};
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<double> in(std::size_t(nx) * ny), out(in.size());
        fftw_plan p = dim == 1 ? fftw_plan_r2r_1d(nx, in.data(), out.data(), kx, FFTW_ESTIMATE | FFTW_UNALIGNED)
                               : fftw_plan_r2r_2d(ny, nx, in.data(), out.data(), ky, kx,
                                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

    fftw_plan dft(int nx, int ny, int dim, int sign) {
        const Key key{nx, ny, sign == FFTW_FORWARD ? -1 : -2, 0, dim};
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<fftw_complex> in(std::size_t(nx) * ny), out(in.size());
        fftw_plan p = dim == 1 ? fftw_plan_dft_1d(nx, in.data(), out.data(), sign, FFTW_ESTIMATE | FFTW_UNALIGNED)
                               : fftw_plan_dft_2d(ny, nx, in.data(), out.data(), sign,
                                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

    ~PlanCache() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }

private:
    std::mutex mutex_;
    std::map<Key, fftw_plan> plans_;
};

inline fftw_r2r_kind forward_kind(Parity p) { return p == Parity::Even ? FFTW_REDFT10 : FFTW_RODFT10; }
inline fftw_r2r_kind inverse_kind(Parity p) { return p == Parity::Even ? FFTW_REDFT01 : FFTW_RODFT01; }

/// Scaling from FFTW's unnormalized forward output to amplitudes.
inline double forward_scale(Parity p, int k, int n) {
    if (p == Parity::Even) return k == 0 ? 1.0 / (2.0 * n) : 1.0 / n;
    return k == n - 1 ? 1.0 / (2.0 * n) : 1.0 / n;
}

/// Scaling from amplitudes to FFTW's inverse-transform input.
inline double inverse_scale(Parity p, int k, int n) {
    if (p == Parity::Even) return k == 0 ? 1.0 : 0.5;
    return k == n - 1 ? 1.0 : 0.5;
}

/// Squared grid norm of one basis function along an axis.
inline double basis_weight(Boundary b, Parity p, int k, int n) {
    if (b == Boundary::Periodic) return n;
    if (p == Parity::Even) return k == 0 ? n : 0.5 * n;
    return k == n - 1 ? n : 0.5 * n;
}

inline int signed_index(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace detail

/// Angular wavenumber of expansion index k along one axis.
inline double wavenumber(const Grid& g, int axis, int k, Parity p) {
    const int n = axis == 0 ? g.nx : g.ny;
    const double L = axis == 0 ? g.lx : g.ly;
    if (axis == 1 && g.dim == 1) return 0.0;
    if (g.boundary == Boundary::Periodic) return 2.0 * detail::pi * detail::signed_index(k, n) / L;
    return detail::pi * (p == Parity::Even ? k : k + 1) / L;
}

/// Eigenvalue of -Laplacian for the basis function at (kx, ky).
inline double eigenvalue(const Grid& g, Basis b, int kx, int ky) {
    const double ax = wavenumber(g, 0, kx, b.px), ay = wavenumber(g, 1, ky, b.py);
    return ax * ax + ay * ay;
}

/// Eigenvalue of the five-point (second-difference) Neumann/periodic Laplacian.
inline double discrete_eigenvalue(const Grid& g, int kx, int ky) {
    auto axis = [&](int k, int n, double h) {
        const double arg = g.boundary == Boundary::Periodic ? detail::pi * k / n : 0.5 * detail::pi * k / n;
        const double s = 2.0 * std::sin(arg) / h;
        return s * s;
    };
    double lam = axis(kx, g.nx, g.hx());
    if (g.dim == 2) lam += axis(ky, g.ny, g.hy());
    return lam;
}

inline SpectralCoeffs forward(const ScalarField& f, Basis b = kScalarBasis) {
    const Grid& g = f.grid;
    SpectralCoeffs out{g, b, std::vector<cplx>(g.size())};
    auto& cache = detail::PlanCache::instance();
    if (g.boundary == Boundary::Periodic) {
        std::vector<fftw_complex> in(g.size()), res(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            in[k][0] = f[k];
            in[k][1] = 0.0;
        }
        fftw_execute_dft(cache.dft(g.nx, g.ny, g.dim, FFTW_FORWARD), in.data(), res.data());
        const double s = 1.0 / double(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) out.c[k] = cplx(res[k][0] * s, res[k][1] * s);
        return out;
    }
    std::vector<double> in(f.values), res(g.size());
    fftw_execute_r2r(cache.r2r(g.nx, g.ny, g.dim, detail::forward_kind(b.px), detail::forward_kind(b.py)), in.data(),
                     res.data());
    for (int ky = 0; ky < g.ny; ++ky)
        for (int kx = 0; kx < g.nx; ++kx) {
            double s = detail::forward_scale(b.px, kx, g.nx);
            if (g.dim == 2) s *= detail::forward_scale(b.py, ky, g.ny);
            out(kx, ky) = res[g.index(kx, ky)] * s;
        }
    return out;
}

inline ScalarField inverse(const SpectralCoeffs& a) {
    const Grid& g = a.grid;
    ScalarField out(g);
    auto& cache = detail::PlanCache::instance();
    if (g.boundary == Boundary::Periodic) {
        std::vector<fftw_complex> in(g.size()), res(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            in[k][0] = a.c[k].real();
            in[k][1] = a.c[k].imag();
        }
        fftw_execute_dft(cache.dft(g.nx, g.ny, g.dim, FFTW_BACKWARD), in.data(), res.data());
        for (std::size_t k = 0; k < g.size(); ++k) out[k] = res[k][0];
        return out;
    }
    std::vector<double> in(g.size());
    for (int ky = 0; ky < g.ny; ++ky)
        for (int kx = 0; kx < g.nx; ++kx) {
            double s = detail::inverse_scale(a.basis.px, kx, g.nx);
            if (g.dim == 2) s *= detail::inverse_scale(a.basis.py, ky, g.ny);
            in[g.index(kx, ky)] = a(kx, ky).real() * s;
        }
    fftw_execute_r2r(cache.r2r(g.nx, g.ny, g.dim, detail::inverse_kind(a.basis.px), detail::inverse_kind(a.basis.py)),
                     in.data(), out.values.data());
    return out;
}

/// Coefficients of f in the eigenbasis of -Laplacian with Neumann (or periodic) conditions.
inline SpectralCoeffs neumann_transform(const ScalarField& f) { return forward(f, kScalarBasis); }

inline ScalarField inverse_neumann_transform(const SpectralCoeffs& a, const Grid& g) {
    if (a.grid != g) throw PreconditionError("spectral coefficients belong to a different grid");
    if (!(a.basis == kScalarBasis)) throw PreconditionError("coefficients are not in the scalar basis");
    return inverse(a);
}

/// sum_k w_k |c_k|^2 times the cell volume; equals the grid L2 norm squared.
inline double spectral_energy(const SpectralCoeffs& a) {
    const Grid& g = a.grid;
    double s = 0.0;
    for (int ky = 0; ky < g.ny; ++ky)
        for (int kx = 0; kx < g.nx; ++kx) {
            double w = detail::basis_weight(g.boundary, a.basis.px, kx, g.nx);
            if (g.dim == 2) w *= detail::basis_weight(g.boundary, a.basis.py, ky, g.ny);
            s += w * std::norm(a(kx, ky));
        }
    return s * g.cell_volume();
}

/// Exact derivative of the expansion along an axis; flips the parity on a Neumann box.
inline SpectralCoeffs derivative(const SpectralCoeffs& a, int axis) {
    const Grid& g = a.grid;
    if (axis == 1 && g.dim == 1) throw PreconditionError("no y-derivative on a 1D grid");
    SpectralCoeffs out{g, a.basis, std::vector<cplx>(g.size(), cplx(0.0))};
    const int n = axis == 0 ? g.nx : g.ny;
    if (g.boundary == Boundary::Periodic) {
        for (int ky = 0; ky < g.ny; ++ky)
            for (int kx = 0; kx < g.nx; ++kx) {
                const int k = axis == 0 ? kx : ky;
                if (n % 2 == 0 && k == n / 2) continue;
                const double kappa = wavenumber(g, axis, k, Parity::Even);
                out(kx, ky) = cplx(0.0, kappa) * a(kx, ky);
            }
        return out;
    }
    const Parity p = axis == 0 ? a.basis.px : a.basis.py;
    (axis == 0 ? out.basis.px : out.basis.py) = p == Parity::Even ? Parity::Odd : Parity::Even;
    for (int ky = 0; ky < g.ny; ++ky)
        for (int kx = 0; kx < g.nx; ++kx) {
            const int k = axis == 0 ? kx : ky;
            const double kappa = wavenumber(g, axis, k, p);
            int target;
            double factor;
            if (p == Parity::Even) {  // d/dx cos = -kappa sin
                if (k == 0) continue;
                target = k - 1;
                factor = -kappa;
            } else {                  // d/dx sin = kappa cos
                if (k + 1 > n - 1) continue;
                target = k + 1;
                factor = kappa;
            }
            if (axis == 0) out(target, ky) = factor * a(kx, ky);
            else out(kx, target) = factor * a(kx, ky);
        }
    return out;
}

/// Multiply each coefficient by fn(lambda) with lambda the -Laplacian eigenvalue.
template <class Fn>
SpectralCoeffs apply_multiplier(SpectralCoeffs a, Fn&& fn) {
    for (int ky = 0; ky < a.grid.ny; ++ky)
        for (int kx = 0; kx < a.grid.nx; ++kx) a(kx, ky) *= fn(eigenvalue(a.grid, a.basis, kx, ky));
    return a;
}

/// Spectral gradient of a scalar field (cosine family -> sine family per axis).
inline VectorField gradient(const ScalarField& phi) {
    const auto a = forward(phi, kScalarBasis);
    VectorField out(phi.grid);
    out.x = inverse(derivative(a, 0)).values;
    if (phi.grid.dim == 2) out.y = inverse(derivative(a, 1)).values;
    return out;
}

inline ScalarField divergence(const VectorField& u) {
    const Grid& g = u.grid;
    auto d = derivative(forward(u.component(0), kXComponentBasis), 0);
    if (g.dim == 2) {
        const auto dy = derivative(forward(u.component(1), kYComponentBasis), 1);
        for (std::size_t k = 0; k < d.c.size(); ++k) d.c[k] += dy.c[k];
    }
    return inverse(d);
}

/// 2D scalar curl: d(u_y)/dx - d(u_x)/dy, in the sine-sine family on a box.
inline ScalarField curl(const VectorField& u) {
    auto a = derivative(forward(u.component(1), kYComponentBasis), 0);
    const auto b = derivative(forward(u.component(0), kXComponentBasis), 1);
    for (std::size_t k = 0; k < a.c.size(); ++k) a.c[k] -= b.c[k];
    return inverse(a);
}

/// Zero-mean solution of Laplacian(phi) = f; the zero mode of f is discarded.
inline ScalarField solve_neumann_poisson(const ScalarField& f) {
    auto a = apply_multiplier(forward(f, kScalarBasis), [](double lam) { return lam > 0.0 ? -1.0 / lam : 0.0; });
    return inverse(a);
}

struct HelmholtzParts {
    VectorField solenoidal;
    VectorField gradient;
    ScalarField potential;
};

/// u = H[u] + grad(phi), Laplacian(phi) = div(u), phi normal derivative zero on the box.
inline HelmholtzParts helmholtz_project(const VectorField& u) {
    if (u.grid.dim != 2) throw PreconditionError("Helmholtz projection requires a 2D field");
    const Grid& g = u.grid;
    if (g.boundary == Boundary::Periodic) {
        // Per mode with the first-derivative symbol, whose Nyquist entry is zero.
        auto ax = forward(u.component(0)), ay = forward(u.component(1));
        SpectralCoeffs gx{g, kScalarBasis, std::vector<cplx>(g.size())}, gy = gx, ph = gx;
        for (int ky = 0; ky < g.ny; ++ky)
            for (int kx = 0; kx < g.nx; ++kx) {
                const double kx_ = (g.nx % 2 == 0 && kx == g.nx / 2) ? 0.0 : wavenumber(g, 0, kx, Parity::Even);
                const double ky_ = (g.ny % 2 == 0 && ky == g.ny / 2) ? 0.0 : wavenumber(g, 1, ky, Parity::Even);
                const double lam = kx_ * kx_ + ky_ * ky_;
                if (lam == 0.0) continue;
                const cplx d = cplx(0.0, kx_) * ax(kx, ky) + cplx(0.0, ky_) * ay(kx, ky);
                const cplx phi = -d / lam;
                ph(kx, ky) = phi;
                gx(kx, ky) = cplx(0.0, kx_) * phi;
                gy(kx, ky) = cplx(0.0, ky_) * phi;
            }
        VectorField grad(inverse(gx), inverse(gy));
        auto sol = u - grad;
        return {std::move(sol), std::move(grad), inverse(ph)};
    }
    auto phi = solve_neumann_poisson(divergence(u));
    auto grad = gradient(phi);
    auto sol = u - grad;
    return {std::move(sol), std::move(grad), std::move(phi)};
}

// ------------------------------------------------------------ regularizer

namespace detail {

/// C-infinity step: 0 for t <= 0, 1 for t >= 1.
inline double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

}  // namespace detail

struct Regularizer {
    double eta = 0.25;
    double cx = 0.0, cy = 0.0;   // origin of the spatial cutoff
    bool spatial_cutoff = true;

    explicit Regularizer(double eta_ = 0.25, double cx_ = 0.0, double cy_ = 0.0) : eta(eta_), cx(cx_), cy(cy_) {
        if (!(eta > 0.0 && eta < 1.0)) throw PreconditionError("regularizer band parameter must lie in (0, 1)");
    }

    /// psi: 1 on |x| <= 1, 0 on |x| >= 2.
    static double psi(double r) { return 1.0 - detail::smooth_step(std::abs(r) - 1.0); }

    /// psi_{1/eta}(x) = psi(eta x).
    double cutoff(double x, double y) const { return psi(eta * std::hypot(x - cx, y - cy)); }

    /// Even band window: 1 on (eta, 1/eta), 0 outside (eta/2, 2/eta).
    double band(double z) const {
        z = std::abs(z);
        if (z <= 0.5 * eta || z >= 2.0 / eta) return 0.0;
        if (z < eta) return detail::smooth_step((z - 0.5 * eta) / (0.5 * eta));
        if (z <= 1.0 / eta) return 1.0;
        return 1.0 - detail::smooth_step((z - 1.0 / eta) / (1.0 / eta));
    }
};

/// [v]_eta = G_eta(sqrt(-Laplacian_N)) [psi_{1/eta} v].
inline ScalarField regularize(const ScalarField& f, const Regularizer& reg) {
    ScalarField cut = f;
    if (reg.spatial_cutoff) {
        const Grid& g = f.grid;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) cut(i, j) *= reg.cutoff(g.x(i), g.y(j));
    }
    return inverse(apply_multiplier(forward(cut, kScalarBasis), [&](double lam) { return reg.band(std::sqrt(lam)); }));
}

}  // namespace lowmach
