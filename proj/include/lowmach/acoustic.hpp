#pragma once

// Linear acoustic system for q = alpha R + beta T and the potential Phi,
// propagated exactly mode by mode in the Neumann (or periodic) eigenbasis.

#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "lowmach/error.hpp"
#include "lowmach/grid.hpp"
#include "lowmach/spectral.hpp"
#include "lowmach/thermo.hpp"

namespace lowmach {

struct AcousticState {
    SpectralCoeffs q;     // coefficients of alpha R + beta T
    SpectralCoeffs Phi;   // coefficients of the potential; the zero mode is pure gauge
    LinearizationCoefficients coeffs;
    double eps = 1.0;
    double time = 0.0;

    const Grid& grid() const { return q.grid; }
    ScalarField q_field() const { return inverse(q); }
    ScalarField Phi_field() const { return inverse(Phi); }
    VectorField grad_Phi() const {
        VectorField g(grid());
        g.x = inverse(derivative(Phi, 0)).values;
        if (grid().dim == 2) g.y = inverse(derivative(Phi, 1)).values;
        return g;
    }
};

inline AcousticState acoustic_init(const ScalarField& R0, const ScalarField& T0, const ScalarField& Phi0,
                                   const LinearizationCoefficients& c, double eps) {
    require_same_grid(R0.grid, T0.grid, "acoustic data R0/T0");
    require_same_grid(R0.grid, Phi0.grid, "acoustic data R0/Phi0");
    detail::require_positive(eps, "Mach scale");
    ScalarField q(R0.grid);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = c.alpha * R0[k] + c.beta * T0[k];
    return {forward(q), forward(Phi0), c, eps, 0.0};
}

/// Regularized acoustic data: R0 = [rho1]_eta, T0 = [theta1]_eta, Phi0 = [Lap_N^{-1} div u0]_eta.
struct AcousticData {
    ScalarField R0, T0, Phi0;
};

inline AcousticData regularized_acoustic_data(const ScalarField& rho1, const ScalarField& theta1, const VectorField& u0,
                                              const Regularizer& reg) {
    return {regularize(rho1, reg), regularize(theta1, reg), regularize(solve_neumann_poisson(divergence(u0)), reg)};
}

inline double mode_frequency(const AcousticState& s, double lambda) {
    return std::sqrt(s.coeffs.omega * lambda) / s.eps;
}

/// Exact evolution to time t (any t, forward or backward).
inline AcousticState acoustic_propagate(const AcousticState& s, double t) {
    AcousticState out = s;
    const double dt = t - s.time;
    const Grid& g = s.grid();
    for (int ky = 0; ky < g.ny; ++ky)
        for (int kx = 0; kx < g.nx; ++kx) {
            const double lam = eigenvalue(g, s.q.basis, kx, ky);
            const cplx q0 = s.q(kx, ky), p0 = s.Phi(kx, ky);
            if (lam == 0.0) {
                out.Phi(kx, ky) = p0 - q0 * dt / s.eps;
                continue;
            }
            const double r = std::sqrt(s.coeffs.omega * lam);
            const double w = r / s.eps;
            const double cs = std::cos(w * dt), sn = std::sin(w * dt);
            out.q(kx, ky) = q0 * cs + r * p0 * sn;
            out.Phi(kx, ky) = p0 * cs - q0 * sn / r;
        }
    out.time = t;
    return out;
}

/// Integral of q^2/2 + (omega/2)|grad Phi|^2, evaluated spectrally.
inline double acoustic_energy(const AcousticState& s) {
    const Grid& g = s.grid();
    double e = 0.0;
    for (int ky = 0; ky < g.ny; ++ky)
        for (int kx = 0; kx < g.nx; ++kx) {
            double w = detail::basis_weight(g.boundary, Parity::Even, kx, g.nx);
            if (g.dim == 2) w *= detail::basis_weight(g.boundary, Parity::Even, ky, g.ny);
            const double lam = eigenvalue(g, s.q.basis, kx, ky);
            e += w * (0.5 * std::norm(s.q(kx, ky)) + 0.5 * s.coeffs.omega * lam * std::norm(s.Phi(kx, ky)));
        }
    return e * g.cell_volume();
}

/// Same energy by grid quadrature of the physical fields.
inline double acoustic_energy_quadrature(const AcousticState& s) {
    const auto q = s.q_field();
    const auto gp = s.grad_Phi();
    return 0.5 * inner(q, q) + 0.5 * s.coeffs.omega * inner(gp, gp);
}

struct DecaySample {
    double t = 0.0;
    double sup = 0.0;      // window_sup at time t
    double energy = 0.0;
};

struct DecayProfile {
    std::vector<DecaySample> samples;
    double integral = 0.0;        // trapezoidal time integral of sup
    double reflection_time = 0.0;
    bool reflection_warning = false;
};

/// Earliest time a signal leaving the window can return after a wall reflection.
inline double reflection_return_time(const AcousticState& s, const Window& w) {
    const Grid& g = s.grid();
    double d = std::min(w.x_lo - g.x0, g.x_hi() - w.x_hi);
    if (g.dim == 2) d = std::min(d, std::min(w.y_lo - g.y0, g.y_hi() - w.y_hi));
    const double c = std::sqrt(s.coeffs.omega) / s.eps;
    return 2.0 * d / c;
}

/// Window sup of |grad Phi| + |q|, plus |Hess Phi| + |grad q| when order = 1.
inline double window_sup(const AcousticState& s, const Window& w, int order = 0) {
    double v = norm(s.grad_Phi(), NormKind::Linf, w) + norm(s.q_field(), NormKind::Linf, w);
    if (order == 0) return v;
    const Grid& g = s.grid();
    VectorField gq(g);
    gq.x = inverse(derivative(s.q, 0)).values;
    if (g.dim == 2) gq.y = inverse(derivative(s.q, 1)).values;
    v += norm(gq, NormKind::Linf, w);
    const auto px = derivative(s.Phi, 0);
    VectorField hx(g), hy(g);
    hx.x = inverse(derivative(px, 0)).values;
    if (g.dim == 2) {
        const auto py = derivative(s.Phi, 1);
        hx.y = inverse(derivative(px, 1)).values;
        hy.x = hx.y;
        hy.y = inverse(derivative(py, 1)).values;
    }
    const auto mask = window_mask(g, w);
    double hess = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (mask[k]) hess = std::max(hess, std::sqrt(hx.x[k] * hx.x[k] + hx.y[k] * hx.y[k] + hy.x[k] * hy.x[k] + hy.y[k] * hy.y[k]));
    return v + hess;
}

inline DecayProfile local_decay_profile(const AcousticState& s0, const Window& w, double horizon, int samples,
                                        int order = 0) {
    if (order != 0 && order != 1) throw PreconditionError("derivative order must be 0 or 1");
    if (samples < 2) throw PreconditionError("decay profile needs at least two samples");
    if (!(horizon > 0.0)) throw PreconditionError("horizon must be positive");
    const Grid& g = s0.grid();
    const bool strict = w.x_lo > g.x0 && w.x_hi < g.x_hi() && (g.dim == 1 || (w.y_lo > g.y0 && w.y_hi < g.y_hi()));
    if (!strict) throw PreconditionError("decay window must lie strictly inside the box");
    DecayProfile out;
    out.reflection_time = g.boundary == Boundary::Periodic ? 0.0 : reflection_return_time(s0, w);
    out.reflection_warning = g.boundary == Boundary::Periodic || horizon > out.reflection_time;
    for (int n = 0; n < samples; ++n) {
        const double t = s0.time + horizon * n / double(samples - 1);
        const auto s = acoustic_propagate(s0, t);
        out.samples.push_back({t, window_sup(s, w, order), acoustic_energy(s)});
    }
    for (std::size_t n = 1; n < out.samples.size(); ++n)
        out.integral += 0.5 * (out.samples[n].sup + out.samples[n - 1].sup) * (out.samples[n].t - out.samples[n - 1].t);
    return out;
}

inline void write_csv(std::ostream& os, const DecayProfile& p) {
    os << "time,sup_norm,energy\n";
    os.precision(17);
    for (const auto& s : p.samples) os << s.t << ',' << s.sup << ',' << s.energy << '\n';
}

}  // namespace lowmach
