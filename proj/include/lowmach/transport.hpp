#pragma once

// Semi-Lagrangian transport of sigma = delta T - beta R along U, recovery of
// (R, T) from (q, sigma) and the limit temperature equation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "lowmach/error.hpp"
#include "lowmach/grid.hpp"
#include "lowmach/thermo.hpp"

namespace lowmach {

using VelocityFn = std::function<VectorField(double)>;

namespace detail {

struct Sampler {
    const Grid& g;
    mutable std::size_t clamped = 0;

    // Fractional cell-centre coordinate along one axis, clamped or wrapped.
    double coord(double x, double origin, double h, int n) const {
        double xi = (x - origin) / h - 0.5;
        if (g.boundary == Boundary::Periodic) {
            xi = std::fmod(xi, double(n));
            if (xi < 0.0) xi += n;
            return xi;
        }
        if (x < origin || x > origin + n * h) ++clamped;
        return std::clamp(xi, 0.0, double(n - 1));
    }

    double operator()(const std::vector<double>& f, double x, double y) const {
        const double xi = coord(x, g.x0, g.hx(), g.nx);
        int i0 = std::min(int(std::floor(xi)), g.nx - 1);
        const double tx = xi - i0;
        int i1 = g.boundary == Boundary::Periodic ? (i0 + 1) % g.nx : std::min(i0 + 1, g.nx - 1);
        if (g.dim == 1) return (1 - tx) * f[i0] + tx * f[i1];
        const double eta = coord(y, g.y0, g.hy(), g.ny);
        int j0 = std::min(int(std::floor(eta)), g.ny - 1);
        const double ty = eta - j0;
        int j1 = g.boundary == Boundary::Periodic ? (j0 + 1) % g.ny : std::min(j0 + 1, g.ny - 1);
        auto at = [&](int i, int j) { return f[g.index(i, j)]; };
        return (1 - ty) * ((1 - tx) * at(i0, j0) + tx * at(i1, j0)) + ty * ((1 - tx) * at(i0, j1) + tx * at(i1, j1));
    }
};

}  // namespace detail

struct SemiLagrangianResult {
    ScalarField field;
    std::size_t clamped = 0;   // characteristic feet read from clamped boundary values
};

/// One step of d_t f + U . grad(f - k G) = 0: f(x) <- (f - kG)(X) + kG(x), with X the
/// midpoint-rule (second-order) backward foot of the characteristic through x.
inline SemiLagrangianResult semi_lagrangian_step(const ScalarField& f, const ScalarField* G, double k,
                                                 const VectorField& U_mid, double dt) {
    require_same_grid(f.grid, U_mid.grid, "transported field and velocity");
    if (G) require_same_grid(f.grid, G->grid, "transported field and potential");
    if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
    const Grid& g = f.grid;
    std::vector<double> a = f.values;
    if (G)
        for (std::size_t n = 0; n < a.size(); ++n) a[n] -= k * G->values[n];
    detail::Sampler vel{g};
    detail::Sampler val{g};
    SemiLagrangianResult out{ScalarField(g), 0};
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const auto n = g.index(i, j);
            const double x = g.x(i), y = g.y(j);
            const double xm = x - 0.5 * dt * U_mid.x[n];
            const double ym = g.dim == 2 ? y - 0.5 * dt * U_mid.y[n] : y;
            const double ux = vel(U_mid.x, xm, ym);
            const double uy = g.dim == 2 ? vel(U_mid.y, xm, ym) : 0.0;
            const double xf = x - dt * ux, yf = y - dt * uy;
            out.field[n] = val(a, xf, yf) + (G ? k * G->values[n] : 0.0);
        }
    out.clamped = val.clamped;
    return out;
}

struct TransportState {
    ScalarField sigma;
    LinearizationCoefficients coeffs;
    ScalarField F;
    double time = 0.0;
    std::size_t clamped = 0;
};

/// sigma <- sigma transported by U over dt, with the source (beta/alpha) F inside the gradient.
inline TransportState transport_step(const TransportState& s, const VectorField& U_mid, double dt) {
    auto r = semi_lagrangian_step(s.sigma, &s.F, s.coeffs.beta / s.coeffs.alpha, U_mid, dt);
    return {std::move(r.field), s.coeffs, s.F, s.time + dt, s.clamped + r.clamped};
}

/// Advances with U sampled at the midpoint of every step.
inline TransportState transport_solve(TransportState s, const VelocityFn& U, double horizon, int steps) {
    if (steps < 1) throw PreconditionError("need at least one step");
    const double dt = horizon / steps;
    const double t0 = s.time;
    for (int n = 0; n < steps; ++n) {
        s = transport_step(s, U(t0 + (n + 0.5) * dt), dt);
        s.time = t0 + (n + 1) * dt;
    }
    return s;
}

struct RT {
    ScalarField R, T;
};

/// Inverts q = alpha R + beta T, sigma = delta T - beta R.
inline RT recover_RT(const ScalarField& q, const ScalarField& sigma, const LinearizationCoefficients& c) {
    require_same_grid(q.grid, sigma.grid, "q and sigma");
    const double d = c.beta * c.beta + c.alpha * c.delta;
    if (!(d > 0.0) || !std::isfinite(d)) throw ModelError("degenerate coefficients: beta^2 + alpha delta must be positive");
    RT out{ScalarField(q.grid), ScalarField(q.grid)};
    for (std::size_t n = 0; n < q.size(); ++n) {
        out.T[n] = (c.beta * q[n] + c.alpha * sigma[n]) / d;
        out.R[n] = (c.delta * q[n] - c.beta * sigma[n]) / d;
    }
    return out;
}

/// Limit temperature initial value (theta_bar/c_p)(s_rho R0 + s_theta T0).
inline ScalarField limit_temperature_initial(const ScalarField& R0, const ScalarField& T0, const LinearizationCoefficients& c) {
    require_same_grid(R0.grid, T0.grid, "limit temperature data");
    ScalarField out(R0.grid);
    for (std::size_t n = 0; n < out.size(); ++n)
        out[n] = c.theta_bar / c.c_p * (c.ds_drho * R0[n] + c.ds_dtheta * T0[n]);
    return out;
}

struct Trajectory {
    std::vector<double> times;
    std::vector<ScalarField> fields;
    std::size_t clamped = 0;
};

/// c_p (d_t T + v . grad T) - theta_bar a v . grad F = 0 with the shared semi-Lagrangian scheme.
inline Trajectory limit_temperature_solve(const ScalarField& T0, const VelocityFn& v, const LinearizationCoefficients& c,
                                          const ScalarField& F, double horizon, int steps, int store_every = 1) {
    if (steps < 1) throw PreconditionError("need at least one step");
    const double k = c.theta_bar * c.a_exp / c.c_p;
    const double dt = horizon / steps;
    Trajectory tr;
    tr.times.push_back(0.0);
    tr.fields.push_back(T0);
    ScalarField T = T0;
    for (int n = 0; n < steps; ++n) {
        auto r = semi_lagrangian_step(T, &F, k, v((n + 0.5) * dt), dt);
        T = std::move(r.field);
        tr.clamped += r.clamped;
        if ((n + 1) % store_every == 0 || n + 1 == steps) {
            tr.times.push_back((n + 1) * dt);
            tr.fields.push_back(T);
        }
    }
    return tr;
}

}  // namespace lowmach
