#pragma once

// Incompressible Euler-Boussinesq target system in vorticity-streamfunction
// form: pseudo-spectral in space (2/3 dealiasing), SSP-RK3 in time.

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "lowmach/equilibrium.hpp"
#include "lowmach/error.hpp"
#include "lowmach/grid.hpp"
#include "lowmach/spectral.hpp"
#include "lowmach/thermo.hpp"

namespace lowmach {

struct BoussinesqParams {
    double cfl_max = 0.5;
    bool dealias = true;
    double blowup_factor = 100.0;   // proxy threshold on |grad v|_inf growth
};

/// Vorticity zeta = d_x v_y - d_y v_x and temperature deviation theta, both as
/// expansion coefficients. On a box zeta uses the sine-sine family (psi = 0 on
/// the walls); on a periodic grid the mean flow is carried separately.
struct BoussinesqState {
    SpectralCoeffs zeta;
    SpectralCoeffs theta;
    std::array<double, 2> mean{0.0, 0.0};
    LinearizationCoefficients coeffs;
    ScalarField F;
    VectorField gradF;
    double time = 0.0;
    double grad_v0 = 0.0;   // |grad v|_inf at the initial time

    const Grid& grid() const { return zeta.grid; }
};

namespace detail {

inline Basis vorticity_basis(const Grid& g) { return g.boundary == Boundary::Periodic ? kScalarBasis : kStreamBasis; }

inline SpectralCoeffs streamfunction(const SpectralCoeffs& zeta) {
    // -Lap psi = zeta
    return apply_multiplier(zeta, [](double lam) { return lam > 0.0 ? 1.0 / lam : 0.0; });
}

inline void dealias(SpectralCoeffs& a) {
    const Grid& g = a.grid;
    for (int ky = 0; ky < g.ny; ++ky)
        for (int kx = 0; kx < g.nx; ++kx) {
            bool cut;
            if (g.boundary == Boundary::Periodic)
                cut = 3 * std::abs(signed_index(kx, g.nx)) > g.nx || 3 * std::abs(signed_index(ky, g.ny)) > g.ny;
            else
                cut = 3 * kx > 2 * g.nx || 3 * ky > 2 * g.ny;
            if (cut) a(kx, ky) = 0.0;
        }
}

inline ScalarField phys(const SpectralCoeffs& a) { return inverse(a); }

}  // namespace detail

inline VectorField velocity_from_vorticity(const SpectralCoeffs& zeta, const std::array<double, 2>& mean = {0.0, 0.0}) {
    const auto psi = detail::streamfunction(zeta);
    VectorField v(zeta.grid);
    v.x = inverse(derivative(psi, 1)).values;
    v.y = inverse(derivative(psi, 0)).values;
    for (std::size_t k = 0; k < v.size(); ++k) {
        v.x[k] += mean[0];
        v.y[k] = -v.y[k] + mean[1];
    }
    return v;
}

inline VectorField velocity(const BoussinesqState& s) { return velocity_from_vorticity(s.zeta, s.mean); }
inline ScalarField temperature(const BoussinesqState& s) { return inverse(s.theta); }
inline ScalarField vorticity(const BoussinesqState& s) { return inverse(s.zeta); }

/// Max over nodes of the Frobenius norm of grad v.
inline double velocity_gradient_sup(const BoussinesqState& s) {
    const auto psi = detail::streamfunction(s.zeta);
    const auto pxx = inverse(derivative(derivative(psi, 0), 0));
    const auto pyy = inverse(derivative(derivative(psi, 1), 1));
    const auto pxy = inverse(derivative(derivative(psi, 0), 1));
    double m = 0.0;
    for (std::size_t k = 0; k < pxx.size(); ++k)
        m = std::max(m, std::sqrt(2 * pxy[k] * pxy[k] + pxx[k] * pxx[k] + pyy[k] * pyy[k]));
    return m;
}

struct BoussinesqInitialData {
    VectorField v0;
    ScalarField theta0;
};

/// v0 = H[u0], theta0 = (theta_bar/c_p)(s_rho rho1 + s_theta theta1).
inline BoussinesqInitialData boussinesq_initial_data(const ScalarField& rho1, const ScalarField& theta1, const VectorField& u0,
                                                     const LinearizationCoefficients& c) {
    require_same_grid(rho1.grid, theta1.grid, "initial density/temperature");
    require_same_grid(rho1.grid, u0.grid, "initial density/velocity");
    BoussinesqInitialData d{helmholtz_project(u0).solenoidal, ScalarField(rho1.grid)};
    for (std::size_t k = 0; k < rho1.size(); ++k)
        d.theta0[k] = c.theta_bar / c.c_p * (c.ds_drho * rho1[k] + c.ds_dtheta * theta1[k]);
    return d;
}

inline BoussinesqState make_boussinesq_state(const VectorField& v0, const ScalarField& theta0, const LinearizationCoefficients& c,
                                             const Potential& pot) {
    require_same_grid(v0.grid, theta0.grid, "Boussinesq velocity/temperature");
    require_same_grid(v0.grid, pot.F.grid, "Boussinesq velocity/potential");
    const Grid& g = v0.grid;
    if (g.dim != 2) throw PreconditionError("the Boussinesq solver is two-dimensional");
    BoussinesqState s{forward(curl(v0), detail::vorticity_basis(g)), forward(theta0, kScalarBasis), {0.0, 0.0}, c, pot.F, pot.gradF, 0.0, 0.0};
    if (g.boundary == Boundary::Periodic) {
        double mx = 0.0, my = 0.0;
        for (std::size_t k = 0; k < v0.size(); ++k) {
            mx += v0.x[k];
            my += v0.y[k];
        }
        s.mean = {mx / g.size(), my / g.size()};
    }
    s.grad_v0 = velocity_gradient_sup(s);
    return s;
}

namespace detail {

struct BoussinesqRhs {
    SpectralCoeffs zeta, theta;
    std::array<double, 2> mean;
};

inline BoussinesqRhs boussinesq_rhs(const BoussinesqState& s, bool dealias_products) {
    const Grid& g = s.grid();
    const double a = s.coeffs.a_exp;
    const double k = s.coeffs.theta_bar * a / s.coeffs.c_p;
    const auto v = velocity(s);
    const auto zx = phys(derivative(s.zeta, 0)), zy = phys(derivative(s.zeta, 1));
    const auto tx = phys(derivative(s.theta, 0)), ty = phys(derivative(s.theta, 1));
    const auto th = phys(s.theta);
    ScalarField rz(g), rt(g);
    double mfx = 0.0, mfy = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        const double Fx = s.gradF.x[n], Fy = s.gradF.y[n];
        rz[n] = -(v.x[n] * zx[n] + v.y[n] * zy[n]) - a * (tx[n] * Fy - ty[n] * Fx);
        rt[n] = -(v.x[n] * tx[n] + v.y[n] * ty[n]) + k * (v.x[n] * Fx + v.y[n] * Fy);
        mfx += th[n] * Fx;
        mfy += th[n] * Fy;
    }
    BoussinesqRhs r{forward(rz, s.zeta.basis), forward(rt, kScalarBasis), {0.0, 0.0}};
    if (g.boundary == Boundary::Periodic) {
        r.mean = {-a * mfx / g.size(), -a * mfy / g.size()};
        r.zeta(0, 0) = 0.0;
    }
    if (dealias_products) {
        dealias(r.zeta);
        dealias(r.theta);
    }
    return r;
}

inline BoussinesqState combine(const BoussinesqState& base, double wa, const BoussinesqState& stage, double wb,
                               const BoussinesqRhs& r, double dt) {
    BoussinesqState out = base;
    for (std::size_t n = 0; n < out.zeta.c.size(); ++n) {
        out.zeta.c[n] = wa * base.zeta.c[n] + wb * (stage.zeta.c[n] + dt * r.zeta.c[n]);
        out.theta.c[n] = wa * base.theta.c[n] + wb * (stage.theta.c[n] + dt * r.theta.c[n]);
    }
    for (int c = 0; c < 2; ++c) out.mean[c] = wa * base.mean[c] + wb * (stage.mean[c] + dt * r.mean[c]);
    return out;
}

}  // namespace detail

/// Advective CFL number dt (|v_x|_inf / h_x + |v_y|_inf / h_y).
inline double boussinesq_cfl(const BoussinesqState& s, double dt) {
    const auto v = velocity(s);
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        mx = std::max(mx, std::abs(v.x[k]));
        my = std::max(my, std::abs(v.y[k]));
    }
    return dt * (mx / s.grid().hx() + my / s.grid().hy());
}

inline BoussinesqState boussinesq_step(const BoussinesqState& s, double dt, const BoussinesqParams& p = {}) {
    if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
    const double cfl = boussinesq_cfl(s, dt);
    if (cfl > p.cfl_max) {
        std::ostringstream os;
        os << "Boussinesq CFL " << cfl << " exceeds " << p.cfl_max;
        throw PreconditionError(os.str());
    }
    using detail::boussinesq_rhs;
    using detail::combine;
    const auto s1 = combine(s, 0.0, s, 1.0, boussinesq_rhs(s, p.dealias), dt);
    const auto s2 = combine(s, 0.75, s1, 0.25, boussinesq_rhs(s1, p.dealias), dt);
    auto s3 = combine(s, 1.0 / 3.0, s2, 2.0 / 3.0, boussinesq_rhs(s2, p.dealias), dt);
    s3.time = s.time + dt;
    return s3;
}

struct BoussinesqEnergy {
    double kinetic = 0.0;
    double thermal = 0.0;    // integral of c_p theta^2 / (2 theta_bar)
    double exchange = 0.0;   // -a integral of theta v . grad F = d(kinetic)/dt
};

inline BoussinesqEnergy boussinesq_energy(const BoussinesqState& s) {
    const auto v = velocity(s);
    const auto th = temperature(s);
    BoussinesqEnergy e;
    e.kinetic = 0.5 * inner(v, v);
    e.thermal = s.coeffs.c_p / (2.0 * s.coeffs.theta_bar) * inner(th, th);
    double x = 0.0;
    for (std::size_t k = 0; k < th.size(); ++k) x += th[k] * (v.x[k] * s.gradF.x[k] + v.y[k] * s.gradF.y[k]);
    e.exchange = -s.coeffs.a_exp * x * s.grid().cell_volume();
    return e;
}

/// |grad v|_inf growth relative to the initial value; true when past the threshold.
inline bool blowup_proxy(const BoussinesqState& s, const BoussinesqParams& p = {}) {
    const double g0 = std::max(s.grad_v0, 1e-12);
    return velocity_gradient_sup(s) > p.blowup_factor * g0;
}

/// Pressure multiplier from Lap Pi = -div(v . grad v + a theta grad F).
inline ScalarField boussinesq_pressure(const BoussinesqState& s) {
    const Grid& g = s.grid();
    const auto v = velocity(s);
    const auto th = temperature(s);
    auto grad_comp = [&](const std::vector<double>& c, int comp) {
        const auto a = forward(ScalarField(g, c), comp == 0 ? kXComponentBasis : kYComponentBasis);
        return std::pair{inverse(derivative(a, 0)), inverse(derivative(a, 1))};
    };
    const auto [uxx, uxy] = grad_comp(v.x, 0);
    const auto [uyx, uyy] = grad_comp(v.y, 1);
    VectorField f(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        f.x[k] = v.x[k] * uxx[k] + v.y[k] * uxy[k] + s.coeffs.a_exp * th[k] * s.gradF.x[k];
        f.y[k] = v.x[k] * uyx[k] + v.y[k] * uyy[k] + s.coeffs.a_exp * th[k] * s.gradF.y[k];
    }
    auto d = divergence(f);
    d *= -1.0;
    return solve_neumann_poisson(d);
}

}  // namespace lowmach
