#pragma once

// Newtonian potential of point masses placed outside the fluid box and the
// weakly stratified static density balancing it.

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "lowmach/error.hpp"
#include "lowmach/grid.hpp"
#include "lowmach/thermo.hpp"

namespace lowmach {

struct PointMass {
    double x = 0.0, y = 0.0;
    double mass = 1.0;
};

struct MassDistribution {
    std::vector<PointMass> masses;

    void validate(const Grid& g) const {
        for (const auto& pm : masses) {
            if (pm.mass < 0.0) throw PreconditionError("point masses must be non-negative");
            const bool in_x = pm.x >= g.x0 && pm.x <= g.x_hi();
            const bool in_y = g.dim == 1 ? pm.y == 0.0 : (pm.y >= g.y0 && pm.y <= g.y_hi());
            if (in_x && in_y) {
                std::ostringstream os;
                os << "point mass at (" << pm.x << ", " << pm.y << ") lies inside the fluid box";
                throw PreconditionError(os.str());
            }
        }
    }

    double F(double x, double y) const {
        double s = 0.0;
        for (const auto& pm : masses) s += pm.mass / std::hypot(x - pm.x, y - pm.y);
        return s;
    }

    std::array<double, 2> gradF(double x, double y) const {
        std::array<double, 2> g{0.0, 0.0};
        for (const auto& pm : masses) {
            const double dx = x - pm.x, dy = y - pm.y;
            const double r = std::hypot(dx, dy);
            const double w = -pm.mass / (r * r * r);
            g[0] += w * dx;
            g[1] += w * dy;
        }
        return g;
    }
};

struct Potential {
    ScalarField F;
    VectorField gradF;
};

/// F = sum m_j / |x - x_j| with its analytic gradient.
inline Potential potential(const MassDistribution& md, const Grid& g) {
    md.validate(g);
    Potential out{ScalarField(g), VectorField(g)};
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const auto k = g.index(i, j);
            out.F[k] = md.F(g.x(i), g.y(j));
            const auto d = md.gradF(g.x(i), g.y(j));
            out.gradF.x[k] = d[0];
            out.gradF.y[k] = g.dim == 2 ? d[1] : 0.0;
        }
    return out;
}

struct EquilibriumProfile {
    ScalarField rho_eps;
    double theta_bar = 1.0;
    double rho_bar = 1.0;
    double eps = 0.0;
    ScalarField F;
    VectorField gradF;
    double relation_residual = 0.0;   // max |dH(rho_eps) - eps F - dH(rho_bar)|
    double momentum_residual = 0.0;   // max |grad p - eps rho_eps grad F|, centred differences
};

/// Solves dH(rho) = target for rho with theta fixed; dH is increasing with slope p_rho / rho.
inline double invert_free_energy_derivative(const GasModel& m, double theta, double target, double guess,
                                            double tol = 1e-12) {
    auto f = [&](double r) { return ballistic_free_energy_drho(m, r, theta) - target; };
    double lo = guess / 10.0, hi = guess * 10.0;
    for (int k = 0; f(lo) > 0.0; ++k) {
        lo /= 10.0;
        if (k > 60) throw SolverError("equilibrium bracket: no lower bound");
    }
    for (int k = 0; f(hi) < 0.0; ++k) {
        hi *= 10.0;
        if (k > 60) throw SolverError("equilibrium bracket: no upper bound");
    }
    double r = guess;
    for (int it = 0; it < 200; ++it) {
        const double v = f(r);
        if (std::abs(v) <= tol * std::max(1.0, std::abs(target))) return r;
        if (v > 0.0) hi = r; else lo = r;
        const double slope = eval_state(m, r, theta).dp_drho / r;
        double next = slope > 0.0 ? r - v / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 1e-16 * hi) return next;
        r = next;
    }
    throw SolverError("equilibrium root-find did not converge");
}

inline EquilibriumProfile solve_equilibrium(const GasModel& m, double rho_bar, double theta_bar, double eps,
                                            const Potential& pot) {
    if (eps < 0.0) throw PreconditionError("Mach scale must be non-negative");
    detail::require_positive(rho_bar, "far-field density");
    detail::require_positive(theta_bar, "temperature");
    if (!(eval_state(m, rho_bar, theta_bar).dp_drho > 0.0))
        throw ModelError("dp/drho must be positive at the reference state");
    const Grid& g = pot.F.grid;
    EquilibriumProfile out{ScalarField(g, rho_bar), theta_bar, rho_bar, eps, pot.F, pot.gradF, 0.0, 0.0};
    if (eps == 0.0) return out;
    const double base = ballistic_free_energy_drho(m, rho_bar, theta_bar);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const auto k = g.index(i, j);
            const double target = eps * pot.F[k] + base;
            try {
                out.rho_eps[k] = invert_free_energy_derivative(m, theta_bar, target, rho_bar);
            } catch (const SolverError& e) {
                std::ostringstream os;
                os << e.what() << " at node (" << i << ", " << j << ")";
                throw SolverError(os.str());
            }
            out.relation_residual = std::max(
                out.relation_residual,
                std::abs(ballistic_free_energy_drho(m, out.rho_eps[k], theta_bar) - target) / std::max(1.0, std::abs(target)));
        }
    // Momentum balance with centred differences on interior nodes.
    auto p = [&](int i, int j) { return eval_state(m, out.rho_eps(i, j), theta_bar).p; };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i + 1 < g.nx; ++i) {
            const auto k = g.index(i, j);
            double r = std::abs((p(i + 1, j) - p(i - 1, j)) / (2 * g.hx()) - eps * out.rho_eps[k] * pot.gradF.x[k]);
            if (g.dim == 2 && j > 0 && j + 1 < g.ny)
                r = std::max(r, std::abs((p(i, j + 1) - p(i, j - 1)) / (2 * g.hy()) - eps * out.rho_eps[k] * pot.gradF.y[k]));
            out.momentum_residual = std::max(out.momentum_residual, r);
        }
    return out;
}

struct BoundsReport {
    double eps = 0.0;
    double c = 0.0;        // max |rho_eps - rho_bar| / (eps F)
    double c_grad = 0.0;   // max |grad rho_eps| / (eps |grad F|)
    bool stable = true;
    std::string detail;
};

/// Smallest constants realizing the two stratification bounds for one profile.
/// The density gradient comes from the implicit relation grad rho = eps rho grad F / p_rho.
inline BoundsReport verify_stratification(const GasModel& m, const EquilibriumProfile& prof) {
    BoundsReport rep;
    rep.eps = prof.eps;
    if (prof.eps == 0.0) return rep;
    const Grid& g = prof.rho_eps.grid;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double F = prof.F[k];
        if (F > 0.0) rep.c = std::max(rep.c, std::abs(prof.rho_eps[k] - prof.rho_bar) / (prof.eps * F));
        const double gF = std::hypot(prof.gradF.x[k], prof.gradF.y[k]);
        if (gF > 0.0) {
            const double grad_rho = prof.eps * prof.rho_eps[k] * gF / eval_state(m, prof.rho_eps[k], prof.theta_bar).dp_drho;
            rep.c_grad = std::max(rep.c_grad, grad_rho / (prof.eps * gF));
        }
    }
    std::ostringstream os;
    os << "eps=" << prof.eps << " c=" << rep.c << " c'=" << rep.c_grad;
    rep.detail = os.str();
    return rep;
}

/// Fitted constants across several eps; stable when each stays within a factor 2.
inline std::vector<BoundsReport> stratification_sweep(const GasModel& m, double rho_bar, double theta_bar,
                                                      const Potential& pot, const std::vector<double>& eps_list) {
    std::vector<BoundsReport> out;
    for (double e : eps_list) out.push_back(verify_stratification(m, solve_equilibrium(m, rho_bar, theta_bar, e, pot)));
    double cmin = 1e300, cmax = 0.0, gmin = 1e300, gmax = 0.0;
    for (const auto& r : out) {
        if (r.eps == 0.0) continue;
        cmin = std::min(cmin, r.c);
        cmax = std::max(cmax, r.c);
        gmin = std::min(gmin, r.c_grad);
        gmax = std::max(gmax, r.c_grad);
    }
    const bool stable = cmax <= 2.0 * cmin && gmax <= 2.0 * gmin;
    for (auto& r : out) r.stable = stable;
    return out;
}

}  // namespace lowmach
