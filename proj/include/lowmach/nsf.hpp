#pragma once

// Scaled compressible Navier-Stokes-Fourier system on a staggered (MAC) grid.
// Density and total energy live at cell centres, momenta on faces. Advection,
// viscosity, heat flux and gravity are explicit; the stiff pressure gradient is
// corrected linearly implicitly (Crank-Nicolson about the far-field state) with a
// spectral elliptic solve. The explicit tendencies follow a Heun predictor-corrector.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lowmach/equilibrium.hpp"
#include "lowmach/error.hpp"
#include "lowmach/grid.hpp"
#include "lowmach/spectral.hpp"
#include "lowmach/thermo.hpp"

namespace lowmach {

struct ScalingParams {
    double eps = 0.1;          // Mach number
    double a_exp_visc = 1.0;   // Reynolds number eps^-a
    double b_exp_heat = 1.0;   // Peclet number eps^-b

    void validate() const {
        if (!(eps > 0.0 && eps <= 1.0)) throw PreconditionError("Mach scale must lie in (0, 1]");
        if (!(b_exp_heat > 0.0)) throw PreconditionError("heat exponent b must be positive");
        if (!(a_exp_visc > 0.0 && a_exp_visc < 10.0 / 3.0)) throw PreconditionError("viscosity exponent a must lie in (0, 10/3)");
    }
    double visc_weight() const { return std::pow(eps, a_exp_visc); }
    double heat_weight() const { return std::pow(eps, b_exp_heat); }
};

// ------------------------------------------------------------ constitutive laws

struct Tensor2 {
    double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;
};

struct TensorField {
    Grid grid;
    std::vector<Tensor2> values;

    explicit TensorField(const Grid& g) : grid(g), values(g.size()) {}
    std::size_t size() const { return values.size(); }
    Tensor2& operator[](std::size_t k) { return values[k]; }
    const Tensor2& operator[](std::size_t k) const { return values[k]; }
};

/// mu (grad u + grad u^T - (2/3) div u I) + eta div u I, unweighted.
inline Tensor2 newtonian_stress(double mu, double eta, const Tensor2& gu) {
    const double d = gu.xx + gu.yy;
    Tensor2 s;
    s.xx = mu * (2.0 * gu.xx - 2.0 / 3.0 * d) + eta * d;
    s.yy = mu * (2.0 * gu.yy - 2.0 / 3.0 * d) + eta * d;
    s.xy = s.yx = mu * (gu.xy + gu.yx);
    return s;
}

inline double contract(const Tensor2& a, const Tensor2& b) { return a.xx * b.xx + a.xy * b.xy + a.yx * b.yx + a.yy * b.yy; }

namespace detail {

// Centred difference along an axis, one-sided at box edges, wrapped when periodic.
inline double diff(const Grid& g, const std::vector<double>& f, int i, int j, int axis) {
    const int n = axis == 0 ? g.nx : g.ny;
    const double h = axis == 0 ? g.hx() : g.hy();
    const int k = axis == 0 ? i : j;
    auto at = [&](int m) { return axis == 0 ? f[g.index(m, j)] : f[g.index(i, m)]; };
    if (g.boundary == Boundary::Periodic) return (at((k + 1) % n) - at((k - 1 + n) % n)) / (2 * h);
    if (k == 0) return (at(1) - at(0)) / h;
    if (k == n - 1) return (at(n - 1) - at(n - 2)) / h;
    return (at(k + 1) - at(k - 1)) / (2 * h);
}

}  // namespace detail

/// grad u with entries (d_x u_x, d_y u_x, d_x u_y, d_y u_y) by finite differences.
inline TensorField velocity_gradient(const VectorField& u) {
    const Grid& g = u.grid;
    TensorField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            auto& t = out[g.index(i, j)];
            t.xx = detail::diff(g, u.x, i, j, 0);
            t.yx = detail::diff(g, u.y, i, j, 0);
            if (g.dim == 2) {
                t.xy = detail::diff(g, u.x, i, j, 1);
                t.yy = detail::diff(g, u.y, i, j, 1);
            }
        }
    return out;
}

/// eps^a S(theta, grad u).
inline TensorField viscous_stress(const TransportLaws& laws, const ScalarField& theta, const TensorField& grad_u,
                                  const ScalingParams& sc) {
    require_same_grid(theta.grid, grad_u.grid, "stress temperature/gradient");
    const double w = sc.visc_weight();
    TensorField out(theta.grid);
    for (std::size_t k = 0; k < theta.size(); ++k) {
        auto s = newtonian_stress(laws.mu(theta[k]), laws.eta(theta[k]), grad_u[k]);
        out[k] = {w * s.xx, w * s.xy, w * s.yx, w * s.yy};
    }
    return out;
}

/// eps^b q with q = -kappa(theta) grad theta.
inline VectorField heat_flux(const TransportLaws& laws, const ScalarField& theta, const ScalingParams& sc) {
    const Grid& g = theta.grid;
    const double w = sc.heat_weight();
    VectorField q(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const auto k = g.index(i, j);
            const double kap = laws.kappa(theta[k]);
            q.x[k] = -w * kap * detail::diff(g, theta.values, i, j, 0);
            if (g.dim == 2) q.y[k] = -w * kap * detail::diff(g, theta.values, i, j, 1);
        }
    return q;
}

// ------------------------------------------------------------ state

/// Cell-centred rho, theta, u plus the staggered unknowns the solver evolves:
/// face momenta mx ((nx+1) x ny), my (nx x (ny+1)) and total energy
/// E = eps^2 rho |u|^2 / 2 + rho e per cell.
struct FluidState {
    ScalarField rho, theta;
    VectorField u;
    double time = 0.0;
    std::vector<double> mx, my;
    ScalarField energy;

    const Grid& grid() const { return rho.grid; }
};

namespace detail {

struct Mac {
    const Grid& g;
    int nx, ny;
    bool per;
    double hx, hy;

    explicit Mac(const Grid& grid)
        : g(grid), nx(grid.nx), ny(grid.ny), per(grid.boundary == Boundary::Periodic), hx(grid.hx()), hy(grid.hy()) {
        if (grid.dim != 2) throw PreconditionError("the compressible solver is two-dimensional");
    }
    int wx(int i) const { return per ? (i % nx + nx) % nx : i; }
    int wy(int j) const { return per ? (j % ny + ny) % ny : j; }
    std::size_t c(int i, int j) const { return std::size_t(wy(j)) * nx + wx(i); }
    std::size_t fx(int i, int j) const { return std::size_t(wy(j)) * (nx + 1) + wx(i); }
    std::size_t fy(int i, int j) const { return std::size_t(wy(j)) * nx + wx(i); }
    std::size_t nfx() const { return std::size_t(nx + 1) * ny; }
    std::size_t nfy() const { return std::size_t(nx) * (ny + 1); }
    bool wall_x(int i) const { return !per && (i == 0 || i == nx); }
    bool wall_y(int j) const { return !per && (j == 0 || j == ny); }
    int fx_end() const { return per ? nx : nx + 1; }
    int fy_end() const { return per ? ny : ny + 1; }
};

struct Conserved {
    std::vector<double> rho, E, mx, my, theta;
};

// Cell kinetic energy |m|^2/(2 rho) from the face values (without the eps^2).
inline double cell_kinetic(const Mac& M, const Conserved& U, int i, int j) {
    auto rx = [&](int ii) { return 0.5 * (U.rho[M.c(ii - 1, j)] + U.rho[M.c(ii, j)]); };
    auto ry = [&](int jj) { return 0.5 * (U.rho[M.c(i, jj - 1)] + U.rho[M.c(i, jj)]); };
    double k = 0.0;
    for (int ii : {i, i + 1})
        if (!M.wall_x(ii)) k += 0.25 * U.mx[M.fx(ii, j)] * U.mx[M.fx(ii, j)] / rx(ii);
    for (int jj : {j, j + 1})
        if (!M.wall_y(jj)) k += 0.25 * U.my[M.fy(i, jj)] * U.my[M.fy(i, jj)] / ry(jj);
    return k;
}

inline void positivity_error(const Mac& M, const char* what, std::size_t k, double rho, double theta_or_e) {
    std::ostringstream os;
    os << "positivity lost (" << what << ") at cell (" << (k % M.nx) << ", " << (k / M.nx) << "): rho=" << rho
       << " value=" << theta_or_e;
    throw SolverError(os.str());
}

// Fills U.theta from (rho, E, momenta).
inline void recover_temperature(const Mac& M, const GasModel& model, double eps, double rho_floor, Conserved& U) {
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.nx; ++i) {
            const auto k = M.c(i, j);
            const double r = U.rho[k];
            if (!(r > rho_floor) || !std::isfinite(r)) positivity_error(M, "density", k, r, r);
            const double e = (U.E[k] - eps * eps * cell_kinetic(M, U, i, j)) / r;
            if (!(e > 0.0) || !std::isfinite(e)) positivity_error(M, "internal energy", k, r, e);
            try {
                U.theta[k] = temperature_from_energy(model, r, e, U.theta[k] > 0.0 ? U.theta[k] : 1.0);
            } catch (const std::exception&) {
                positivity_error(M, "temperature", k, r, e);
            }
        }
}

inline void rebuild_energy(const Mac& M, const GasModel& model, double eps, Conserved& U) {
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.nx; ++i) {
            const auto k = M.c(i, j);
            U.E[k] = eps * eps * cell_kinetic(M, U, i, j) + energy_density(model, U.rho[k], U.theta[k]);
        }
}

inline Conserved to_conserved(const FluidState& s) {
    return {s.rho.values, s.energy.values, s.mx, s.my, s.theta.values};
}

inline FluidState from_conserved(const Grid& g, Conserved&& U, double time) {
    const Mac M(g);
    FluidState s{ScalarField(g, std::move(U.rho)), ScalarField(g, std::move(U.theta)), VectorField(g), time,
                 std::move(U.mx), std::move(U.my), ScalarField(g, std::move(U.E))};
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.nx; ++i) {
            const auto k = M.c(i, j);
            auto ux = [&](int ii) {
                if (M.wall_x(ii)) return 0.0;
                return s.mx[M.fx(ii, j)] / (0.5 * (s.rho[M.c(ii - 1, j)] + s.rho[M.c(ii, j)]));
            };
            auto uy = [&](int jj) {
                if (M.wall_y(jj)) return 0.0;
                return s.my[M.fy(i, jj)] / (0.5 * (s.rho[M.c(i, jj - 1)] + s.rho[M.c(i, jj)]));
            };
            s.u.x[k] = 0.5 * (ux(i) + ux(i + 1));
            s.u.y[k] = 0.5 * (uy(j) + uy(j + 1));
        }
    return s;
}

}  // namespace detail

/// State from cell-centred primitives; face momenta from averaged neighbours,
/// zero on box walls.
inline FluidState make_fluid_state(const GasModel& model, const ScalarField& rho, const ScalarField& theta,
                                   const VectorField& u, double eps) {
    require_same_grid(rho.grid, theta.grid, "state density/temperature");
    require_same_grid(rho.grid, u.grid, "state density/velocity");
    const Grid& g = rho.grid;
    const detail::Mac M(g);
    detail::Conserved U{rho.values, std::vector<double>(g.size()), std::vector<double>(M.nfx(), 0.0),
                        std::vector<double>(M.nfy(), 0.0), theta.values};
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!(rho[k] > 0.0)) throw DomainError("initial density must be positive");
        if (!(theta[k] > 0.0)) throw DomainError("initial temperature must be positive");
    }
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.fx_end(); ++i) {
            if (M.wall_x(i)) continue;
            const auto L = M.c(i - 1, j), R = M.c(i, j);
            U.mx[M.fx(i, j)] = 0.25 * (rho[L] + rho[R]) * (u.x[L] + u.x[R]);
        }
    for (int j = 0; j < M.fy_end(); ++j)
        for (int i = 0; i < M.nx; ++i) {
            if (M.wall_y(j)) continue;
            const auto B = M.c(i, j - 1), T = M.c(i, j);
            U.my[M.fy(i, j)] = 0.25 * (rho[B] + rho[T]) * (u.y[B] + u.y[T]);
        }
    detail::rebuild_energy(M, model, eps, U);
    return detail::from_conserved(g, std::move(U), 0.0);
}

struct PrimitiveInitialData {
    ScalarField rho1_0, theta1_0;
    VectorField u0;
};

/// rho0 = rho_eps + eps rho1, theta0 = theta_bar + eps theta1.
inline FluidState build_initial_state(const GasModel& model, const EquilibriumProfile& eq, const PrimitiveInitialData& d) {
    require_same_grid(eq.rho_eps.grid, d.rho1_0.grid, "equilibrium/initial density");
    ScalarField rho = eq.rho_eps, theta(eq.rho_eps.grid, eq.theta_bar);
    for (std::size_t k = 0; k < rho.size(); ++k) {
        rho[k] += eq.eps * d.rho1_0[k];
        theta[k] += eq.eps * d.theta1_0[k];
    }
    return make_fluid_state(model, rho, theta, d.u0, eq.eps);
}

struct NsfParams {
    double sponge_width = 0.0;   // strip along the box walls; 0 disables
    double sponge_rate = 0.0;    // peak relaxation rate in the strip
    double rho_floor = 1e-12;
};

namespace detail {

struct NsfContext {
    const GasModel& model;
    const TransportLaws& laws;
    const ScalingParams& sc;
    const EquilibriumProfile& eq;
    std::vector<double> p_eq;
    double c2 = 0.0;    // adiabatic sound speed squared at the far-field state
    double p_E = 0.0;   // dp/d(rho e) at fixed rho, far-field state

    NsfContext(const GasModel& m, const TransportLaws& l, const ScalingParams& s, const EquilibriumProfile& e)
        : model(m), laws(l), sc(s), eq(e), p_eq(e.rho_eps.size()) {
        for (std::size_t k = 0; k < p_eq.size(); ++k) p_eq[k] = eval_state(m, e.rho_eps[k], e.theta_bar).p;
        c2 = adiabatic_sound_speed2(m, e.rho_bar, e.theta_bar);
        const auto t = eval_state(m, e.rho_bar, e.theta_bar);
        p_E = t.dp_dtheta / (e.rho_bar * t.de_dtheta);
    }
};

// Operator pieces shared by the step and the entropy diagnostics.
struct MacFields {
    std::vector<double> ux, uy;        // face velocities
    std::vector<double> sxx, syy;      // unweighted stress at cells
    std::vector<double> sxy;           // unweighted stress at corners ((nx+1) x (ny+1))
    std::vector<double> gxy;           // d_y u_x + d_x u_y at corners
    std::vector<double> dxx, dyy;      // d_x u_x, d_y u_y at cells
    std::vector<double> qx, qy;        // unweighted heat flux on faces
};

inline std::size_t corner(const Mac& M, int i, int j) { return std::size_t(j) * (M.nx + 1) + i; }

inline MacFields mac_fields(const Mac& M, const TransportLaws& laws, const Conserved& U) {
    MacFields f;
    f.ux.assign(M.nfx(), 0.0);
    f.uy.assign(M.nfy(), 0.0);
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.fx_end(); ++i)
            if (!M.wall_x(i)) f.ux[M.fx(i, j)] = U.mx[M.fx(i, j)] / (0.5 * (U.rho[M.c(i - 1, j)] + U.rho[M.c(i, j)]));
    for (int j = 0; j < M.fy_end(); ++j)
        for (int i = 0; i < M.nx; ++i)
            if (!M.wall_y(j)) f.uy[M.fy(i, j)] = U.my[M.fy(i, j)] / (0.5 * (U.rho[M.c(i, j - 1)] + U.rho[M.c(i, j)]));
    auto ux = [&](int i, int j) { return M.wall_x(i) ? 0.0 : f.ux[M.fx(i, j)]; };
    auto uy = [&](int i, int j) { return M.wall_y(j) ? 0.0 : f.uy[M.fy(i, j)]; };
    const std::size_t nc = M.g.size();
    f.sxx.resize(nc);
    f.syy.resize(nc);
    f.dxx.resize(nc);
    f.dyy.resize(nc);
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.nx; ++i) {
            const auto k = M.c(i, j);
            const double a = (ux(i + 1, j) - ux(i, j)) / M.hx, b = (uy(i, j + 1) - uy(i, j)) / M.hy;
            const double th = U.theta[k], mu = laws.mu(th), eta = laws.eta(th), d = a + b;
            f.dxx[k] = a;
            f.dyy[k] = b;
            f.sxx[k] = mu * (2 * a - 2.0 / 3.0 * d) + eta * d;
            f.syy[k] = mu * (2 * b - 2.0 / 3.0 * d) + eta * d;
        }
    f.sxy.assign(std::size_t(M.nx + 1) * (M.ny + 1), 0.0);
    f.gxy.assign(f.sxy.size(), 0.0);
    for (int j = 0; j <= M.ny; ++j)
        for (int i = 0; i <= M.nx; ++i) {
            if (M.wall_x(i) || M.wall_y(j)) continue;   // free slip: no tangential stress on walls
            if (M.per && (i == M.nx || j == M.ny)) continue;
            const double gm = (ux(i, j) - ux(i, j - 1)) / M.hy + (uy(i, j) - uy(i - 1, j)) / M.hx;
            const double th = 0.25 * (U.theta[M.c(i - 1, j - 1)] + U.theta[M.c(i, j - 1)] + U.theta[M.c(i - 1, j)] + U.theta[M.c(i, j)]);
            f.gxy[corner(M, i, j)] = gm;
            f.sxy[corner(M, i, j)] = laws.mu(th) * gm;
        }
    if (M.per) {
        for (int j = 0; j <= M.ny; ++j) {
            f.sxy[corner(M, M.nx, j)] = f.sxy[corner(M, 0, j % M.ny)];
            f.gxy[corner(M, M.nx, j)] = f.gxy[corner(M, 0, j % M.ny)];
        }
        for (int i = 0; i <= M.nx; ++i) {
            f.sxy[corner(M, i, M.ny)] = f.sxy[corner(M, i, 0)];
            f.gxy[corner(M, i, M.ny)] = f.gxy[corner(M, i, 0)];
        }
    }
    f.qx.assign(M.nfx(), 0.0);
    f.qy.assign(M.nfy(), 0.0);
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.fx_end(); ++i) {
            if (M.wall_x(i)) continue;
            const double tl = U.theta[M.c(i - 1, j)], tr = U.theta[M.c(i, j)];
            f.qx[M.fx(i, j)] = -0.5 * (laws.kappa(tl) + laws.kappa(tr)) * (tr - tl) / M.hx;
        }
    for (int j = 0; j < M.fy_end(); ++j)
        for (int i = 0; i < M.nx; ++i) {
            if (M.wall_y(j)) continue;
            const double tb = U.theta[M.c(i, j - 1)], tt = U.theta[M.c(i, j)];
            f.qy[M.fy(i, j)] = -0.5 * (laws.kappa(tb) + laws.kappa(tt)) * (tt - tb) / M.hy;
        }
    return f;
}

enum class AxisKind { NeumannCells, DirichletNodes, Periodic };

// In place: a <- (I + coef (-Lap_h))^{-1} a on an n0 x n1 array (row-major, x fastest)
// with the 5-point Laplacian under the given per-axis conditions.
inline void shifted_inverse(std::vector<double>& a, int n0, int n1, AxisKind k0, AxisKind k1, double h0, double h1,
                            double coef) {
    if (coef <= 0.0) return;
    auto& cache = PlanCache::instance();
    auto eig = [](AxisKind k, int m, int n, double h) {
        double s;
        if (k == AxisKind::NeumannCells) s = std::sin(pi * m / (2.0 * n));
        else if (k == AxisKind::DirichletNodes) s = std::sin(pi * (m + 1) / (2.0 * (n + 1)));
        else s = std::sin(pi * m / n);
        return 4.0 / (h * h) * s * s;
    };
    if (k0 == AxisKind::Periodic) {
        std::vector<fftw_complex> in(a.size()), out(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            in[k][0] = a[k];
            in[k][1] = 0.0;
        }
        fftw_execute_dft(cache.dft(n0, n1, 2, FFTW_FORWARD), in.data(), out.data());
        for (int j = 0; j < n1; ++j)
            for (int i = 0; i < n0; ++i) {
                const double d = (1.0 + coef * (eig(k0, i, n0, h0) + eig(k1, j, n1, h1))) * double(a.size());
                out[std::size_t(j) * n0 + i][0] /= d;
                out[std::size_t(j) * n0 + i][1] /= d;
            }
        fftw_execute_dft(cache.dft(n0, n1, 2, FFTW_BACKWARD), out.data(), in.data());
        for (std::size_t k = 0; k < a.size(); ++k) a[k] = in[k][0];
        return;
    }
    auto fwd = [](AxisKind k) { return k == AxisKind::NeumannCells ? FFTW_REDFT10 : FFTW_RODFT00; };
    auto inv = [](AxisKind k) { return k == AxisKind::NeumannCells ? FFTW_REDFT01 : FFTW_RODFT00; };
    auto norm = [](AxisKind k, int n) { return k == AxisKind::NeumannCells ? 2.0 * n : 2.0 * (n + 1); };
    std::vector<double> b(a.size());
    fftw_execute_r2r(cache.r2r(n0, n1, 2, fwd(k0), fwd(k1)), a.data(), b.data());
    const double nn = norm(k0, n0) * norm(k1, n1);
    for (int j = 0; j < n1; ++j)
        for (int i = 0; i < n0; ++i) b[std::size_t(j) * n0 + i] /= (1.0 + coef * (eig(k0, i, n0, h0) + eig(k1, j, n1, h1))) * nn;
    fftw_execute_r2r(cache.r2r(n0, n1, 2, inv(k0), inv(k1)), b.data(), a.data());
}

// Stabilizes explicit diffusion: the tendency is replaced by (I - dt D Lap_h)^{-1}
// of itself, with D bounding the local diffusivity. Cell arrays use Neumann
// cells on both axes; face arrays are Dirichlet along their normal.
inline void stabilize_cells(const Mac& M, std::vector<double>& t, double coef) {
    const auto k = M.per ? AxisKind::Periodic : AxisKind::NeumannCells;
    shifted_inverse(t, M.nx, M.ny, k, k, M.hx, M.hy, coef);
}

inline void stabilize_xfaces(const Mac& M, std::vector<double>& t, double coef) {
    if (coef <= 0.0) return;
    const int n0 = M.per ? M.nx : M.nx - 1, off = M.per ? 0 : 1;
    std::vector<double> a(std::size_t(n0) * M.ny);
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < n0; ++i) a[std::size_t(j) * n0 + i] = t[M.fx(i + off, j)];
    shifted_inverse(a, n0, M.ny, M.per ? AxisKind::Periodic : AxisKind::DirichletNodes,
                    M.per ? AxisKind::Periodic : AxisKind::NeumannCells, M.hx, M.hy, coef);
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < n0; ++i) t[M.fx(i + off, j)] = a[std::size_t(j) * n0 + i];
}

inline void stabilize_yfaces(const Mac& M, std::vector<double>& t, double coef) {
    if (coef <= 0.0) return;
    const int n1 = M.per ? M.ny : M.ny - 1, off = M.per ? 0 : 1;
    std::vector<double> a(std::size_t(M.nx) * n1);
    for (int j = 0; j < n1; ++j)
        for (int i = 0; i < M.nx; ++i) a[std::size_t(j) * M.nx + i] = t[M.fy(i, j + off)];
    shifted_inverse(a, M.nx, n1, M.per ? AxisKind::Periodic : AxisKind::NeumannCells,
                    M.per ? AxisKind::Periodic : AxisKind::DirichletNodes, M.hx, M.hy, coef);
    for (int j = 0; j < n1; ++j)
        for (int i = 0; i < M.nx; ++i) t[M.fy(i, j + off)] = a[std::size_t(j) * M.nx + i];
}

// Explicit tendencies: advection, viscosity, gravity for the momenta; heat
// conduction, viscous and gravitational work for the energy; cell enthalpy.
struct Tendency {
    std::vector<double> mx, my, E, H;
};

inline Tendency explicit_tendency(const Mac& M, const NsfContext& ctx, const Conserved& U, double dt) {
    const double eps = ctx.sc.eps, e2 = eps * eps;
    const double wv = ctx.sc.visc_weight(), wq = ctx.sc.heat_weight();
    const auto f = mac_fields(M, ctx.laws, U);
    const auto& F = ctx.eq.F.values;
    const auto& rbe = ctx.eq.rho_eps.values;
    const std::size_t nc = M.g.size();

    Tendency T{std::vector<double>(M.nfx(), 0.0), std::vector<double>(M.nfy(), 0.0), std::vector<double>(nc),
               std::vector<double>(nc)};
    std::vector<double> vx(M.nfx(), 0.0), vy(M.nfy(), 0.0), hq(nc);
    double nu_ref = 0.0, chi_ref = 0.0;
    for (std::size_t k = 0; k < nc; ++k) {
        const auto t = eval_state(ctx.model, U.rho[k], U.theta[k]);
        T.H[k] = (U.E[k] + t.p) / U.rho[k];
        const double th = U.theta[k];
        nu_ref = std::max(nu_ref, wv * (4.0 / 3.0 * ctx.laws.mu(th) + ctx.laws.eta(th)) / U.rho[k]);
        chi_ref = std::max(chi_ref, wq * ctx.laws.kappa(th) / (U.rho[k] * t.de_dtheta));
    }
    auto ux = [&](int i, int j) { return M.wall_x(i) ? 0.0 : f.ux[M.fx(i, j)]; };
    auto uy = [&](int i, int j) { return M.wall_y(j) ? 0.0 : f.uy[M.fy(i, j)]; };
    auto mxv = [&](int i, int j) { return M.wall_x(i) ? 0.0 : U.mx[M.fx(i, j)]; };
    auto myv = [&](int i, int j) { return M.wall_y(j) ? 0.0 : U.my[M.fy(i, j)]; };
    auto sxy = [&](int i, int j) { return f.sxy[corner(M, M.per ? M.wx(i) : i, M.per ? M.wy(j) : j)]; };

    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.fx_end(); ++i) {
            if (M.wall_x(i)) continue;
            const auto L = M.c(i - 1, j), R = M.c(i, j);
            auto fxx = [&](int ic) { return 0.25 * (mxv(ic, j) + mxv(ic + 1, j)) * (ux(ic, j) + ux(ic + 1, j)); };
            auto gxy = [&](int jc) {
                if (M.wall_y(jc)) return 0.0;
                return 0.25 * (myv(i - 1, jc) + myv(i, jc)) * (ux(i, jc - 1) + ux(i, jc));
            };
            const double adv = (fxx(i) - fxx(i - 1)) / M.hx + (gxy(j + 1) - gxy(j)) / M.hy;
            const double visc = (f.sxx[R] - f.sxx[L]) / M.hx + (sxy(i, j + 1) - sxy(i, j)) / M.hy;
            const double grav = (0.5 * (U.rho[L] + U.rho[R]) - 0.5 * (rbe[L] + rbe[R])) * (F[R] - F[L]) / M.hx / eps;
            T.mx[M.fx(i, j)] = -adv + grav;
            vx[M.fx(i, j)] = wv * visc;
        }
    for (int j = 0; j < M.fy_end(); ++j)
        for (int i = 0; i < M.nx; ++i) {
            if (M.wall_y(j)) continue;
            const auto B = M.c(i, j - 1), Tc = M.c(i, j);
            auto fyy = [&](int jc) { return 0.25 * (myv(i, jc) + myv(i, jc + 1)) * (uy(i, jc) + uy(i, jc + 1)); };
            auto gyx = [&](int ic) {
                if (M.wall_x(ic)) return 0.0;
                return 0.25 * (mxv(ic, j - 1) + mxv(ic, j)) * (uy(ic - 1, j) + uy(ic, j));
            };
            const double adv = (fyy(j) - fyy(j - 1)) / M.hy + (gyx(i + 1) - gyx(i)) / M.hx;
            const double visc = (f.syy[Tc] - f.syy[B]) / M.hy + (sxy(i + 1, j) - sxy(i, j)) / M.hx;
            const double grav = (0.5 * (U.rho[B] + U.rho[Tc]) - 0.5 * (rbe[B] + rbe[Tc])) * (F[Tc] - F[B]) / M.hy / eps;
            T.my[M.fy(i, j)] = -adv + grav;
            vy[M.fy(i, j)] = wv * visc;
        }

    auto sxx_f = [&](int i, int j) { return 0.5 * (f.sxx[M.c(i - 1, j)] + f.sxx[M.c(i, j)]); };
    auto syy_f = [&](int i, int j) { return 0.5 * (f.syy[M.c(i, j - 1)] + f.syy[M.c(i, j)]); };
    auto work_x = [&](int i, int j) {   // (S u)_x on x-face
        if (M.wall_x(i)) return 0.0;
        const double uyf = 0.25 * (uy(i - 1, j) + uy(i, j) + uy(i - 1, j + 1) + uy(i, j + 1));
        return sxx_f(i, j) * ux(i, j) + 0.5 * (sxy(i, j) + sxy(i, j + 1)) * uyf;
    };
    auto work_y = [&](int i, int j) {
        if (M.wall_y(j)) return 0.0;
        const double uxf = 0.25 * (ux(i, j - 1) + ux(i + 1, j - 1) + ux(i, j) + ux(i + 1, j));
        return syy_f(i, j) * uy(i, j) + 0.5 * (sxy(i, j) + sxy(i + 1, j)) * uxf;
    };
    auto qx = [&](int i, int j) { return M.wall_x(i) ? 0.0 : f.qx[M.fx(i, j)]; };
    auto qy = [&](int i, int j) { return M.wall_y(j) ? 0.0 : f.qy[M.fy(i, j)]; };
    auto gwork_x = [&](int i, int j) { return M.wall_x(i) ? 0.0 : mxv(i, j) * (F[M.c(i, j)] - F[M.c(i - 1, j)]) / M.hx; };
    auto gwork_y = [&](int i, int j) { return M.wall_y(j) ? 0.0 : myv(i, j) * (F[M.c(i, j)] - F[M.c(i, j - 1)]) / M.hy; };
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.nx; ++i) {
            const double divq = (qx(i + 1, j) - qx(i, j)) / M.hx + (qy(i, j + 1) - qy(i, j)) / M.hy;
            const double divw = (work_x(i + 1, j) - work_x(i, j)) / M.hx + (work_y(i, j + 1) - work_y(i, j)) / M.hy;
            const double gw = 0.5 * (gwork_x(i, j) + gwork_x(i + 1, j) + gwork_y(i, j) + gwork_y(i, j + 1));
            T.E[M.c(i, j)] = e2 * wv * divw + eps * gw;
            hq[M.c(i, j)] = -wq * divq;
        }
    stabilize_xfaces(M, vx, dt * nu_ref);
    stabilize_yfaces(M, vy, dt * nu_ref);
    stabilize_cells(M, hq, dt * chi_ref);
    for (std::size_t k = 0; k < vx.size(); ++k) T.mx[k] += vx[k];
    for (std::size_t k = 0; k < vy.size(); ++k) T.my[k] += vy[k];
    for (std::size_t k = 0; k < nc; ++k) T.E[k] += hq[k];
    return T;
}

inline void average_into(Tendency& a, const Tendency& b) {
    for (auto [x, y] : {std::pair{&a.mx, &b.mx}, std::pair{&a.my, &b.my}, std::pair{&a.E, &b.E}, std::pair{&a.H, &b.H}})
        for (std::size_t k = 0; k < x->size(); ++k) (*x)[k] = 0.5 * ((*x)[k] + (*y)[k]);
}

// Crank-Nicolson pressure correction from U with the given explicit tendencies.
inline Conserved implicit_update(const Mac& M, const NsfContext& ctx, const Conserved& U, const Tendency& T, double dt) {
    const double e2 = ctx.sc.eps * ctx.sc.eps;
    const std::size_t nc = M.g.size();
    std::vector<double> pi(nc);
    for (std::size_t k = 0; k < nc; ++k) pi[k] = eval_state(ctx.model, U.rho[k], U.theta[k]).p - ctx.p_eq[k];

    std::vector<double> mxt(M.nfx(), 0.0), myt(M.nfy(), 0.0);
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.fx_end(); ++i) {
            if (M.wall_x(i)) continue;
            const auto n = M.fx(i, j);
            mxt[n] = U.mx[n] + dt * T.mx[n] - 0.5 * dt / e2 * (pi[M.c(i, j)] - pi[M.c(i - 1, j)]) / M.hx;
        }
    for (int j = 0; j < M.fy_end(); ++j)
        for (int i = 0; i < M.nx; ++i) {
            if (M.wall_y(j)) continue;
            const auto n = M.fy(i, j);
            myt[n] = U.my[n] + dt * T.my[n] - 0.5 * dt / e2 * (pi[M.c(i, j)] - pi[M.c(i, j - 1)]) / M.hy;
        }

    auto div = [&](const std::vector<double>& ax, const std::vector<double>& ay, int i, int j) {
        const double a1 = M.wall_x(i + 1) ? 0.0 : ax[M.fx(i + 1, j)], a0 = M.wall_x(i) ? 0.0 : ax[M.fx(i, j)];
        const double b1 = M.wall_y(j + 1) ? 0.0 : ay[M.fy(i, j + 1)], b0 = M.wall_y(j) ? 0.0 : ay[M.fy(i, j)];
        return (a1 - a0) / M.hx + (b1 - b0) / M.hy;
    };

    // (1 + (dt^2 c^2 / 4 eps^2) lambda_h) pi_new = pi + dt p_E rhs_E - (dt c^2 / 2)(div m + div m~).
    ScalarField rhs(M.g);
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.nx; ++i) {
            const auto k = M.c(i, j);
            rhs[k] = pi[k] + dt * ctx.p_E * T.E[k] - 0.5 * dt * ctx.c2 * (div(U.mx, U.my, i, j) + div(mxt, myt, i, j));
        }
    const double coef = dt * dt * ctx.c2 / (4.0 * e2);
    auto ah = forward(rhs, kScalarBasis);
    for (int ky = 0; ky < M.ny; ++ky)
        for (int kx = 0; kx < M.nx; ++kx) ah(kx, ky) /= 1.0 + coef * discrete_eigenvalue(M.g, kx, ky);
    const auto pin = inverse(ah);

    Conserved out{U.rho, U.E, std::vector<double>(M.nfx(), 0.0), std::vector<double>(M.nfy(), 0.0), U.theta};
    std::vector<double> hmx(M.nfx(), 0.0), hmy(M.nfy(), 0.0), Hx(M.nfx(), 0.0), Hy(M.nfy(), 0.0);
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.fx_end(); ++i) {
            if (M.wall_x(i)) continue;
            const auto L = M.c(i - 1, j), R = M.c(i, j), n = M.fx(i, j);
            out.mx[n] = mxt[n] - 0.5 * dt / e2 * (pin[R] - pin[L]) / M.hx;
            hmx[n] = 0.5 * (U.mx[n] + out.mx[n]);
            Hx[n] = 0.5 * (T.H[L] + T.H[R]) * hmx[n];
        }
    for (int j = 0; j < M.fy_end(); ++j)
        for (int i = 0; i < M.nx; ++i) {
            if (M.wall_y(j)) continue;
            const auto B = M.c(i, j - 1), Tc = M.c(i, j), n = M.fy(i, j);
            out.my[n] = myt[n] - 0.5 * dt / e2 * (pin[Tc] - pin[B]) / M.hy;
            hmy[n] = 0.5 * (U.my[n] + out.my[n]);
            Hy[n] = 0.5 * (T.H[B] + T.H[Tc]) * hmy[n];
        }
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.nx; ++i) {
            const auto k = M.c(i, j);
            out.rho[k] = U.rho[k] - dt * div(hmx, hmy, i, j);
            out.E[k] = U.E[k] - dt * div(Hx, Hy, i, j) + dt * T.E[k];
        }
    return out;
}

inline void apply_sponge(const Mac& M, const GasModel& model, double eps, double theta_bar, const NsfParams& p, double dt,
                         Conserved& U) {
    if (M.per || p.sponge_width <= 0.0 || p.sponge_rate <= 0.0) return;
    const Grid& g = M.g;
    auto sigma = [&](double x, double y) {
        const double d = std::min({x - g.x0, g.x_hi() - x, y - g.y0, g.y_hi() - y});
        const double s = std::clamp(1.0 - d / p.sponge_width, 0.0, 1.0);
        return p.sponge_rate * s * s;
    };
    for (int j = 0; j < M.ny; ++j)
        for (int i = 1; i < M.nx; ++i) U.mx[M.fx(i, j)] /= 1.0 + dt * sigma(g.x0 + i * M.hx, g.y(j));
    for (int j = 1; j < M.ny; ++j)
        for (int i = 0; i < M.nx; ++i) U.my[M.fy(i, j)] /= 1.0 + dt * sigma(g.x(i), g.y0 + j * M.hy);
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.nx; ++i) {
            const double r = dt * sigma(g.x(i), g.y(j));
            auto& th = U.theta[M.c(i, j)];
            th = (th + r * theta_bar) / (1.0 + r);
        }
    rebuild_energy(M, model, eps, U);
}

}  // namespace detail

/// Advective step limit. Acoustics are implicit and diffusion is stabilized,
/// so neither enters.
inline double nsf_stable_dt(const FluidState& s, const TransportLaws& laws, const ScalingParams& sc, double cfl = 0.4) {
    (void)laws;
    sc.validate();
    const Grid& g = s.grid();
    double rate = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) rate = std::max(rate, std::abs(s.u.x[k]) / g.hx() + std::abs(s.u.y[k]) / g.hy());
    return rate > 0.0 ? cfl / rate : 1e300;
}

inline FluidState nsf_step(const FluidState& s, const GasModel& model, const TransportLaws& laws, const ScalingParams& sc,
                           const EquilibriumProfile& eq, double dt, const NsfParams& params = {}) {
    sc.validate();
    if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
    require_same_grid(s.grid(), eq.rho_eps.grid, "state/equilibrium");
    if (std::abs(eq.eps - sc.eps) > 1e-14 * sc.eps) throw PreconditionError("equilibrium profile built for a different Mach scale");
    const detail::Mac M(s.grid());
    const detail::NsfContext ctx(model, laws, sc, eq);
    const auto U0 = detail::to_conserved(s);
    auto T0 = detail::explicit_tendency(M, ctx, U0, dt);
    auto U1 = detail::implicit_update(M, ctx, U0, T0, dt);
    detail::recover_temperature(M, model, sc.eps, params.rho_floor, U1);
    detail::average_into(T0, detail::explicit_tendency(M, ctx, U1, dt));
    auto U2 = detail::implicit_update(M, ctx, U0, T0, dt);
    detail::recover_temperature(M, model, sc.eps, params.rho_floor, U2);
    detail::apply_sponge(M, model, sc.eps, eq.theta_bar, params, dt, U2);
    return detail::from_conserved(s.grid(), std::move(U2), s.time + dt);
}

/// Wrapper holding the fixed inputs of a run.
struct NsfSolver {
    GasModel model;
    TransportLaws laws;
    ScalingParams scaling;
    EquilibriumProfile eq;
    NsfParams params;

    FluidState step(const FluidState& s, double dt) const { return nsf_step(s, model, laws, scaling, eq, dt, params); }
};

// ------------------------------------------------------------ diagnostics

inline double total_mass(const FluidState& s) {
    double m = 0.0;
    for (double r : s.rho.values) m += r;
    return m * s.grid().cell_volume();
}

/// Integral of eps^2 rho |u|^2 / 2 + rho e.
inline double total_energy(const FluidState& s) {
    double e = 0.0;
    for (double v : s.energy.values) e += v;
    return e * s.grid().cell_volume();
}

inline double total_entropy(const FluidState& s, const GasModel& model) {
    double e = 0.0;
    for (std::size_t k = 0; k < s.rho.size(); ++k) e += entropy_density(model, s.rho[k], s.theta[k]);
    return e * s.grid().cell_volume();
}

/// Pointwise (1/theta)(eps^{2+a} S : grad u - eps^b q . grad theta / theta) at cells,
/// assembled from the same staggered differences the step uses.
inline ScalarField entropy_production(const FluidState& s, const TransportLaws& laws, const ScalingParams& sc) {
    const detail::Mac M(s.grid());
    const auto U = detail::to_conserved(s);
    const auto f = detail::mac_fields(M, laws, U);
    const double wv = sc.eps * sc.eps * sc.visc_weight(), wq = sc.heat_weight();
    ScalarField out(s.grid());
    for (int j = 0; j < M.ny; ++j)
        for (int i = 0; i < M.nx; ++i) {
            const auto k = M.c(i, j);
            double diss = f.sxx[k] * f.dxx[k] + f.syy[k] * f.dyy[k];
            for (int dj : {0, 1})
                for (int di : {0, 1}) {
                    const auto c = detail::corner(M, i + di, j + dj);
                    diss += 0.25 * f.sxy[c] * f.gxy[c];
                }
            double cond = 0.0;
            const double th = s.theta[k];
            for (int di : {0, 1})
                if (!M.wall_x(i + di)) {
                    const double q = f.qx[M.fx(i + di, j)];
                    const double kap = 0.5 * (laws.kappa(U.theta[M.c(i + di - 1, j)]) + laws.kappa(U.theta[M.c(i + di, j)]));
                    cond += 0.5 * q * q / kap;
                }
            for (int dj : {0, 1})
                if (!M.wall_y(j + dj)) {
                    const double q = f.qy[M.fy(i, j + dj)];
                    const double kap = 0.5 * (laws.kappa(U.theta[M.c(i, j + dj - 1)]) + laws.kappa(U.theta[M.c(i, j + dj)]));
                    cond += 0.5 * q * q / kap;
                }
            out[k] = (wv * diss + wq * cond / th) / th;
        }
    return out;
}

/// Nonnegative smooth test function with its gradient.
struct TestFunction {
    std::string name;
    std::function<double(double, double)> value;
    std::function<std::array<double, 2>(double, double)> grad;
};

/// exp(-|x - c|^2 / w^2).
inline TestFunction gaussian_test_function(double cx, double cy, double w) {
    std::ostringstream os;
    os << "gauss(" << cx << "," << cy << "," << w << ")";
    return {os.str(), [=](double x, double y) { return std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (w * w)); },
            [=](double x, double y) {
                const double v = std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (w * w));
                return std::array<double, 2>{-2 * (x - cx) / (w * w) * v, -2 * (y - cy) / (w * w) * v};
            }};
}

struct EntropyInequalityEntry {
    std::string test_function;
    double residual = 0.0;   // left minus right side of the integrated inequality; <= 0 when it holds
    double scale = 0.0;      // magnitude of the largest term, for relative comparison
};

struct InequalityReport {
    double min_production = 0.0;
    bool production_nonnegative = true;
    std::vector<EntropyInequalityEntry> entries;
    double max_relative_residual = 0.0;
};

/// Audits the integrated entropy inequality on a stored trajectory with time
/// integrals by the trapezoidal rule; test functions are time independent.
inline InequalityReport entropy_balance_check(const std::vector<FluidState>& traj, const GasModel& model,
                                              const TransportLaws& laws, const ScalingParams& sc,
                                              const std::vector<TestFunction>& dictionary) {
    if (traj.size() < 2) throw PreconditionError("entropy audit needs at least two snapshots");
    const Grid& g = traj.front().grid();
    const double dv = g.cell_volume();
    InequalityReport rep;
    rep.min_production = 1e300;
    struct Snap {
        std::vector<double> rs, prod, fx, fy;   // rho s, production, entropy flux (convective + conductive)
    };
    std::vector<Snap> snaps;
    for (const auto& s : traj) {
        require_same_grid(g, s.grid(), "entropy audit snapshots");
        Snap sn;
        const auto prod = entropy_production(s, laws, sc);
        const auto q = heat_flux(laws, s.theta, sc);
        sn.prod = prod.values;
        sn.rs.resize(g.size());
        sn.fx.resize(g.size());
        sn.fy.resize(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            rep.min_production = std::min(rep.min_production, prod[k]);
            sn.rs[k] = entropy_density(model, s.rho[k], s.theta[k]);
            sn.fx[k] = sn.rs[k] * s.u.x[k] + q.x[k] / s.theta[k];
            sn.fy[k] = sn.rs[k] * s.u.y[k] + q.y[k] / s.theta[k];
        }
        snaps.push_back(std::move(sn));
    }
    rep.production_nonnegative = rep.min_production >= 0.0;
    for (const auto& tf : dictionary) {
        std::vector<double> phi(g.size()), gx(g.size()), gy(g.size());
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const auto k = g.index(i, j);
                phi[k] = tf.value(g.x(i), g.y(j));
                const auto d = tf.grad(g.x(i), g.y(j));
                gx[k] = d[0];
                gy[k] = d[1];
            }
        auto integral = [&](const Snap& sn, int which) {
            double a = 0.0;
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (which == 0) a += sn.rs[k] * phi[k];
                else if (which == 1) a += sn.prod[k] * phi[k];
                else a += sn.fx[k] * gx[k] + sn.fy[k] * gy[k];
            }
            return a * dv;
        };
        double prod_int = 0.0, flux_int = 0.0;
        for (std::size_t n = 1; n < traj.size(); ++n) {
            const double h = traj[n].time - traj[n - 1].time;
            prod_int += 0.5 * h * (integral(snaps[n], 1) + integral(snaps[n - 1], 1));
            flux_int += 0.5 * h * (integral(snaps[n], 2) + integral(snaps[n - 1], 2));
        }
        const double s0 = integral(snaps.front(), 0), s1 = integral(snaps.back(), 0);
        // s0 - s1 + prod <= -flux  (the flux enters with the sign of the weak form)
        EntropyInequalityEntry e{tf.name, s0 - s1 + prod_int + flux_int, std::max({std::abs(s1 - s0), std::abs(prod_int), std::abs(flux_int), 1e-300})};
        rep.max_relative_residual = std::max(rep.max_relative_residual, e.residual / e.scale);
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

}  // namespace lowmach
