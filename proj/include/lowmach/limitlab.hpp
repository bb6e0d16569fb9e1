#pragma once

// Composite test functions, the relative-entropy functional between a
// compressible run and the Boussinesq + acoustic composite, the essential /
// residual split and the eps-sweep harness with log-log order fits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lowmach/acoustic.hpp"
#include "lowmach/boussinesq.hpp"
#include "lowmach/equilibrium.hpp"
#include "lowmach/error.hpp"
#include "lowmach/grid.hpp"
#include "lowmach/io.hpp"
#include "lowmach/nsf.hpp"
#include "lowmach/spectral.hpp"
#include "lowmach/thermo.hpp"
#include "lowmach/transport.hpp"

namespace lowmach {

/// Raised when r or Theta of the composite loses positivity.
class EpsTooLargeError : public DomainError {
public:
    using DomainError::DomainError;
};

struct TestFunctionTriple {
    ScalarField r_eps;       // rho_bar_eps + eps R
    ScalarField Theta_eps;   // theta_bar + eps T
    VectorField U_eps;       // v + grad Phi
    double time = 0.0;
};

namespace detail {

inline void require_time(double have, double want, const char* what) {
    if (std::abs(have - want) > 1e-9 * std::max(1.0, std::abs(want))) {
        std::ostringstream os;
        os << what << " is at t = " << have << ", requested t = " << want;
        throw PreconditionError(os.str());
    }
}

}  // namespace detail

/// The acoustic state is propagated exactly to t; the other two must already sit at t.
inline TestFunctionTriple build_test_functions(const BoussinesqState& bq, const AcousticState& ac, const TransportState& tr,
                                               const EquilibriumProfile& eq, const LinearizationCoefficients& c, double eps,
                                               double t) {
    const Grid& g = bq.grid();
    require_same_grid(g, ac.grid(), "Boussinesq/acoustic");
    require_same_grid(g, tr.sigma.grid, "Boussinesq/transport");
    require_same_grid(g, eq.rho_eps.grid, "Boussinesq/equilibrium");
    if (std::abs(eq.eps - eps) > 1e-14 * std::max(eps, 1e-300)) throw PreconditionError("equilibrium built for a different Mach scale");
    detail::require_time(bq.time, t, "Boussinesq state");
    detail::require_time(tr.time, t, "transport state");
    const auto a = acoustic_propagate(ac, t);
    const auto rt = recover_RT(a.q_field(), tr.sigma, c);
    TestFunctionTriple out{eq.rho_eps, ScalarField(g, c.theta_bar), velocity(bq), t};
    out.U_eps += a.grad_Phi();
    for (std::size_t k = 0; k < g.size(); ++k) {
        out.r_eps[k] += eps * rt.R[k];
        out.Theta_eps[k] += eps * rt.T[k];
        if (!(out.r_eps[k] > 0.0) || !(out.Theta_eps[k] > 0.0)) {
            std::ostringstream os;
            os << "eps = " << eps << " too large: composite (r, Theta) = (" << out.r_eps[k] << ", " << out.Theta_eps[k]
               << ") at cell " << k;
            throw EpsTooLargeError(os.str());
        }
    }
    return out;
}

/// Midpoint quadrature of the relative entropy density, optionally on a window.
inline double relative_entropy_functional(const FluidState& s, const TestFunctionTriple& tf, const GasModel& model, double eps,
                                          const std::optional<Window>& window = std::nullopt) {
    const Grid& g = s.grid();
    require_same_grid(g, tf.r_eps.grid, "state/test functions");
    const auto mask = window_mask(g, window);
    double sum = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!mask[k]) continue;
        const LocalState x{s.rho[k], s.theta[k], {s.u.x[k], s.u.y[k]}};
        const RefState ref{tf.r_eps[k], tf.Theta_eps[k], {tf.U_eps.x[k], tf.U_eps.y[k]}};
        sum += relative_entropy_density(model, x, ref, eps);
    }
    return sum * g.cell_volume();
}

/// Split by the indicator of rho_bar/2 < rho < 2 rho_bar, theta_bar/2 < theta < 2 theta_bar.
struct EssResSplit {
    std::vector<char> ess_mask;
    ScalarField rho_ess, rho_res;
    ScalarField theta_ess, theta_res;
    VectorField u_ess, u_res;
    double residual_volume = 0.0;
};

inline EssResSplit ess_res_split(const FluidState& s, double rho_bar, double theta_bar) {
    const Grid& g = s.grid();
    EssResSplit out{std::vector<char>(g.size(), 0), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), VectorField(g),
                    VectorField(g), 0.0};
    std::size_t nres = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const bool ess = s.rho[k] > 0.5 * rho_bar && s.rho[k] < 2.0 * rho_bar && s.theta[k] > 0.5 * theta_bar &&
                         s.theta[k] < 2.0 * theta_bar;
        out.ess_mask[k] = ess;
        auto& r = ess ? out.rho_ess : out.rho_res;
        auto& t = ess ? out.theta_ess : out.theta_res;
        auto& u = ess ? out.u_ess : out.u_res;
        r[k] = s.rho[k];
        t[k] = s.theta[k];
        u.x[k] = s.u.x[k];
        u.y[k] = s.u.y[k];
        nres += !ess;
    }
    out.residual_volume = double(nres) * g.cell_volume();
    return out;
}

/// Least squares of log(value) against log(eps). Values that vanish at the
/// smallest eps (and only there) give an infinite order.
struct OrderFit {
    double order = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double r2 = std::numeric_limits<double>::quiet_NaN();
    bool infinite = false;
    bool all_zero = false;
    int points = 0;

    bool at_least(double p) const { return infinite || (std::isfinite(order) && order >= p); }
};

inline OrderFit fit_order(const std::vector<double>& eps, const std::vector<double>& values) {
    if (eps.size() != values.size()) throw PreconditionError("order fit needs matching eps and value lists");
    OrderFit f;
    double eps_zero_max = -1.0, eps_pos_min = std::numeric_limits<double>::infinity();
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        if (!(eps[k] > 0.0) || !std::isfinite(values[k]) || values[k] < 0.0) return f;
        if (values[k] == 0.0) {
            eps_zero_max = std::max(eps_zero_max, eps[k]);
            continue;
        }
        eps_pos_min = std::min(eps_pos_min, eps[k]);
        lx.push_back(std::log(eps[k]));
        ly.push_back(std::log(values[k]));
    }
    f.points = int(lx.size());
    if (eps_zero_max > 0.0) {
        if (lx.empty()) f.all_zero = f.infinite = true;
        else if (eps_zero_max < eps_pos_min) f.infinite = true;
        if (f.infinite) f.order = std::numeric_limits<double>::infinity();
        return f;
    }
    if (lx.size() < 2) return f;
    const double n = double(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        mx += lx[k] / n;
        my += ly[k] / n;
    }
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
        syy += (ly[k] - my) * (ly[k] - my);
    }
    if (!(sxx > 0.0)) return f;
    f.order = sxy / sxx;
    f.intercept = my - f.order * mx;
    f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

// ---------------------------------------------------------------------------
// Sweep

struct DataPreset {
    std::string kind = "ill_prepared";   // or "well_prepared"
    double cx = 0.0, cy = 0.0;
    double theta_amp = 8.0;   // theta1 bump amplitude
    double width = 0.7;
    double imbalance = 0.0;   // 0: rho1 balances theta1 in pressure
    double swirl = 0.3;       // solenoidal part of u0
    double gradient = 0.3;    // gradient part of u0 (ill-prepared only)
    double flow_width = 1.0;
    double noise = 0.0;       // amplitude of a seeded solenoidal perturbation
};

struct SweepConfig {
    int n = 256;
    double length = 20.0;
    std::string model = "default";
    double radiation = 0.1;
    double a_exp_visc = 1.0;
    double b_exp_heat = 1.0;
    std::vector<PointMass> masses{{0.0, -25.0, 75.0}};
    DataPreset data;
    double window_half = 1.5;
    double horizon = 0.8;
    int samples = 17;
    double measure_from = 0.1;   // fraction of the horizon before the late-time norms start
    std::vector<double> eps_list{0.2, 0.1, 0.05};
    std::vector<double> eta_list{0.25};
    double acoustic_cfl = 0.5;    // dt <= acoustic_cfl eps h / c
    double advective_cfl = 0.4;
    double sponge_width = 3.0;
    double sponge_rate = 5.0;    // divided by eps, so it tracks the acoustic frequency
    std::uint64_t seed = 1;
    int checkpoint_every = 0;    // samples between field checkpoints; 0 disables

    void validate() const {
        if (n < 16) throw ConfigError("grid needs at least 16 cells per axis");
        if (!(length > 0.0)) throw ConfigError("box length must be positive");
        if (model != "default" && model != "ideal") throw ConfigError("unknown model '" + model + "'");
        if (data.kind != "ill_prepared" && data.kind != "well_prepared") throw ConfigError("unknown data preset '" + data.kind + "'");
        if (!(window_half > 0.0 && window_half < 0.5 * length)) throw ConfigError("window must lie inside the box");
        if (!(horizon > 0.0) || samples < 2) throw ConfigError("need a positive horizon and at least two samples");
        if (!(measure_from >= 0.0 && measure_from < 1.0)) throw ConfigError("measure_from must lie in [0, 1)");
        if (eps_list.empty() || eta_list.empty()) throw ConfigError("eps and eta lists must be non-empty");
        for (double e : eps_list)
            if (!(e > 0.0 && e < 1.0)) throw ConfigError("eps values must lie in (0, 1)");
        for (double e : eta_list)
            if (!(e > 0.0 && e < 1.0)) throw ConfigError("eta values must lie in (0, 1)");
        if (!(acoustic_cfl > 0.0) || !(advective_cfl > 0.0)) throw ConfigError("CFL numbers must be positive");
        if (sponge_width < 0.0 || sponge_rate < 0.0) throw ConfigError("sponge parameters must be non-negative");
        if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
        ScalingParams sc;
        sc.a_exp_visc = a_exp_visc;
        sc.b_exp_heat = b_exp_heat;
        try {
            sc.validate();
        } catch (const PreconditionError& e) {
            throw ConfigError(e.what());
        }
    }

    Grid grid() const { return Grid::make_2d(n, n, length, length, Boundary::NeumannBox, -0.5 * length, -0.5 * length); }
    Window window() const {
        return {data.cx - window_half, data.cx + window_half, data.cy - window_half, data.cy + window_half};
    }
    GasModel gas() const { return model == "ideal" ? GasModel::ideal(radiation) : GasModel::standard(radiation); }
};

/// rho1, theta1, u0 of the preset on g.
inline PrimitiveInitialData sweep_initial_data(const SweepConfig& cfg, const Grid& g, const LinearizationCoefficients& c) {
    const auto& d = cfg.data;
    const double w = d.width, wf = d.flow_width;
    auto bump = [&](double x, double y, double s) {
        const double dx = x - d.cx, dy = y - d.cy;
        return std::exp(-(dx * dx + dy * dy) / (s * s));
    };
    const bool ill = d.kind == "ill_prepared";
    PrimitiveInitialData out{ScalarField(g), ScalarField(g), VectorField(g)};
    if (ill) {
        out.theta1_0 = sample(g, [&](double x, double y) { return d.theta_amp * bump(x, y, w); });
        out.rho1_0 = out.theta1_0;
        out.rho1_0 *= -(c.beta / c.alpha) * (1.0 - d.imbalance);
    }
    // psi = swirl wf b(x), phi = gradient wf b(x); u = (d_y psi, -d_x psi) + grad phi.
    const double gs = ill ? d.gradient : 0.0;
    out.u0 = sample_vector(
        g,
        [&](double x, double y) {
            const double b = bump(x, y, wf), dx = x - d.cx, dy = y - d.cy;
            return d.swirl * wf * (-2.0 * dy / (wf * wf)) * b + gs * wf * (-2.0 * dx / (wf * wf)) * b;
        },
        [&](double x, double y) {
            const double b = bump(x, y, wf), dx = x - d.cx, dy = y - d.cy;
            return -d.swirl * wf * (-2.0 * dx / (wf * wf)) * b + gs * wf * (-2.0 * dy / (wf * wf)) * b;
        });
    if (d.noise > 0.0) {
        // Solenoidal: curl of psi = sum a_m sin(k_m . x + phi_m) exp(-|x|^2 / 4).
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        struct Mode {
            double a, kx, ky, ph;
        };
        std::vector<Mode> modes(6);
        for (auto& m : modes) m = {U(rng), 3.0 * U(rng), 3.0 * U(rng), std::numbers::pi * U(rng)};
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double x = g.x(i) - d.cx, y = g.y(j) - d.cy;
                const double env = std::exp(-(x * x + y * y) / 4.0);
                double px = 0.0, py = 0.0;
                for (const auto& m : modes) {
                    const double ph = m.kx * x + m.ky * y + m.ph;
                    px += m.a * (m.kx * std::cos(ph) - 0.5 * x * std::sin(ph)) * env;
                    py += m.a * (m.ky * std::cos(ph) - 0.5 * y * std::sin(ph)) * env;
                }
                const auto k = g.index(i, j);
                out.u0.x[k] += d.noise * py;
                out.u0.y[k] -= d.noise * px;
            }
    }
    return out;
}

struct SweepSample {
    double time = 0.0;
    double relative_entropy = 0.0;
    double rho_norm = 0.0;          // |rho - rho_bar|_{L^{5/3}(window)}
    double momentum_norm = 0.0;     // |sqrt(rho) u - sqrt(rho_bar) v|_{L^2(window)}
    double temperature_norm = 0.0;  // |(theta - theta_bar)/eps - theta_B|_{L^2(window)}
    double residual_volume = 0.0;
    double min_production = 0.0;
    bool blowup = false;
};

struct SweepRecord {
    double eps = 0.0, eta = 0.0;
    int n = 0;
    bool ok = false;
    std::string message;
    int steps = 0;
    std::vector<SweepSample> samples;

    double max_relative_entropy() const {
        double m = 0.0;
        for (const auto& s : samples) m = std::max(m, s.relative_entropy);
        return m;
    }
    double max_rho_norm() const {
        double m = 0.0;
        for (const auto& s : samples) m = std::max(m, s.rho_norm);
        return m;
    }
    double max_residual_volume() const {
        double m = 0.0;
        for (const auto& s : samples) m = std::max(m, s.residual_volume);
        return m;
    }
    double min_production() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& s : samples) m = std::min(m, s.min_production);
        return m;
    }
    /// Sup over samples with t >= t0.
    double late(double t0, double SweepSample::*field) const {
        double m = 0.0;
        for (const auto& s : samples)
            if (s.time >= t0 - 1e-12) m = std::max(m, s.*field);
        return m;
    }
};

struct SweepFit {
    double eta = 0.0;
    std::vector<double> eps;
    OrderFit rho, momentum, temperature, residual, relative_entropy;
    bool energy_nonincreasing = false;
    bool momentum_decreasing = false;
    bool temperature_decreasing = false;
};

struct SweepReport {
    std::vector<SweepRecord> records;
    std::vector<SweepFit> fits;
    double late_from = 0.0;
    Window window{0.0, 0.0};
};

/// Called after every measurement with the record so far and the current states.
using SampleObserver = std::function<void(const SweepRecord&, const FluidState&, const BoussinesqState&)>;

/// Everything one (eps, eta) run of a config needs, built from the config alone.
struct SweepCase {
    Grid grid;
    GasModel model;
    TransportLaws laws;
    ScalingParams scaling;
    Potential pot;
    LinearizationCoefficients coeffs;
    EquilibriumProfile eq;
    PrimitiveInitialData data;
    NsfParams nsf;
    FluidState fluid;
    BoussinesqState boussinesq;
    AcousticState acoustic;
    TransportState transport;
};

inline SweepCase make_sweep_case(const SweepConfig& cfg, double eps, double eta) {
    const Grid g = cfg.grid();
    const auto model = cfg.gas();
    ScalingParams sc;
    sc.eps = eps;
    sc.a_exp_visc = cfg.a_exp_visc;
    sc.b_exp_heat = cfg.b_exp_heat;
    auto pot = potential(MassDistribution{cfg.masses}, g);
    const auto c = linearize(model, 1.0, 1.0);
    auto eq = solve_equilibrium(model, c.rho_bar, c.theta_bar, eps, pot);
    auto data = sweep_initial_data(cfg, g, c);
    auto s = build_initial_state(model, eq, data);
    const auto bd = boussinesq_initial_data(data.rho1_0, data.theta1_0, data.u0, c);
    auto bq = make_boussinesq_state(bd.v0, bd.theta0, c, pot);
    const Regularizer reg(eta, cfg.data.cx, cfg.data.cy);
    const auto ad = regularized_acoustic_data(data.rho1_0, data.theta1_0, data.u0, reg);
    auto ac = acoustic_init(ad.R0, ad.T0, ad.Phi0, c, eps);
    ScalarField sigma0(g);
    for (std::size_t k = 0; k < g.size(); ++k) sigma0[k] = c.delta * ad.T0[k] - c.beta * ad.R0[k];
    TransportState tr{sigma0, c, pot.F, 0.0, 0};
    return {g,  model, TransportLaws::standard(), sc, std::move(pot), c, std::move(eq), std::move(data),
            NsfParams{cfg.sponge_width, cfg.sponge_rate / eps, 1e-12}, std::move(s), std::move(bq), std::move(ac), std::move(tr)};
}

namespace detail {

inline SweepRecord run_sweep_case(const SweepConfig& cfg, double eps, double eta, const SampleObserver& observe = {}) {
    SweepRecord rec;
    rec.eps = eps;
    rec.eta = eta;
    rec.n = cfg.n;
    try {
        auto cs = make_sweep_case(cfg, eps, eta);
        const Grid& g = cs.grid;
        const auto& model = cs.model;
        const auto& laws = cs.laws;
        const auto& sc = cs.scaling;
        const auto& c = cs.coeffs;
        const auto& eq = cs.eq;
        const auto& np = cs.nsf;
        const auto& ac = cs.acoustic;
        const auto win = cfg.window();
        auto& s = cs.fluid;
        auto& bq = cs.boussinesq;
        auto& tr = cs.transport;

        const double h = std::min(g.hx(), g.hy());
        const double dt_ac = cfg.acoustic_cfl * eps * h / std::sqrt(c.omega);

        auto measure = [&](double t) {
            SweepSample smp;
            smp.time = t;
            const auto tf = build_test_functions(bq, ac, tr, eq, c, eps, t);
            smp.relative_entropy = relative_entropy_functional(s, tf, model, eps, win);
            ScalarField drho = s.rho;
            for (auto& v : drho.values) v -= c.rho_bar;
            smp.rho_norm = norm(drho, NormKind::L53, win);
            const auto v = velocity(bq);
            VectorField dm(g);
            const auto thB = temperature(bq);
            ScalarField dth(g);
            for (std::size_t k = 0; k < g.size(); ++k) {
                const double sr = std::sqrt(s.rho[k]), sb = std::sqrt(c.rho_bar);
                dm.x[k] = sr * s.u.x[k] - sb * v.x[k];
                dm.y[k] = sr * s.u.y[k] - sb * v.y[k];
                dth[k] = (s.theta[k] - c.theta_bar) / eps - thB[k];
            }
            smp.momentum_norm = norm(dm, NormKind::L2, win);
            smp.temperature_norm = norm(dth, NormKind::L2, win);
            smp.residual_volume = ess_res_split(s, c.rho_bar, c.theta_bar).residual_volume;
            const auto prod = entropy_production(s, laws, sc);
            smp.min_production = *std::min_element(prod.values.begin(), prod.values.end());
            smp.blowup = blowup_proxy(bq);
            rec.samples.push_back(smp);
            if (observe) observe(rec, s, bq);
            if (smp.blowup) throw SolverError("Boussinesq blow-up proxy triggered before the horizon");
        };

        measure(0.0);
        double t = 0.0;
        for (int m = 1; m < cfg.samples; ++m) {
            const double t_next = cfg.horizon * m / (cfg.samples - 1);
            while (t < t_next - 1e-12) {
                double dt = std::min({dt_ac, nsf_stable_dt(s, laws, sc, cfg.advective_cfl), t_next - t});
                const double cfl_b = boussinesq_cfl(bq, dt);
                if (cfl_b > 0.4) dt *= 0.4 / cfl_b;
                // Land exactly on the sample time.
                const int left = int(std::ceil((t_next - t) / dt - 1e-9));
                dt = (t_next - t) / left;
                const auto v0 = velocity(bq);
                auto bq1 = boussinesq_step(bq, dt);
                VectorField U = velocity(bq1);
                U += v0;
                U *= 0.5;
                U += acoustic_propagate(ac, t + 0.5 * dt).grad_Phi();
                tr = transport_step(tr, U, dt);
                s = nsf_step(s, model, laws, sc, eq, dt, np);
                bq = std::move(bq1);
                t = left == 1 ? t_next : t + dt;
                bq.time = tr.time = s.time = t;
                ++rec.steps;
            }
            measure(t);
        }
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.message = e.what();
    }
    return rec;
}

inline bool nonincreasing(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (!(v[k] <= v[k - 1])) return false;
    return true;
}

inline bool decreasing(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (!(v[k] < v[k - 1])) return false;
    return true;
}

}  // namespace detail

/// Fits over the successful records of each eta, eps in decreasing order.
inline std::vector<SweepFit> fit_sweep(const std::vector<SweepRecord>& records, const std::vector<double>& etas, double late_from) {
    std::vector<SweepFit> fits;
    for (double eta : etas) {
        std::vector<const SweepRecord*> rs;
        for (const auto& r : records)
            if (r.eta == eta && r.ok) rs.push_back(&r);
        std::sort(rs.begin(), rs.end(), [](auto* a, auto* b) { return a->eps > b->eps; });
        SweepFit f;
        f.eta = eta;
        std::vector<double> E, rho, mom, tem, res;
        for (auto* r : rs) {
            f.eps.push_back(r->eps);
            E.push_back(r->max_relative_entropy());
            rho.push_back(r->max_rho_norm());
            mom.push_back(r->late(late_from, &SweepSample::momentum_norm));
            tem.push_back(r->late(late_from, &SweepSample::temperature_norm));
            res.push_back(r->max_residual_volume());
        }
        f.rho = fit_order(f.eps, rho);
        f.momentum = fit_order(f.eps, mom);
        f.temperature = fit_order(f.eps, tem);
        f.residual = fit_order(f.eps, res);
        f.relative_entropy = fit_order(f.eps, E);
        const bool enough = rs.size() >= 2;
        f.energy_nonincreasing = enough && detail::nonincreasing(E);
        f.momentum_decreasing = enough && detail::decreasing(mom);
        f.temperature_decreasing = enough && detail::decreasing(tem);
        fits.push_back(std::move(f));
    }
    return fits;
}

/// Runs every (eps, eta) pair in isolation; failures are recorded and the sweep continues.
inline SweepReport convergence_sweep(const SweepConfig& cfg, std::ostream* log = nullptr, const SampleObserver& observe = {}) {
    cfg.validate();
    SweepReport rep;
    rep.late_from = cfg.measure_from * cfg.horizon;
    rep.window = cfg.window();
    for (double eta : cfg.eta_list)
        for (double eps : cfg.eps_list) {
            if (log) *log << "sweep: eps = " << eps << ", eta = " << eta << ", n = " << cfg.n << std::endl;
            rep.records.push_back(detail::run_sweep_case(cfg, eps, eta, observe));
            const auto& r = rep.records.back();
            if (log) *log << "  " << (r.ok ? "ok" : "failed: " + r.message) << " (" << r.steps << " steps)" << std::endl;
        }
    rep.fits = fit_sweep(rep.records, cfg.eta_list, rep.late_from);
    return rep;
}

inline CsvTable sweep_series_table(const SweepReport& rep) {
    CsvTable t{{"eps", "eta", "n", "time", "relative_entropy", "rho_norm", "momentum_norm", "temperature_norm", "residual_volume",
                "min_production"},
               {}};
    for (const auto& r : rep.records)
        for (const auto& s : r.samples)
            t.add_row({r.eps, r.eta, double(r.n), s.time, s.relative_entropy, s.rho_norm, s.momentum_norm, s.temperature_norm,
                       s.residual_volume, s.min_production});
    return t;
}

inline CsvTable sweep_summary_table(const SweepReport& rep) {
    CsvTable t{{"eps", "eta", "n", "ok", "steps", "max_relative_entropy", "max_rho_norm", "late_momentum_norm",
                "late_temperature_norm", "max_residual_volume", "min_production"},
               {}};
    for (const auto& r : rep.records)
        t.add_row({r.eps, r.eta, double(r.n), r.ok ? 1.0 : 0.0, double(r.steps), r.max_relative_entropy(), r.max_rho_norm(),
                   r.late(rep.late_from, &SweepSample::momentum_norm), r.late(rep.late_from, &SweepSample::temperature_norm),
                   r.max_residual_volume(), r.samples.empty() ? 0.0 : r.min_production()});
    return t;
}

inline void write_orders_csv(std::ostream& os, const SweepReport& rep) {
    os.precision(8);
    os << "eta,quantity,order,r2,points,infinite\n";
    for (const auto& f : rep.fits) {
        const std::pair<const char*, const OrderFit*> rows[] = {{"relative_entropy", &f.relative_entropy}, {"rho_norm", &f.rho},
                                                               {"momentum_norm", &f.momentum}, {"temperature_norm", &f.temperature},
                                                               {"residual_volume", &f.residual}};
        for (const auto& [name, fit] : rows)
            os << f.eta << ',' << name << ',' << fit->order << ',' << fit->r2 << ',' << fit->points << ',' << (fit->infinite ? 1 : 0)
               << '\n';
    }
}

}  // namespace lowmach
