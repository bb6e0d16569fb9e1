#pragma once

// Constitutive closure of the heat-conducting gas: pressure/energy/entropy
// built from a molecular profile P(Z), Z = rho / theta^{3/2}, plus black-body
// radiation, the structural hypotheses on P and S, linearization about a
// reference state and the relative-entropy (Bregman) integrand.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lowmach/error.hpp"

namespace lowmach {

using Profile = std::function<double(double)>;

struct GasModel {
    std::string name;
    Profile P;    // molecular pressure profile, P(0) = 0
    Profile dP;
    Profile d2P;
    Profile S;    // molecular entropy profile, defined for Z > 0
    Profile dS;
    double radiation_const = 0.0;
    double entropy_offset = 0.0;

    /// P(Z) = Z + Z^{5/3}, S(Z) = -log Z. The ratio (5/3 P - P' Z)/Z is
    /// identically 2/3, so S' = -1/Z solves the entropy relation exactly.
    static GasModel standard(double radiation = 0.1, double offset = 0.0) {
        GasModel m;
        m.name = "standard";
        m.P = [](double z) { return z + std::pow(z, 5.0 / 3.0); };
        m.dP = [](double z) { return 1.0 + (5.0 / 3.0) * std::pow(z, 2.0 / 3.0); };
        m.d2P = [](double z) { return z > 0.0 ? (10.0 / 9.0) * std::pow(z, -1.0 / 3.0) : std::numeric_limits<double>::infinity(); };
        m.S = [](double z) { return -std::log(z); };
        m.dS = [](double z) { return -1.0 / z; };
        m.radiation_const = radiation;
        m.entropy_offset = offset;
        return m;
    }

    /// Monoatomic ideal gas P(Z) = Z; violates the degenerate-limit growth hypothesis.
    static GasModel ideal(double radiation = 0.1) {
        GasModel m;
        m.name = "ideal";
        m.P = [](double z) { return z; };
        m.dP = [](double) { return 1.0; };
        m.d2P = [](double) { return 0.0; };
        m.S = [](double z) { return -std::log(z); };
        m.dS = [](double z) { return -1.0 / z; };
        m.radiation_const = radiation;
        return m;
    }
};

struct TransportLaws {
    Profile mu;
    Profile eta;
    Profile kappa;
    double mu_lower = 1.0;
    double kappa_lower = 1.0;
    double kappa_upper = 1.0;

    /// mu = 1 + theta, eta = 0, kappa = 1 + theta^3.
    static TransportLaws standard() {
        TransportLaws t;
        t.mu = [](double th) { return 1.0 + th; };
        t.eta = [](double) { return 0.0; };
        t.kappa = [](double th) { return 1.0 + th * th * th; };
        return t;
    }
};

struct ThermoEval {
    double p = 0.0;
    double e = 0.0;
    double s = 0.0;
    double dp_drho = 0.0;
    double dp_dtheta = 0.0;
    double de_drho = 0.0;
    double de_dtheta = 0.0;
    double ds_drho = 0.0;
    double ds_dtheta = 0.0;
};

struct LinearizationCoefficients {
    double rho_bar = 1.0;
    double theta_bar = 1.0;
    double alpha = 0.0;   // (1/rho) dp/drho
    double beta = 0.0;    // (1/rho) dp/dtheta
    double delta = 0.0;   // rho ds/dtheta
    double omega = 0.0;   // rho (alpha + beta^2/delta)
    double a_exp = 0.0;   // thermal expansion (1/rho) beta/alpha
    double c_p = 0.0;
    double c_v = 0.0;
    double ds_drho = 0.0;
    double ds_dtheta = 0.0;
};

namespace detail {

inline void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << what << " must be positive and finite, got " << v;
        throw DomainError(os.str());
    }
}

}  // namespace detail

inline ThermoEval eval_state(const GasModel& m, double rho, double theta) {
    detail::require_positive(rho, "density");
    detail::require_positive(theta, "temperature");
    const double a = m.radiation_const;
    const double t32 = std::pow(theta, 1.5);
    const double t52 = t32 * theta;
    const double z = rho / t32;
    const double P = m.P(z);
    const double dP = m.dP(z);
    const double dS = m.dS(z);
    const double th3 = theta * theta * theta;
    const double th4 = th3 * theta;

    ThermoEval r;
    r.p = t52 * P + (a / 3.0) * th4;
    r.e = 1.5 * t52 * P / rho + a * th4 / rho;
    r.s = m.S(z) + (4.0 * a / 3.0) * th3 / rho + m.entropy_offset;

    r.dp_drho = theta * dP;
    r.dp_dtheta = 2.5 * t32 * P - 1.5 * t32 * z * dP + (4.0 * a / 3.0) * th3;
    r.de_drho = 1.5 * t52 * (z * dP - P) / (rho * rho) - a * th4 / (rho * rho);
    r.de_dtheta = 1.5 * (2.5 * t32 * P - 1.5 * t32 * z * dP) / rho + 4.0 * a * th3 / rho;
    r.ds_drho = dS / t32 - (4.0 * a / 3.0) * th3 / (rho * rho);
    r.ds_dtheta = -1.5 * dS * z / theta + 4.0 * a * theta * theta / rho;
    return r;
}

/// Internal energy per unit volume; finite at rho = 0.
inline double energy_density(const GasModel& m, double rho, double theta) {
    detail::require_positive(theta, "temperature");
    if (rho < 0.0) throw DomainError("density must be non-negative");
    const double t32 = std::pow(theta, 1.5);
    return 1.5 * t32 * theta * m.P(rho / t32) + m.radiation_const * std::pow(theta, 4);
}

/// Entropy per unit volume; uses rho S(Z) -> 0 as rho -> 0.
inline double entropy_density(const GasModel& m, double rho, double theta) {
    detail::require_positive(theta, "temperature");
    if (rho < 0.0) throw DomainError("density must be non-negative");
    const double rad = (4.0 * m.radiation_const / 3.0) * theta * theta * theta;
    if (rho == 0.0) return rad;
    return rho * (m.S(rho / std::pow(theta, 1.5)) + m.entropy_offset) + rad;
}

/// Sound speed squared at fixed entropy: dp/drho + theta (dp/dtheta)^2 / (rho^2 de/dtheta).
inline double adiabatic_sound_speed2(const GasModel& m, double rho, double theta) {
    const auto t = eval_state(m, rho, theta);
    return t.dp_drho + theta * t.dp_dtheta * t.dp_dtheta / (rho * rho * t.de_dtheta);
}

/// Temperature from (rho, e) by safeguarded Newton on e(rho, .) - e; e is
/// strictly increasing in theta whenever c_v > 0.
inline double temperature_from_energy(const GasModel& m, double rho, double e, double guess = 1.0,
                                      double tol = 1e-14, int max_iter = 100) {
    detail::require_positive(rho, "density");
    detail::require_positive(e, "specific internal energy");
    if (guess > 0.0) {
        double th = guess;
        for (int it = 0; it < 8; ++it) {
            const auto t = eval_state(m, rho, th);
            const double next = th - (t.e - e) / t.de_dtheta;
            if (!(next > 0.5 * th && next < 2.0 * th)) break;
            if (std::abs(next - th) <= tol * th) return next;
            th = next;
        }
    }
    double lo = 0.0, hi = std::max(1.0, guess);
    while (eval_state(m, rho, hi).e < e) {
        hi *= 2.0;
        if (hi > 1e12) throw SolverError("temperature inversion: energy out of range");
    }
    double th = (guess > lo && guess < hi) ? guess : 0.5 * hi;
    for (int it = 0; it < max_iter; ++it) {
        const auto t = eval_state(m, rho, th);
        const double f = t.e - e;
        if (f > 0.0) hi = th; else lo = th;
        double next = th - f / t.de_dtheta;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - th) <= tol * th) return next;
        th = next;
    }
    throw SolverError("temperature inversion did not converge");
}

// ---------------------------------------------------------------- hypotheses

struct HypothesisResult {
    std::string name;
    bool passed = false;
    bool informational = false;
    double worst_margin = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::string model;
    std::vector<HypothesisResult> results;

    bool all_passed() const {
        return std::all_of(results.begin(), results.end(),
                           [](const HypothesisResult& r) { return r.informational || r.passed; });
    }
    const HypothesisResult& at(const std::string& name) const {
        for (const auto& r : results)
            if (r.name == name) return r;
        throw PreconditionError("no hypothesis named " + name);
    }
    std::string to_text() const {
        std::ostringstream os;
        os << "model: " << model << "\n";
        for (const auto& r : results) {
            os << (r.informational ? "INFO " : (r.passed ? "PASS " : "FAIL ")) << r.name
               << "  margin=" << r.worst_margin << "  " << r.detail << "\n";
        }
        os << "overall: " << (all_passed() ? "PASS" : "FAIL") << "\n";
        return os.str();
    }
};

/// Logarithmic sample grid over [lo, hi] with n points.
inline std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i)
        z[i] = lo * std::pow(hi / lo, double(i) / double(n - 1));
    return z;
}

inline ValidationReport check_hypotheses(const GasModel& m, const std::vector<double>& z_grid) {
    ValidationReport rep;
    rep.model = m.name;
    if (z_grid.size() < 3) throw PreconditionError("z_grid needs at least three points");

    {  // P(0) = 0, P' > 0 on [0, inf)
        HypothesisResult h{"monotone_pressure", true, false, std::numeric_limits<double>::infinity(), ""};
        const double p0 = m.P(0.0);
        double worst = m.dP(0.0);
        int bad = m.dP(0.0) > 0.0 ? 0 : 1;
        for (double z : z_grid) {
            const double d = m.dP(z);
            worst = std::min(worst, d);
            if (!(d > 0.0)) ++bad;
        }
        h.worst_margin = worst;
        h.passed = (p0 == 0.0) && bad == 0;
        std::ostringstream os;
        os << "P(0)=" << p0 << " min P'=" << worst << " violations=" << bad;
        h.detail = os.str();
        rep.results.push_back(h);
    }
    {  // P(Z)/Z^{5/3} -> P_inf > 0
        HypothesisResult h{"degenerate_limit", false, false, 0.0, ""};
        const double zmax = *std::max_element(z_grid.begin(), z_grid.end());
        const double r1 = m.P(zmax) / std::pow(zmax, 5.0 / 3.0);
        const double r0 = m.P(zmax / 10.0) / std::pow(zmax / 10.0, 5.0 / 3.0);
        const double drift = std::abs(r1 - r0) / std::max(std::abs(r1), 1e-300);
        h.worst_margin = r1;
        h.passed = r1 > 0.0 && drift < 0.05;
        std::ostringstream os;
        os << "P_inf~" << r1 << " relative drift over last decade=" << drift;
        h.detail = os.str();
        rep.results.push_back(h);
    }
    {  // 0 < (5/3 P - P' Z)/Z < c
        HypothesisResult h{"bounded_specific_heat", true, false, 0.0, ""};
        double lo = std::numeric_limits<double>::infinity(), sup = -lo;
        for (double z : z_grid) {
            if (!(z > 0.0)) continue;
            const double q = (5.0 / 3.0 * m.P(z) - m.dP(z) * z) / z;
            lo = std::min(lo, q);
            sup = std::max(sup, q);
        }
        h.worst_margin = lo;
        h.passed = lo > 0.0 && std::isfinite(sup);
        std::ostringstream os;
        os << "ratio range [" << lo << ", " << sup << "] (observed supremum reported as c)";
        h.detail = os.str();
        rep.results.push_back(h);
    }
    {  // S' = -3/2 (5/3 P - P' Z)/Z^2, also checked against differences of S
        HypothesisResult h{"entropy_relation", true, false, 0.0, ""};
        double worst = 0.0, worst_fd = 0.0;
        for (double z : z_grid) {
            if (!(z > 0.0)) continue;
            const double target = -1.5 * (5.0 / 3.0 * m.P(z) - m.dP(z) * z) / (z * z);
            const double scale = std::max(1.0, std::abs(target));
            worst = std::max(worst, std::abs(m.dS(z) - target) / scale);
            const double hz = 1e-5 * z;
            const double fd = (m.S(z + hz) - m.S(z - hz)) / (2.0 * hz);
            worst_fd = std::max(worst_fd, std::abs(fd - target) / scale);
        }
        h.worst_margin = std::max(worst, worst_fd);
        h.passed = worst < 1e-10 && worst_fd < 1e-6;
        std::ostringstream os;
        os << "max rel residual analytic=" << worst << " finite-difference=" << worst_fd;
        h.detail = os.str();
        rep.results.push_back(h);
    }
    {  // supplied derivatives of P against central differences
        HypothesisResult h{"derivative_consistency", true, false, 0.0, ""};
        double worst = 0.0;
        for (double z : z_grid) {
            if (!(z > 0.0)) continue;
            const double hz = 1e-5 * z;
            const double fd1 = (m.P(z + hz) - m.P(z - hz)) / (2.0 * hz);
            const double fd2 = (m.dP(z + hz) - m.dP(z - hz)) / (2.0 * hz);
            worst = std::max(worst, std::abs(fd1 - m.dP(z)) / std::max(1.0, std::abs(m.dP(z))));
            worst = std::max(worst, std::abs(fd2 - m.d2P(z)) / std::max(1.0, std::abs(m.d2P(z))));
        }
        h.worst_margin = worst;
        h.passed = worst < 1e-6;
        h.detail = "max rel error of P', P'' vs central differences";
        rep.results.push_back(h);
    }
    {  // S(inf) = 0 is a normalization; only reported.
        HypothesisResult h{"entropy_normalization", true, true, 0.0, ""};
        const double zmax = *std::max_element(z_grid.begin(), z_grid.end());
        h.worst_margin = m.S(zmax);
        std::ostringstream os;
        os << "S(" << zmax << ")=" << m.S(zmax) << " (offset-invariant quantities only)";
        h.detail = os.str();
        rep.results.push_back(h);
    }
    return rep;
}

inline ValidationReport check_transport(const TransportLaws& t, const std::vector<double>& theta_grid) {
    ValidationReport rep;
    rep.model = "transport";
    HypothesisResult mu{"viscosity_lower_bound", true, false, std::numeric_limits<double>::infinity(), ""};
    HypothesisResult kap{"conductivity_bounds", true, false, std::numeric_limits<double>::infinity(), ""};
    for (double th : theta_grid) {
        const double m1 = t.mu(th) - t.mu_lower * (1.0 + th);
        mu.worst_margin = std::min(mu.worst_margin, std::min(m1, t.eta(th)));
        if (m1 < 0.0 || t.eta(th) < 0.0) mu.passed = false;
        const double k = t.kappa(th), w = 1.0 + th * th * th;
        const double m2 = std::min(k - t.kappa_lower * w, t.kappa_upper * w - k);
        kap.worst_margin = std::min(kap.worst_margin, m2);
        if (m2 < -1e-12 * w) kap.passed = false;
    }
    rep.results = {mu, kap};
    return rep;
}

// ------------------------------------------------------------ linearization

inline LinearizationCoefficients linearize(const GasModel& m, double rho_bar, double theta_bar) {
    const auto t = eval_state(m, rho_bar, theta_bar);
    LinearizationCoefficients c;
    c.rho_bar = rho_bar;
    c.theta_bar = theta_bar;
    c.alpha = t.dp_drho / rho_bar;
    c.beta = t.dp_dtheta / rho_bar;
    c.delta = rho_bar * t.ds_dtheta;
    if (!(c.alpha > 0.0) || !(c.delta > 0.0))
        throw ModelError("degenerate linearization: dp/drho and ds/dtheta must be positive");
    c.omega = rho_bar * (c.alpha + c.beta * c.beta / c.delta);
    c.a_exp = c.beta / (c.alpha * rho_bar);
    c.c_p = theta_bar * (c.alpha * c.delta + c.beta * c.beta) / (rho_bar * c.alpha);
    c.c_v = theta_bar * t.ds_dtheta;
    c.ds_drho = t.ds_drho;
    c.ds_dtheta = t.ds_dtheta;
    return c;
}

// ---------------------------------------------------------- free energies

/// H_Theta(rho, theta) = rho (e - Theta s).
inline double ballistic_free_energy(const GasModel& m, double Theta, double rho, double theta) {
    detail::require_positive(Theta, "reference temperature");
    detail::require_positive(rho, "density");
    detail::require_positive(theta, "temperature");
    return energy_density(m, rho, theta) - Theta * entropy_density(m, rho, theta);
}

/// d/drho of H_Theta at (rho, Theta) with theta = Theta.
inline double ballistic_free_energy_drho(const GasModel& m, double rho, double Theta) {
    const auto t = eval_state(m, rho, Theta);
    return t.e - Theta * t.s + rho * (t.de_drho - Theta * t.ds_drho);
}

struct LocalState {
    double rho = 1.0;
    double theta = 1.0;
    std::array<double, 2> u{0.0, 0.0};
};

struct RefState {
    double r = 1.0;
    double Theta = 1.0;
    std::array<double, 2> U{0.0, 0.0};
};

/// Thermodynamic (Bregman) part H(rho,theta) - dH(r,Theta)(rho - r) - H(r,Theta), unscaled.
inline double relative_free_energy(const GasModel& m, double rho, double theta, double r, double Theta) {
    if (rho < 0.0) throw DomainError("density must be non-negative");
    detail::require_positive(theta, "temperature");
    detail::require_positive(r, "reference density");
    detail::require_positive(Theta, "reference temperature");
    const double h = energy_density(m, rho, theta) - Theta * entropy_density(m, rho, theta);
    const double href = energy_density(m, r, Theta) - Theta * entropy_density(m, r, Theta);
    return h - ballistic_free_energy_drho(m, r, Theta) * (rho - r) - href;
}

inline double relative_entropy_density(const GasModel& m, const LocalState& x, const RefState& ref, double eps) {
    detail::require_positive(eps, "Mach scale");
    const double du0 = x.u[0] - ref.U[0], du1 = x.u[1] - ref.U[1];
    return 0.5 * x.rho * (du0 * du0 + du1 * du1) +
           relative_free_energy(m, x.rho, x.theta, ref.r, ref.Theta) / (eps * eps);
}

struct Box2 {
    double rho_lo, rho_hi, theta_lo, theta_hi;
};

/// Infimum over an n x n grid of K of the ratio between the relative free
/// energy and |rho - r|^2 + |theta - Theta|^2.
inline double coercivity_constant(const GasModel& m, double r, double Theta, const Box2& K, int n = 200) {
    if (!(r > K.rho_lo && r < K.rho_hi && Theta > K.theta_lo && Theta < K.theta_hi))
        throw PreconditionError("reference state must lie strictly inside K");
    double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double rho = K.rho_lo + (K.rho_hi - K.rho_lo) * i / double(n - 1);
        for (int j = 0; j < n; ++j) {
            const double th = K.theta_lo + (K.theta_hi - K.theta_lo) * j / double(n - 1);
            const double d2 = (rho - r) * (rho - r) + (th - Theta) * (th - Theta);
            if (d2 < 1e-20) continue;
            inf = std::min(inf, relative_free_energy(m, rho, th, r, Theta) / d2);
        }
    }
    if (!(inf > 0.0)) throw ModelError("non-positive coercivity constant: Gibbs stability violated");
    return inf;
}

}  // namespace lowmach
