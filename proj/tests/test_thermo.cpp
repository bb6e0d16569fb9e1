#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lowmach/thermo.hpp"

using namespace lowmach;

namespace {

// Central differences of eval_state, the independent oracle for every derivative below.
struct FiniteDiff {
    GasModel m;
    double h = 1e-5;
    double dp_drho(double r, double t) const { return (eval_state(m, r + h, t).p - eval_state(m, r - h, t).p) / (2 * h); }
    double dp_dtheta(double r, double t) const { return (eval_state(m, r, t + h).p - eval_state(m, r, t - h).p) / (2 * h); }
    double ds_drho(double r, double t) const { return (eval_state(m, r + h, t).s - eval_state(m, r - h, t).s) / (2 * h); }
    double ds_dtheta(double r, double t) const { return (eval_state(m, r, t + h).s - eval_state(m, r, t - h).s) / (2 * h); }
    double de_drho(double r, double t) const { return (eval_state(m, r + h, t).e - eval_state(m, r - h, t).e) / (2 * h); }
    double de_dtheta(double r, double t) const { return (eval_state(m, r, t + h).e - eval_state(m, r, t - h).e) / (2 * h); }
};

}  // namespace

TEST(EvalState, PressureAtUnitState) {
    const auto t = eval_state(GasModel::standard(0.1), 1.0, 1.0);
    EXPECT_NEAR(t.p, 2.0 + 0.1 / 3.0, 1e-14);
    EXPECT_NEAR(t.e, 3.0 + 0.1, 1e-14);
}

TEST(EvalState, DegenerateLimitAtLowTemperature) {
    const auto m = GasModel::standard(0.0);
    for (double th : {1e-2, 1e-3, 1e-4}) {
        const double p = eval_state(m, 1.0, th).p;
        EXPECT_NEAR(p, 1.0, 2.0 * th) << th;
    }
}

TEST(EvalState, RejectsNonPositiveState) {
    const auto m = GasModel::standard();
    EXPECT_THROW(eval_state(m, 0.0, 1.0), DomainError);
    EXPECT_THROW(eval_state(m, 1.0, -1.0), DomainError);
    EXPECT_THROW(eval_state(m, std::nan(""), 1.0), DomainError);
}

TEST(EvalState, AnalyticDerivativesMatchFiniteDifferences) {
    const FiniteDiff fd{GasModel::standard(0.1)};
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int k = 0; k < 100; ++k) {
        const double r = u(gen), th = u(gen);
        const auto t = eval_state(fd.m, r, th);
        auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
        EXPECT_LT(rel(fd.dp_drho(r, th), t.dp_drho), 1e-6);
        EXPECT_LT(rel(fd.dp_dtheta(r, th), t.dp_dtheta), 1e-6);
        EXPECT_LT(rel(fd.ds_drho(r, th), t.ds_drho), 1e-6);
        EXPECT_LT(rel(fd.ds_dtheta(r, th), t.ds_dtheta), 1e-6);
        EXPECT_LT(rel(fd.de_drho(r, th), t.de_drho), 1e-6);
        EXPECT_LT(rel(fd.de_dtheta(r, th), t.de_dtheta), 1e-6);
    }
}

TEST(EvalState, MaxwellRelationFromFiniteDifferences) {
    const FiniteDiff fd{GasModel::standard(0.1)};
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double r = u(gen), th = u(gen);
        const auto t = eval_state(fd.m, r, th);
        worst = std::max(worst, std::abs(t.ds_drho + t.dp_dtheta / (r * r)));
        const double scale = std::abs(t.dp_dtheta) / (r * r);
        const double fd_res = fd.ds_drho(r, th) + fd.dp_dtheta(r, th) / (r * r);
        EXPECT_LT(std::abs(fd_res) / scale, 1e-6);
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(EvalState, PositivePressureAndEnergy) {
    const auto m = GasModel::standard(0.1);
    for (double r : log_grid(1e-3, 1e3, 13))
        for (double th : log_grid(1e-3, 1e3, 13)) {
            const auto t = eval_state(m, r, th);
            EXPECT_GT(t.p, 0.0);
            EXPECT_GT(t.e, 0.0);
        }
}

TEST(Hypotheses, StandardModelPasses) {
    const auto rep = check_hypotheses(GasModel::standard(), log_grid(1e-4, 1e4, 81));
    EXPECT_TRUE(rep.all_passed()) << rep.to_text();
    EXPECT_NEAR(rep.at("degenerate_limit").worst_margin, 1.0, 1e-2);
    EXPECT_NEAR(rep.at("bounded_specific_heat").worst_margin, 2.0 / 3.0, 1e-12);
    EXPECT_TRUE(rep.at("entropy_normalization").informational);
}

TEST(Hypotheses, IdealGasFailsDegenerateLimit) {
    const auto rep = check_hypotheses(GasModel::ideal(), log_grid(1e-4, 1e4, 81));
    EXPECT_FALSE(rep.at("degenerate_limit").passed);
    EXPECT_TRUE(rep.at("monotone_pressure").passed);
}

TEST(Hypotheses, DecreasingPressureFailsMonotonicity) {
    auto m = GasModel::standard();
    m.name = "negative";
    m.P = [](double z) { return -z; };
    m.dP = [](double) { return -1.0; };
    m.d2P = [](double) { return 0.0; };
    const auto grid = log_grid(1e-4, 1e4, 41);
    const auto rep = check_hypotheses(m, grid);
    EXPECT_FALSE(rep.at("monotone_pressure").passed);
    EXPECT_NE(rep.at("monotone_pressure").detail.find("violations=" + std::to_string(grid.size() + 1)),
              std::string::npos);
}

TEST(Hypotheses, TransportDefaults) {
    EXPECT_TRUE(check_transport(TransportLaws::standard(), log_grid(1e-3, 1e3, 31)).all_passed());
    auto bad = TransportLaws::standard();
    bad.kappa = [](double th) { return 1.0 + th; };
    EXPECT_FALSE(check_transport(bad, log_grid(1e-3, 1e3, 31)).all_passed());
}

TEST(Linearize, UnitStateWithoutRadiation) {
    const auto c = linearize(GasModel::standard(0.0), 1.0, 1.0);
    EXPECT_NEAR(c.alpha, 8.0 / 3.0, 1e-12);
    EXPECT_NEAR(c.beta, 1.0, 1e-12);
    EXPECT_NEAR(c.delta, 1.5, 1e-12);
    EXPECT_NEAR(c.omega, 10.0 / 3.0, 1e-12);
    EXPECT_NEAR(c.a_exp, 3.0 / 8.0, 1e-12);
    EXPECT_NEAR(c.c_p, 15.0 / 8.0, 1e-12);
    EXPECT_NEAR(c.c_v, 1.5, 1e-12);
    EXPECT_NEAR(c.c_p - c.c_v, 3.0 / 8.0, 1e-12);
}

TEST(Linearize, SpecificHeatIdentity) {
    for (double a : {0.0, 0.1, 1.0})
        for (double r : {0.3, 1.0, 2.0, 7.0})
            for (double th : {0.5, 1.0, 3.0}) {
                const auto m = GasModel::standard(a);
                const auto c = linearize(m, r, th);
                const auto t = eval_state(m, r, th);
                const double rhs = th * t.ds_dtheta + th * t.dp_dtheta * t.dp_dtheta / (r * r * t.dp_drho);
                EXPECT_NEAR(c.c_p / rhs, 1.0, 1e-10);
                EXPECT_GT(c.alpha, 0.0);
                EXPECT_GT(c.beta, 0.0);
                EXPECT_GT(c.omega, 0.0);
                EXPECT_GT(c.a_exp, 0.0);
            }
}

TEST(Linearize, ScaledDensityAgainstFiniteDifferences) {
    const FiniteDiff fd{GasModel::standard(0.0)};
    const double r = 2.0, th = 1.0;
    const auto c = linearize(fd.m, r, th);
    EXPECT_NEAR(c.alpha, fd.dp_drho(r, th) / r, 1e-8);
    EXPECT_NEAR(c.beta, fd.dp_dtheta(r, th) / r, 1e-8);
    EXPECT_NEAR(c.delta, r * fd.ds_dtheta(r, th), 1e-8);
}

TEST(Linearize, DegenerateModelThrows) {
    auto m = GasModel::standard(0.0);
    m.dP = [](double) { return -1.0; };
    EXPECT_THROW(linearize(m, 1.0, 1.0), ModelError);
}

TEST(FreeEnergy, UnitStateValue) {
    const auto m = GasModel::standard(0.0);
    EXPECT_NEAR(ballistic_free_energy(m, 1.0, 1.0, 1.0), 3.0, 1e-14);
}

TEST(FreeEnergy, OffsetShiftIsLinear) {
    const double c0 = 2.5, Theta = 1.7, r = 0.8, th = 1.3;
    const double h0 = ballistic_free_energy(GasModel::standard(0.1, 0.0), Theta, r, th);
    const double h1 = ballistic_free_energy(GasModel::standard(0.1, c0), Theta, r, th);
    EXPECT_NEAR(h1 - h0, -Theta * c0 * r, 1e-12);
    EXPECT_THROW(ballistic_free_energy(GasModel::standard(), 1.0, -1.0, 1.0), DomainError);
}

TEST(FreeEnergy, StationaryInTemperatureAtReference) {
    // d/dtheta H_Theta vanishes at theta = Theta.
    const auto m = GasModel::standard(0.1);
    for (double r : {0.5, 1.0, 3.0})
        for (double Th : {0.5, 1.0, 2.0}) {
            const double h = 1e-5;
            const double d = (ballistic_free_energy(m, Th, r, Th + h) - ballistic_free_energy(m, Th, r, Th - h)) / (2 * h);
            EXPECT_NEAR(d, 0.0, 1e-7);
        }
}

TEST(RelativeEntropy, VanishesAtReference) {
    const auto m = GasModel::standard(0.1);
    const LocalState x{1.3, 0.7, {0.2, -0.1}};
    const RefState ref{1.3, 0.7, {0.2, -0.1}};
    EXPECT_EQ(relative_entropy_density(m, x, ref, 0.1), 0.0);
}

TEST(RelativeEntropy, PositiveNearReference) {
    const auto m = GasModel::standard(0.1);
    const RefState ref{1.0, 1.0, {0.0, 0.0}};
    for (double dr : {-0.1, -0.01, 0.0, 0.01, 0.1})
        for (double dt : {-0.1, -0.01, 0.0, 0.01, 0.1}) {
            if (dr == 0.0 && dt == 0.0) continue;
            EXPECT_GT(relative_entropy_density(m, {1.0 + dr, 1.0 + dt, {0.0, 0.0}}, ref, 0.5), 0.0);
        }
}

TEST(RelativeEntropy, OffsetInvariance) {
    const LocalState x{2.1, 0.6, {0.3, 0.4}};
    const RefState ref{0.9, 1.4, {0.1, -0.2}};
    const double e0 = relative_entropy_density(GasModel::standard(0.1, 0.0), x, ref, 0.05);
    for (double c0 : {-10.0, 1.0, 37.0}) {
        const double e1 = relative_entropy_density(GasModel::standard(0.1, c0), x, ref, 0.05);
        EXPECT_LE(std::abs(e1 - e0), 1e-12 * std::max(1.0, e0) * 400.0);
        EXPECT_NEAR(e1 * 0.05 * 0.05, e0 * 0.05 * 0.05, 1e-12);
    }
}

TEST(RelativeEntropy, GrowthOutsideCompactSet) {
    const auto m = GasModel::standard(0.1);
    const double eps = 0.1;
    const Box2 K{0.5, 2.0, 0.5, 2.0};
    const double cK = coercivity_constant(m, 1.0, 1.0, K, 100);
    const RefState ref{1.0, 1.0, {0.0, 0.0}};
    for (double r : {10.0, 100.0})
        for (double th : {10.0, 100.0}) {
            const double val = relative_entropy_density(m, {r, th, {0.0, 0.0}}, ref, eps);
            const double bound = (1.0 + std::pow(r, 5.0 / 3.0) + std::pow(th, 4.0)) / (eps * eps);
            EXPECT_GE(val, std::min(cK, 0.01) * bound) << r << " " << th;
        }
}

TEST(Coercivity, PositiveOnDefaultBox) {
    const double c = coercivity_constant(GasModel::standard(0.1), 1.0, 1.0, {0.5, 2.0, 0.5, 2.0}, 200);
    EXPECT_GT(c, 0.0);
}

TEST(Coercivity, ShrinkingBoxApproachesHalfHessianEigenvalue) {
    const auto m = GasModel::standard(0.1);
    // Finite-difference Hessian of the Bregman form at the reference.
    const double h = 1e-4;
    auto f = [&](double r, double t) { return relative_free_energy(m, r, t, 1.0, 1.0); };
    const double hrr = (f(1 + h, 1) - 2 * f(1, 1) + f(1 - h, 1)) / (h * h);
    const double htt = (f(1, 1 + h) - 2 * f(1, 1) + f(1, 1 - h)) / (h * h);
    const double hrt = (f(1 + h, 1 + h) - f(1 + h, 1 - h) - f(1 - h, 1 + h) + f(1 - h, 1 - h)) / (4 * h * h);
    const double tr = hrr + htt, det = hrr * htt - hrt * hrt;
    const double lmin = 0.5 * (tr - std::sqrt(tr * tr - 4 * det));
    double prev = 1e300;
    for (double w : {0.1, 0.01, 0.001}) {
        const double c = coercivity_constant(m, 1.0, 1.0, {1 - w, 1 + w, 1 - w, 1 + w}, 41);
        const double err = std::abs(c - 0.5 * lmin);
        EXPECT_LT(err, prev * 1.0001);
        prev = err;
    }
    EXPECT_LT(prev / (0.5 * lmin), 1e-2);
}

TEST(Coercivity, ReferenceOnBoundaryRejected) {
    EXPECT_THROW(coercivity_constant(GasModel::standard(), 0.5, 1.0, {0.5, 2.0, 0.5, 2.0}), PreconditionError);
}

TEST(Coercivity, NonConvexFreeEnergyRejected) {
    auto m = GasModel::standard(0.0);
    m.S = [](double z) { return 3.0 * std::log(z); };
    m.dS = [](double z) { return 3.0 / z; };
    EXPECT_THROW(coercivity_constant(m, 1.0, 1.0, {0.5, 2.0, 0.5, 2.0}, 50), ModelError);
}

TEST(Energy, TemperatureInversionRoundTrip) {
    const auto m = GasModel::standard(0.1);
    for (double r : {0.1, 1.0, 10.0})
        for (double th : {0.2, 1.0, 5.0, 40.0}) {
            const double e = eval_state(m, r, th).e;
            EXPECT_NEAR(temperature_from_energy(m, r, e, 1.0), th, 1e-11 * th);
        }
}

TEST(Properties, EntropyMagnitudeBound) {
    const auto m = GasModel::standard(0.1);
    double c = 0.0;
    std::vector<std::pair<double, double>> pts;
    for (double r : log_grid(1e-3, 1e3, 25))
        for (double th : log_grid(0.5, 10.0, 15)) {
            const double lhs = r * std::abs(eval_state(m, r, th).s);
            const double rhs = th * th * th + r * std::abs(std::log(r)) + r * std::max(0.0, std::log(th));
            c = std::max(c, lhs / rhs);
        }
    EXPECT_TRUE(std::isfinite(c));
    EXPECT_LT(c, 10.0);
}
