#include <gtest/gtest.h>

#include <cmath>

#include "lowmach/grid.hpp"

using namespace lowmach;

TEST(Grid, RejectsTooFewPoints) {
    EXPECT_THROW(Grid::make_1d(3, 1.0), PreconditionError);
    EXPECT_THROW(Grid::make_2d(8, 2, 1.0, 1.0), PreconditionError);
    EXPECT_THROW(Grid::make_2d(8, 8, 0.0, 1.0), PreconditionError);
}

TEST(Grid, CellCentres) {
    const auto g = Grid::make_2d(4, 8, 2.0, 4.0, Boundary::NeumannBox, -1.0, -2.0);
    EXPECT_DOUBLE_EQ(g.x(0), -0.75);
    EXPECT_DOUBLE_EQ(g.y(7), 1.75);
    EXPECT_EQ(g.index(1, 2), 9u);
}

TEST(Norm, ConstantOnUnitBox) {
    const auto g = Grid::make_2d(16, 16, 1.0, 1.0);
    EXPECT_NEAR(norm(ScalarField(g, 1.0), NormKind::L2), 1.0, 1e-14);
    EXPECT_NEAR(norm(ScalarField(g, 1.0), NormKind::L53), 1.0, 1e-14);
    EXPECT_NEAR(norm(ScalarField(g, 1.0), NormKind::Linf), 1.0, 1e-14);
}

TEST(Norm, LinearFunctionSecondOrder) {
    double prev = 1.0;
    for (int n : {16, 32, 64}) {
        const auto g = Grid::make_1d(n, 1.0);
        const double err = std::abs(norm(sample(g, [](double x, double) { return x; }), NormKind::L2) - 1.0 / std::sqrt(3.0));
        if (n > 16) {
            EXPECT_NEAR(prev / err, 4.0, 0.1);
        }
        prev = err;
    }
}

TEST(Norm, H1OfLinearFunction) {
    const auto g = Grid::make_1d(200, 1.0);
    EXPECT_NEAR(norm(sample(g, [](double x, double) { return x; }), NormKind::H1), std::sqrt(1.0 / 3.0 + 1.0), 1e-4);
}

TEST(Norm, WindowMonotoneAndHomogeneous) {
    const auto g = Grid::make_2d(32, 32, 2.0, 2.0, Boundary::NeumannBox, -1.0, -1.0);
    const auto f = sample(g, [](double x, double y) { return std::exp(-x * x - y * y); });
    const Window w{-0.5, 0.5, -0.5, 0.5};
    for (auto k : {NormKind::L2, NormKind::L53, NormKind::Linf, NormKind::H1}) {
        if (k == NormKind::Linf) {
            EXPECT_LE(norm(f, k, w), norm(f, k));
        } else {
            EXPECT_LT(norm(f, k, w), norm(f, k));
        }
        EXPECT_NEAR(norm(3.0 * f, k, w), 3.0 * norm(f, k, w), 1e-12);
    }
    const VectorField u(f, 2.0 * f);
    EXPECT_NEAR(norm(-2.0 * u, NormKind::L2), 2.0 * norm(u, NormKind::L2), 1e-12);
}

TEST(Norm, WindowErrors) {
    const auto g = Grid::make_2d(8, 8, 1.0, 1.0);
    const ScalarField f(g, 1.0);
    EXPECT_THROW(norm(f, NormKind::L2, Window{-1.0, 0.5, 0.0, 0.5}), PreconditionError);
    EXPECT_THROW(norm(f, NormKind::L2, Window{0.5, 0.51, 0.5, 0.51}), PreconditionError);
}

TEST(Fields, MismatchedGridsRejected) {
    ScalarField a(Grid::make_2d(8, 8, 1.0, 1.0)), b(Grid::make_2d(8, 8, 2.0, 1.0));
    EXPECT_THROW(a += b, PreconditionError);
    EXPECT_THROW(ScalarField(Grid::make_1d(8, 1.0), std::vector<double>(7)), PreconditionError);
}
