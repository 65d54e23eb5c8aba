#include "s3t/error.hpp"
#include "s3t/spatial.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

using namespace s3t;

TEST(Spatial, SphericalLatticeValues) {
    const auto m = SpatialModel::spherical(0.3);
    EXPECT_EQ(correlation(m, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(correlation(m, 1.0), 0.3);
    EXPECT_DOUBLE_EQ(correlation(m, std::sqrt(2.0)), 0.15);
    EXPECT_EQ(correlation(m, 2.0), 0.0);
    EXPECT_DOUBLE_EQ(correlation(m, 1.0 + 5e-10), 0.3);
    EXPECT_EQ(correlation(m, 1.0 + 1e-6), 0.0);
}

TEST(Spatial, ExponentialValue) {
    EXPECT_NEAR(correlation(SpatialModel::exponential(2.0), 2.0), 0.36787944117144233, 1e-15);
}

TEST(Spatial, MaternHalfOrderIsExponential) {
    const auto mat = SpatialModel::matern(1.0, 0.5);
    const auto ex = SpatialModel::exponential(1.0);
    EXPECT_NEAR(correlation(mat, 0.7), correlation(ex, 0.7), 1e-10);
    for (double d = 0.0; d <= 10.0; d += 0.05) EXPECT_NEAR(correlation(mat, d), correlation(ex, d), 1e-10) << d;
}

TEST(Spatial, MaternAgainstTabulatedBessel) {
    // v = 1: x K_1(x) with K_1(1) = 0.6019072301972346, so C = 1 * K_1(1) / 1 at x = 1.
    const double rho = std::sqrt(2.0);  // x = sqrt(2 v) d / rho = d
    EXPECT_NEAR(correlation(SpatialModel::matern(rho, 1.0), 1.0), 0.6019072301972346, 1e-12);
    // v = 2, x = 2: x^2 K_2(2) / (2 Gamma(2)) with K_2(2) = 0.2537597545660559.
    EXPECT_NEAR(correlation(SpatialModel::matern(2.0, 2.0), 2.0), 4.0 * 0.2537597545660559 / 2.0, 1e-12);
    // v = 1.5 closed form agrees with the Bessel route just off the half integer.
    const double x = 0.8;
    const double closed = (1.0 + x) * std::exp(-x);
    const double near = correlation(SpatialModel::matern(std::sqrt(3.0000002), 1.5000001), x);
    EXPECT_NEAR(closed, near, 1e-6);
}

TEST(Spatial, MaternLargeOrderApproachesSquaredExponential) {
    const double rho = 1.3;
    const auto m = SpatialModel::matern(rho, 50.0);
    for (double d = 0.0; d <= 3.0 * rho; d += 0.01 * rho) {
        const double se = std::exp(-d * d / (2.0 * rho * rho));
        EXPECT_NEAR(correlation(m, d), se, 5e-3) << d;
    }
}

TEST(Spatial, MaternSmallDistanceIsFinite) {
    const auto m = SpatialModel::matern(1.0, 7.3);
    for (double d : {1e-300, 1e-100, 1e-12, 1e-6}) {
        const double c = correlation(m, d);
        EXPECT_TRUE(std::isfinite(c));
        EXPECT_NEAR(c, 1.0, 1e-6);
    }
}

TEST(Spatial, CorrelationNonincreasing) {
    for (const auto& m : {SpatialModel::exponential(0.7), SpatialModel::matern(0.7, 0.5),
                          SpatialModel::matern(0.7, 1.0), SpatialModel::matern(0.7, 2.5),
                          SpatialModel::matern(0.7, 4.2)}) {
        double prev = 1.0;
        for (double d = 0.0; d <= 8.0; d += 0.02) {
            const double c = correlation(m, d);
            EXPECT_LE(c, prev + 1e-15);
            prev = c;
        }
    }
}

TEST(Spatial, DomainErrors) {
    EXPECT_THROW(SpatialModel::spherical(1.2), ParameterDomainError);
    EXPECT_THROW(SpatialModel::spherical(-0.1), ParameterDomainError);
    EXPECT_THROW(SpatialModel::exponential(0.0), ParameterDomainError);
    EXPECT_THROW(SpatialModel::matern(1.0, 0.0), ParameterDomainError);
    EXPECT_THROW(SpatialModel::matern(-1.0, 1.0), ParameterDomainError);
    EXPECT_THROW(correlation(SpatialModel::exponential(1.0), -1.0), ParameterDomainError);
}

TEST(Spatial, BuildLambdaExamples) {
    EXPECT_EQ(build_lambda(SpatialModel::exponential(1.0), SensorLayout({{3.0, 4.0}})), Matrix::Identity(1, 1));

    const Matrix pair = build_lambda(SpatialModel::spherical(0.3), SensorLayout::lattice(2, 1));
    Matrix expected(2, 2);
    expected << 1.0, 0.3, 0.3, 1.0;
    EXPECT_TRUE(pair.isApprox(expected, 1e-15));

    const Matrix line = build_lambda(SpatialModel::exponential(0.68), SensorLayout::lattice(1, 3));
    EXPECT_NEAR(line(0, 1), std::exp(-1.0 / 0.68), 1e-15);
    EXPECT_NEAR(line(1, 2), std::exp(-1.0 / 0.68), 1e-15);
    EXPECT_NEAR(line(0, 2), std::exp(-2.0 / 0.68), 1e-15);
}

TEST(Spatial, LambdaSymmetricUnitDiagonalAndPsd) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<Point2> pts(12);
        for (auto& p : pts) p = {u(rng), u(rng)};
        const SensorLayout layout(pts);
        for (const auto& m : {SpatialModel::exponential(0.5 + u(rng)), SpatialModel::matern(0.5 + u(rng), 1.5),
                              SpatialModel::matern(0.5 + u(rng), 3.0)}) {
            const Matrix l = build_lambda(m, layout);
            EXPECT_EQ(l, l.transpose());
            for (int i = 0; i < l.rows(); ++i) EXPECT_EQ(l(i, i), 1.0);
            EXPECT_GE(min_eigenvalue(l), -1e-8);
        }
        const Matrix sph = build_lambda(SpatialModel::spherical(0.3), SensorLayout::lattice(3, 4));
        EXPECT_EQ(sph, sph.transpose());
    }
}

TEST(Spatial, LayoutFromCsv) {
    const std::string path = ::testing::TempDir() + "layout.csv";
    {
        std::ofstream out(path);
        out << "x,y\n0,0\n1,0\n0,1\n";
    }
    const auto layout = SensorLayout::from_csv(path);
    ASSERT_EQ(layout.size(), 3u);
    EXPECT_DOUBLE_EQ(layout.distance(1, 2), std::sqrt(2.0));
    EXPECT_EQ(layout.distance(2, 2), 0.0);
    {
        std::ofstream out(path);
        out << "x,z\n0,0\n";
    }
    EXPECT_THROW(SensorLayout::from_csv(path), InputError);
    {
        std::ofstream out(path);
        out << "x,y\n0,abc\n";
    }
    EXPECT_THROW(SensorLayout::from_csv(path), InputError);
    EXPECT_THROW(SensorLayout({}), ShapeError);
}
