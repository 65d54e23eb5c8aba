#include "oracles.hpp"

#include "s3t/error.hpp"
#include "s3t/score.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

using namespace s3t;

namespace {

ModelSpec make_spec(const Matrix& sigma, const Matrix& lambda, std::vector<double> thetas = {0.5}) {
    ModelSpec s;
    s.sigma = sigma;
    s.lambda = lambda;
    s.grid = ParameterGrid::var1(std::move(thetas));
    return s;
}

Matrix lambda2() {
    Matrix l(2, 2);
    l << 1.0, 0.3, 0.3, 1.0;
    return l;
}

Series random_window(int tau, int p, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Series y(tau, p);
    for (int i = 0; i < tau; ++i)
        for (int j = 0; j < p; ++j) y(i, j) = n(rng);
    return y;
}

oracle::Vec stack(const Series& y) {
    oracle::Vec v(y.size());
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        for (Eigen::Index j = 0; j < y.cols(); ++j) v(i * y.cols() + j) = y(i, j);
    return v;
}

}  // namespace

TEST(Precompute, IdentityInputs) {
    const auto g = precompute_spatial(make_spec(Matrix::Identity(3, 3), Matrix::Identity(3, 3)));
    EXPECT_TRUE(g.M.isApprox(Matrix::Identity(3, 3)));
    EXPECT_DOUBLE_EQ(g.trM[2], 3.0);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(g.msym_eigs(i), 1.0, 1e-14);
}

TEST(Precompute, ScaledSigma) {
    const auto g = precompute_spatial(make_spec(2.0 * Matrix::Identity(2, 2), lambda2()));
    EXPECT_TRUE(g.M.isApprox(lambda2() / 2.0, 1e-14));
    EXPECT_NEAR(g.trM[2], 0.545, 1e-14);
}

TEST(Precompute, RandomTracesMatchDense) {
    std::mt19937_64 rng(11);
    for (int p = 1; p <= 5; ++p) {
        const Matrix s = oracle::random_spd(p, rng);
        const Matrix l = oracle::random_correlation(p, rng);
        const auto g = precompute_spatial(make_spec(s, l));
        Matrix m = s.inverse() * l;
        Matrix mk = m;
        for (int k = 1; k <= 4; ++k) {
            EXPECT_NEAR(g.trM[k], mk.trace(), 1e-9 * std::max(1.0, std::abs(mk.trace())));
            mk = mk * m;
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(oracle::sym_pow(s, -0.5) * l * oracle::sym_pow(s, -0.5));
        for (int i = 0; i < p; ++i) EXPECT_NEAR(g.msym_eigs(i), es.eigenvalues()(p - 1 - i), 1e-9);
    }
}

TEST(Precompute, IllConditionedSigma) {
    Matrix s(2, 2);
    s << 1.0, 1.0, 1.0, 1.0;
    EXPECT_THROW(precompute_spatial(make_spec(s, lambda2())), IllConditionedError);
    EXPECT_THROW(precompute_spatial(make_spec(Matrix::Identity(3, 3), lambda2())), ShapeError);
}

TEST(CDConstants, IdentityCases) {
    for (int p = 1; p <= 3; ++p) {
        const auto g = precompute_spatial(make_spec(Matrix::Identity(p, p), Matrix::Identity(p, p)));
        for (int tau = 1; tau <= 5; ++tau) {
            EXPECT_DOUBLE_EQ(c_d_constants(g, build_R(TemporalModel::var1(0.7), tau)).c, double(p * tau));
            EXPECT_DOUBLE_EQ(c_d_constants(g, build_R(TemporalModel::var1(0.0), tau)).d, double(2 * p * tau));
        }
    }
}

TEST(CDConstants, MatchesDense) {
    const auto g = precompute_spatial(make_spec(Matrix::Identity(2, 2), lambda2()));
    const auto cd = c_d_constants(g, build_R(TemporalModel::var1(0.5), 3));
    const auto o = oracle::dense(Matrix::Identity(2, 2), lambda2(), oracle::var1_R(0.5, 3));
    EXPECT_NEAR(cd.c, o.c, 1e-9);
    EXPECT_NEAR(cd.d, o.d, 1e-9);
}

TEST(S3TStatistic, ScalarExamples) {
    const auto g = precompute_spatial(make_spec(Matrix::Identity(1, 1), Matrix::Identity(1, 1)));
    const auto R = build_R(TemporalModel::var1(0.5), 1);
    const auto cd = c_d_constants(g, R);
    Series y(1, 1);
    y(0, 0) = 1.0;
    EXPECT_NEAR(s3t_statistic(y, g, R, cd.c, cd.d).value, 0.0, 1e-15);
    y(0, 0) = 2.0;
    EXPECT_NEAR(s3t_statistic(y, g, R, cd.c, cd.d).value, 3.0 / std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(s3t_statistic(y, g, R, cd.c, cd.d).raw, 4.0, 1e-14);
}

TEST(S3TStatistic, KroneckerPathEqualsDense) {
    std::mt19937_64 rng(2024);
    for (int p = 1; p <= 4; ++p)
        for (int tau = 1; tau <= 6; ++tau) {
            const Matrix s = oracle::random_spd(p, rng);
            const Matrix l = oracle::random_correlation(p, rng);
            const double theta = 0.15 * tau;
            const auto g = precompute_spatial(make_spec(s, l));
            const auto R = build_R(TemporalModel::var1(theta), tau);
            const auto cd = c_d_constants(g, R);
            const Series y = random_window(tau, p, rng);
            const auto o = oracle::dense(s, l, oracle::var1_R(theta, tau));
            EXPECT_NEAR(s3t_statistic(y, g, R, cd.c, cd.d).value, oracle::W(o, stack(y)), 1e-9)
                << "p=" << p << " tau=" << tau;
        }
}

TEST(S3TStatistic, ShapeMismatch) {
    const auto g = precompute_spatial(make_spec(Matrix::Identity(2, 2), lambda2()));
    const auto R = build_R(TemporalModel::var1(0.5), 3);
    EXPECT_THROW(s3t_statistic(Series::Zero(3, 3), g, R, 1.0, 1.0), ShapeError);
    EXPECT_THROW(s3t_statistic(Series::Zero(2, 2), g, R, 1.0, 1.0), ShapeError);
}

TEST(KroneckerTraces, PowersFactor) {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 4; ++rep) {
        const int p = 2 + rep, tau = 3 + rep;
        const Matrix m = oracle::random_spd(p, rng);
        const Matrix r = oracle::var1_R(0.2 + 0.15 * rep, tau);
        const Matrix k = oracle::kron(r, m);
        Matrix kp = k, rp = r, mp = m;
        for (int power = 2; power <= 4; ++power) {
            kp = kp * k;
            rp = rp * r;
            mp = mp * m;
            EXPECT_NEAR(kp.trace(), rp.trace() * mp.trace(), 1e-9 * std::abs(kp.trace()));
        }
        EXPECT_TRUE(kron(r, m).isApprox(k, 1e-15));
    }
}

TEST(EfficientScore, AtZero) {
    const auto g = precompute_spatial(make_spec(Matrix::Identity(2, 2), lambda2()));
    const auto R = build_R(TemporalModel::var1(0.5), 3);
    const auto cd = c_d_constants(g, R);
    const Vector s = efficient_score(Series::Zero(3, 2), g, R);
    ASSERT_EQ(s.size(), 7);
    EXPECT_NEAR(s(0), -cd.c / 2.0, 1e-14);
    EXPECT_EQ(s.tail(6).cwiseAbs().maxCoeff(), 0.0);
}

TEST(EfficientScore, NullMomentsMonteCarlo) {
    Matrix sigma(2, 2);
    sigma << 1.0, 0.2, 0.2, 1.5;
    const auto g = precompute_spatial(make_spec(sigma, lambda2()));
    const auto R = build_R(TemporalModel::var1(0.5), 3);
    const auto cd = c_d_constants(g, R);
    const Eigen::LLT<Matrix> llt(sigma);
    std::mt19937_64 rng(77);
    std::normal_distribution<double> n(0.0, 1.0);
    const int reps = 100000;
    std::vector<double> first(reps);
    Vector tail_sum = Vector::Zero(6);
    for (int r = 0; r < reps; ++r) {
        Series y(3, 2);
        for (int i = 0; i < 3; ++i) {
            Vector z(2);
            z << n(rng), n(rng);
            y.row(i) = (llt.matrixL() * z).transpose();
        }
        const Vector s = efficient_score(y, g, R);
        first[r] = s(0);
        tail_sum += s.tail(6);
    }
    double mean = 0.0;
    for (double v : first) mean += v / reps;
    double var = 0.0, m4 = 0.0;
    for (double v : first) {
        const double e2 = (v - mean) * (v - mean);
        var += e2 / reps;
        m4 += e2 * e2 / reps;
    }
    // Var of the first entry is d/4. The entry is a centred quadratic form,
    // so the sample variance SE comes from the fourth moment.
    EXPECT_LE(std::abs(mean), 4.0 * std::sqrt(var / reps));
    const double var_se = std::sqrt((m4 - var * var) / reps);
    EXPECT_NEAR(var, cd.d / 4.0, 3.0 * var_se);
    EXPECT_LE((tail_sum / reps).cwiseAbs().maxCoeff(), 0.02);
}

TEST(QuadraticScore, ScalarExample) {
    const auto g = precompute_spatial(make_spec(Matrix::Identity(1, 1), Matrix::Identity(1, 1)));
    const auto R = build_R(TemporalModel::var1(0.5), 1);
    const auto cd = c_d_constants(g, R);
    const auto v = quadratic_score(Series::Zero(1, 1), g, R, cd.c, cd.d);
    EXPECT_NEAR(v.raw, 0.5, 1e-15);
    const double var = quadratic_score_variance(g, R, cd.d);
    EXPECT_NEAR(v.value, (0.5 - 2.0) / std::sqrt(var), 1e-14);
}

TEST(QuadraticScore, NullMomentsMonteCarlo) {
    const auto g = precompute_spatial(make_spec(Matrix::Identity(2, 2), lambda2()));
    const auto R = build_R(TemporalModel::var1(0.5), 5);
    const auto cd = c_d_constants(g, R);
    std::mt19937_64 rng(99);
    const int reps = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        const Series y = random_window(5, 2, rng);
        const double s = quadratic_score(y, g, R, cd.c, cd.d).raw;
        sum += s;
        sum2 += s * s;
    }
    const double mean = sum / reps;
    const double var = sum2 / reps - mean * mean;
    EXPECT_NEAR(mean, 11.0, 4.0 * std::sqrt(var / reps));
    const double exact = quadratic_score_variance(g, R, cd.d);
    // The sample variance of a heavy-ish tailed statistic: SE from the
    // fourth moment is not tracked, so use a 5% band (about 5 SE here).
    EXPECT_NEAR(var, exact, 0.05 * exact);
}

TEST(ScoreIdentity, LogDetDerivative) {
    // d/dgamma log|gamma V + Sigma| at 0 equals tr(Sigma^-1 V).
    std::mt19937_64 rng(3);
    const Matrix s = oracle::random_spd(3, rng);
    const Matrix l = oracle::random_correlation(3, rng);
    const Matrix sig_tau = oracle::kron(Matrix::Identity(4, 4), s);
    const Matrix V = oracle::kron(oracle::var1_R(0.6, 4), l);
    const double h = 1e-6;
    const double fd = (std::log((h * V + sig_tau).determinant()) - std::log((-h * V + sig_tau).determinant())) /
                      (2.0 * h);
    const auto g = precompute_spatial(make_spec(s, l));
    EXPECT_NEAR(fd, c_d_constants(g, build_R(TemporalModel::var1(0.6), 4)).c, 1e-5);
}

TEST(StatisticPlan, MatchesDirectEvaluation) {
    std::mt19937_64 rng(8);
    const Matrix s = oracle::random_spd(3, rng);
    const Matrix l = oracle::random_correlation(3, rng);
    const auto spec = make_spec(s, l, {0.2, 0.5, 0.8});
    const StatisticPlan plan(spec, 6);
    const Series y = random_window(6, 3, rng);
    const auto w = whiten(y, plan.gram());
    std::vector<double> sums(6);
    for (int tau = 1; tau <= 6; ++tau) {
        window_lag_sums(w, 6 - tau, tau, sums);
        const Series window = y.bottomRows(tau);
        for (std::size_t k = 0; k < 3; ++k) {
            const auto R = build_R(spec.grid.at(k), tau);
            const auto cd = c_d_constants(plan.gram(), R);
            EXPECT_NEAR(plan.c(tau, k), cd.c, 1e-12);
            EXPECT_NEAR(plan.sqrt_d(tau, k), std::sqrt(cd.d), 1e-12);
            EXPECT_NEAR(plan.s3t(tau, k, std::span(sums).first(tau)),
                        s3t_statistic(window, plan.gram(), R, cd.c, cd.d).value, 1e-10);
            const double yq = stack(window).dot(oracle::kron(Matrix::Identity(tau, tau), s).inverse() *
                                                stack(window));
            EXPECT_NEAR(plan.quadratic(tau, k, std::span(sums).first(tau), yq),
                        quadratic_score(window, plan.gram(), R, cd.c, cd.d).value, 1e-9);
        }
    }
}

TEST(ParameterGrid, RangeAndIndexing) {
    const auto r = ParameterGrid::range(0.1, 0.9, 0.1);
    ASSERT_EQ(r.size(), 9u);
    EXPECT_NEAR(r.back(), 0.9, 1e-12);
    const auto g = ParameterGrid::varma11({0.1, 0.5}, {0.0, 0.3, 0.6});
    EXPECT_EQ(g.size(), 6u);
    EXPECT_EQ(g.dimension(), 2);
    EXPECT_DOUBLE_EQ(g.primary(4), 0.5);
    EXPECT_DOUBLE_EQ(g.secondary(4), 0.3);
    EXPECT_EQ(ParameterGrid::varma11({0.1, 0.5}, {0.2}).dimension(), 1);
    EXPECT_EQ(ParameterGrid::var1(r).dimension(), 1);
}
