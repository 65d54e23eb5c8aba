#include "s3t/error.hpp"
#include "s3t/simulation.hpp"
#include "s3t/spatial.hpp"

#include <gtest/gtest.h>

using namespace s3t;

namespace {

Matrix lambda2() {
    return build_lambda(SpatialModel::spherical(0.3), SensorLayout::lattice(1, 2));
}

ModelSpec spec2(std::vector<double> thetas = ParameterGrid::range(0.1, 0.9, 0.1)) {
    ModelSpec s;
    s.sigma = Matrix::Identity(2, 2);
    s.lambda = lambda2();
    s.grid = ParameterGrid::var1(std::move(thetas));
    return s;
}

Matrix sample_cov(const Series& x, Eigen::Index lag = 0) {
    const Eigen::Index n = x.rows() - lag;
    const Matrix a = x.topRows(n);
    const Matrix b = x.bottomRows(n);
    return a.transpose() * b / static_cast<double>(n);
}

}  // namespace

TEST(Rng, StreamsAreDeterministicAndDistinct) {
    auto a = make_rng(7, 1, 3);
    auto b = make_rng(7, 1, 3);
    auto c = make_rng(7, 1, 4);
    auto d = make_rng(7, 2, 3);
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
    EXPECT_NE(x, d());
    EXPECT_EQ(gen_null(Matrix::Identity(3, 3), 20, 5), gen_null(Matrix::Identity(3, 3), 20, 5));
    EXPECT_NE(gen_null(Matrix::Identity(3, 3), 20, 5), gen_null(Matrix::Identity(3, 3), 20, 6));
}

TEST(GenNull, SampleCovariance) {
    Matrix sigma(2, 2);
    sigma << 2.0, 0.6, 0.6, 1.0;
    const Series y = gen_null(sigma, 200000, 3);
    EXPECT_LE((sample_cov(y) - sigma).cwiseAbs().maxCoeff(), 0.03);
    EXPECT_LE(y.colwise().mean().cwiseAbs().maxCoeff(), 0.01);
    EXPECT_LE(sample_cov(y, 1).cwiseAbs().maxCoeff(), 0.015);
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(gen_null(bad, 5, 1), ParameterDomainError);
}

TEST(GenSignal, StationaryVar1Moments) {
    SignalParams sp;
    sp.gamma = 2.0;
    sp.temporal = TemporalModel::var1(0.6);
    sp.lambda = lambda2();
    const Series x = gen_signal(sp, 200000, 9);
    EXPECT_LE((sample_cov(x) - 2.0 * sp.lambda).cwiseAbs().maxCoeff(), 0.06);
    EXPECT_LE((sample_cov(x, 1) - 2.0 * 0.6 * sp.lambda).cwiseAbs().maxCoeff(), 0.06);
    EXPECT_LE((sample_cov(x, 3) - 2.0 * 0.216 * sp.lambda).cwiseAbs().maxCoeff(), 0.06);
}

TEST(GenSignal, VarmaLagCovarianceMatchesModel) {
    SignalParams sp;
    sp.gamma = 1.0;
    sp.temporal = TemporalModel::varma11(0.5, 0.3);
    sp.lambda = Matrix::Identity(1, 1);
    const Series x = gen_signal(sp, 400000, 10);
    for (int h = 0; h <= 3; ++h) EXPECT_NEAR(sample_cov(x, h)(0, 0), sp.temporal.lag(h), 0.02) << h;
}

TEST(GenSignal, MeanShiftOnly) {
    SignalParams sp;
    sp.gamma = 0.0;
    sp.mu = 0.75;
    sp.lambda = Matrix::Identity(3, 3);
    const Series x = gen_signal(sp, 10, 1);
    EXPECT_TRUE((x.array() == 0.75).all());
    sp.gamma = 1.0;
    const Series y = gen_signal(sp, 100000, 2);
    EXPECT_NEAR(y.mean(), 0.75, 0.02);
}

TEST(GenSeries, SignalStartsAtChangeTime) {
    SignalParams sp;
    sp.gamma = 0.0;
    sp.mu = 100.0;
    sp.lambda = Matrix::Identity(2, 2);
    sp.change_time = 6;
    auto rng = make_rng(1, 1, 0);
    const Series y = gen_series(Matrix::Identity(2, 2), sp, 10, rng);
    EXPECT_LT(y.topRows(6).cwiseAbs().maxCoeff(), 50.0);
    EXPECT_GT(y.bottomRows(4).minCoeff(), 50.0);
}

TEST(NullStatistic, StandardizedMoments) {
    // W has mean 0 and variance 1 under the null.
    const auto spec = spec2({0.5});
    const StatisticPlan plan(spec, 5);
    const int reps = 100000;
    std::vector<double> sums(5);
    double s = 0.0, s2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        auto rng = make_rng(4, 1, static_cast<std::uint64_t>(r));
        const Series y = gen_null(spec.sigma, 5, rng);
        const auto w = whiten(y, plan.gram());
        window_lag_sums(w, 0, 5, sums);
        const double v = plan.s3t(5, 0, sums);
        s += v;
        s2 += v * v;
    }
    const double mean = s / reps;
    const double var = s2 / reps - mean * mean;
    EXPECT_LE(std::abs(mean), 4.0 * std::sqrt(var / reps));
    EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(EstimateSl, DeterministicAndBounded) {
    const auto spec = spec2();
    SimOptions opt;
    opt.n_reps = 200;
    opt.seed = 3;
    const auto a = estimate_sl(4.0, 20, spec, opt);
    opt.threads = 1;
    const auto b = estimate_sl(4.0, 20, spec, opt);
    EXPECT_EQ(a.estimate, b.estimate);
    EXPECT_EQ(estimate_sl(-10.0, 20, spec, opt).estimate, 1.0);
    EXPECT_EQ(estimate_sl(-10.0, 20, spec, opt).std_error, 0.0);
    EXPECT_NEAR(a.std_error, std::sqrt(a.estimate * (1 - a.estimate) / 200), 1e-15);
}

TEST(EstimateArl, CensoringWarning) {
    const auto spec = spec2({0.5});
    OnlineOptions on;
    on.omega = 5;
    on.max_horizon = 20;
    SimOptions opt;
    opt.n_reps = 50;
    const auto r = estimate_arl(50.0, spec, on, opt);
    EXPECT_EQ(r.n_censored, 50);
    EXPECT_EQ(r.estimate, 20.0);
    ASSERT_EQ(r.warnings.size(), 1u);
    const auto quick = estimate_arl(-1e9, spec, on, opt);
    EXPECT_EQ(quick.estimate, 1.0);
    EXPECT_TRUE(quick.warnings.empty());
}

TEST(EstimateArl, ThreadCountDoesNotChangeResults) {
    const auto spec = spec2({0.3, 0.7});
    OnlineOptions on;
    on.omega = 10;
    on.max_horizon = 500;
    SimOptions opt;
    opt.n_reps = 40;
    opt.seed = 12;
    opt.threads = 1;
    const auto a = estimate_arl(2.5, spec, on, opt);
    opt.threads = 3;
    const auto b = estimate_arl(2.5, spec, on, opt);
    EXPECT_EQ(a.estimate, b.estimate);
    EXPECT_EQ(a.std_error, b.std_error);
}

TEST(Records, MatchDirectArlAndAreMonotone) {
    const auto spec = spec2({0.3, 0.7});
    OnlineOptions on;
    on.omega = 10;
    on.max_horizon = 400;
    SimOptions opt;
    opt.n_reps = 60;
    opt.seed = 21;
    const auto records = simulate_null_records(spec, on, opt);
    for (const auto& path : records)
        for (std::size_t i = 1; i < path.size(); ++i) {
            EXPECT_GT(path[i].first, path[i - 1].first);
            EXPECT_GT(path[i].second, path[i - 1].second);
        }
    double prev = 0.0;
    for (double b : {1.0, 2.0, 3.0, 4.0}) {
        const double v = arl_from_records(records, b, on.max_horizon);
        EXPECT_EQ(v, estimate_arl(b, spec, on, opt).estimate) << b;
        EXPECT_GE(v, prev);
        prev = v;
    }
    const double b = calibrate_threshold_by_simulation(30.0, spec, on, opt);
    EXPECT_GE(arl_from_records(records, b, on.max_horizon), 30.0);
    EXPECT_THROW(calibrate_threshold_by_simulation(1e6, spec, on, opt), UnattainableTargetError);
}

TEST(EstimateEdd, StrongShiftIsDetectedImmediately) {
    const auto spec = spec2({0.5});
    SignalParams sp;
    sp.gamma = 0.0;
    sp.mu = 20.0;
    sp.lambda = spec.lambda;
    OnlineOptions on;
    on.omega = 10;
    SimOptions opt;
    opt.n_reps = 20;
    EXPECT_EQ(estimate_edd(5.0, spec, sp, on, opt).estimate, 1.0);
    on.method = MonitorMethod::MCUSUM;
    EXPECT_EQ(estimate_edd(5.0, spec, sp, on, opt).estimate, 1.0);
    sp.lambda = Matrix::Identity(3, 3);
    EXPECT_THROW(estimate_edd(5.0, spec, sp, on, opt), ShapeError);
}
