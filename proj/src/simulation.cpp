#include "s3t/simulation.hpp"

#include "s3t/error.hpp"
#include "s3t/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

namespace s3t {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t rep) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32)};
    return std::mt19937_64(seq);
}

namespace {

Matrix cholesky_factor(const Matrix& sigma) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) throw ParameterDomainError("noise covariance is not positive definite");
    return llt.matrixL();
}

void fill_normal(Series& z, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = normal(rng);
}

// Pairwise summation keeps aggregates reproducible and accurate.
double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

void summarize(ExperimentReport& r, const std::vector<double>& values) {
    const auto n = values.size();
    r.n_reps = static_cast<long>(n);
    if (n == 0) return;
    r.estimate = pairwise_sum(values.data(), n) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (values[i] - r.estimate) * (values[i] - r.estimate);
    const double var = n > 1 ? pairwise_sum(sq.data(), n) / static_cast<double>(n - 1) : 0.0;
    r.std_error = std::sqrt(var / static_cast<double>(n));
}

constexpr std::uint64_t kStreamNull = 1;
constexpr std::uint64_t kStreamOnline = 2;
constexpr std::uint64_t kStreamEdd = 3;

}  // namespace

Series gen_null(const Matrix& sigma, long n, std::mt19937_64& rng) {
    if (n < 0) throw ShapeError("series length must be nonnegative");
    const Matrix L = cholesky_factor(sigma);
    Series z(n, sigma.rows());
    fill_normal(z, rng);
    return z * L.transpose();
}

Series gen_null(const Matrix& sigma, long n, std::uint64_t seed) {
    auto rng = make_rng(seed, kStreamNull, 0);
    return gen_null(sigma, n, rng);
}

SignalStream::SignalStream(const SignalParams& params, std::mt19937_64& rng)
    : rng_(rng),
      phi_(params.temporal.primary()),
      eta_(params.temporal.kind() == TemporalKind::VARMA11 ? params.temporal.eta() : 0.0),
      mu_(params.mu),
      active_(params.gamma > 0.0) {
    if (!(params.gamma >= 0.0)) throw ParameterDomainError("signal gamma must be nonnegative");
    if (params.burn_in < 0) throw ParameterDomainError("burn-in must be nonnegative");
    const Eigen::Index p = params.lambda.rows();
    if (p < 1 || params.lambda.cols() != p) throw ShapeError("signal lambda must be square and nonempty");
    root_ = psd_sqrt(params.lambda) * std::sqrt(params.gamma * (1.0 - phi_ * phi_));
    x_ = Vector::Zero(p);
    e_ = Vector::Zero(p);
    z_ = Vector::Zero(p);
    out_ = Vector::Constant(p, mu_);
    if (active_)
        for (int i = 0; i < params.burn_in; ++i) advance();
}

void SignalStream::advance() {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index j = 0; j < z_.size(); ++j) z_[j] = normal(rng_);
    Vector e = root_ * z_;
    x_ = phi_ * x_ + e - eta_ * e_;
    e_ = std::move(e);
}

const Vector& SignalStream::next() {
    if (active_) {
        advance();
        out_ = x_.array() + mu_;
    }
    return out_;
}

Series gen_signal(const SignalParams& params, long n, std::mt19937_64& rng) {
    if (n < 0) throw ShapeError("series length must be nonnegative");
    SignalStream stream(params, rng);
    Series x(n, params.lambda.rows());
    for (long l = 0; l < n; ++l) x.row(l) = stream.next().transpose();
    return x;
}

Series gen_signal(const SignalParams& params, long n, std::uint64_t seed) {
    auto rng = make_rng(seed, kStreamNull, 1);
    return gen_signal(params, n, rng);
}

Series gen_series(const Matrix& sigma, const SignalParams& params, long n, std::mt19937_64& rng) {
    if (params.change_time < 0) throw ParameterDomainError("change time must be nonnegative");
    Series y = gen_null(sigma, n, rng);
    const long k = std::min(params.change_time, n);
    if (k < n) y.bottomRows(n - k) += gen_signal(params, n - k, rng);
    return y;
}

std::vector<double> simulate_offline_maxima(const ModelSpec& spec, int N, const SimOptions& opt, StatKind kind) {
    if (opt.n_reps < 1) throw ParameterDomainError("n_reps must be at least 1");
    const StatisticPlan plan(spec, N);
    std::vector<double> maxima(static_cast<std::size_t>(opt.n_reps));
    parallel_for(
        maxima.size(),
        [&](std::size_t r) {
            auto rng = make_rng(opt.seed, kStreamNull, r);
            const Series y = gen_null(spec.sigma, N, rng);
            maxima[r] = offline_detect(y, plan, std::numeric_limits<double>::infinity(), kind).max_stat;
        },
        opt.threads);
    return maxima;
}

ExperimentReport estimate_sl(double b, int N, const ModelSpec& spec, const SimOptions& opt) {
    const auto maxima = simulate_offline_maxima(spec, N, opt);
    std::vector<double> hits(maxima.size());
    for (std::size_t i = 0; i < maxima.size(); ++i) hits[i] = maxima[i] >= b ? 1.0 : 0.0;
    ExperimentReport r;
    r.kind = "significance_level";
    r.seed = opt.seed;
    r.threshold = b;
    summarize(r, hits);
    // Binomial standard error rather than the sample-sd form.
    r.std_error = std::sqrt(r.estimate * (1.0 - r.estimate) / static_cast<double>(r.n_reps));
    if (opt.keep_samples) r.samples = maxima;
    return r;
}

namespace {

bool is_window(MonitorMethod m) { return m == MonitorMethod::S3T || m == MonitorMethod::QuadraticScore; }

std::shared_ptr<const StatisticPlan> online_plan(const ModelSpec& spec, const OnlineOptions& online) {
    if (online.omega < 1) throw ParameterDomainError("window omega must be at least 1");
    if (online.max_horizon < 1) throw ParameterDomainError("max horizon must be at least 1");
    // Baselines only use sigma; a one-step plan keeps them cheap.
    return std::make_shared<const StatisticPlan>(spec, is_window(online.method) ? online.omega : 1);
}

// Runs one monitor path. `draw` produces the next observation for counted
// time t (1-based); returns the stopping time or max_horizon + 1 if censored.
template <class Draw>
long run_path(Monitor& mon, const OnlineOptions& online, const Matrix& L, std::mt19937_64& rng, Draw&& draw,
              RecordPath* records = nullptr) {
    const Eigen::Index p = L.rows();
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(p);
    Vector y(p);
    if (online.prefill && is_window(online.method)) {
        for (int i = 0; i + 1 < online.omega; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) z[j] = normal(rng);
            y = L * z;
            mon.step({y.data(), static_cast<std::size_t>(p)});
        }
    }
    long counted = 0;
    double best = -std::numeric_limits<double>::infinity();
    while (counted < online.max_horizon) {
        ++counted;
        draw(counted, y);
        const auto step = mon.step({y.data(), static_cast<std::size_t>(p)});
        if (!step) continue;
        if (records) {
            if (step->stat > best) {
                best = step->stat;
                records->emplace_back(counted, best);
            }
        } else if (step->alarm) {
            return counted;
        }
    }
    return online.max_horizon + 1;
}

ExperimentReport online_report(const std::string& kind, double b, const std::vector<double>& times,
                               long max_horizon, const SimOptions& opt) {
    ExperimentReport r;
    r.kind = kind;
    r.seed = opt.seed;
    r.threshold = b;
    std::vector<double> clipped(times);
    for (auto& t : clipped) {
        if (t > static_cast<double>(max_horizon)) {
            ++r.n_censored;
            t = static_cast<double>(max_horizon);
        }
    }
    summarize(r, clipped);
    if (r.n_censored > 0.05 * static_cast<double>(r.n_reps))
        r.warnings.push_back(std::to_string(r.n_censored) + " of " + std::to_string(r.n_reps) +
                             " runs censored at " + std::to_string(max_horizon) +
                             "; the estimate is a lower bound with widened uncertainty");
    if (opt.keep_samples) r.samples = times;
    return r;
}

}  // namespace

ExperimentReport estimate_arl(double b, const ModelSpec& spec, const OnlineOptions& online, const SimOptions& opt) {
    if (opt.n_reps < 1) throw ParameterDomainError("n_reps must be at least 1");
    const auto plan = online_plan(spec, online);
    const Matrix L = cholesky_factor(spec.sigma);
    std::vector<double> times(static_cast<std::size_t>(opt.n_reps));
    parallel_for(
        times.size(),
        [&](std::size_t r) {
            auto rng = make_rng(opt.seed, kStreamOnline, r);
            Monitor mon(plan, online.method, b, online.mcusum_k);
            std::normal_distribution<double> normal(0.0, 1.0);
            Vector z(L.rows());
            times[r] = static_cast<double>(run_path(mon, online, L, rng, [&](long, Vector& y) {
                for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = normal(rng);
                y = L * z;
            }));
        },
        opt.threads);
    return online_report("arl", b, times, online.max_horizon, opt);
}

ExperimentReport estimate_edd(double b, const ModelSpec& spec, const SignalParams& signal,
                              const OnlineOptions& online, const SimOptions& opt) {
    if (opt.n_reps < 1) throw ParameterDomainError("n_reps must be at least 1");
    if (signal.lambda.rows() != spec.p()) throw ShapeError("signal lambda does not match p");
    const auto plan = online_plan(spec, online);
    const Matrix L = cholesky_factor(spec.sigma);
    std::vector<double> times(static_cast<std::size_t>(opt.n_reps));
    parallel_for(
        times.size(),
        [&](std::size_t r) {
            auto rng = make_rng(opt.seed, kStreamEdd, r);
            auto signal_rng = make_rng(opt.seed, kStreamEdd + 100, r);
            Monitor mon(plan, online.method, b, online.mcusum_k);
            SignalStream stream(signal, signal_rng);
            std::normal_distribution<double> normal(0.0, 1.0);
            Vector z(L.rows());
            times[r] = static_cast<double>(run_path(mon, online, L, rng, [&](long, Vector& y) {
                for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = normal(rng);
                y = L * z + stream.next();
            }));
        },
        opt.threads);
    return online_report("edd", b, times, online.max_horizon, opt);
}

std::vector<RecordPath> simulate_null_records(const ModelSpec& spec, const OnlineOptions& online,
                                              const SimOptions& opt) {
    if (opt.n_reps < 1) throw ParameterDomainError("n_reps must be at least 1");
    const auto plan = online_plan(spec, online);
    const Matrix L = cholesky_factor(spec.sigma);
    std::vector<RecordPath> records(static_cast<std::size_t>(opt.n_reps));
    parallel_for(
        records.size(),
        [&](std::size_t r) {
            auto rng = make_rng(opt.seed, kStreamOnline, r);
            Monitor mon(plan, online.method, std::numeric_limits<double>::infinity(), online.mcusum_k);
            std::normal_distribution<double> normal(0.0, 1.0);
            Vector z(L.rows());
            run_path(
                mon, online, L, rng,
                [&](long, Vector& y) {
                    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = normal(rng);
                    y = L * z;
                },
                &records[r]);
        },
        opt.threads);
    return records;
}

double arl_from_records(const std::vector<RecordPath>& records, double b, long max_horizon, long* n_censored) {
    std::vector<double> times(records.size());
    long censored = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& path = records[i];
        const auto it = std::find_if(path.begin(), path.end(), [&](const auto& rec) { return rec.second >= b; });
        if (it == path.end()) {
            ++censored;
            times[i] = static_cast<double>(max_horizon);
        } else {
            times[i] = static_cast<double>(it->first);
        }
    }
    if (n_censored) *n_censored = censored;
    return times.empty() ? 0.0 : pairwise_sum(times.data(), times.size()) / static_cast<double>(times.size());
}

double calibrate_threshold_by_simulation(double target_arl, const ModelSpec& spec, const OnlineOptions& online,
                                         const SimOptions& opt) {
    if (!(target_arl >= 1.0)) throw ParameterDomainError("target ARL must be at least 1");
    const auto records = simulate_null_records(spec, online, opt);
    // ARL(b) is a nondecreasing step function of b; bisect over the record
    // values that can change it.
    std::vector<double> values;
    for (const auto& path : records)
        for (const auto& rec : path) values.push_back(rec.second);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (values.empty()) throw UnattainableTargetError("no monitor statistics were evaluated");
    if (arl_from_records(records, values.back(), online.max_horizon) < target_arl)
        throw UnattainableTargetError("target ARL exceeds what the simulation horizon can resolve");
    std::size_t lo = 0;
    std::size_t hi = values.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (arl_from_records(records, values[mid], online.max_horizon) >= target_arl) hi = mid;
        else lo = mid + 1;
    }
    return values[lo];
}

}  // namespace s3t
