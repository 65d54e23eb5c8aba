#pragma once

#include "s3t/detectors.hpp"
#include "s3t/score.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace s3t {

/// Independent stream for replication `rep` of experiment stream `stream`.
/// Results never depend on thread count or scheduling.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t rep);

struct SignalParams {
    double gamma = 0.0;  // stationary variance scale
    double mu = 0.0;     // common mean level, E[x] = mu * 1
    TemporalModel temporal = TemporalModel::var1(0.5);
    Matrix lambda;
    long change_time = 0;  // rows before the change
    int burn_in = 200;
};

/// Stationary signal recursion stepped one observation at a time: zero-mean
/// x_l = phi x_{l-1} + e_l - eta e_{l-1} with Var(e) = gamma (1 - phi^2) lambda
/// (eta = 0 for VAR1), so Var(x) = gamma r(0) lambda. `mu` is added to every
/// output entry. The constructor runs the burn-in.
class SignalStream {
public:
    SignalStream(const SignalParams& params, std::mt19937_64& rng);
    const Vector& next();

private:
    void advance();

    std::mt19937_64& rng_;
    double phi_;
    double eta_;
    double mu_;
    bool active_;
    Matrix root_;
    Vector x_;
    Vector e_;
    Vector z_;
    Vector out_;
};

/// n x p rows with covariance sigma.
Series gen_null(const Matrix& sigma, long n, std::mt19937_64& rng);
Series gen_null(const Matrix& sigma, long n, std::uint64_t seed);

/// Stationary signal path: zero-mean recursion with innovation covariance
/// gamma (1 - phi^2) lambda (phi = theta for VAR1), then mu added to every
/// entry.
Series gen_signal(const SignalParams& params, long n, std::mt19937_64& rng);
Series gen_signal(const SignalParams& params, long n, std::uint64_t seed);

/// Null noise with the signal added from row change_time onward.
Series gen_series(const Matrix& sigma, const SignalParams& params, long n, std::mt19937_64& rng);

struct ExperimentReport {
    std::string kind;
    long n_reps = 0;
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t seed = 0;
    double threshold = 0.0;
    long n_censored = 0;
    std::vector<std::string> warnings;
    std::vector<double> samples;  // per-replication values when kept
};

struct SimOptions {
    long n_reps = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    bool keep_samples = false;
};

/// Max over (tau, theta) of W for each null replication of length N.
std::vector<double> simulate_offline_maxima(const ModelSpec& spec, int N, const SimOptions& opt,
                                            StatKind kind = StatKind::S3T);

/// Fraction of null replications whose max statistic reaches b.
ExperimentReport estimate_sl(double b, int N, const ModelSpec& spec, const SimOptions& opt);

struct OnlineOptions {
    MonitorMethod method = MonitorMethod::S3T;
    int omega = 50;
    double mcusum_k = 0.5;
    long max_horizon = 10000;
    /// Fill the window with omega - 1 null observations before counting time
    /// (window methods only).
    bool prefill = true;
};

ExperimentReport estimate_arl(double b, const ModelSpec& spec, const OnlineOptions& online, const SimOptions& opt);

/// Change at t = 1: every counted observation carries the signal.
ExperimentReport estimate_edd(double b, const ModelSpec& spec, const SignalParams& signal,
                              const OnlineOptions& online, const SimOptions& opt);

/// Per-replication record values of the running maximum statistic under the
/// null: (t, value) pairs with strictly increasing value. The stopping time
/// at threshold b is the first record with value >= b.
using RecordPath = std::vector<std::pair<long, double>>;
std::vector<RecordPath> simulate_null_records(const ModelSpec& spec, const OnlineOptions& online,
                                              const SimOptions& opt);

/// Mean stopping time at b, censoring at max_horizon.
double arl_from_records(const std::vector<RecordPath>& records, double b, long max_horizon,
                        long* n_censored = nullptr);

/// Threshold whose simulated ARL (common random numbers) matches target.
double calibrate_threshold_by_simulation(double target_arl, const ModelSpec& spec, const OnlineOptions& online,
                                         const SimOptions& opt);

}  // namespace s3t
