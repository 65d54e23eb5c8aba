#pragma once

#include "s3t/score.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace s3t {

struct OfflineDecision {
    bool detected = false;
    double max_stat = 0.0;
    int tau_hat = 0;
    double theta_hat = 0.0;
    double eta_hat = 0.0;
    double threshold = 0.0;
    /// Rows before the estimated change: N - tau_hat.
    long change_index = 0;
    /// N x grid-size statistics when requested (row tau - 1).
    std::optional<Matrix> per_cell_stats;
};

/// Max over tau in 1..N (the last tau rows) and over the grid. Ties resolve
/// to the smallest tau, then the first grid point.
OfflineDecision offline_detect(const Series& y, const StatisticPlan& plan, double b,
                               StatKind kind = StatKind::S3T, bool keep_cells = false);
OfflineDecision offline_detect(const Series& y, const ModelSpec& spec, double b,
                               StatKind kind = StatKind::S3T, bool keep_cells = false);

enum class MonitorMethod { S3T, QuadraticScore, MCUSUM, HotellingT2 };

std::string_view method_name(MonitorMethod m);
MonitorMethod parse_method(std::string_view name);

struct MonitorStep {
    long t = 0;
    double stat = 0.0;
    int tau = 0;          // window length for window methods, 1 otherwise
    double theta = 0.0;   // maximizing grid point (window methods)
    double eta = 0.0;
    bool alarm = false;   // this step crossed b
};

/// Online procedure. Window methods evaluate max over the grid of the
/// statistic on the last omega observations, starting once omega
/// observations have arrived; MCUSUM and Hotelling's T^2 evaluate every step.
class Monitor {
public:
    /// The plan's max_tau is the window omega.
    Monitor(std::shared_ptr<const StatisticPlan> plan, MonitorMethod method, double b, double mcusum_k = 0.5);

    /// Feeds one observation. Returns nothing during warm-up.
    std::optional<MonitorStep> step(std::span<const double> y);

    void reset();

    long t() const noexcept { return t_; }
    int omega() const noexcept { return omega_; }
    MonitorMethod method() const noexcept { return method_; }
    double threshold() const noexcept { return b_; }
    std::optional<long> alarm_time() const noexcept { return alarm_; }
    double cusum() const noexcept { return cusum_; }

private:
    std::size_t slot(long time) const { return static_cast<std::size_t>(time % omega_); }
    MonitorStep evaluate_window();

    std::shared_ptr<const StatisticPlan> plan_;
    MonitorMethod method_;
    double b_;
    double k_;
    int omega_;
    Eigen::Index p_;

    long t_ = 0;  // observations consumed
    std::optional<long> alarm_;
    double cusum_ = 0.0;

    Whitened ring_;              // omega rows of u and v
    std::vector<double> yq_;     // y' sigma^-1 y per slot
    std::vector<double> cross_;  // omega x omega: row slot(i), column h holds G(i, i + h)
    std::vector<double> acc_;
    std::vector<double> scratch_y_;
};

double hotelling_t2(std::span<const double> y, const SpatialGram& gram);

struct PatchGeometry {
    int height = 1;
    int width = 1;
    int stride = 1;
};

struct PatchScanResult {
    /// Top-left (row, col) of each patch.
    std::vector<std::pair<int, int>> patches;
    /// Per frame: max statistic over patches (NaN during warm-up) and its patch.
    std::vector<double> max_stat;
    std::vector<int> argmax_patch;
    std::optional<long> alarm_time;  // frame index, 0-based
    int alarm_patch = -1;
};

/// Frames are rows of `frames`, pixels row-major (row * frame_width + col).
/// Each pixel is standardized by the mean and standard deviation of the first
/// `training` frames (sd floored at 1e-8); monitoring starts after them. The
/// plan describes one patch (p = height * width).
PatchScanResult patch_scan(const Series& frames, int frame_height, int frame_width, const PatchGeometry& patch,
                           std::shared_ptr<const StatisticPlan> plan, MonitorMethod method, double b,
                           int training);

}  // namespace s3t
