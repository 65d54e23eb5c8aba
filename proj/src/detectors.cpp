#include "s3t/detectors.hpp"

#include "s3t/error.hpp"
#include "s3t/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace s3t {

OfflineDecision offline_detect(const Series& y, const StatisticPlan& plan, double b, StatKind kind,
                               bool keep_cells) {
    const auto N = static_cast<int>(y.rows());
    if (N < 1) throw ShapeError("offline detection needs at least one observation");
    if (N > plan.max_tau())
        throw ShapeError("series length " + std::to_string(N) + " exceeds the plan's max tau " +
                         std::to_string(plan.max_tau()));
    const auto& grid = plan.grid();
    const auto w = whiten(y, plan.gram());

    OfflineDecision out;
    out.threshold = b;
    out.max_stat = -std::numeric_limits<double>::infinity();
    if (keep_cells) out.per_cell_stats = Matrix(N, static_cast<Eigen::Index>(grid.size()));

    std::vector<double> acc(static_cast<std::size_t>(N), 0.0);
    std::vector<double> row(static_cast<std::size_t>(N));
    double y_quad = 0.0;
    for (int tau = 1; tau <= N; ++tau) {
        const Eigen::Index s = N - tau;
        for (int h = 0; h < tau; ++h) row[static_cast<std::size_t>(h)] = cross_term(w, s, s + h);
        const auto len = static_cast<std::size_t>(tau);
        kernels::add_into(std::span<double>(acc).first(len), std::span<const double>(row).first(len));
        if (kind == StatKind::QuadraticScore) y_quad += kernels::dot(row_span(y, s), row_span(w.u, s));

        const std::span<const double> sums(acc.data(), len);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double v = kind == StatKind::S3T ? plan.s3t(tau, k, sums) : plan.quadratic(tau, k, sums, y_quad);
            if (keep_cells) (*out.per_cell_stats)(tau - 1, static_cast<Eigen::Index>(k)) = v;
            if (v > out.max_stat) {
                out.max_stat = v;
                out.tau_hat = tau;
                out.theta_hat = grid.primary(k);
                out.eta_hat = grid.secondary(k);
            }
        }
    }
    out.detected = out.max_stat >= b;
    out.change_index = N - out.tau_hat;
    return out;
}

OfflineDecision offline_detect(const Series& y, const ModelSpec& spec, double b, StatKind kind, bool keep_cells) {
    const StatisticPlan plan(spec, static_cast<int>(y.rows()));
    return offline_detect(y, plan, b, kind, keep_cells);
}

std::string_view method_name(MonitorMethod m) {
    switch (m) {
        case MonitorMethod::S3T: return "s3t";
        case MonitorMethod::QuadraticScore: return "quadratic";
        case MonitorMethod::MCUSUM: return "mcusum";
        case MonitorMethod::HotellingT2: return "hotelling";
    }
    return "?";
}

MonitorMethod parse_method(std::string_view name) {
    for (auto m : {MonitorMethod::S3T, MonitorMethod::QuadraticScore, MonitorMethod::MCUSUM,
                   MonitorMethod::HotellingT2})
        if (name == method_name(m)) return m;
    throw InputError("unknown method '" + std::string(name) + "' (expected s3t, quadratic, mcusum or hotelling)");
}

double hotelling_t2(std::span<const double> y, const SpatialGram& gram) {
    if (static_cast<Eigen::Index>(y.size()) != gram.p) throw ShapeError("observation width does not match p");
    std::vector<double> u(y.size());
    mat_vec(gram.sigma_inv_rows, y, u);
    return kernels::dot(y, u);
}

Monitor::Monitor(std::shared_ptr<const StatisticPlan> plan, MonitorMethod method, double b, double mcusum_k)
    : plan_(std::move(plan)), method_(method), b_(b), k_(mcusum_k) {
    if (!plan_) throw InputError("monitor needs a statistic plan");
    if (!(k_ >= 0.0)) throw ParameterDomainError("MCUSUM reference value k must be nonnegative");
    omega_ = plan_->max_tau();
    p_ = plan_->gram().p;
    const auto w = static_cast<std::size_t>(omega_);
    ring_ = {Series(omega_, p_), Series(omega_, p_)};
    yq_.assign(w, 0.0);
    cross_.assign(w * w, 0.0);
    acc_.assign(w, 0.0);
    scratch_y_.resize(static_cast<std::size_t>(p_));
}

void Monitor::reset() {
    t_ = 0;
    alarm_.reset();
    cusum_ = 0.0;
}

MonitorStep Monitor::evaluate_window() {
    const auto w = static_cast<std::size_t>(omega_);
    const long newest = t_ - 1;
    // Same fold as window_lag_sums and offline_detect: newest row first.
    std::fill(acc_.begin(), acc_.end(), 0.0);
    double y_quad = 0.0;
    for (std::size_t age = 0; age < w; ++age) {
        const std::size_t s = slot(newest - static_cast<long>(age));
        kernels::add_into(std::span<double>(acc_).first(age + 1),
                          std::span<const double>(cross_.data() + s * w, age + 1));
        y_quad += yq_[s];
    }
    MonitorStep out;
    out.t = t_;
    out.tau = omega_;
    out.stat = -std::numeric_limits<double>::infinity();
    const auto& grid = plan_->grid();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double v = method_ == MonitorMethod::S3T ? plan_->s3t(omega_, k, acc_)
                                                       : plan_->quadratic(omega_, k, acc_, y_quad);
        if (v > out.stat) {
            out.stat = v;
            out.theta = grid.primary(k);
            out.eta = grid.secondary(k);
        }
    }
    return out;
}

std::optional<MonitorStep> Monitor::step(std::span<const double> y) {
    if (static_cast<Eigen::Index>(y.size()) != p_)
        throw ShapeError("observation has " + std::to_string(y.size()) + " values, expected " + std::to_string(p_));
    const auto& gram = plan_->gram();

    if (method_ == MonitorMethod::MCUSUM || method_ == MonitorMethod::HotellingT2) {
        ++t_;
        const double t2 = hotelling_t2(y, gram);
        MonitorStep out;
        out.t = t_;
        out.tau = 1;
        if (method_ == MonitorMethod::MCUSUM) {
            cusum_ = std::max(0.0, cusum_ + t2 - static_cast<double>(p_) - k_);
            out.stat = cusum_;
        } else {
            out.stat = t2;
        }
        out.alarm = out.stat >= b_;
        if (out.alarm && !alarm_) alarm_ = t_;
        return out;
    }

    const auto w = static_cast<std::size_t>(omega_);
    const long now = t_;
    const std::size_t s = slot(now);
    mat_vec(gram.sigma_inv_rows, y, row_span(ring_.u, static_cast<Eigen::Index>(s)));
    mat_vec(gram.lambda_rows, row_span(ring_.u, static_cast<Eigen::Index>(s)),
            row_span(ring_.v, static_cast<Eigen::Index>(s)));
    yq_[s] = kernels::dot(y, row_span(ring_.u, static_cast<Eigen::Index>(s)));
    // New column of the cross terms: G(i, now) for every i still in the window.
    const auto v_now = row_span(ring_.v, static_cast<Eigen::Index>(s));
    const long oldest = std::max(0L, now - static_cast<long>(w) + 1);
    for (long i = now; i >= oldest; --i) {
        const std::size_t si = slot(i);
        cross_[si * w + static_cast<std::size_t>(now - i)] =
            kernels::dot(v_now, row_span(ring_.u, static_cast<Eigen::Index>(si)));
    }
    ++t_;
    if (t_ < omega_) return std::nullopt;

    auto out = evaluate_window();
    out.alarm = out.stat >= b_;
    if (out.alarm && !alarm_) alarm_ = t_;
    return out;
}

PatchScanResult patch_scan(const Series& frames, int frame_height, int frame_width, const PatchGeometry& patch,
                           std::shared_ptr<const StatisticPlan> plan, MonitorMethod method, double b,
                           int training) {
    if (frame_height < 1 || frame_width < 1 ||
        frames.cols() != static_cast<Eigen::Index>(frame_height) * frame_width)
        throw ShapeError("frame series width does not match frame_height * frame_width");
    if (patch.height < 1 || patch.width < 1 || patch.stride < 1) throw ShapeError("invalid patch geometry");
    if (patch.height > frame_height || patch.width > frame_width) throw ShapeError("patch larger than frame");
    if (!plan || plan->gram().p != static_cast<Eigen::Index>(patch.height) * patch.width)
        throw ShapeError("patch plan dimension must equal patch height * width");
    if (training < 2 || training >= frames.rows())
        throw ShapeError("training prefix must have at least 2 frames and leave frames to monitor");

    const Eigen::Index n_pix = frames.cols();
    Vector mean = frames.topRows(training).colwise().mean().transpose();
    Vector sd(n_pix);
    for (Eigen::Index j = 0; j < n_pix; ++j) {
        const double var = (frames.topRows(training).col(j).array() - mean[j]).square().sum() / (training - 1);
        sd[j] = std::max(std::sqrt(var), 1e-8);
    }

    PatchScanResult out;
    for (int r = 0; r + patch.height <= frame_height; r += patch.stride)
        for (int c = 0; c + patch.width <= frame_width; c += patch.stride) out.patches.emplace_back(r, c);

    std::vector<Monitor> monitors;
    monitors.reserve(out.patches.size());
    for (std::size_t i = 0; i < out.patches.size(); ++i) monitors.emplace_back(plan, method, b);

    const auto n_frames = static_cast<std::size_t>(frames.rows());
    out.max_stat.assign(n_frames, std::numeric_limits<double>::quiet_NaN());
    out.argmax_patch.assign(n_frames, -1);
    std::vector<double> z(static_cast<std::size_t>(patch.height * patch.width));
    for (Eigen::Index t = training; t < frames.rows(); ++t) {
        for (std::size_t i = 0; i < out.patches.size(); ++i) {
            const auto [r0, c0] = out.patches[i];
            std::size_t n = 0;
            for (int r = r0; r < r0 + patch.height; ++r)
                for (int c = c0; c < c0 + patch.width; ++c) {
                    const Eigen::Index j = static_cast<Eigen::Index>(r) * frame_width + c;
                    z[n++] = (frames(t, j) - mean[j]) / sd[j];
                }
            const auto step = monitors[i].step(z);
            if (!step) continue;
            auto& best = out.max_stat[static_cast<std::size_t>(t)];
            if (std::isnan(best) || step->stat > best) {
                best = step->stat;
                out.argmax_patch[static_cast<std::size_t>(t)] = static_cast<int>(i);
            }
        }
        const double best = out.max_stat[static_cast<std::size_t>(t)];
        if (!out.alarm_time && !std::isnan(best) && best >= b) {
            out.alarm_time = t;
            out.alarm_patch = out.argmax_patch[static_cast<std::size_t>(t)];
        }
    }
    return out;
}

}  // namespace s3t
