#include "s3t/stream_network.hpp"

#include "s3t/csv.hpp"
#include "s3t/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

namespace s3t {

namespace {

constexpr double kWeightTol = 1e-9;

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

StreamNetwork::StreamNetwork(std::vector<StreamSegment> segments, std::vector<StreamLocation> locations)
    : segments_(std::move(segments)), locations_(std::move(locations)) {
    const std::size_t n = segments_.size();
    if (n == 0) throw InputError("stream network has no segments");

    std::unordered_map<long, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = segments_[i];
        if (!index.emplace(s.id, i).second) throw InputError("duplicate segment id " + std::to_string(s.id));
        if (!(s.length > 0.0) || !std::isfinite(s.length))
            throw ParameterDomainError("segment " + std::to_string(s.id) + ": length must be positive");
        if (!(s.weight > 0.0 && s.weight <= 1.0))
            throw ParameterDomainError("segment " + std::to_string(s.id) + ": weight must lie in (0, 1]");
    }

    parent_.assign(n, std::nullopt);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = segments_[i];
        if (!s.downstream_id) continue;
        const auto it = index.find(*s.downstream_id);
        if (it == index.end())
            throw InputError("segment " + std::to_string(s.id) + ": unknown downstream id " +
                             std::to_string(*s.downstream_id));
        if (it->second == i) throw InputError("segment " + std::to_string(s.id) + " drains into itself");
        parent_[i] = it->second;
    }

    // Walk each segment to its outlet; more than n steps means a cycle.
    root_.assign(n, 0);
    depth_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t cur = i;
        double depth = 0.0;
        std::size_t steps = 0;
        while (parent_[cur]) {
            cur = *parent_[cur];
            depth += segments_[cur].length;
            if (++steps > n) throw InputError("stream network is not a forest (cycle through segment " +
                                              std::to_string(segments_[i].id) + ")");
        }
        root_[i] = cur;
        depth_[i] = depth;
    }

    std::vector<double> child_weight(n, 0.0);
    std::vector<bool> has_child(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (parent_[i]) {
            child_weight[*parent_[i]] += segments_[i].weight;
            has_child[*parent_[i]] = true;
        } else if (std::abs(segments_[i].weight - 1.0) > kWeightTol) {
            throw ParameterDomainError("root segment " + std::to_string(segments_[i].id) + " must have weight 1");
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (has_child[i] && std::abs(child_weight[i] - 1.0) > kWeightTol)
            throw ParameterDomainError("weights of segments draining into " + std::to_string(segments_[i].id) +
                                       " sum to " + std::to_string(child_weight[i]) + ", expected 1");

    std::unordered_map<long, std::size_t> loc_ids;
    location_segment_.reserve(locations_.size());
    for (const auto& loc : locations_) {
        if (!loc_ids.emplace(loc.id, loc_ids.size()).second)
            throw InputError("duplicate location id " + std::to_string(loc.id));
        const auto it = index.find(loc.segment_id);
        if (it == index.end())
            throw InputError("location " + std::to_string(loc.id) + ": unknown segment " +
                             std::to_string(loc.segment_id));
        const double len = segments_[it->second].length;
        if (!(loc.offset >= 0.0 && loc.offset <= len))
            throw ParameterDomainError("location " + std::to_string(loc.id) + ": offset outside segment");
        location_segment_.push_back(it->second);
    }
}

std::size_t StreamNetwork::check_location(std::size_t j) const {
    if (j >= locations_.size())
        throw IndexError("location index " + std::to_string(j) + " out of range (" +
                         std::to_string(locations_.size()) + " locations)");
    return location_segment_[j];
}

std::vector<std::size_t> StreamNetwork::path_to_outlet(std::size_t segment_index) const {
    std::vector<std::size_t> path{segment_index};
    while (parent_[path.back()]) path.push_back(*parent_[path.back()]);
    return path;
}

std::vector<std::size_t> StreamNetwork::downstream_indices(std::size_t j) const {
    return sorted(path_to_outlet(check_location(j)));
}

std::vector<long> StreamNetwork::downstream_set(std::size_t j) const {
    std::vector<long> ids;
    for (auto i : downstream_indices(j)) ids.push_back(segments_[i].id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

bool StreamNetwork::flow_connected(std::size_t j, std::size_t k) const {
    const auto dj = downstream_indices(j);
    const auto dk = downstream_indices(k);
    // D_j and D_k are nested exactly when one location's segment lies on the
    // other's path to the outlet.
    return std::binary_search(dk.begin(), dk.end(), location_segment_[j]) ||
           std::binary_search(dj.begin(), dj.end(), location_segment_[k]);
}

std::vector<long> StreamNetwork::between_set(std::size_t j, std::size_t k) const {
    if (!flow_connected(j, k)) return {};
    const auto dj = downstream_indices(j);
    const auto dk = downstream_indices(k);
    std::vector<std::size_t> diff;
    std::set_symmetric_difference(dj.begin(), dj.end(), dk.begin(), dk.end(), std::back_inserter(diff));
    std::vector<long> ids;
    for (auto i : diff) ids.push_back(segments_[i].id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

double StreamNetwork::position(std::size_t j) const {
    return depth_[location_segment_[j]] + locations_[j].offset;
}

double StreamNetwork::stream_distance(std::size_t j, std::size_t k) const {
    const auto sj = check_location(j);
    const auto sk = check_location(k);
    if (root_[sj] != root_[sk])
        throw NoPathError("locations " + std::to_string(locations_[j].id) + " and " +
                          std::to_string(locations_[k].id) + " lie on different stream trees");
    if (flow_connected(j, k)) return std::abs(position(j) - position(k));

    // Both drain into the upstream end of the most upstream shared segment.
    const auto dj = downstream_indices(j);
    const auto dk = downstream_indices(k);
    std::vector<std::size_t> common;
    std::set_intersection(dj.begin(), dj.end(), dk.begin(), dk.end(), std::back_inserter(common));
    double junction = 0.0;
    for (auto c : common) junction = std::max(junction, depth_[c] + segments_[c].length);
    return (position(j) - junction) + (position(k) - junction);
}

StreamNetwork StreamNetwork::from_csv(const std::string& segments_csv, const std::string& locations_csv) {
    const auto seg = csv::read_file(segments_csv);
    const auto c_id = seg.column("id");
    const auto c_down = seg.column("downstream_id");
    const auto c_len = seg.column("length");
    const auto c_w = seg.column("weight");
    std::vector<StreamSegment> segments;
    for (std::size_t r = 0; r < seg.rows.size(); ++r) {
        const auto& row = seg.rows[r];
        const std::string ctx = segments_csv + " row " + std::to_string(r + 2);
        if (row.size() != seg.header.size()) throw InputError(ctx + ": wrong number of fields");
        StreamSegment s;
        s.id = csv::parse_long(row[c_id], ctx);
        if (!row[c_down].empty()) s.downstream_id = csv::parse_long(row[c_down], ctx);
        s.length = csv::parse_double(row[c_len], ctx);
        s.weight = csv::parse_double(row[c_w], ctx);
        segments.push_back(s);
    }

    const auto loc = csv::read_file(locations_csv);
    const auto l_id = loc.column("id");
    const auto l_seg = loc.column("segment_id");
    const auto l_off = loc.column("offset");
    std::vector<StreamLocation> locations;
    for (std::size_t r = 0; r < loc.rows.size(); ++r) {
        const auto& row = loc.rows[r];
        const std::string ctx = locations_csv + " row " + std::to_string(r + 2);
        if (row.size() != loc.header.size()) throw InputError(ctx + ": wrong number of fields");
        locations.push_back({csv::parse_long(row[l_id], ctx), csv::parse_long(row[l_seg], ctx),
                             csv::parse_double(row[l_off], ctx)});
    }
    return StreamNetwork(std::move(segments), std::move(locations));
}

StreamNetwork StreamNetwork::random_binary_tree(std::size_t n_segments, std::uint64_t seed, double alpha) {
    if (n_segments == 0) throw ParameterDomainError("random network needs at least one segment");
    if (!(alpha > 0.0)) throw ParameterDomainError("Dirichlet concentration must be positive");
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> length_dist(1.0);
    std::gamma_distribution<double> gamma_dist(alpha, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<StreamSegment> segs;
    segs.push_back({1, std::nullopt, length_dist(rng), 1.0});
    std::vector<std::size_t> leaves{0};
    // Split a random leaf into two children until the budget is spent; an odd
    // remainder becomes a single unbranched continuation with weight 1.
    while (segs.size() < n_segments) {
        const auto pick = std::uniform_int_distribution<std::size_t>(0, leaves.size() - 1)(rng);
        const std::size_t parent = leaves[pick];
        leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
        const long parent_id = segs[parent].id;
        if (segs.size() + 2 <= n_segments) {
            const double g1 = gamma_dist(rng);
            const double g2 = gamma_dist(rng);
            const double w1 = g1 / (g1 + g2);
            segs.push_back({static_cast<long>(segs.size() + 1), parent_id, length_dist(rng), w1});
            leaves.push_back(segs.size() - 1);
            segs.push_back({static_cast<long>(segs.size() + 1), parent_id, length_dist(rng), 1.0 - w1});
            leaves.push_back(segs.size() - 1);
        } else {
            segs.push_back({static_cast<long>(segs.size() + 1), parent_id, length_dist(rng), 1.0});
            leaves.push_back(segs.size() - 1);
        }
    }
    std::vector<StreamLocation> locs;
    for (const auto& s : segs) locs.push_back({s.id, s.id, unit(rng) * s.length});
    return StreamNetwork(std::move(segs), std::move(locs));
}

Matrix tailup_covariance(const StreamNetwork& net, const TailUpParams& params) {
    if (!(params.zeta1 > 0.0)) throw ParameterDomainError("tail-up zeta1 must be positive");
    if (!(params.zeta2 > 0.0)) throw ParameterDomainError("tail-up zeta2 must be positive");
    if (!(params.nugget >= 0.0)) throw ParameterDomainError("tail-up nugget must be nonnegative");
    if (params.base != SpatialKind::Exponential)
        throw ParameterDomainError("tail-up base correlation must be exponential");

    std::unordered_map<long, double> weight;
    for (std::size_t i = 0; i < net.num_segments(); ++i) weight[net.segment(i).id] = net.segment(i).weight;

    const auto n = static_cast<Eigen::Index>(net.num_locations());
    Matrix cov = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        cov(j, j) = params.nugget + params.zeta1;
        for (Eigen::Index k = j + 1; k < n; ++k) {
            if (!net.flow_connected(j, k)) continue;
            double w = 1.0;
            for (long id : net.between_set(j, k)) w *= weight.at(id);
            const double v = std::sqrt(w) * params.zeta1 * std::exp(-net.stream_distance(j, k) / params.zeta2);
            cov(j, k) = v;
            cov(k, j) = v;
        }
    }
    return cov;
}

}  // namespace s3t
