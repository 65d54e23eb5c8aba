#pragma once

#include "s3t/linalg.hpp"
#include "s3t/spatial.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace s3t {

struct StreamSegment {
    long id = 0;
    std::optional<long> downstream_id;  // empty at a root (outlet)
    double length = 1.0;
    double weight = 1.0;                // share of the parent's flow, in (0, 1]
};

struct StreamLocation {
    long id = 0;
    long segment_id = 0;
    double offset = 0.0;  // measured upstream from the segment's downstream end
};

struct TailUpParams {
    double zeta1 = 1.0;  // partial sill
    double zeta2 = 1.0;  // range
    double nugget = 0.0;
    SpatialKind base = SpatialKind::Exponential;
};

/// Forest of stream segments draining toward one outlet per tree, plus the
/// monitored locations on it. Validated on construction and immutable after.
///
/// Segment sets are reported as sorted segment ids, not positions.
class StreamNetwork {
public:
    StreamNetwork(std::vector<StreamSegment> segments, std::vector<StreamLocation> locations);

    static StreamNetwork from_csv(const std::string& segments_csv, const std::string& locations_csv);

    /// Random binary tree with `n_segments` segments, unit-mean exponential
    /// lengths and symmetric Dirichlet(alpha) split weights. One location per
    /// segment at a uniform offset.
    static StreamNetwork random_binary_tree(std::size_t n_segments, std::uint64_t seed, double alpha = 1.0);

    std::size_t num_segments() const noexcept { return segments_.size(); }
    std::size_t num_locations() const noexcept { return locations_.size(); }
    const StreamSegment& segment(std::size_t i) const { return segments_.at(i); }
    const StreamLocation& location(std::size_t j) const { return locations_.at(j); }

    /// Segments from location j down to its outlet, including its own.
    std::vector<long> downstream_set(std::size_t j) const;
    bool flow_connected(std::size_t j, std::size_t k) const;
    /// Segments strictly between two flow-connected locations plus the
    /// upstream location's own segment; empty when not flow-connected.
    std::vector<long> between_set(std::size_t j, std::size_t k) const;
    /// Along-channel path length. Throws NoPathError across trees.
    double stream_distance(std::size_t j, std::size_t k) const;

private:
    std::vector<std::size_t> path_to_outlet(std::size_t segment_index) const;
    std::vector<std::size_t> downstream_indices(std::size_t j) const;
    std::size_t check_location(std::size_t j) const;
    double position(std::size_t j) const;  // distance from the outlet

    std::vector<StreamSegment> segments_;
    std::vector<StreamLocation> locations_;
    std::vector<std::optional<std::size_t>> parent_;  // downstream segment index
    std::vector<std::size_t> location_segment_;
    std::vector<std::size_t> root_;
    std::vector<double> depth_;  // outlet to downstream end of each segment
};

/// Location x location tail-up covariance. Zero for pairs that are not
/// flow-connected; nugget + zeta1 on the diagonal.
Matrix tailup_covariance(const StreamNetwork& net, const TailUpParams& params);

}  // namespace s3t
