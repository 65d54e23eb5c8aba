#include "s3t/error.hpp"
#include "s3t/stream_network.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <map>

using namespace s3t;

namespace {

const std::string kDir = S3T_FIXTURES;

StreamNetwork fixture() {
    return StreamNetwork::from_csv(kDir + "/branching9_segments.csv", kDir + "/branching9_locations.csv");
}

// Floyd-Warshall over segment endpoints; independent of the library's
// outlet-depth bookkeeping.
double graph_distance(const StreamNetwork& net, std::size_t a, std::size_t b) {
    const std::size_t n = net.num_segments();
    std::map<long, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[net.segment(i).id] = i;
    // node i = upstream end of segment i; node n + i = downstream end.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> d(2 * n, std::vector<double>(2 * n, inf));
    for (std::size_t i = 0; i < 2 * n; ++i) d[i][i] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i][n + i] = d[n + i][i] = net.segment(i).length;
        if (net.segment(i).downstream_id) {
            const std::size_t parent = index.at(*net.segment(i).downstream_id);
            d[n + i][parent] = d[parent][n + i] = 0.0;
        }
    }
    for (std::size_t k = 0; k < 2 * n; ++k)
        for (std::size_t i = 0; i < 2 * n; ++i)
            for (std::size_t j = 0; j < 2 * n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);

    const auto& la = net.location(a);
    const auto& lb = net.location(b);
    const std::size_t sa = index.at(la.segment_id);
    const std::size_t sb = index.at(lb.segment_id);
    if (sa == sb) return std::abs(la.offset - lb.offset);
    const double up_a = net.segment(sa).length - la.offset;
    const double up_b = net.segment(sb).length - lb.offset;
    double best = inf;
    for (auto [ea, da] : {std::pair{sa, up_a}, std::pair{n + sa, la.offset}})
        for (auto [eb, db] : {std::pair{sb, up_b}, std::pair{n + sb, lb.offset}})
            best = std::min(best, da + d[ea][eb] + db);
    return best;
}

}  // namespace

TEST(StreamNetwork, DownstreamSets) {
    const auto net = fixture();
    EXPECT_EQ(net.downstream_set(0), (std::vector<long>{1}));
    EXPECT_EQ(net.downstream_set(1), (std::vector<long>{1, 3, 5}));
    EXPECT_EQ(net.downstream_set(2), (std::vector<long>{1, 3, 4, 6}));
    EXPECT_THROW(net.downstream_set(3), IndexError);
}

TEST(StreamNetwork, FlowConnectivity) {
    const auto net = fixture();
    EXPECT_TRUE(net.flow_connected(0, 2));
    EXPECT_TRUE(net.flow_connected(0, 1));
    EXPECT_FALSE(net.flow_connected(1, 2));
    EXPECT_TRUE(net.flow_connected(0, 0));
}

TEST(StreamNetwork, BetweenSets) {
    const auto net = fixture();
    EXPECT_EQ(net.between_set(0, 2), (std::vector<long>{3, 4, 6}));
    EXPECT_EQ(net.between_set(0, 1), (std::vector<long>{3, 5}));
    EXPECT_TRUE(net.between_set(1, 2).empty());
    EXPECT_TRUE(net.between_set(1, 1).empty());
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(net.between_set(j, k), net.between_set(k, j));
}

TEST(StreamNetwork, DistancesMatchGraphOracle) {
    const auto net = fixture();
    EXPECT_EQ(net.stream_distance(1, 1), 0.0);
    EXPECT_DOUBLE_EQ(net.stream_distance(0, 1), 1.75);  // 0.5 + segment 3 + 0.25
    EXPECT_DOUBLE_EQ(net.stream_distance(0, 2), 3.25);
    EXPECT_DOUBLE_EQ(net.stream_distance(1, 2), 2.0);
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(net.stream_distance(j, k), graph_distance(net, j, k), 1e-12);
}

TEST(StreamNetwork, SameSegmentDistance) {
    const StreamNetwork net({{1, std::nullopt, 10.0, 1.0}}, {{1, 1, 2.0}, {2, 1, 5.0}});
    EXPECT_DOUBLE_EQ(net.stream_distance(0, 1), 3.0);
}

TEST(StreamNetwork, DisconnectedTreesHaveNoPath) {
    const StreamNetwork net({{1, std::nullopt, 1.0, 1.0}, {2, std::nullopt, 1.0, 1.0}}, {{1, 1, 0.1}, {2, 2, 0.1}});
    EXPECT_THROW(net.stream_distance(0, 1), NoPathError);
    EXPECT_FALSE(net.flow_connected(0, 1));
    EXPECT_EQ(tailup_covariance(net, {1.0, 1.0, 0.0})(0, 1), 0.0);
}

TEST(StreamNetwork, TailUpMatchesDisplayedStructure) {
    const auto net = fixture();
    const TailUpParams params{0.027, 0.68, 0.01};
    const Matrix c = tailup_covariance(net, params);
    const double w3 = 0.6, w4 = 0.7, w5 = 0.3, w6 = 0.55;
    EXPECT_DOUBLE_EQ(c(0, 0), 0.037);
    EXPECT_DOUBLE_EQ(c(1, 1), 0.037);
    EXPECT_NEAR(c(0, 1), std::sqrt(w3 * w5) * 0.027 * std::exp(-1.75 / 0.68), 1e-15);
    EXPECT_NEAR(c(0, 2), std::sqrt(w3 * w4 * w6) * 0.027 * std::exp(-3.25 / 0.68), 1e-15);
    EXPECT_EQ(c(1, 2), 0.0);
    EXPECT_EQ(c, c.transpose());
    // zero pattern is exactly the non-flow-connected pairs
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(c(j, k) == 0.0, !net.flow_connected(j, k));
}

TEST(StreamNetwork, TwoNodeScalarOracle) {
    const StreamNetwork net({{1, std::nullopt, 2.0, 1.0}, {2, 1, 1.5, 1.0}}, {{1, 1, 0.5}, {2, 2, 1.0}});
    const Matrix c = tailup_covariance(net, {0.027, 0.68, 0.0});
    EXPECT_NEAR(c(0, 1), 1.0 * 0.027 * std::exp(-(1.5 + 1.0) / 0.68), 1e-16);
}

TEST(StreamNetwork, ScalingZeta1) {
    const auto net = fixture();
    const Matrix a = tailup_covariance(net, {0.5, 0.9, 0.2});
    const Matrix b = tailup_covariance(net, {1.5, 0.9, 0.2});
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
            if (j == k) EXPECT_DOUBLE_EQ(b(j, k), 0.2 + 1.5);
            else EXPECT_NEAR(b(j, k), 3.0 * a(j, k), 1e-15);
        }
}

TEST(StreamNetwork, UnbranchedChannelIsExponential) {
    std::vector<StreamSegment> segs{{1, std::nullopt, 1.0, 1.0}};
    for (long i = 2; i <= 5; ++i) segs.push_back({i, i - 1, 0.5 + 0.1 * i, 1.0});
    std::vector<StreamLocation> locs;
    for (long i = 1; i <= 5; ++i) locs.push_back({i, i, 0.3});
    const StreamNetwork net(segs, locs);
    const Matrix c = tailup_covariance(net, {2.0, 1.3, 0.0});
    for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t k = 0; k < 5; ++k)
            EXPECT_NEAR(c(j, k), 2.0 * std::exp(-net.stream_distance(j, k) / 1.3), 1e-14);
}

TEST(StreamNetwork, Validation) {
    // children of 1 sum to 0.9
    EXPECT_THROW(StreamNetwork({{1, std::nullopt, 1, 1}, {2, 1, 1, 0.5}, {3, 1, 1, 0.4}}, {}),
                 ParameterDomainError);
    // cycle
    EXPECT_THROW(StreamNetwork({{1, 2, 1, 1}, {2, 1, 1, 1}}, {}), InputError);
    // root weight
    EXPECT_THROW(StreamNetwork({{1, std::nullopt, 1, 0.5}}, {}), ParameterDomainError);
    // offset outside segment
    EXPECT_THROW(StreamNetwork({{1, std::nullopt, 1, 1}}, {{1, 1, 1.5}}), ParameterDomainError);
    // unknown downstream id
    EXPECT_THROW(StreamNetwork({{1, 7, 1, 1}}, {}), InputError);
    EXPECT_THROW(tailup_covariance(fixture(), {0.0, 1.0, 0.0}), ParameterDomainError);
    EXPECT_THROW(tailup_covariance(fixture(), {1.0, 1.0, -0.1}), ParameterDomainError);
}

TEST(StreamNetwork, RandomTreesAreValidAndPsd) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto net = StreamNetwork::random_binary_tree(25, seed, 2.0);
        EXPECT_EQ(net.num_segments(), 25u);
        const Matrix c = tailup_covariance(net, {1.0, 0.8, 0.0});
        EXPECT_EQ(c, c.transpose());
        EXPECT_GE(min_eigenvalue(c), -1e-10);
        for (std::size_t j = 0; j < net.num_locations(); ++j)
            for (std::size_t k = 0; k < net.num_locations(); ++k)
                EXPECT_NEAR(net.stream_distance(j, k), graph_distance(net, j, k), 1e-10);
    }
    const auto a = StreamNetwork::random_binary_tree(9, 3);
    const auto b = StreamNetwork::random_binary_tree(9, 3);
    EXPECT_EQ(tailup_covariance(a, {}), tailup_covariance(b, {}));
}
