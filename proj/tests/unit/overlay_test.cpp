#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "distvote/overlay.hpp"

using namespace distvote;

TEST(Overlay, RingClustersPartitionPeers) {
  auto o = build_ring_clusters(16, 1);
  EXPECT_EQ(o.kind, OverlayKind::ring_clusters);
  ASSERT_EQ(o.clusters.size(), 4u);
  std::set<PeerId> seen;
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_EQ(o.clusters[c].size(), 4u);
    EXPECT_EQ(o.successor(c), (c + 1) % 4);
    EXPECT_EQ(o.predecessor(o.successor(c)), c);
    for (auto p : o.clusters[c]) {
      EXPECT_TRUE(seen.insert(p).second);
      EXPECT_EQ(o.cluster_of[p], c);
    }
  }
  EXPECT_EQ(seen.size(), 16u);
}

TEST(Overlay, RingRejectsNonSquare) {
  EXPECT_THROW(build_ring_clusters(10, 1), ConfigError);
  EXPECT_THROW(build_ring_clusters(1, 1), ConfigError);
}

TEST(Overlay, RingSeedChangesAssignment) {
  EXPECT_NE(build_ring_clusters(25, 1).clusters, build_ring_clusters(25, 2).clusters);
  EXPECT_EQ(build_ring_clusters(25, 1).clusters, build_ring_clusters(25, 1).clusters);
}

TEST(Overlay, RecipientsAreBalanced) {
  for (std::size_t k : {1u, 2u}) {
    auto o = build_ring_clusters(25, 4);
    auto map = assign_recipients(o, k, 9);
    std::map<PeerId, std::size_t> indegree;
    for (PeerId p = 0; p < 25; ++p) {
      ASSERT_EQ(map[p].size(), 2 * k + 1);
      std::set<PeerId> distinct(map[p].begin(), map[p].end());
      EXPECT_EQ(distinct.size(), 2 * k + 1);
      for (auto r : map[p]) {
        EXPECT_EQ(o.cluster_of[r], o.successor(o.cluster_of[p]));
        indegree[r]++;
      }
    }
    for (PeerId p = 0; p < 25; ++p) EXPECT_EQ(indegree[p], 2 * k + 1);
  }
}

TEST(Overlay, RecipientsNineK1) {
  auto o = build_ring_clusters(9, 1);
  auto map = assign_recipients(o, 1, 1);
  std::map<PeerId, int> indeg;
  for (auto& l : map) {
    EXPECT_EQ(l.size(), 3u);
    for (auto r : l) indeg[r]++;
  }
  for (auto& [p, c] : indeg) EXPECT_EQ(c, 3);
}

TEST(Overlay, RecipientsNeedEnoughClusterMembers) {
  auto o = build_ring_clusters(16, 1);
  EXPECT_THROW(assign_recipients(o, 2, 1), ConfigError);
  EXPECT_THROW(assign_recipients(build_star(4, 0), 1, 1), ConfigError);
}

TEST(Overlay, TreeClusters) {
  auto o = build_tree_clusters(28, 4, 5);
  EXPECT_EQ(o.kind, OverlayKind::tree_clusters);
  ASSERT_EQ(o.clusters.size(), 7u);
  EXPECT_FALSE(o.parent(0).has_value());
  for (std::size_t c = 1; c < 7; ++c) {
    auto parent = o.parent(c);
    ASSERT_TRUE(parent.has_value());
    const auto& kids = o.children(*parent);
    EXPECT_NE(std::find(kids.begin(), kids.end(), c), kids.end());
  }
  EXPECT_EQ(o.tree_depth(), 2u);
  std::set<PeerId> all;
  for (auto& c : o.clusters) all.insert(c.begin(), c.end());
  EXPECT_EQ(all.size(), 28u);
  EXPECT_THROW(build_tree_clusters(30, 4, 1), ConfigError);
  EXPECT_THROW(build_tree_clusters(8, 1, 1), ConfigError);
}

TEST(Overlay, GossipMeshIsConnectedWithMinimumDegree) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto o = build_gossip_mesh(30, 4, seed);
    EXPECT_EQ(reachable_count(o, 0), 30u);
    for (PeerId p = 0; p < 30; ++p) {
      auto nb = o.neighbours(p);
      EXPECT_GE(nb.size(), 4u);
      for (auto q : nb) {
        auto back = o.neighbours(q);
        EXPECT_NE(std::find(back.begin(), back.end(), p), back.end());
      }
    }
  }
  EXPECT_THROW(build_gossip_mesh(4, 4, 1), ConfigError);
  EXPECT_THROW(build_gossip_mesh(10, 1, 1), ConfigError);
}

TEST(Overlay, StarAndReachability) {
  auto o = build_star(6, 5);
  EXPECT_EQ(o.neighbours(0), (std::vector<PeerId>{5}));
  EXPECT_EQ(o.neighbours(5).size(), 5u);
  EXPECT_EQ(reachable_count(o, 0), 6u);
  EXPECT_EQ(reachable_count(o, 0, {5}), 1u);
  EXPECT_EQ(reachable_count(o, 5, {5}), 0u);
  EXPECT_THROW(build_star(3, 3), ConfigError);
}

TEST(Overlay, ExactSqrt) {
  EXPECT_EQ(exact_sqrt(0), 0u);
  EXPECT_EQ(exact_sqrt(49), 7u);
  EXPECT_FALSE(exact_sqrt(50).has_value());
}

TEST(Overlay, KindAccessorsGuarded) {
  auto o = build_star(3, 0);
  EXPECT_THROW(o.successor(0), std::logic_error);
  EXPECT_THROW(o.parent(0), std::logic_error);
}
