#pragma once

// Communication structures: ring of clusters, binary tree of clusters,
// gossip mesh, and star. Clusters always partition [0, n); mesh and star
// overlays use singleton clusters so links are uniformly cluster-to-cluster.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "distvote/simnet.hpp"

namespace distvote {

enum class OverlayKind : std::uint8_t {
  ring_clusters,
  tree_clusters,
  gossip_mesh,
  star,
};

std::string_view to_string(OverlayKind kind);

struct Overlay {
  OverlayKind kind = OverlayKind::star;
  std::vector<std::vector<PeerId>> clusters;
  // Directed cluster adjacency. Ring: {successor}. Tree: children.
  // Mesh: neighbours (symmetric). Star: hub -> all, leaf -> {hub}.
  std::vector<std::vector<std::size_t>> links;
  std::vector<std::size_t> cluster_of;  // peer -> cluster index
  std::optional<PeerId> hub;

  std::size_t peer_count() const { return cluster_of.size(); }
  std::size_t successor(std::size_t cluster) const;
  std::size_t predecessor(std::size_t cluster) const;
  std::optional<std::size_t> parent(std::size_t cluster) const;
  const std::vector<std::size_t>& children(std::size_t cluster) const {
    return links.at(cluster);
  }
  std::size_t tree_depth() const;
  // Peer-level neighbours in a mesh or star overlay.
  std::vector<PeerId> neighbours(PeerId peer) const;

  std::string to_json() const;
};

/// Per-sender ordered list of 2k+1 recipients in the successor cluster.
using RecipientMap = std::vector<std::vector<PeerId>>;

Overlay build_ring_clusters(std::size_t n, std::uint64_t seed);
RecipientMap assign_recipients(const Overlay& overlay, std::size_t k,
                               std::uint64_t seed);
Overlay build_tree_clusters(std::size_t n, std::size_t cluster_size,
                            std::uint64_t seed);
Overlay build_gossip_mesh(std::size_t n, std::size_t degree,
                          std::uint64_t seed);
Overlay build_star(std::size_t n, PeerId hub);

/// Integer square root if n is a perfect square.
std::optional<std::size_t> exact_sqrt(std::size_t n);

/// Breadth-first reachability from `start` over a mesh/star overlay, skipping
/// peers in `removed`.
std::size_t reachable_count(const Overlay& overlay, PeerId start,
                            const std::set<PeerId>& removed = {});

}  // namespace distvote
