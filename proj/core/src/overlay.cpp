#include "distvote/overlay.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "json.hpp"

namespace distvote {

std::string_view to_string(OverlayKind kind) {
  switch (kind) {
    case OverlayKind::ring_clusters: return "ring-clusters";
    case OverlayKind::tree_clusters: return "tree-clusters";
    case OverlayKind::gossip_mesh: return "gossip-mesh";
    case OverlayKind::star: return "star";
  }
  return "?";
}

std::optional<std::size_t> exact_sqrt(std::size_t n) {
  std::size_t r = 0;
  while ((r + 1) * (r + 1) <= n) ++r;
  if (r * r != n) return std::nullopt;
  return r;
}

std::size_t Overlay::successor(std::size_t cluster) const {
  if (kind != OverlayKind::ring_clusters) {
    throw std::logic_error("successor() on non-ring overlay");
  }
  return links.at(cluster).front();
}

std::size_t Overlay::predecessor(std::size_t cluster) const {
  if (kind != OverlayKind::ring_clusters) {
    throw std::logic_error("predecessor() on non-ring overlay");
  }
  return (cluster + clusters.size() - 1) % clusters.size();
}

std::optional<std::size_t> Overlay::parent(std::size_t cluster) const {
  if (kind != OverlayKind::tree_clusters) {
    throw std::logic_error("parent() on non-tree overlay");
  }
  if (cluster == 0) return std::nullopt;
  return (cluster - 1) / 2;
}

std::size_t Overlay::tree_depth() const {
  std::size_t depth = 0;
  std::size_t last = clusters.empty() ? 0 : clusters.size() - 1;
  while (last > 0) {
    last = (last - 1) / 2;
    ++depth;
  }
  return depth;
}

std::vector<PeerId> Overlay::neighbours(PeerId peer) const {
  std::vector<PeerId> out;
  for (auto c : links.at(cluster_of.at(peer))) {
    for (auto p : clusters[c]) out.push_back(p);
  }
  return out;
}

std::string Overlay::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(kind));
  j["clusters"] = clusters;
  j["links"] = links;
  if (hub) j["hub"] = *hub;
  return j.dump();
}

namespace {

std::vector<PeerId> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<PeerId> perm(n);
  std::iota(perm.begin(), perm.end(), PeerId{0});
  Rng rng(seed);
  rng.shuffle(perm);
  return perm;
}

void index_clusters(Overlay& o, std::size_t n) {
  o.cluster_of.assign(n, 0);
  for (std::size_t c = 0; c < o.clusters.size(); ++c) {
    for (auto p : o.clusters[c]) o.cluster_of[p] = c;
  }
}

}  // namespace

Overlay build_ring_clusters(std::size_t n, std::uint64_t seed) {
  auto side = exact_sqrt(n);
  if (!side || n < 4) {
    throw ConfigError("n must be a perfect square >= 4 (got " +
                      std::to_string(n) + ")");
  }
  auto perm = seeded_permutation(n, seed);
  Overlay o;
  o.kind = OverlayKind::ring_clusters;
  o.clusters.resize(*side);
  o.links.resize(*side);
  for (std::size_t c = 0; c < *side; ++c) {
    o.clusters[c].assign(perm.begin() + c * *side,
                         perm.begin() + (c + 1) * *side);
    o.links[c] = {(c + 1) % *side};
  }
  index_clusters(o, n);
  return o;
}

RecipientMap assign_recipients(const Overlay& overlay, std::size_t k,
                               std::uint64_t seed) {
  if (overlay.kind != OverlayKind::ring_clusters) {
    throw ConfigError("recipient assignment needs a ring-clusters overlay");
  }
  const std::size_t fanout = 2 * k + 1;
  RecipientMap map(overlay.peer_count());
  Rng rng(seed);
  for (std::size_t c = 0; c < overlay.clusters.size(); ++c) {
    auto senders = overlay.clusters[c];
    auto receivers = overlay.clusters[overlay.successor(c)];
    if (fanout > receivers.size()) {
      throw ConfigError("2k+1 = " + std::to_string(fanout) +
                        " exceeds cluster size " +
                        std::to_string(receivers.size()));
    }
    rng.shuffle(senders);
    rng.shuffle(receivers);
    // Circulant assignment: sender i -> receivers i, i+1, ..., i+2k (mod s).
    // Every receiver is hit by exactly 2k+1 consecutive senders.
    const std::size_t s = receivers.size();
    for (std::size_t i = 0; i < senders.size(); ++i) {
      auto& out = map[senders[i]];
      for (std::size_t j = 0; j < fanout; ++j) {
        out.push_back(receivers[(i + j) % s]);
      }
    }
  }
  return map;
}

Overlay build_tree_clusters(std::size_t n, std::size_t cluster_size,
                            std::uint64_t seed) {
  if (cluster_size < 2) throw ConfigError("cluster_size must be >= 2");
  if (n == 0 || n % cluster_size != 0) {
    throw ConfigError("n (" + std::to_string(n) +
                      ") must be a positive multiple of cluster_size (" +
                      std::to_string(cluster_size) + ")");
  }
  // Chord-style placement: each peer's identifier is a seeded hash; peers are
  // ordered around the identifier ring and cut into consecutive arcs.
  std::vector<std::pair<Digest, PeerId>> ring;
  ring.reserve(n);
  for (PeerId p = 0; p < n; ++p) {
    ByteWriter w;
    w.field("distvote/chord-id").u64(seed).u32(p);
    ring.emplace_back(sha256(w.bytes()), p);
  }
  std::sort(ring.begin(), ring.end());

  const std::size_t count = n / cluster_size;
  Overlay o;
  o.kind = OverlayKind::tree_clusters;
  o.clusters.resize(count);
  o.links.resize(count);
  for (std::size_t i = 0; i < n; ++i) {
    o.clusters[i / cluster_size].push_back(ring[i].second);
  }
  for (std::size_t c = 1; c < count; ++c) o.links[(c - 1) / 2].push_back(c);
  index_clusters(o, n);
  return o;
}

Overlay build_gossip_mesh(std::size_t n, std::size_t degree,
                          std::uint64_t seed) {
  if (degree < 2 || degree >= n) {
    throw ConfigError("gossip mesh needs 2 <= degree < n (n=" +
                      std::to_string(n) + ", degree=" +
                      std::to_string(degree) + ")");
  }
  Rng rng(seed);
  std::vector<std::set<std::size_t>> adj(n);
  auto connect = [&](std::size_t a, std::size_t b) {
    adj[a].insert(b);
    adj[b].insert(a);
  };
  // A random Hamiltonian cycle guarantees connectivity; random chords then
  // lift every peer to the requested minimum degree.
  std::vector<PeerId> cycle(n);
  std::iota(cycle.begin(), cycle.end(), PeerId{0});
  rng.shuffle(cycle);
  for (std::size_t i = 0; i < n; ++i) connect(cycle[i], cycle[(i + 1) % n]);

  for (std::size_t p = 0; p < n; ++p) {
    while (adj[p].size() < degree) {
      std::vector<std::size_t> needy, any;
      for (std::size_t q = 0; q < n; ++q) {
        if (q == p || adj[p].contains(q)) continue;
        any.push_back(q);
        if (adj[q].size() < degree) needy.push_back(q);
      }
      const auto& pool = needy.empty() ? any : needy;
      connect(p, pool[rng.below(pool.size())]);
    }
  }

  Overlay o;
  o.kind = OverlayKind::gossip_mesh;
  o.clusters.resize(n);
  o.links.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    o.clusters[p] = {static_cast<PeerId>(p)};
    o.links[p].assign(adj[p].begin(), adj[p].end());
  }
  index_clusters(o, n);
  if (reachable_count(o, 0) != n) {
    throw ConfigError("gossip mesh construction left the graph disconnected");
  }
  return o;
}

Overlay build_star(std::size_t n, PeerId hub) {
  if (hub >= n) throw ConfigError("star hub out of range");
  Overlay o;
  o.kind = OverlayKind::star;
  o.hub = hub;
  o.clusters.resize(n);
  o.links.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    o.clusters[p] = {static_cast<PeerId>(p)};
    if (p == hub) continue;
    o.links[p] = {hub};
    o.links[hub].push_back(p);
  }
  index_clusters(o, n);
  return o;
}

std::size_t reachable_count(const Overlay& overlay, PeerId start,
                            const std::set<PeerId>& removed) {
  const std::size_t n = overlay.peer_count();
  if (start >= n || removed.contains(start)) return 0;
  std::vector<bool> seen(n, false);
  std::deque<PeerId> frontier{start};
  seen[start] = true;
  std::size_t count = 1;
  while (!frontier.empty()) {
    PeerId p = frontier.front();
    frontier.pop_front();
    for (auto q : overlay.neighbours(p)) {
      if (seen[q] || removed.contains(q)) continue;
      seen[q] = true;
      ++count;
      frontier.push_back(q);
    }
  }
  return count;
}

}  // namespace distvote
