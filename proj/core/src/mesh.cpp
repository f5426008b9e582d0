#include "distvote/baselines.hpp"

#include <memory>

namespace distvote {

namespace {

constexpr std::string_view kShare = "mesh/share";
constexpr std::string_view kColumn = "mesh/column";

using Vec = std::vector<std::uint64_t>;

std::uint64_t add_mod(std::uint64_t a, std::uint64_t b) {
  return (a + b) % kMeshModulus;
}

std::uint64_t sub_mod(std::uint64_t a, std::uint64_t b) {
  return (a + kMeshModulus - b) % kMeshModulus;
}

Bytes encode_vec(const Vec& v) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (auto x : v) w.u64(x);
  return std::move(w).bytes();
}

Vec decode_vec(std::span<const std::uint8_t> bytes, std::size_t d) {
  ByteReader r(bytes);
  if (r.u32() != d) throw DecodeError("share dimension mismatch");
  Vec v(d);
  for (auto& x : v) {
    x = r.u64();
    if (x >= kMeshModulus) throw DecodeError("share not reduced");
  }
  r.expect_done();
  return v;
}

struct Shared {
  MeshParams params;
  std::vector<std::size_t> choices;
};

class MeshNode final : public Node {
 public:
  MeshNode(std::shared_ptr<const Shared> s, PeerId self)
      : s_(std::move(s)), self_(self) {}

  void on_start(Context& ctx) override {
    const auto& p = s_->params;
    auto parts = mesh_split(s_->choices[self_], p.d, p.n, ctx.rng());
    ctx.act(Phase::casting, RoleSource::everyone, "voter", "split-ballot");
    for (PeerId q = 0; q < p.n; ++q) {
      if (q == self_) continue;
      ctx.send(q, Phase::casting, std::string(kShare), encode_vec(parts[q]));
    }
    shares_.emplace(self_, std::move(parts[self_]));
    maybe_sum(ctx);
  }

  void on_message(Context& ctx, const Message& msg) override {
    const auto d = s_->params.d;
    try {
      if (msg.tag == kShare) {
        shares_.emplace(msg.from, decode_vec(msg.payload, d));
        maybe_sum(ctx);
      } else if (msg.tag == kColumn) {
        columns_.emplace(msg.from, decode_vec(msg.payload, d));
        maybe_reconstruct(ctx);
      }
    } catch (const DecodeError&) {
      ctx.act(msg.phase, RoleSource::everyone, "voter", "reject-malformed");
    }
  }

  bool terminated() const override { return tally_.has_value(); }
  const std::optional<Tally>& tally() const { return tally_; }
  const std::map<PeerId, Vec>& shares() const { return shares_; }

 private:
  void maybe_sum(Context& ctx) {
    const auto& p = s_->params;
    if (summed_ || shares_.size() < p.n) return;
    summed_ = true;
    std::vector<Vec> parts;
    for (const auto& [_, v] : shares_) parts.push_back(v);
    Vec column = mesh_sum(parts, p.d);
    ctx.act(Phase::aggregation, RoleSource::everyone, "voter", "sum-column");
    for (PeerId q = 0; q < p.n; ++q) {
      if (q == self_) continue;
      ctx.send(q, Phase::aggregation, std::string(kColumn), encode_vec(column));
    }
    columns_.emplace(self_, std::move(column));
    maybe_reconstruct(ctx);
  }

  void maybe_reconstruct(Context& ctx) {
    const auto& p = s_->params;
    if (tally_ || columns_.size() < p.n) return;
    std::vector<Vec> parts;
    for (const auto& [_, v] : columns_) parts.push_back(v);
    Vec total = mesh_sum(parts, p.d);
    ctx.act(Phase::evaluation, RoleSource::everyone, "voter", "reconstruct");
    Tally t;
    for (auto x : total) {
      if (x > p.n) return;  // not a count: some input was not a unit vector
      t.push_back(static_cast<std::int64_t>(x));
    }
    tally_ = std::move(t);
  }

  std::shared_ptr<const Shared> s_;
  PeerId self_;
  std::map<PeerId, Vec> shares_;
  std::map<PeerId, Vec> columns_;
  bool summed_ = false;
  std::optional<Tally> tally_;
};

Overlay complete_graph(std::size_t n) {
  Overlay o;
  o.kind = OverlayKind::gossip_mesh;
  o.clusters.resize(n);
  o.links.resize(n);
  o.cluster_of.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    o.clusters[p] = {static_cast<PeerId>(p)};
    o.cluster_of[p] = p;
    for (std::size_t q = 0; q < n; ++q) {
      if (q != p) o.links[p].push_back(q);
    }
  }
  return o;
}

}  // namespace

std::vector<Vec> mesh_split(std::size_t choice, std::size_t d, std::size_t n,
                            Rng& rng) {
  if (n < 1 || choice >= d) throw std::invalid_argument("mesh_split");
  std::vector<Vec> parts(n, Vec(d, 0));
  for (std::size_t j = 0; j < d; ++j) {
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      parts[i][j] = rng.below(kMeshModulus);
      acc = add_mod(acc, parts[i][j]);
    }
    parts[n - 1][j] = sub_mod(j == choice ? 1 : 0, acc);
  }
  return parts;
}

Vec mesh_sum(std::span<const Vec> parts, std::size_t d) {
  Vec out(d, 0);
  for (const auto& v : parts) {
    for (std::size_t j = 0; j < d; ++j) out[j] = add_mod(out[j], v.at(j));
  }
  return out;
}

void MeshParams::validate() const {
  if (n < 2) throw ConfigError("mesh baseline needs n >= 2");
  if (d < 2) throw ConfigError("d must be >= 2");
}

MeshOutcome run_mesh(const MeshParams& params,
                     std::span<const std::size_t> choices,
                     const FaultModel& faults, std::uint64_t seed,
                     Tick max_ticks) {
  params.validate();
  if (choices.size() != params.n) {
    throw ConfigError("choices must list exactly n entries");
  }
  for (auto c : choices) {
    if (c >= params.d) throw ConfigError("choice out of range");
  }
  auto shared = std::make_shared<Shared>();
  shared->params = params;
  shared->choices.assign(choices.begin(), choices.end());

  Simulator sim(params.n, faults, seed);
  std::vector<MeshNode*> nodes;
  for (PeerId i = 0; i < params.n; ++i) {
    auto node = std::make_unique<MeshNode>(shared, i);
    nodes.push_back(node.get());
    sim.set_node(i, std::move(node));
  }
  MeshOutcome out;
  out.run.protocol = "mesh";
  out.run.status = sim.run_until_quiescent(max_ticks);
  out.run.overlay = complete_graph(params.n);
  for (PeerId i = 0; i < params.n; ++i) {
    out.run.voters.push_back(i);
    if (nodes[i]->tally()) out.run.tallies[i] = *nodes[i]->tally();
    for (const auto& [from, v] : nodes[i]->shares()) {
      if (from != i) out.received[i][from] = v;
    }
  }
  finalize_run(out.run, sim);
  if (out.run.completion < 1.0) {
    out.run.diagnostics.push_back(
        "incomplete: a missing share or column sum blocks reconstruction");
  }
  out.run.trace = sim.take_trace();
  out.run.roles = sim.take_roles();
  return out;
}

}  // namespace distvote
