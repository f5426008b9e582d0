#include "distvote/run.hpp"

#include "json.hpp"

namespace distvote {

std::optional<Tally> RunResult::agreed_tally() const {
  std::optional<Tally> common;
  for (auto v : honest_voters) {
    auto it = tallies.find(v);
    if (it == tallies.end()) return std::nullopt;
    if (!common) {
      common = it->second;
    } else if (*common != it->second) {
      return std::nullopt;
    }
  }
  return common;
}

std::string RunResult::outcome_json() const {
  nlohmann::ordered_json j;
  j["protocol"] = protocol;
  j["seed"] = trace.seed;
  j["complete"] = complete();
  j["quiescent"] = status.quiescent;
  j["end_tick"] = status.end_tick;
  j["completion"] = completion;
  j["messages"] = message_count();
  j["bytes"] = trace.sent_bytes();
  j["voters"] = voters.size();
  j["honest_voters"] = honest_voters.size();
  if (auto t = agreed_tally()) {
    j["tally"] = *t;
  } else {
    j["tally"] = nullptr;
  }
  nlohmann::ordered_json per_peer = nlohmann::ordered_json::object();
  for (const auto& [peer, t] : tallies) per_peer[std::to_string(peer)] = t;
  j["tallies"] = per_peer;
  j["flagged"] = flagged;
  nlohmann::ordered_json c = nlohmann::ordered_json::object();
  for (const auto& [k, v] : counters) c[k] = v;
  j["counters"] = c;
  j["diagnostics"] = diagnostics;
  return j.dump(2);
}

void finalize_run(RunResult& result, const Simulator& sim) {
  result.honest_voters.clear();
  for (auto v : result.voters) {
    if (sim.is_crashed(v) || sim.behavior_of(v) != nullptr) continue;
    if (sim.faults().crashed.contains(v)) continue;
    result.honest_voters.push_back(v);
  }
  std::size_t with_tally = 0;
  for (auto v : result.honest_voters) with_tally += result.tallies.contains(v);
  result.completion =
      result.honest_voters.empty()
          ? 0.0
          : static_cast<double>(with_tally) /
                static_cast<double>(result.honest_voters.size());
}

std::uint64_t sub_seed(std::uint64_t seed, std::string_view purpose) {
  auto d = sha256(purpose);
  std::uint64_t salt = 0;
  for (int i = 0; i < 8; ++i) salt = (salt << 8) | d[i];
  return splitmix64(seed ^ salt);
}

}  // namespace distvote
