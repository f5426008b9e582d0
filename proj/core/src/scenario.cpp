#include "distvote/scenario.hpp"

#include <fstream>
#include <sstream>

#include "distvote/baselines.hpp"
#include "distvote/chainvote.hpp"
#include "distvote/dpol.hpp"
#include "distvote/spp.hpp"
#include "json.hpp"

namespace distvote {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::dpol: return "dpol";
    case Protocol::spp: return "spp";
    case Protocol::helios: return "helios";
    case Protocol::chainvote: return "chainvote";
    case Protocol::mesh: return "mesh";
  }
  return "?";
}

std::optional<Protocol> parse_protocol(std::string_view name) {
  for (auto p : {Protocol::dpol, Protocol::spp, Protocol::helios,
                 Protocol::chainvote, Protocol::mesh}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

bool operator==(const FaultModel& a, const FaultModel& b) {
  return a.crashed == b.crashed && a.drop_probability == b.drop_probability &&
         a.lost_messages == b.lost_messages &&
         a.drop_phases == b.drop_phases && a.byzantine == b.byzantine &&
         a.max_delay == b.max_delay;
}

bool operator==(const Scenario& a, const Scenario& b) {
  return a.protocol == b.protocol && a.n == b.n && a.d == b.d &&
         a.params == b.params && a.choices == b.choices &&
         a.distribution == b.distribution && a.faults == b.faults &&
         a.seed == b.seed && a.max_ticks == b.max_ticks && a.output == b.output;
}

namespace {

std::string at(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

std::uint64_t get_uint(const json& j, const std::string& path) {
  if (!j.is_number_integer() ||
      (!j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
    throw ScenarioParseError(path, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

double get_double(const json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioParseError(path, "expected a number");
  return j.get<double>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ScenarioParseError(path, "expected true or false");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ScenarioParseError(path, "expected a string");
  return j.get<std::string>();
}

const json& get_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ScenarioParseError(path, "expected an object");
  return j;
}

const json& get_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ScenarioParseError(path, "expected an array");
  return j;
}

FaultModel parse_faults(const json& j, const std::string& path) {
  get_object(j, path);
  FaultModel f;
  for (const auto& [key, value] : j.items()) {
    const auto p = at(path, key);
    if (key == "crashed") {
      get_array(value, p);
      for (std::size_t i = 0; i < value.size(); ++i) {
        f.crashed.insert(static_cast<PeerId>(get_uint(value[i], index(p, i))));
      }
    } else if (key == "drop_probability") {
      f.drop_probability = get_double(value, p);
      if (f.drop_probability < 0.0 || f.drop_probability > 1.0) {
        throw ScenarioParseError(p, "must lie in [0, 1]");
      }
    } else if (key == "drop_phases") {
      get_array(value, p);
      for (std::size_t i = 0; i < value.size(); ++i) {
        auto name = get_string(value[i], index(p, i));
        auto phase = parse_phase(name);
        if (!phase) {
          throw ScenarioParseError(index(p, i), "unknown phase '" + name + "'");
        }
        f.drop_phases.insert(*phase);
      }
    } else if (key == "byzantine") {
      get_object(value, p);
      for (const auto& [peer, id] : value.items()) {
        const auto pp = at(p, peer);
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
          v = std::stoull(peer, &pos);
        } catch (const std::exception&) {
          pos = 0;
        }
        if (pos == 0 || pos != peer.size()) {
          throw ScenarioParseError(pp, "key must be a peer id");
        }
        f.byzantine[static_cast<PeerId>(v)] = get_string(id, pp);
      }
    } else if (key == "lost_messages") {
      get_array(value, p);
      for (std::size_t i = 0; i < value.size(); ++i) {
        auto id = get_uint(value[i], index(p, i));
        if (id < 1) throw ScenarioParseError(index(p, i), "message ids start at 1");
        f.lost_messages.insert(id);
      }
    } else if (key == "max_delay") {
      f.max_delay = get_uint(value, p);
      if (f.max_delay < 1) throw ScenarioParseError(p, "must be >= 1");
    } else {
      throw ScenarioParseError(p, "unknown field");
    }
  }
  return f;
}

ProtocolParams parse_params(const json& j, const std::string& path) {
  get_object(j, path);
  ProtocolParams p;
  for (const auto& [key, value] : j.items()) {
    const auto fp = at(path, key);
    if (key == "k") p.k = get_uint(value, fp);
    else if (key == "audit") p.audit = get_bool(value, fp);
    else if (key == "cluster_size") p.cluster_size = get_uint(value, fp);
    else if (key == "t") p.t = get_uint(value, fp);
    else if (key == "trustees") p.trustees = get_uint(value, fp);
    else if (key == "difficulty") p.difficulty = static_cast<unsigned>(get_uint(value, fp));
    else if (key == "cutoff_height") p.cutoff_height = get_uint(value, fp);
    else if (key == "mesh_degree") p.mesh_degree = get_uint(value, fp);
    else if (key == "rsa_bits") p.rsa_bits = get_uint(value, fp);
    else if (key == "hash_budget") p.hash_budget = get_uint(value, fp);
    else if (key == "patience") p.patience = get_uint(value, fp);
    else if (key == "group") {
      p.group = get_string(value, fp);
      if (*p.group != "standard" && *p.group != "tiny") {
        throw ScenarioParseError(fp, "expected \"standard\" or \"tiny\"");
      }
    } else {
      throw ScenarioParseError(fp, "unknown field");
    }
  }
  return p;
}

// Which parameters each protocol reads.
void check_params_apply(const Scenario& s) {
  const auto& p = s.params;
  auto reject = [&](bool set, std::string_view name) {
    if (set) {
      throw ScenarioParseError(at("params", name),
                               "not used by protocol " +
                                   std::string(to_string(s.protocol)));
    }
  };
  const bool dpol = s.protocol == Protocol::dpol;
  const bool spp = s.protocol == Protocol::spp;
  const bool helios = s.protocol == Protocol::helios;
  const bool chain = s.protocol == Protocol::chainvote;
  reject(p.k && !dpol, "k");
  reject(p.audit && !dpol, "audit");
  reject(p.cluster_size && !spp, "cluster_size");
  reject(p.t && !(spp || helios), "t");
  reject(p.trustees && !helios, "trustees");
  reject(p.patience && !(spp || helios), "patience");
  reject(p.group && !(spp || helios), "group");
  reject(p.difficulty && !chain, "difficulty");
  reject(p.cutoff_height && !chain, "cutoff_height");
  reject(p.mesh_degree && !chain, "mesh_degree");
  reject(p.rsa_bits && !chain, "rsa_bits");
  reject(p.hash_budget && !chain, "hash_budget");
}

const crypto::Group* group_of(const Scenario& s) {
  if (s.params.group && *s.params.group == "tiny") return &crypto::Group::tiny();
  return &crypto::Group::standard();
}

DpolConfig dpol_config(const Scenario& s) {
  DpolConfig c;
  c.params = {s.n, s.params.k.value_or(1), s.d};
  c.audit = s.params.audit.value_or(false);
  c.max_ticks = s.max_ticks;
  return c;
}

SppConfig spp_config(const Scenario& s) {
  SppConfig c;
  c.params = {s.n, s.params.cluster_size.value_or(4), s.params.t.value_or(3),
              s.d};
  c.group = group_of(s);
  c.max_ticks = s.max_ticks;
  c.patience = s.params.patience.value_or(0);
  return c;
}

HeliosConfig helios_config(const Scenario& s) {
  HeliosConfig c;
  c.params = {s.n, s.params.trustees.value_or(3), s.params.t.value_or(2), s.d};
  c.group = group_of(s);
  c.max_ticks = s.max_ticks;
  c.patience = s.params.patience.value_or(0);
  return c;
}

ChainConfig chain_config(const Scenario& s) {
  ChainConfig c;
  c.params.n = s.n;
  c.params.d = s.d;
  c.params.difficulty = s.params.difficulty.value_or(8);
  c.params.cutoff_height = s.params.cutoff_height.value_or(0);
  c.params.mesh_degree =
      s.params.mesh_degree.value_or(std::min<std::size_t>(4, s.n ? s.n - 1 : 0));
  c.params.rsa_bits = s.params.rsa_bits.value_or(1024);
  c.params.hash_budget = s.params.hash_budget.value_or(0);
  c.max_ticks = s.max_ticks;
  return c;
}

}  // namespace

std::vector<std::size_t> Scenario::resolved_choices() const {
  if (!choices.empty()) return choices;
  std::vector<double> weights = distribution;
  if (weights.empty()) weights.assign(d, 1.0);
  double total = 0;
  for (auto w : weights) total += w;
  Rng rng(sub_seed(seed, "scenario/choices"));
  std::vector<std::size_t> out(n);
  for (auto& c : out) {
    double x = rng.unit() * total;
    c = weights.size() - 1;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (x < weights[j]) {
        c = j;
        break;
      }
      x -= weights[j];
    }
  }
  return out;
}

void Scenario::validate() const {
  check_params_apply(*this);
  if (!choices.empty()) {
    if (choices.size() != n) {
      throw ScenarioParseError("choices", "must list exactly n = " +
                                              std::to_string(n) + " entries");
    }
    for (std::size_t i = 0; i < choices.size(); ++i) {
      if (choices[i] >= d) {
        throw ScenarioParseError(index("choices", i), "choice out of range");
      }
    }
  }
  if (!distribution.empty()) {
    if (distribution.size() != d) {
      throw ScenarioParseError("choices.distribution", "needs d weights");
    }
    double total = 0;
    for (std::size_t i = 0; i < distribution.size(); ++i) {
      if (distribution[i] < 0) {
        throw ScenarioParseError(index("choices.distribution", i),
                                 "weight must be >= 0");
      }
      total += distribution[i];
    }
    if (total <= 0) {
      throw ScenarioParseError("choices.distribution", "weights sum to zero");
    }
  }

  std::size_t peers = n;
  BehaviorRegistry registry;
  switch (protocol) {
    case Protocol::dpol: {
      auto c = dpol_config(*this);
      c.params.validate();
      registry = dpol_behaviors(c.params);
      break;
    }
    case Protocol::spp: {
      auto c = spp_config(*this);
      c.params.validate();
      registry = spp_behaviors(c.params, *c.group, {});
      break;
    }
    case Protocol::helios: {
      auto c = helios_config(*this);
      c.params.validate();
      peers = n + 1 + c.params.trustees;
      registry = helios_behaviors(*c.group);
      break;
    }
    case Protocol::chainvote: {
      auto c = chain_config(*this);
      c.params.validate();
      peers = n + 1;
      registry = chain_behaviors();
      if (faults.crashed.contains(static_cast<PeerId>(n)) ||
          faults.byzantine.contains(static_cast<PeerId>(n))) {
        throw ScenarioParseError("faults", "the token issuer cannot be faulted");
      }
      break;
    }
    case Protocol::mesh: {
      MeshParams{n, d}.validate();
      break;
    }
  }
  try {
    faults.validate(peers);
  } catch (const ConfigError& e) {
    throw ScenarioParseError("faults", e.what());
  }
  for (const auto& [peer, id] : faults.byzantine) {
    if (!registry.contains(id)) {
      throw ScenarioParseError(at("faults.byzantine", std::to_string(peer)),
                               "unknown behavior '" + id + "' for protocol " +
                                   std::string(to_string(protocol)));
    }
  }
}

std::string Scenario::to_json() const {
  ordered_json j;
  j["schema"] = std::string(kScenarioSchema);
  j["protocol"] = std::string(to_string(protocol));
  j["n"] = n;
  j["d"] = d;
  ordered_json p = ordered_json::object();
  if (params.k) p["k"] = *params.k;
  if (params.audit) p["audit"] = *params.audit;
  if (params.cluster_size) p["cluster_size"] = *params.cluster_size;
  if (params.t) p["t"] = *params.t;
  if (params.trustees) p["trustees"] = *params.trustees;
  if (params.difficulty) p["difficulty"] = *params.difficulty;
  if (params.cutoff_height) p["cutoff_height"] = *params.cutoff_height;
  if (params.mesh_degree) p["mesh_degree"] = *params.mesh_degree;
  if (params.rsa_bits) p["rsa_bits"] = *params.rsa_bits;
  if (params.hash_budget) p["hash_budget"] = *params.hash_budget;
  if (params.patience) p["patience"] = *params.patience;
  if (params.group) p["group"] = *params.group;
  j["params"] = p;
  if (!choices.empty()) {
    j["choices"] = choices;
  } else if (!distribution.empty()) {
    j["choices"] = ordered_json{{"distribution", distribution}};
  }
  ordered_json f;
  f["crashed"] = faults.crashed;
  f["drop_probability"] = faults.drop_probability;
  ordered_json phases = ordered_json::array();
  for (auto ph : faults.drop_phases) phases.push_back(std::string(to_string(ph)));
  f["drop_phases"] = phases;
  ordered_json byz = ordered_json::object();
  for (const auto& [peer, id] : faults.byzantine) byz[std::to_string(peer)] = id;
  f["byzantine"] = byz;
  f["lost_messages"] = faults.lost_messages;
  f["max_delay"] = faults.max_delay;
  j["faults"] = f;
  j["seed"] = seed;
  j["max_ticks"] = max_ticks;
  if (output) j["output"] = *output;
  return j.dump(2);
}

Scenario parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioParseError("$", std::string("not valid JSON: ") + e.what());
  }
  get_object(j, "$");
  Scenario s;
  bool have_protocol = false, have_n = false, have_schema = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "schema") {
      auto v = get_string(value, key);
      if (v != kScenarioSchema) {
        throw ScenarioParseError(key, "unsupported schema '" + v +
                                          "', expected '" +
                                          std::string(kScenarioSchema) + "'");
      }
      have_schema = true;
    } else if (key == "protocol") {
      auto name = get_string(value, key);
      auto p = parse_protocol(name);
      if (!p) throw ScenarioParseError(key, "unknown protocol '" + name + "'");
      s.protocol = *p;
      have_protocol = true;
    } else if (key == "n") {
      s.n = get_uint(value, key);
      have_n = true;
    } else if (key == "d") {
      s.d = get_uint(value, key);
    } else if (key == "params") {
      s.params = parse_params(value, key);
    } else if (key == "choices") {
      if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i) {
          s.choices.push_back(get_uint(value[i], index(key, i)));
        }
      } else if (value.is_object()) {
        for (const auto& [k2, v2] : value.items()) {
          const auto p = at(key, k2);
          if (k2 != "distribution") throw ScenarioParseError(p, "unknown field");
          get_array(v2, p);
          for (std::size_t i = 0; i < v2.size(); ++i) {
            s.distribution.push_back(get_double(v2[i], index(p, i)));
          }
        }
      } else {
        throw ScenarioParseError(key, "expected a list or {\"distribution\": [...]}");
      }
    } else if (key == "faults") {
      s.faults = parse_faults(value, key);
    } else if (key == "seed") {
      s.seed = get_uint(value, key);
    } else if (key == "max_ticks") {
      s.max_ticks = get_uint(value, key);
    } else if (key == "output") {
      s.output = get_string(value, key);
    } else {
      throw ScenarioParseError(key, "unknown field");
    }
  }
  if (!have_schema) throw ScenarioParseError("schema", "missing");
  if (!have_protocol) throw ScenarioParseError("protocol", "missing");
  if (!have_n) throw ScenarioParseError("n", "missing");
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Scenario canonical_scenario(Protocol protocol, std::size_t n,
                            std::uint64_t seed) {
  Scenario s;
  s.protocol = protocol;
  s.n = n;
  s.d = 2;
  s.seed = seed;
  switch (protocol) {
    case Protocol::dpol: s.params.k = 1; break;
    case Protocol::spp:
      s.params.cluster_size = 4;
      s.params.t = 3;
      break;
    case Protocol::helios:
      s.params.trustees = 3;
      s.params.t = 2;
      break;
    case Protocol::chainvote: s.params.difficulty = 8; break;
    case Protocol::mesh: break;
  }
  return s;
}

ScenarioResult run_scenario(const Scenario& s) {
  s.validate();
  ScenarioResult out;
  out.choices = s.resolved_choices();
  switch (s.protocol) {
    case Protocol::dpol:
      out.run = run_dpol(dpol_config(s), out.choices, s.faults, s.seed).run;
      break;
    case Protocol::spp:
      out.run = run_spp(spp_config(s), out.choices, s.faults, s.seed).run;
      break;
    case Protocol::helios:
      out.run = run_helios(helios_config(s), out.choices, s.faults, s.seed).run;
      break;
    case Protocol::chainvote:
      out.run = run_chain(chain_config(s), out.choices, s.faults, s.seed).run;
      break;
    case Protocol::mesh:
      out.run = run_mesh(MeshParams{s.n, s.d}, out.choices, s.faults, s.seed,
                         s.max_ticks)
                    .run;
      break;
  }
  out.run.trace.seed = s.seed;
  out.run.trace.params = nlohmann::json::parse(s.to_json()).dump();
  if (out.run.complete()) out.row = classify(out.run);
  return out;
}

std::string render_report_csv(const Scenario& s, const ScenarioResult& r) {
  std::ostringstream out;
  out << "protocol,n,d,seed,complete,completion,messages,bytes,end_tick,tally,"
         "specialisation,topology,distributed_phases,fully_distributed\n";
  out << to_string(s.protocol) << "," << s.n << "," << s.d << "," << s.seed
      << "," << (r.run.complete() ? "true" : "false") << ","
      << r.run.completion << "," << r.run.message_count() << ","
      << r.run.trace.sent_bytes() << "," << r.run.status.end_tick << ",";
  if (auto t = r.run.agreed_tally()) {
    out << "\"";
    for (std::size_t i = 0; i < t->size(); ++i) out << (i ? " " : "") << (*t)[i];
    out << "\"";
  }
  out << ",";
  if (r.row && r.row->classifiable) {
    out << to_string(r.row->specialisation) << "," << to_string(r.row->topology)
        << ",\"" << r.row->phases_label() << "\","
        << (r.row->fully_distributed ? "true" : "false");
  } else {
    out << "unclassifiable,,,";
  }
  out << "\n";
  return out.str();
}

}  // namespace distvote
