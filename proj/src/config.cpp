#include "blocks/config.hpp"

#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "blocks/error.hpp"
#include "toml.hpp"

namespace blocks {

namespace {

using json = nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(Errc::ConfigError, "key '" + key + "': " + what);
}

json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json out = json::object();
    for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
    return out;
  }
  if (const auto* a = node.as_array()) {
    json out = json::array();
    for (const auto& v : *a) out.push_back(toml_to_json(v));
    return out;
  }
  if (const auto* s = node.as_string()) return s->get();
  if (const auto* i = node.as_integer()) return i->get();
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* b = node.as_boolean()) return b->get();
  throw Error(Errc::ConfigError, "unsupported TOML value (dates and times are not config values)");
}

// One config key: how to read it from JSON and how to write it back.
struct Field {
  std::function<void(const json&, const std::string&)> read;
  std::function<json()> write;
};

template <class T>
Field uint_field(T& target) {
  return {[&target](const json& v, const std::string& key) {
            if (!v.is_number_integer()) bad(key, "expected a non-negative integer");
            if (v.is_number_unsigned()) {
              const auto x = v.get<std::uint64_t>();
              if (x > std::numeric_limits<T>::max()) bad(key, "value too large");
              target = static_cast<T>(x);
              return;
            }
            const auto x = v.get<std::int64_t>();
            if (x < 0) bad(key, "expected a non-negative integer");
            if (static_cast<std::uint64_t>(x) > std::numeric_limits<T>::max()) bad(key, "value too large");
            target = static_cast<T>(x);
          },
          [&target] { return json(target); }};
}

Field real_field(double& target) {
  return {[&target](const json& v, const std::string& key) {
            if (!v.is_number()) bad(key, "expected a number");
            target = v.get<double>();
          },
          [&target] { return json(target); }};
}

Field bool_field(bool& target) {
  return {[&target](const json& v, const std::string& key) {
            if (!v.is_boolean()) bad(key, "expected true or false");
            target = v.get<bool>();
          },
          [&target] { return json(target); }};
}

Field attack_field(StrategyKind& target) {
  return {[&target](const json& v, const std::string& key) {
            if (!v.is_string()) bad(key, "expected a string");
            auto k = parse_strategy(v.get<std::string>());
            if (!k) bad(key, "unknown attack '" + v.get<std::string>() + "'");
            target = *k;
          },
          [&target] { return json(std::string(strategy_name(target))); }};
}

Field policy_field(CachePolicy& target) {
  return {[&target](const json& v, const std::string& key) {
            if (!v.is_string()) bad(key, "expected a string");
            auto p = parse_policy(v.get<std::string>());
            if (!p) bad(key, "unknown cache policy '" + v.get<std::string>() + "'");
            target = *p;
          },
          [&target] { return json(std::string(policy_name(target))); }};
}

using Table = std::vector<std::pair<std::string, Field>>;

struct Schema {
  Table top;
  std::vector<std::pair<std::string, Table>> tables;
};

Schema schema_for(ScenarioConfig& c) {
  Schema s;
  s.top = {
      {"seed", uint_field(c.seed)},
      {"rounds", uint_field(c.rounds)},
      {"n_honest_suppliers", uint_field(c.n_honest_suppliers)},
      {"n_malicious_suppliers", uint_field(c.n_malicious_suppliers)},
      {"n_honest_validators", uint_field(c.n_honest_validators)},
      {"n_malicious_validators", uint_field(c.n_malicious_validators)},
      {"n_users", uint_field(c.n_users)},
      {"n_malicious_users", uint_field(c.n_malicious_users)},
      {"attack", attack_field(c.attack)},
      {"topics", uint_field(c.topics)},
      {"variants_per_topic", uint_field(c.variants_per_topic)},
      {"questions", uint_field(c.questions)},
      {"queries_per_round", uint_field(c.queries_per_round)},
      {"cache_policy", policy_field(c.cache_policy)},
      {"payment_per_query", real_field(c.payment_per_query)},
      {"user_endowment", real_field(c.user_endowment)},
      {"initial_reputation", real_field(c.initial_reputation)},
      {"d_hit", real_field(c.d_hit)},
      {"d_miss", real_field(c.d_miss)},
  };
  s.tables = {
      {"reputation",
       {{"alpha", real_field(c.reputation.alpha)},
        {"official_threshold", real_field(c.reputation.official_threshold)},
        {"threshold_penalty", real_field(c.reputation.threshold_penalty)},
        {"validator_band", real_field(c.reputation.validator_band)}}},
      {"reward",
       {{"beta", real_field(c.reward.beta)}, {"proposer_bonus", real_field(c.reward.proposer_bonus)}}},
      {"cache",
       {{"capacity", uint_field(c.cache.capacity)},
        {"k", uint_field(c.cache.k)},
        {"r_b", real_field(c.cache.r_b)},
        {"history_capacity", uint_field(c.cache.history_capacity)},
        {"similarity_threshold", real_field(c.cache.similarity_threshold)}}},
      {"quorum",
       {{"min_suppliers", uint_field(c.quorum.min_suppliers)},
        {"min_validators", uint_field(c.quorum.min_validators)},
        {"validator_sample_size", uint_field(c.quorum.validator_sample_size)},
        {"require_official", bool_field(c.quorum.require_official)}}},
      {"quality",
       {{"mu_honest", real_field(c.quality.mu_honest)},
        {"mu_malicious", real_field(c.quality.mu_malicious)},
        {"sigma_supply", real_field(c.quality.sigma_supply)},
        {"sigma_validate", real_field(c.quality.sigma_validate)},
        {"p_inject", real_field(c.quality.p_inject)}}},
      {"escrow",
       {{"supplier", real_field(c.escrow.supplier)},
        {"validators", real_field(c.escrow.validators)},
        {"cache", real_field(c.escrow.cache)}}},
      {"adversary", {{"probe_accesses_per_round", uint_field(c.adversary.probe_accesses_per_round)}}},
      {"embedding",
       {{"dim", uint_field(c.embedding.dim)}, {"variant_noise", real_field(c.embedding.variant_noise)}}},
  };
  return s;
}

const Field* lookup(const Table& t, const std::string& key) {
  for (const auto& [k, f] : t) {
    if (k == key) return &f;
  }
  return nullptr;
}

const Table* lookup(const Schema& s, const std::string& key) {
  for (const auto& [k, t] : s.tables) {
    if (k == key) return &t;
  }
  return nullptr;
}

}  // namespace

json parse_config_text(std::string_view text, ConfigFormat format, const std::string& origin) {
  if (format == ConfigFormat::Json) {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(Errc::ConfigError, origin + ": " + e.what());
    }
  }
  try {
    const toml::table t = toml::parse(text, std::string_view(origin));
    return toml_to_json(t);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << origin << ":" << e.source().begin.line << ": " << e.description();
    throw Error(Errc::ConfigError, os.str());
  }
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::ConfigError, "cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  const auto format = path.extension() == ".json" ? ConfigFormat::Json : ConfigFormat::Toml;
  return parse_config_text(ss.str(), format, path.string());
}

ScenarioConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigError, "config must be a table/object");
  ScenarioConfig c;
  const Schema s = schema_for(c);
  for (const auto& [key, value] : j.items()) {
    if (const Field* f = lookup(s.top, key)) {
      f->read(value, key);
      continue;
    }
    const Table* t = lookup(s, key);
    if (t == nullptr) throw Error(Errc::ConfigError, "unknown key '" + key + "'");
    if (!value.is_object()) bad(key, "expected a table");
    for (const auto& [sub, v] : value.items()) {
      const std::string path = key + "." + sub;
      const Field* f = lookup(*t, sub);
      if (f == nullptr) throw Error(Errc::ConfigError, "unknown key '" + path + "'");
      f->read(v, path);
    }
  }
  c.validate();
  return c;
}

nlohmann::ordered_json config_to_json(const ScenarioConfig& config) {
  ScenarioConfig c = config;
  const Schema s = schema_for(c);
  nlohmann::ordered_json out;
  for (const auto& [k, f] : s.top) out[k] = f.write();
  for (const auto& [name, t] : s.tables) {
    nlohmann::ordered_json sub;
    for (const auto& [k, f] : t) sub[k] = f.write();
    out[name] = sub;
  }
  return out;
}

ScenarioDocument split_document(const json& doc) {
  if (!doc.is_object()) throw Error(Errc::ConfigError, "config must be a table/object");
  ScenarioDocument out;
  out.base = doc;
  if (!doc.contains("override")) return out;
  out.base.erase("override");
  const json& list = doc.at("override");
  if (!list.is_array()) bad("override", "expected an array of tables ([[override]])");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& o = list[i];
    const std::string where = "override[" + std::to_string(i) + "]";
    if (!o.is_object()) bad(where, "expected a table");
    Override ov;
    ov.delta = o;
    if (o.contains("label")) {
      if (!o["label"].is_string()) bad(where + ".label", "expected a string");
      ov.label = o["label"].get<std::string>();
      ov.delta.erase("label");
    } else {
      ov.label = std::to_string(i);
    }
    out.overrides.push_back(std::move(ov));
  }
  return out;
}

json merged(json base, const json& delta) {
  for (const auto& [k, v] : delta.items()) {
    if (v.is_object() && base.contains(k) && base[k].is_object()) {
      base[k] = merged(base[k], v);
    } else {
      base[k] = v;
    }
  }
  return base;
}

std::vector<SweepEntry> expand(const ScenarioDocument& doc) {
  std::vector<SweepEntry> out;
  for (const auto& ov : doc.overrides) {
    SweepEntry e;
    e.label = ov.label;
    try {
      e.config = config_from_json(merged(doc.base, ov.delta));
    } catch (const Error& err) {
      throw Error(Errc::ConfigError, "override '" + ov.label + "': " + err.what());
    }
    e.seed_pinned = ov.delta.contains("seed");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace blocks
