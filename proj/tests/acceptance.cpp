// Acceptance suite: one PASS/FAIL line per criterion.
//
//   blocks_acceptance            run every criterion
//   blocks_acceptance NAME...    run the named criteria
//   blocks_acceptance --list     print the names
//
// Exit status is 0 only when every selected criterion passes.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "blocks/config.hpp"
#include "blocks/poi.hpp"
#include "blocks/presets.hpp"
#include "blocks/procache.hpp"
#include "blocks/reputation.hpp"
#include "blocks/simulator.hpp"
#include "oracles.hpp"

using namespace blocks;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Verdict()> check;
};

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// Adds "label=value (op bound)" to the detail and folds the result in.
void require(Verdict& v, const std::string& label, double value, const char* op, double bound, bool ok) {
  if (!v.detail.empty()) v.detail += "; ";
  v.detail += label + "=" + num(value) + " (" + op + " " + num(bound) + ")" + (ok ? "" : " MISSED");
  v.pass = v.pass && ok;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<SweepEntry> preset_entries(const std::string& name) {
  return expand(split_document(parse_config_text(*preset_text(name), ConfigFormat::Toml, name)));
}

SweepEntry preset_entry(const std::string& name, const std::string& label) {
  for (auto& e : preset_entries(name)) {
    if (e.label == label) return e;
  }
  throw std::runtime_error("preset " + name + " has no override " + label);
}

// --- storage -------------------------------------------------------------

Verdict storage_fig7() {
  const auto doc = split_document(parse_config_text(*preset_text("fig7"), ConfigFormat::Toml, "fig7"));
  const ScenarioConfig cfg = config_from_json(doc.base);
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult r = run(cfg);
  const double secs = seconds_since(t0);
  const DedupReport d = dedup_report(r);
  Verdict v;
  require(v, "questions", static_cast<double>(d.questions_processed), "==", 253, d.questions_processed == 253);
  require(v, "ledger_prompts", static_cast<double>(d.ledger_prompts), "==", 53, d.ledger_prompts == 53);
  const double pct = 100.0 * d.reduction;
  require(v, "reduction_pct", pct, "within 2 of", 80, std::fabs(pct - 80.0) <= 2.0);
  require(v, "seconds", secs, "<", 10, secs < 10.0);
  return v;
}

// --- reputation security ----------------------------------------------------

Verdict security(const std::string& preset, const std::string& attack, Role role) {
  const SweepEntry e = preset_entry(preset, attack);
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult r = run(e.config);
  const double secs = seconds_since(t0);
  Verdict v;
  const double mal = final_malicious_mean(r, role);
  const double hon = final_honest_mean(r, role);
  const double sd = honest_tail_sd(r, role, 50);
  require(v, "malicious", mal, "<", 0.1, mal < 0.1);
  require(v, "honest", hon, ">", 0.6, hon > 0.6);
  require(v, "honest_sd_last50", sd, "<", 0.05, sd < 0.05);
  require(v, "seconds", secs, "<", 60, secs < 60.0);
  return v;
}

// --- cache QoS ---------------------------------------------------------------

Verdict cache_qos_fig6() {
  const auto out = sweep(preset_entries("fig6"), 42, 1);
  const RunResult* pro = nullptr;
  std::vector<const SweepOutput*> baselines;
  for (const auto& o : out) {
    if (o.result.config.cache_policy == CachePolicy::PROCache) {
      pro = &o.result;
    } else {
      baselines.push_back(&o);
    }
  }
  Verdict v;
  if (pro == nullptr || baselines.size() != 2) return {false, "fig6 preset must hold PROCache, LFU and LRUk"};
  const std::uint64_t seed = pro->config.seed;
  bool same_seed = true;
  for (const auto* b : baselines) same_seed = same_seed && b->result.config.seed == seed;
  require(v, "same_seed", same_seed ? 1 : 0, "==", 1, same_seed);

  const double rep = pro->frames.back().mean_in_cache_reputation;
  const double hit = pro->frames.back().hit_rate;
  double best_hit = 0.0;
  for (const auto* b : baselines) {
    const double brep = b->result.frames.back().mean_in_cache_reputation;
    require(v, "rep_margin_vs_" + b->label, rep - brep, ">=", 0.1, rep - brep >= 0.1);
    best_hit = std::max(best_hit, b->result.frames.back().hit_rate);
  }
  const double rel = best_hit > 0.0 ? (hit - best_hit) / best_hit : 0.0;
  require(v, "hit_rate_rel_to_best_baseline", rel, ">=", -0.1, rel >= -0.1);
  return v;
}

// --- equation oracles -------------------------------------------------------

Verdict equation_oracles() {
  std::mt19937_64 g(20240601);
  const int n = 1000;
  double e_cs = 0, e_cf = 0, e_rp = 0, e_imp = 0, e_res = 0, e_pri = 0;
  for (int t = 0; t < n; ++t) {
    std::vector<oracle::Vote> vs(oracle::count(g, 0, 10));
    std::vector<ValidationRecord> recs;
    double rmax = 0.05;
    for (auto& x : vs) {
      x = {oracle::uniform(g), oracle::uniform(g)};
      recs.push_back({"v", x.score, x.rep});
      rmax = std::max(rmax, x.rep);
    }
    const double own = oracle::uniform(g);
    e_cs = std::max(e_cs, std::fabs(consistency(own, recs, rmax) - oracle::cs(own, vs, rmax)));

    std::vector<double> xs(oracle::count(g, 1, 12));
    for (auto& x : xs) x = oracle::uniform(g);
    e_cf = std::max(e_cf, std::fabs(confidence(xs) - oracle::cf(xs)));

    std::vector<oracle::Feedback> fs(oracle::count(g, 0, 4));
    std::vector<FeedbackRecord> frs;
    for (auto& f : fs) {
      f = {oracle::uniform(g), oracle::uniform(g)};
      frs.push_back({"u", f.acc, f.rep});
    }
    const double rk = oracle::uniform(g);
    e_rp = std::max(e_rp, std::fabs(update_prompt_reputation(rk, recs, frs) - oracle::prompt_rep(rk, vs, fs)));

    const ImpactRecord rec{"n", oracle::count(g, 0, 1000), oracle::count(g, 0, 1000), oracle::uniform(g)};
    RewardParams rp;
    rp.beta = oracle::uniform(g);
    e_imp = std::max(e_imp, std::fabs(impact_reward(rec, rp) -
                                      oracle::impact(rec.reputation, rp.beta, rec.prompt_accesses,
                                                     rec.validation_accesses)));

    std::map<std::string, double> reps;
    const auto k = oracle::count(g, 1, 10);
    for (std::size_t i = 0; i < k; ++i) reps["p" + std::to_string(i)] = oracle::uniform(g, 0.001, 1.0);
    const double pool = oracle::uniform(g, 0.0, 100.0);
    const auto got = distribute_resale(pool, reps);
    const auto want = oracle::resale(pool, reps);
    for (const auto& [id, x] : got) e_res = std::max(e_res, std::fabs(x - want.at(id)));

    const auto f = oracle::count(g, 1, 50);
    const double cost = oracle::uniform(g, 0.01, 10.0), size = oracle::uniform(g, 0.01, 10.0);
    const double r = oracle::uniform(g), rb = oracle::uniform(g);
    e_pri = std::max(e_pri, std::fabs(priority_of(f, cost, size, r, rb) - oracle::priority(f, cost, size, r, rb)));
  }
  Verdict v;
  require(v, "consistency", e_cs, "<=", 1e-9, e_cs <= 1e-9);
  require(v, "confidence", e_cf, "<=", 1e-9, e_cf <= 1e-9);
  require(v, "prompt_reputation", e_rp, "<=", 1e-9, e_rp <= 1e-9);
  require(v, "impact_reward", e_imp, "<=", 1e-9, e_imp <= 1e-9);
  require(v, "distribute_resale", e_res, "<=", 1e-9, e_res <= 1e-9);
  require(v, "priority_of", e_pri, "<=", 1e-9, e_pri <= 1e-9);
  return v;
}

// --- convergence ------------------------------------------------------------

Verdict convergence_bound() {
  std::size_t checks = 0, violations = 0;
  double worst = 0.0;
  for (double alpha : {0.05, 0.2, 0.5, 0.9, 1.0}) {
    ReputationParams p;
    p.alpha = alpha;
    for (double c : {0.0, 0.1, 0.375, 0.5, 0.9, 1.0}) {
      for (double r0 : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        for (auto update : {&update_llm_reputation, &update_validator_reputation}) {
          double r = r0;
          const double gap0 = std::fabs(1.0 - c - r0);
          for (int t = 1; t <= 500; ++t) {
            r = update(r, std::span<const double>(&c, 1), p);
            const double bound = gap0 * std::pow(1.0 - alpha, t);
            const double err = std::fabs(r - (1.0 - c));
            worst = std::max(worst, err - bound);
            ++checks;
            if (err > bound + 1e-15) ++violations;
          }
        }
      }
    }
  }
  Verdict v;
  require(v, "checks", static_cast<double>(checks), ">", 0, checks > 0);
  require(v, "violations", static_cast<double>(violations), "==", 0, violations == 0);
  require(v, "worst_excess", worst, "<=", 1e-15, worst <= 1e-15);
  return v;
}

// --- conservation fuzz --------------------------------------------------------

ScenarioConfig fuzz_config(std::uint64_t seed) {
  std::mt19937_64 g(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) { return static_cast<std::uint32_t>(oracle::count(g, lo, hi)); };
  ScenarioConfig c;
  c.seed = seed;
  c.rounds = 100;
  c.n_honest_suppliers = pick(1, 8);
  c.n_malicious_suppliers = pick(0, 4);
  c.n_honest_validators = pick(1, 8);
  c.n_malicious_validators = pick(0, 4);
  c.n_users = pick(1, 5);
  c.n_malicious_users = pick(0, c.n_users);
  const StrategyKind attacks[] = {StrategyKind::Honest, StrategyKind::SelfPromotion, StrategyKind::Collusion,
                                  StrategyKind::Slandering};
  c.attack = attacks[pick(0, 3)];
  if (c.attack == StrategyKind::Collusion && c.n_malicious_suppliers + c.n_malicious_validators == 1) {
    ++c.n_malicious_validators;
  }
  c.topics = pick(1, 30);
  c.variants_per_topic = pick(1, 6);
  c.queries_per_round = pick(1, 6);
  const CachePolicy policies[] = {CachePolicy::PROCache, CachePolicy::LFU, CachePolicy::LRUk};
  c.cache_policy = policies[pick(0, 2)];
  c.payment_per_query = oracle::uniform(g, 0.1, 5.0);
  c.user_endowment = oracle::uniform(g, 0.0, 200.0);
  c.cache.capacity = pick(1, 20);
  c.cache.k = pick(1, 3);
  c.cache.history_capacity = pick(1, 50);
  c.cache.similarity_threshold = oracle::uniform(g, 0.5, 0.99);
  c.quorum.min_suppliers = pick(1, c.n_honest_suppliers + c.n_malicious_suppliers);
  const std::uint32_t n_val = c.n_honest_validators + c.n_malicious_validators;
  c.quorum.validator_sample_size = pick(0, n_val);
  c.quorum.min_validators = pick(1, c.quorum.validator_sample_size == 0 ? n_val : c.quorum.validator_sample_size);
  c.quorum.require_official = pick(0, 1) == 1;
  const double a = oracle::uniform(g), b = oracle::uniform(g, 0.0, 1.0 - a);
  c.escrow = {a, b, 1.0 - a - b};
  c.reward.beta = oracle::uniform(g);
  c.reward.proposer_bonus = oracle::uniform(g, 0.0, 2.0);
  c.adversary.probe_accesses_per_round = pick(0, 3);
  return c;
}

Verdict conservation_fuzz() {
  Verdict v;
  double cons = 0, esc = 0;
  std::uint64_t illegal = 0, dup = 0, growth = 0, sessions = 0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const RunResult r = run(fuzz_config(9000 + i));
    cons = std::max(cons, r.invariants.max_conservation_error);
    esc = std::max(esc, r.invariants.max_escrow_error);
    illegal += r.invariants.illegal_transitions;
    dup += r.invariants.duplicate_events;
    growth += r.invariants.ledger_growth_violations;
    sessions += r.queries;
  }
  require(v, "runs", 10, "==", 10, true);
  require(v, "sessions", static_cast<double>(sessions), ">", 0, sessions > 0);
  require(v, "token_conservation_err", cons, "<=", 1e-9, cons <= 1e-9);
  require(v, "escrow_err", esc, "<=", 1e-9, esc <= 1e-9);
  require(v, "illegal_transitions", static_cast<double>(illegal), "==", 0, illegal == 0);
  require(v, "duplicate_events", static_cast<double>(dup), "==", 0, dup == 0);
  require(v, "ledger_growth_violations", static_cast<double>(growth), "==", 0, growth == 0);
  return v;
}

// --- determinism --------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Verdict determinism() {
  ScenarioConfig c = fuzz_config(77);
  c.rounds = 60;
  const fs::path root = fs::temp_directory_path() / ("blocks_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  write_outputs(run(c), root / "a", false, true);
  write_outputs(run(c), root / "b", false, true);
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files;
    if (slurp(entry.path()) != slurp(root / "b" / entry.path().filename())) ++differing;
  }
  fs::remove_all(root);
  Verdict v;
  require(v, "files", static_cast<double>(files), ">=", 6, files >= 6);
  require(v, "differing", static_cast<double>(differing), "==", 0, differing == 0);
  return v;
}

std::vector<Criterion> criteria() {
  std::vector<Criterion> out;
  out.push_back({"storage_dedup_fig7", storage_fig7});
  for (const char* attack : {"SelfPromotion", "Collusion", "Slandering"}) {
    const std::string a = attack;
    out.push_back({"supplier_security_fig4_" + a, [a] { return security("fig4", a, Role::Supplier); }});
  }
  for (const char* attack : {"SelfPromotion", "Collusion", "Slandering"}) {
    const std::string a = attack;
    out.push_back({"validator_security_fig5_" + a, [a] { return security("fig5", a, Role::Validator); }});
  }
  out.push_back({"cache_qos_fig6", cache_qos_fig6});
  out.push_back({"equation_oracles", equation_oracles});
  out.push_back({"convergence_bound", convergence_bound});
  out.push_back({"conservation_fuzz", conservation_fuzz});
  out.push_back({"determinism", determinism});
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const auto all = criteria();
  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.size() == 1 && wanted[0] == "--list") {
    for (const auto& c : all) std::cout << c.name << "\n";
    return 0;
  }
  for (const auto& w : wanted) {
    if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return c.name == w; })) {
      std::cerr << "unknown criterion " << w << "\n";
      return 2;
    }
  }
  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (v.pass ? "PASS " : "FAIL ") << c.name << ": " << v.detail << std::endl;
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
