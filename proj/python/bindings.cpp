#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "blocks/config.hpp"
#include "blocks/error.hpp"
#include "blocks/ledger.hpp"
#include "blocks/poi.hpp"
#include "blocks/presets.hpp"
#include "blocks/procache.hpp"
#include "blocks/reputation.hpp"
#include "blocks/simulator.hpp"

namespace py = pybind11;
using namespace blocks;

namespace {

std::vector<ValidationRecord> records(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<ValidationRecord> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.push_back({"v" + std::to_string(i), pairs[i].first, pairs[i].second});
  }
  return out;
}

ScenarioConfig config_of(const std::string& text) {
  return config_from_json(parse_config_text(text, ConfigFormat::Json, "<python>"));
}

}  // namespace

PYBIND11_MODULE(_blocks, m) {
  m.doc() = "Reputation, ledger, cache and simulation core";

  py::register_exception<Error>(m, "BlocksError", PyExc_RuntimeError);

  m.def("consistency",
        [](double own, const std::vector<std::pair<double, double>>& others, double r_max) {
          const auto recs = records(others);
          return consistency(own, recs, r_max);
        },
        py::arg("own_score"), py::arg("others"), py::arg("max_validator_reputation"),
        "others is a list of (score, validator_reputation) pairs.");
  m.def("confidence", [](const std::vector<double>& s) { return confidence(s); }, py::arg("scores"));
  m.def("update_validator_reputation",
        [](double prev, const std::vector<double>& cs, double alpha) {
          ReputationParams p;
          p.alpha = alpha;
          return update_validator_reputation(prev, cs, p);
        },
        py::arg("prev"), py::arg("consistencies"), py::arg("alpha") = 0.2);
  m.def("update_prompt_reputation",
        [](double supplier_rep, const std::vector<std::pair<double, double>>& validations,
           const std::vector<std::pair<double, double>>& feedbacks) {
          const auto vs = records(validations);
          std::vector<FeedbackRecord> fs;
          for (std::size_t i = 0; i < feedbacks.size(); ++i) {
            fs.push_back({"u" + std::to_string(i), feedbacks[i].first, feedbacks[i].second});
          }
          return update_prompt_reputation(supplier_rep, vs, fs);
        },
        py::arg("supplier_rep"), py::arg("validations"), py::arg("feedbacks") = std::vector<std::pair<double, double>>{});

  m.def("impact_reward",
        [](double reputation, std::uint64_t prompt_accesses, std::uint64_t validation_accesses, double beta) {
          RewardParams p;
          p.beta = beta;
          return impact_reward({"n", prompt_accesses, validation_accesses, reputation}, p);
        },
        py::arg("reputation"), py::arg("prompt_accesses"), py::arg("validation_accesses"), py::arg("beta") = 0.5);
  m.def("distribute_resale", &distribute_resale, py::arg("fee_pool"), py::arg("provider_reps"));
  m.def("priority_of", &priority_of, py::arg("frequency"), py::arg("cost"), py::arg("size"),
        py::arg("reputation"), py::arg("r_b"));

  m.def("sha256_hex", [](const std::string& s) { return to_hex(sha256(s)); });

  py::class_<Ledger>(m, "Ledger")
      .def(py::init<double>(), py::arg("initial_prompt_reputation") = 0.5)
      .def("put_prompt",
           [](Ledger& l, const std::string& content, const std::string& supplier) {
             const auto k = l.put_prompt(content, supplier);
             return py::make_tuple(k.hash_hex(), k.count);
           })
      .def("prompt_reputation",
           [](const Ledger& l, const std::string& content) -> std::optional<double> {
             const auto k = l.find_prompt(content);
             if (!k) return std::nullopt;
             return l.reputation(k->paired());
           })
      .def("prompt_count", [](const Ledger& l) { return l.stats().count(Prefix::DataTable); })
      .def("__len__", &Ledger::size)
      .def("snapshot_json", &Ledger::snapshot_json, py::arg("indent") = 2);

  m.def("validate_config", [](const std::string& json_text) {
    return config_to_json(config_of(json_text)).dump();
  }, py::arg("config_json"), "Parses and checks a JSON scenario; returns it with defaults filled in.");
  m.def("run_summary", [](const std::string& json_text) {
    const auto cfg = config_of(json_text);
    py::gil_scoped_release release;
    return summary_json(run(cfg));
  }, py::arg("config_json"));
  m.def("run_csv", [](const std::string& json_text) {
    const auto cfg = config_of(json_text);
    RunResult r;
    {
      py::gil_scoped_release release;
      r = run(cfg);
    }
    py::dict out;
    out["reputation"] = reputation_csv(r);
    out["cache_metrics"] = cache_metrics_csv(r);
    out["rewards"] = rewards_csv(r);
    out["ledger_stats"] = ledger_stats_csv(r);
    out["summary"] = summary_json(r);
    return out;
  }, py::arg("config_json"));
  m.def("dedup", [](const std::string& json_text) {
    const auto rep = dedup_experiment(config_of(json_text));
    return py::make_tuple(rep.questions_processed, rep.ledger_prompts, rep.reduction);
  }, py::arg("config_json"));
  m.def("preset_names", [] {
    std::vector<std::string> out;
    for (auto n : preset_names()) out.emplace_back(n);
    return out;
  });
  m.def("preset_text", [](const std::string& name) -> std::optional<std::string> {
    const auto t = preset_text(name);
    if (!t) return std::nullopt;
    return std::string(*t);
  });
}
