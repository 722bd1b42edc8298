#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "blocks/config.hpp"
#include "blocks/error.hpp"
#include "blocks/presets.hpp"

using namespace blocks;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = BLOCKS_SOURCE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string config_error(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConfigError);
    return e.what();
  }
  ADD_FAILURE() << "no error raised";
  return {};
}

}  // namespace

TEST(Config, UnknownKeyIsNamed) {
  const auto msg = config_error([] { config_from_json(load_config_file(kSource / "tests/data/bad_key.toml")); });
  EXPECT_NE(msg.find("cache.capcity"), std::string::npos) << msg;

  const auto top = config_error([] { config_from_json(nlohmann::json{{"roundz", 3}}); });
  EXPECT_NE(top.find("roundz"), std::string::npos);
}

TEST(Config, WrongTypes) {
  EXPECT_NE(config_error([] { config_from_json(nlohmann::json{{"rounds", -1}}); }).find("rounds"),
            std::string::npos);
  EXPECT_NE(config_error([] { config_from_json(nlohmann::json{{"attack", "Bribery"}}); }).find("Bribery"),
            std::string::npos);
  EXPECT_NE(config_error([] { config_from_json(nlohmann::json{{"cache", 3}}); }).find("cache"), std::string::npos);
  config_error([] { config_from_json(nlohmann::json{{"reputation", {{"alpha", 0.0}}}}); });
}

TEST(Config, TomlAndJsonAgree) {
  const auto a = config_from_json(load_config_file(kSource / "tests/data/small.toml"));
  const auto b = config_from_json(load_config_file(kSource / "tests/data/small.json"));
  EXPECT_EQ(config_to_json(a).dump(), config_to_json(b).dump());
  EXPECT_EQ(a.rounds, 25u);
  EXPECT_EQ(a.cache.capacity, 8u);
  EXPECT_EQ(a.attack, StrategyKind::Collusion);
}

TEST(Config, RoundTrip) {
  ScenarioConfig c;
  c.cache.k = 3;
  c.reputation.alpha = 0.35;
  c.cache_policy = CachePolicy::LRUk;
  const auto j = config_to_json(c);
  const auto back = config_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(config_to_json(back).dump(), j.dump());
}

TEST(Config, TomlSyntaxError) {
  const auto msg = config_error([] { parse_config_text("rounds = = 3", ConfigFormat::Toml, "x.toml"); });
  EXPECT_NE(msg.find("x.toml"), std::string::npos);
}

TEST(Config, MissingFile) {
  const auto msg = config_error([] { load_config_file("/nonexistent/scenario.toml"); });
  EXPECT_NE(msg.find("/nonexistent/scenario.toml"), std::string::npos);
}

TEST(Overrides, DeepMergeAndSeeds) {
  const auto doc = split_document(parse_config_text(R"(
seed = 5
[cache]
capacity = 4
k = 3

[[override]]
label = "one"
[override.cache]
capacity = 9

[[override]]
label = "two"
seed = 11
)",
                                                    ConfigFormat::Toml));
  const auto entries = expand(doc);
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].label, "one");
  EXPECT_EQ(entries[0].config.cache.capacity, 9u);
  EXPECT_EQ(entries[0].config.cache.k, 3u);
  EXPECT_FALSE(entries[0].seed_pinned);
  EXPECT_TRUE(entries[1].seed_pinned);
  EXPECT_EQ(entries[1].config.seed, 11u);
}

TEST(Overrides, BadOverrideNamesLabel) {
  const auto doc = split_document(nlohmann::json::parse(R"({"override": [{"label": "oops", "k": 2}]})"));
  const auto msg = config_error([&] { expand(doc); });
  EXPECT_NE(msg.find("oops"), std::string::npos);
}

TEST(Presets, MatchCheckedInFiles) {
  const auto names = preset_names();
  EXPECT_EQ(names, (std::vector<std::string_view>{"fig4", "fig5", "fig6", "fig7"}));
  for (auto name : names) {
    const auto text = preset_text(name);
    ASSERT_TRUE(text.has_value());
    EXPECT_EQ(std::string(*text), slurp(kSource / "presets" / (std::string(name) + ".toml"))) << name;
  }
  EXPECT_FALSE(preset_text("fig9").has_value());
}

TEST(Presets, Canonical) {
  auto load = [](std::string_view name) {
    return expand(split_document(parse_config_text(*preset_text(name), ConfigFormat::Toml)));
  };
  for (auto name : {"fig4", "fig5"}) {
    const auto entries = load(name);
    ASSERT_EQ(entries.size(), 3u);
    for (const auto& e : entries) {
      EXPECT_EQ(e.config.n_honest_suppliers, 8u);
      EXPECT_EQ(e.config.n_malicious_suppliers, 3u);
      EXPECT_EQ(e.config.n_honest_validators, 8u);
      EXPECT_EQ(e.config.n_malicious_validators, 3u);
      EXPECT_EQ(e.config.rounds, 200u);
      EXPECT_EQ(e.config.seed, 42u);
    }
  }
  const auto fig6 = load("fig6");
  ASSERT_EQ(fig6.size(), 3u);
  EXPECT_EQ(fig6[0].config.seed, fig6[1].config.seed);
  EXPECT_EQ(fig6[1].config.seed, fig6[2].config.seed);

  const auto fig7 = config_from_json(split_document(parse_config_text(*preset_text("fig7"), ConfigFormat::Toml)).base);
  EXPECT_EQ(fig7.questions, 253u);
  EXPECT_EQ(fig7.topics, 53u);
}
