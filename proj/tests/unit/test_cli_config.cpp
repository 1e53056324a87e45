#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "aglab/cli.hpp"

using namespace aglab;
using namespace aglab::cli;
namespace fs = std::filesystem;

TEST_CASE("condition ids and labels") {
  const auto base = Condition::parse("verb", {});
  CHECK(base.id() == "verb-base");
  CHECK(base.label() == "Base");
  const auto sv = Condition::parse("verb", {"single-verb", "no-ak"});
  CHECK(sv.id() == "verb-single-verb+no-ak");
  CHECK(sv.label() == "Sing. verb no -ak");
  const auto wo = Condition::parse("suffix", {"none"}, "word-only");
  CHECK(wo.id() == "suffix-base.word-only");
  CHECK(wo.data_id() == "suffix-base");
  CHECK(wo.label() == "Word only");
  for (const auto& c : verb_grid()) CHECK(Condition::from_id(c.id()).id() == c.id());
  for (const auto& c : suffix_grid()) CHECK(Condition::from_id(c.id()).id() == c.id());
  CHECK(verb_grid().size() == 7);
  CHECK(suffix_grid().size() == 3);
}

TEST_CASE("invalid conditions are usage errors") {
  CHECK_THROWS_AS(Condition::parse("verb", {"no-verb"}).validate(), UsageError);
  CHECK_THROWS_AS(Condition::parse("suffix", {"suffixes-only"}).validate(), UsageError);
  CHECK_THROWS_AS(Condition::parse("suffix", {"neutralized-case"}).validate(), UsageError);
  CHECK_THROWS_AS(Condition::parse("verb", {"no-ak", "no-ak"}).validate(), UsageError);
  CHECK_THROWS(Condition::parse("nope", {}));
  CHECK_THROWS(Condition::parse("verb", {"bogus"}));
}

TEST_CASE("experiment config parsing") {
  const auto c = ExperimentConfig::from_json(
      {{"seed", 9}, {"grammar", {{"num_sentences", 50}}}, {"train", {{"max_updates", 10}}}});
  CHECK(c.seed == 9);
  CHECK(c.grammar_config().num_sentences == 50);
  CHECK(c.grammar_config().seed != c.split_spec().seed);
  CHECK(c.train.max_updates == 10);
  CHECK(ExperimentConfig::from_json(c.to_json()).to_json() == c.to_json());
  try {
    ExperimentConfig::from_json({{"grammar", {{"dative_rate", 1.5}}}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("dative_rate") != std::string::npos);
  }
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"grammar", {{"seed", 3}}}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"train", {{"task", "verb"}}}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"bogus", 1}}), ConfigError);
}

TEST_CASE("relative paths resolve against the config directory") {
  const auto c = ExperimentConfig::from_json({{"corpus", "data/c.jsonl"}, {"lexicon", "/abs/lex.tsv"}}, "/cfg/dir");
  REQUIRE(c.corpus.has_value());
  CHECK(*c.corpus == fs::path("/cfg/dir/data/c.jsonl"));
  CHECK(*c.lexicon == fs::path("/abs/lex.tsv"));
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"corpus", "c.jsonl"}}), ConfigError);
}

TEST_CASE("run directory resolution") {
  CHECK(resolve_run_dir(fs::path("/x/y"), "n") == fs::path("/x/y"));
  ::setenv("AGLAB_RUN_DIR", "/tmp/aglab-root", 1);
  CHECK(resolve_run_dir(std::nullopt, "small-seed3") == fs::path("/tmp/aglab-root/small-seed3"));
  ::unsetenv("AGLAB_RUN_DIR");
  CHECK(resolve_run_dir(std::nullopt, "small-seed3") == fs::path("runs/small-seed3"));
}

TEST_CASE("run entry point exit codes") {
  std::ostringstream out, err;
  {
    const char* argv[] = {"aglab"};
    CHECK(run(1, const_cast<char**>(argv), out, err) == kExitUsage);
  }
  {
    const char* argv[] = {"aglab", "train", "--out", "/nonexistent/aglab-run", "--task", "verb"};
    // No stored config and no --config.
    CHECK(run(6, const_cast<char**>(argv), out, err) == kExitUsage);
  }
  const auto dir = fs::temp_directory_path() / "aglab_unit_cfg";
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"grammar": {"max_clauses": 0}})";
  {
    const auto cfg = (dir / "bad.json").string();
    const char* argv[] = {"aglab", "gen-corpus", "--config", cfg.c_str(), "--out", dir.c_str()};
    CHECK(run(6, const_cast<char**>(argv), out, err) == kExitUsage);
  }
  fs::remove_all(dir);
}
