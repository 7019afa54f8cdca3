#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tipping/config.hpp"
#include "tipping/run.hpp"

using namespace tipping;
using config::json;
namespace fs = std::filesystem;

namespace {

json allee_doc(double c) {
  json doc = json::parse(R"({"model": {"preset": "allee-rational"},
                             "mechanism": {"profile": {"preset": "allee-pulse"}, "kind": "constant-rate"}})");
  doc["mechanism"]["c"] = c;
  return doc;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("tipping-test-" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Config, ResolveFillsDefaultsAndExpandsPresets) {
  const json r = config::resolve(allee_doc(1.01), "classify");
  EXPECT_EQ(r["model"]["family"], "allee-multiplicative-rational");
  EXPECT_TRUE(r["model"]["coefficients"].is_object());
  EXPECT_EQ(r["mechanism"]["profile"]["kind"], "cauchy-pulse");
  EXPECT_EQ(r["output"]["dir"], "out");
  EXPECT_EQ(r["numerics"]["threads"], 1);
  EXPECT_TRUE(r["numerics"]["m_cache"].get<bool>());
  // Resolution is idempotent.
  EXPECT_EQ(config::resolve(r, "classify"), r);
}

TEST(Config, ResolvedModelMatchesPreset) {
  const json r = config::resolve(allee_doc(1.01), "classify");
  const auto m = config::model_from_json(r["model"]);
  const auto p = config::model_preset("allee-rational");
  for (double t : {-3.0, 0.0, 11.0}) EXPECT_DOUBLE_EQ(m.f(t, 17.0, 1.2), p.f(t, 17.0, 1.2));
}

TEST(Config, OverridesParseJsonValues) {
  json doc = allee_doc(1.0);
  config::apply_override(doc, "mechanism.c=1.25");
  config::apply_override(doc, "experiment.note=hello");
  config::apply_override(doc, "numerics.integrator.rel_tol=1e-11");
  EXPECT_DOUBLE_EQ(doc["mechanism"]["c"].get<double>(), 1.25);
  EXPECT_EQ(doc["experiment"]["note"], "hello");
  EXPECT_DOUBLE_EQ(doc["numerics"]["integrator"]["rel_tol"].get<double>(), 1e-11);
  EXPECT_THROW(config::apply_override(doc, "no-equals-sign"), config_error);
}

TEST(Config, UnknownKeysAreRejected) {
  json doc = allee_doc(1.0);
  doc["bogus"] = 1;
  EXPECT_THROW(config::resolve(doc, "classify"), config_error);
  doc = allee_doc(1.0);
  doc["mechanism"]["speed"] = 2;
  EXPECT_THROW(config::resolve(doc, "classify"), config_error);
  doc = allee_doc(1.0);
  doc["experiment"]["window_length"] = 3;
  EXPECT_THROW(config::resolve(doc, "simulate"), config_error);
  doc = allee_doc(1.0);
  doc["numerics"]["integrator"]["tolerance"] = 3;
  EXPECT_THROW(config::resolve(doc, "simulate"), config_error);
}

TEST(Config, InvalidValuesAreRejected) {
  json doc = allee_doc(1.0);
  doc["model"] = {{"preset", "no-such-model"}};
  EXPECT_THROW(config::resolve(doc, "classify"), config_error);
  doc = allee_doc(-1.0);
  EXPECT_THROW(config::resolve(doc, "classify"), config_error);
  doc = allee_doc(1.0);
  doc["mechanism"]["kind"] = "teleport";
  EXPECT_THROW(config::resolve(doc, "classify"), config_error);
}

TEST(Config, AxisForms) {
  const auto a = config::axis_from_json(json::parse(R"({"from": 0, "to": 0.9, "step": 0.1})"), "k");
  ASSERT_EQ(a.size(), 10u);
  EXPECT_NEAR(a.back(), 0.9, 1e-12);
  EXPECT_EQ(config::axis_from_json(json::parse("[1, 2.5]"), "k"), (std::vector<double>{1.0, 2.5}));
  EXPECT_THROW(config::axis_from_json(json::parse(R"({"from": 0, "to": 1, "step": 0})"), "k"), config_error);
}

TEST(Run, ExitCodes) {
  std::ostringstream log;
  const auto dir = fresh_dir("exit");
  EXPECT_EQ(cli::run("classify", allee_doc(1.01), {}, dir.string(), log), cli::ExitCode::ok);
  EXPECT_NE(log.str().find("case=A"), std::string::npos);
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["run"]["exit_code"], 0);
  EXPECT_EQ(manifest["run"]["subcommand"], "classify");

  EXPECT_EQ(cli::run("simulate", allee_doc(1.0), {"experiment.t_end=-100"}, dir.string(), log),
            cli::ExitCode::failure);
  EXPECT_EQ(cli::run("nonsense", allee_doc(1.0), {}, dir.string(), log), cli::ExitCode::failure);
  EXPECT_EQ(cli::run("classify", allee_doc(1.0), {"mechanism.c=\"fast\""}, dir.string(), log),
            cli::ExitCode::failure);
  fs::remove_all(dir);
}

TEST(Run, RerunFromManifestIsByteIdentical) {
  std::ostringstream log;
  json doc = allee_doc(1.01);
  doc["experiment"] = {{"t_start", -20}, {"t_end", 20}, {"x0", 60}};
  const auto a = fresh_dir("rerun-a"), b = fresh_dir("rerun-b");
  ASSERT_EQ(cli::run("simulate", doc, {}, a.string(), log), cli::ExitCode::ok) << log.str();
  const json manifest = json::parse(slurp(a / "manifest.json"));
  ASSERT_EQ(cli::run("simulate", manifest, {}, b.string(), log), cli::ExitCode::ok) << log.str();
  const std::string first = slurp(a / "trajectory.csv");
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, slurp(b / "trajectory.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, SubcommandListIsComplete) {
  EXPECT_EQ(cli::subcommands().size(), 10u);
  for (const auto& s : cli::subcommands()) EXPECT_FALSE(s.empty());
}
