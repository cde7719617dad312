#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "netdelay/model.hpp"
#include "netdelay/training.hpp"

using namespace netdelay;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run cli(const std::string& args, bool merge_stderr = false) {
  std::string cmd = std::string(NETDELAY_CLI) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::vector<nlohmann::json> records(const std::string& out) {
  std::vector<nlohmann::json> rs;
  std::istringstream in(out);
  for (std::string line; std::getline(in, line);) rs.push_back(nlohmann::json::parse(line));
  return rs;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Shared small dataset and one trained model, built once.
struct Workspace {
  fs::path root = fs::temp_directory_path() / "netdelay_cli_test";
  fs::path data = root / "data";
  fs::path run = root / "run";

  Workspace() {
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(root / "gen.json")
        << R"({"num_scenarios": 6, "min_devices": 3, "max_devices": 4, "max_flows": 4,
              "duration_s": 6, "capture_window_s": 2, "validation_fraction": 0.2,
              "test_fraction": 0.2})";
  }
};

Workspace& workspace() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  auto r = cli("frobnicate", true);
  CHECK(r.status == 2);
  CHECK(r.out.find("Usage") != std::string::npos);
  CHECK(cli("").status == 2);
  CHECK(cli("train --data x").status == 2);
  CHECK(cli("--jobs 0 gradcheck").status == 2);
  CHECK(cli("evaluate --model a --data b --split nope").status == 2);
}

TEST_CASE("generate, train, evaluate and predict end to end") {
  auto& w = workspace();
  auto gen = cli("--seed 3 --json generate --config " + (w.root / "gen.json").string() +
                 " --out " + w.data.string());
  REQUIRE(gen.status == 0);
  auto g = records(gen.out);
  REQUIRE(g.size() == 1);
  CHECK(g[0]["train"].get<int>() + g[0]["validation"].get<int>() + g[0]["test"].get<int>() == 6);
  CHECK(load_manifest(w.data).generator_seed == 3);

  std::string train_args = "--seed 4 --json train --data " + w.data.string() +
                           " --epochs 2 --lr 1e-3 --packet-dim 4 --out ";
  auto t1 = cli(train_args + w.run.string());
  REQUIRE(t1.status == 0);
  auto t2 = cli(train_args + (w.root / "run2").string());
  REQUIRE(t2.status == 0);
  auto rec = records(t1.out);
  REQUIRE(rec.size() == 3);
  CHECK(rec[0]["type"] == "epoch");
  CHECK(rec[2]["type"] == "best");
  // Same seed: same log (apart from the output path) and same checkpoint bytes.
  CHECK(records(t1.out)[1] == records(t2.out)[1]);
  CHECK(read_file(w.run / "best.ckpt") == read_file(w.root / "run2" / "best.ckpt"));
  CHECK(read_file(w.run / "metrics.jsonl") == read_file(w.root / "run2" / "metrics.jsonl"));

  auto ev = cli("evaluate --model " + (w.run / "best.ckpt").string() + " --data " + w.data.string());
  REQUIRE(ev.status == 0);
  CHECK(ev.out.find("no-queuing baseline MAPE") != std::string::npos);
  auto evj = cli("--json evaluate --split validation --model " + (w.run / "best.ckpt").string() +
                 " --data " + w.data.string());
  REQUIRE(evj.status == 0);
  auto summary = records(evj.out).back();
  CHECK(summary["type"] == "summary");
  Checkpoint ckpt = load_checkpoint(w.run / "best.ckpt");
  CHECK(summary["mape"].get<double>() == ckpt.best_validation_mape);

  auto scenario = w.data / load_manifest(w.data).test.front();
  auto pr = cli("--json predict --model " + (w.run / "best.ckpt").string() + " --scenario " +
                scenario.string());
  REQUIRE(pr.status == 0);
  auto flows = records(pr.out);
  auto s = load_scenario(scenario);
  REQUIRE(flows.size() == s.flows().size() + 1);
  auto p = predict(s, ckpt.params, ckpt.stats, ckpt.model);
  for (std::size_t f = 0; f < s.flows().size(); ++f) {
    CHECK(flows[f]["flow"] == s.flows()[f].id);
    CHECK(flows[f]["delay_s"].get<double>() == p.delays_s[f]);
  }
}

TEST_CASE("evaluate on a perfect fixture prints 0.00%") {
  auto& w = workspace();
  REQUIRE(fs::exists(w.run / "best.ckpt"));
  Checkpoint ckpt = load_checkpoint(w.run / "best.ckpt");
  fs::path fixture = w.root / "perfect";
  fs::create_directories(fixture);
  for (const auto& named : load_split(w.data, Split::Train)) {
    auto p = predict(named.scenario, ckpt.params, ckpt.stats, ckpt.model);
    save_scenario(with_labels(named.scenario, p.delays_s), fixture / named.name);
  }
  auto r = cli("evaluate --model " + (w.run / "best.ckpt").string() + " --data " + fixture.string());
  REQUIRE(r.status == 0);
  CHECK(r.out.find("MAPE 0.00%") != std::string::npos);
}

TEST_CASE("data and model errors exit with status 1") {
  auto& w = workspace();
  auto r = cli("evaluate --model " + (w.root / "missing.ckpt").string() + " --data " + w.data.string(),
               true);
  CHECK(r.status == 1);
  CHECK(r.out.find("error: IoError") != std::string::npos);
  fs::path unlabelled = w.root / "unlabelled";
  fs::create_directories(unlabelled);
  auto s = load_split(w.data, Split::Train).front();
  save_scenario(with_labels(s.scenario, std::nullopt), unlabelled / "u.json");
  r = cli("evaluate --model " + (w.run / "best.ckpt").string() + " --data " + unlabelled.string(), true);
  CHECK(r.status == 1);
  CHECK(r.out.find("MissingLabels") != std::string::npos);
  CHECK(cli("predict --model " + (w.run / "best.ckpt").string() + " --scenario " +
            (w.root / "gen.json").string()).status == 1);
}

TEST_CASE("gradcheck on the tiny configuration passes") {
  auto r = cli("--seed 2 gradcheck");
  CHECK(r.status == 0);
  CHECK(r.out.find("max relative error") != std::string::npos);
  CHECK(r.out.find("ok") != std::string::npos);
}
