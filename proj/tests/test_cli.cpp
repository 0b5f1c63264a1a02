#include <fstream>
#include <sstream>

#include "cli_app.hpp"
#include "doctest.h"
#include "gafrl/backtest.hpp"
#include "gafrl/market_data.hpp"
#include "test_support.hpp"

using namespace gafrl;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Markets, a small classifier and a trained agent shared by the tests.
struct Workspace {
  testing::TempDir dir{"cli"};
  std::string train = dir.file("train.csv");
  std::string eval = dir.file("eval.csv");
  std::string other = dir.file("other.csv");
  std::string classifier = dir.file("cls.txt");
  std::string agent = dir.file("agent.txt");

  Workspace() {
    REQUIRE(run({"gen-market", "--bars", "200", "--seed", "1", "--out", train}).code == 0);
    REQUIRE(run({"gen-market", "--bars", "120", "--seed", "2", "--start", "1600000000", "--out",
                 eval})
                .code == 0);
    REQUIRE(run({"gen-market", "--kind", "random-walk", "--bars", "120", "--price", "40",
                 "--out", other})
                .code == 0);
    REQUIRE(run({"train-cnn", "--per-class", "12", "--epochs", "2", "--out", classifier}).code ==
            0);
    REQUIRE(run({"train-agent", "--data", train, "--classifier", classifier, "--episodes", "3",
                 "--seed", "4", "--set", "ppo.update_timestep=128", "--out", agent})
                .code == 0);
  }
};

}  // namespace

TEST_CASE("help and usage errors") {
  auto r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("train-agent") != std::string::npos);
  r = run({});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: usage: ", 0) == 0);
  r = run({"backtest", "--no-such-flag"});
  CHECK(r.code == 2);
}

TEST_CASE("runtime errors are one machine-readable line") {
  testing::TempDir dir("cli_err");
  auto r = run({"backtest", "--out", dir.file("r")});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: config: ", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  r = run({"classify", "--data", dir.file("missing.csv"), "--classifier", dir.file("x")});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: io: ", 0) == 0);
  r = run({"gen-market", "--kind", "zigzag", "--out", dir.file("m.csv")});
  CHECK(r.err.rfind("error: config: unknown market kind", 0) == 0);
}

TEST_CASE("config file values are overridden by flags") {
  testing::TempDir dir("cli_cfg");
  const auto cfg = dir.file("run.cfg");
  std::ofstream(cfg) << "# market\nkind = constant\nbars = 30\nprice = 7\nout = "
                     << dir.file("from_cfg.csv") << "\n";
  REQUIRE(run({"gen-market", "--config", cfg}).code == 0);
  auto s = parse_csv(dir.file("from_cfg.csv"));
  CHECK(s.size() == 30);
  CHECK(s[0].close == 7.0);

  REQUIRE(run({"gen-market", "--config", cfg, "--bars", "12", "--set", "price=9"}).code == 0);
  s = parse_csv(dir.file("from_cfg.csv"));
  CHECK(s.size() == 12);
  CHECK(s[0].close == 9.0);
}

TEST_CASE("encode and corpus generation") {
  testing::TempDir dir("cli_enc");
  const auto data = dir.file("m.csv");
  REQUIRE(run({"gen-market", "--bars", "40", "--out", data}).code == 0);
  const auto r = run({"encode", "--data", data, "--index", "5"});
  REQUIRE(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1 + 4 * 10);
  CHECK(run({"encode", "--data", data, "--index", "35"}).err.rfind("error: insufficient-data", 0) ==
        0);

  const auto corpus = dir.file("corpus.csv");
  REQUIRE(run({"gen-corpus", "--per-class", "3", "--seed", "5", "--out", corpus}).code == 0);
  CHECK(std::count(std::istreambuf_iterator<char>(std::ifstream(corpus).rdbuf()), {}, '\n') ==
        1 + 27);
}

TEST_CASE("pipeline: classify, train, backtest, report, transfer") {
  Workspace ws;
  auto r = run({"classify", "--data", ws.eval, "--classifier", ws.classifier});
  REQUIRE(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1 + (120 - 10 + 1));
  CHECK(std::filesystem::exists(ws.agent + ".log.csv"));

  const auto rep = ws.dir.file("rep");
  r = run({"backtest", "--data", ws.eval, "--classifier", ws.classifier, "--agent", ws.agent,
           "--out", rep});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("total_return_pct=") != std::string::npos);

  // The report subcommand recomputes the metric rows from the exported files.
  r = run({"report", "--dir", rep});
  REQUIRE(r.code == 0);
  const auto written = slurp(rep + "/report.csv");
  CHECK(written.rfind(r.out, 0) == 0);

  const auto tr = ws.dir.file("transfer");
  r = run({"transfer-eval", "--data", ws.other, "--classifier", ws.classifier, "--agent",
           ws.agent, "--source-name", "sawtooth-a", "--out", tr});
  REQUIRE(r.code == 0);
  const auto report = slurp(tr + "/report.csv");
  CHECK(report.find("source,sawtooth-a\n") != std::string::npos);
  CHECK(report.find("target,other\n") != std::string::npos);
}

TEST_CASE("overlapping train and evaluation dates") {
  Workspace ws;
  auto r = run({"backtest", "--data", ws.train, "--classifier", ws.classifier, "--agent",
                ws.agent, "--out", ws.dir.file("o")});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: config: evaluation range", 0) == 0);
  r = run({"backtest", "--data", ws.train, "--classifier", ws.classifier, "--agent", ws.agent,
           "--allow-overlap", "--out", ws.dir.file("o")});
  CHECK(r.code == 0);
  CHECK(r.err.rfind("warning: ", 0) == 0);
  // A filter that leaves no bars is an error.
  r = run({"backtest", "--data", ws.train, "--classifier", ws.classifier, "--agent", ws.agent,
           "--from", "1600000000", "--out", ws.dir.file("o")});
  CHECK(r.code == 1);
}

TEST_CASE("window mismatch between checkpoints is a config error") {
  Workspace ws;
  const auto small = ws.dir.file("cls8.txt");
  REQUIRE(run({"train-cnn", "--per-class", "6", "--epochs", "1", "--window", "8", "--out", small})
              .code == 0);
  const auto r = run({"backtest", "--data", ws.eval, "--classifier", small, "--agent", ws.agent,
                      "--out", ws.dir.file("w")});
  CHECK(r.code == 1);
  CHECK(r.err.find("error: config: agent was trained with window 10") == 0);
  CHECK(run({"classify", "--data", ws.eval, "--classifier", ws.classifier, "--set", "window=8"})
            .code == 1);
}

TEST_CASE("train-agent and backtest are byte-deterministic") {
  Workspace ws;
  std::vector<std::string> reports;
  for (int i = 0; i < 2; ++i) {
    const auto agent = ws.dir.file("det" + std::to_string(i) + ".txt");
    const auto rep = ws.dir.file("det_rep" + std::to_string(i));
    REQUIRE(run({"train-agent", "--data", ws.train, "--classifier", ws.classifier, "--episodes",
                 "2", "--seed", "11", "--set", "ppo.update_timestep=100", "--out", agent})
                .code == 0);
    REQUIRE(run({"backtest", "--data", ws.eval, "--classifier", ws.classifier, "--agent", agent,
                 "--out", rep})
                .code == 0);
    reports.push_back(slurp(rep + "/report.csv") + slurp(rep + "/equity.csv") +
                      slurp(rep + "/trades.csv") + slurp(agent) + slurp(agent + ".log.csv"));
  }
  CHECK(reports[0] == reports[1]);
}
