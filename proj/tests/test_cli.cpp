#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "qsim/agents.hpp"
#include "qsim/format.hpp"

using namespace qsim;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "qsim");
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("qsim_cli_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string str() const { return path_.string(); }
  fs::path operator/(const std::string& f) const { return path_ / f; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> v;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) v.push_back(f);
  if (!line.empty() && line.back() == ',') v.emplace_back();
  return v;
}

}  // namespace

TEST_CASE("generate writes the requested number of rows") {
  TempDir dir("generate");
  const auto r = run_cli({"generate", "--subsets", "2", "--tasks", "3", "--seed", "1", "--out", dir.str()});
  CHECK(r.code == 0);
  const auto rows = lines(slurp(dir / "dataset.csv"));
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == kDatasetCsvHeader);
  CHECK(run_cli({"generate", "--subsets", "2", "--tasks", "3", "--seed", "1", "--out", (dir / "nope").string()}).code == 2);
  CHECK(run_cli({"generate", "--subsets", "2", "--tasks", "3", "--out", dir.str()}).code == 2);
  CHECK(run_cli({"generate", "--subsets", "0", "--seed", "1", "--out", dir.str()}).code == 2);
  CHECK(run_cli({"generate", "--bogus"}).code == 2);
  CHECK(run_cli({"nonsense"}).code == 2);
}

TEST_CASE("generate honours a config file and flags override it") {
  TempDir dir("config");
  spit(dir / "cfg.json", R"({"seed": 4, "generation": {"subsets": 3, "tasks_per_subset": 2}})");
  CHECK(run_cli({"generate", "--config", (dir / "cfg.json").string(), "--out", dir.str()}).code == 0);
  CHECK(lines(slurp(dir / "dataset.csv")).size() == 7);
  CHECK(run_cli({"generate", "--config", (dir / "cfg.json").string(), "--tasks", "4", "--out", dir.str()}).code == 0);
  CHECK(lines(slurp(dir / "dataset.csv")).size() == 13);
  spit(dir / "bad.json", R"({"seed": 4, "colour": "blue"})");
  CHECK(run_cli({"generate", "--config", (dir / "bad.json").string(), "--out", dir.str()}).code == 2);
  CHECK(run_cli({"generate", "--config", (dir / "missing.json").string(), "--out", dir.str()}).code == 2);
}

TEST_CASE("config parsing is strict") {
  CHECK_NOTHROW(cli::parse_run_config(R"({"seed": 1, "env": {"penalty": -5}})"));
  CHECK(cli::parse_run_config(R"({"env": {"penalty": -5}})").env.penalty == -5.0);
  CHECK(cli::parse_run_config(R"({"policy": ["greedy", "random"]})").policies.size() == 2);
  CHECK_THROWS_AS(cli::parse_run_config(R"({"sed": 1})"), InvalidConfig);
  CHECK_THROWS_AS(cli::parse_run_config(R"({"env": {"penalti": -5}})"), InvalidConfig);
  CHECK_THROWS_AS(cli::parse_run_config(R"({"trainer": {"dqn": {"lr": 0.1}}})"), InvalidConfig);
  CHECK_THROWS_AS(cli::parse_run_config(R"({"seed": "one"})"), InvalidConfig);
  CHECK_THROWS_AS(cli::parse_run_config("{"), InvalidConfig);
}

TEST_CASE("extract computes circuit features") {
  TempDir dir("extract");
  spit(dir / "ghz_3.qasm",
       "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\nh q[0];\ncx q[0],q[1];\ncx q[1],q[2];\n");
  auto r = run_cli({"extract", (dir / "ghz_3.qasm").string()});
  CHECK(r.code == 0);
  auto rows = lines(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == kFeaturesCsvHeader);
  CHECK(rows[1] == "ghz_3.qasm,ghz,3,3,3");

  r = run_cli({"extract"});
  CHECK(r.code == 0);
  CHECK(lines(r.out) == std::vector<std::string>{kFeaturesCsvHeader});

  spit(dir / "broken.qasm", "OPENQASM 2.0;\nqreg q[2];\ncx q[0] q[1];\n");
  r = run_cli({"extract", "--out", dir.str(), (dir / "ghz_3.qasm").string(), (dir / "broken.qasm").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("broken.qasm") != std::string::npos);
  CHECK(lines(slurp(dir / "features.csv")).size() == 2);

  r = run_cli({"extract", "-"}, "OPENQASM 2.0;\nqreg q[2];\nh q;\nmeasure q[0] -> c[0];\n");
  CHECK(r.code == 1);  // c is undeclared
  r = run_cli({"extract", "-"}, "OPENQASM 2.0;\nqreg q[2];\ncreg c[2];\nh q;\nmeasure q -> c;\n");
  CHECK(r.code == 0);
  CHECK(lines(r.out).at(1) == "stdin,stdin,2,2,4");
}

TEST_CASE("generate from extracted features") {
  TempDir dir("features");
  spit(dir / "ghz_3.qasm", "OPENQASM 2.0;\nqreg q[3];\nh q[0];\ncx q[0],q[1];\ncx q[1],q[2];\n");
  REQUIRE(run_cli({"extract", "--out", dir.str(), (dir / "ghz_3.qasm").string()}).code == 0);
  REQUIRE(run_cli({"generate", "--features", (dir / "features.csv").string(), "--subsets", "2", "--tasks", "4",
                   "--seed", "2", "--out", dir.str()})
              .code == 0);
  const auto rows = lines(slurp(dir / "dataset.csv"));
  REQUIRE(rows.size() == 9);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = split(rows[i]);
    CHECK(f[3] == "3");
    CHECK(f[4] == "3");
    CHECK(f[6] == "ghz");
  }
}

TEST_CASE("simulate with greedy places every task") {
  TempDir dir("simulate");
  REQUIRE(run_cli({"generate", "--subsets", "4", "--seed", "8", "--out", dir.str()}).code == 0);
  const std::string dataset = (dir / "dataset.csv").string();
  const auto r = run_cli({"simulate", "--dataset", dataset, "--policy", "greedy", "--seed", "1", "--out", dir.str()});
  CHECK(r.code == 0);
  const std::string trace = slurp(dir / "trace.csv");
  const auto rows = lines(trace);
  REQUIRE(rows.size() == 101);
  CHECK(rows[0] == "task_id,node,dispatch_s,start_s,wait_s,exec_s,completion_s,success");
  double sum = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = split(rows[i]);
    REQUIRE(f.size() == 8);
    CHECK(f[7] == "1");
    const double wait = std::stod(f[4]), exec = std::stod(f[5]), completion = std::stod(f[6]);
    CHECK(std::abs(completion - (wait + exec)) < 1e-9);
    CHECK(std::abs(std::stod(f[3]) - std::stod(f[2]) - wait) < 1e-9);
    sum += completion;
  }
  const json stats = json::parse(slurp(dir / "stats.json"));
  CHECK(stats["violations"] == 0);
  CHECK(stats["episodes"] == 4);
  CHECK(stats["terminated_episodes"] == 4);
  CHECK(std::abs(stats["total_completion_s"].get<double>() - sum) < 1e-6);

  REQUIRE(run_cli({"simulate", "--dataset", dataset, "--policy", "greedy", "--seed", "1", "--out", dir.str()}).code == 0);
  CHECK(slurp(dir / "trace.csv") == trace);

  REQUIRE(run_cli({"simulate", "--dataset", dataset, "--policy", "random", "--round", "2", "--seed", "1", "--out",
                   dir.str()})
              .code == 0);
  const auto random_rows = lines(slurp(dir / "trace.csv"));
  bool any_failed = false;
  for (std::size_t i = 1; i < random_rows.size(); ++i) {
    const auto f = split(random_rows[i]);
    if (f[7] == "0") {
      any_failed = true;
      CHECK(f[3].empty());
      CHECK(f[6].empty());
    }
  }
  CHECK(any_failed);
  CHECK(run_cli({"simulate", "--dataset", dataset, "--round", "9", "--seed", "1", "--out", dir.str()}).code == 2);
  CHECK(run_cli({"simulate", "--dataset", dataset, "--policy", "smart", "--seed", "1", "--out", dir.str()}).code == 2);
}

TEST_CASE("train and evaluate") {
  TempDir dir("train");
  auto r = run_cli({"train", "--algo", "qlearning", "--iterations", "100", "--seed", "3", "--out", dir.str()});
  CHECK(r.code == 0);
  const std::string curve = slurp(dir / "curve.csv");
  const auto rows = lines(curve);
  CHECK(rows.size() == 101);
  CHECK(rows[0] == kCurveCsvHeader);
  const auto parsed = curve_from_csv(curve).rows;
  CHECK(parsed.back().iteration == 100);
  CHECK(parsed.back().ep_len_mean <= parsed.front().ep_len_mean);
  CHECK(fs::exists(dir / "policy.json"));

  r = run_cli({"evaluate", "--policy", (dir / "policy.json").string(), "--policy", "random", "--episodes", "20",
               "--seed", "3", "--out", dir.str()});
  CHECK(r.code == 0);
  const json eval = json::parse(slurp(dir / "eval.json"));
  CHECK(eval["policies"].size() == 2);
  CHECK(eval["policies"]["random"]["kind"] == "random");
  CHECK(eval["policies"][(dir / "policy.json").string()]["kind"] == "qtable");
  CHECK(eval["policies"]["random"]["episodes"] == 20);

  std::string text = slurp(dir / "policy.json");
  text.replace(text.find("\"version\":1"), 11, "\"version\":7");
  spit(dir / "future.json", text);
  CHECK(run_cli({"evaluate", "--policy", (dir / "future.json").string(), "--seed", "3", "--out", dir.str()}).code == 2);
  CHECK(run_cli({"evaluate", "--policy", (dir / "absent.json").string(), "--seed", "3", "--out", dir.str()}).code == 2);
  CHECK(run_cli({"evaluate", "--seed", "3", "--out", dir.str()}).code == 2);
  CHECK(run_cli({"train", "--algo", "sarsa", "--seed", "3", "--out", dir.str()}).code == 2);
  CHECK(run_cli({"train", "--iterations", "0", "--seed", "3", "--out", dir.str()}).code == 2);
}

TEST_CASE("train is reproducible") {
  TempDir a("repro_a"), b("repro_b");
  REQUIRE(run_cli({"train", "--iterations", "10", "--seed", "5", "--out", a.str()}).code == 0);
  REQUIRE(run_cli({"train", "--iterations", "10", "--seed", "5", "--out", b.str()}).code == 0);
  CHECK(slurp(a / "curve.csv") == slurp(b / "curve.csv"));
  CHECK(slurp(a / "policy.json") == slurp(b / "policy.json"));
}

TEST_CASE("dqn training writes a binary policy usable by simulate") {
  TempDir dir("dqn");
  spit(dir / "cfg.json",
       R"({"generation": {"subsets": 20}, "trainer": {"dqn": {"hidden_layers": [16], "steps_per_iteration": 200,
           "learning_starts": 50}}})");
  REQUIRE(run_cli({"train", "--config", (dir / "cfg.json").string(), "--algo", "dqn", "--iterations", "2", "--seed",
                   "1", "--out", dir.str()})
              .code == 0);
  CHECK(fs::exists(dir / "policy.bin"));
  CHECK(lines(slurp(dir / "curve.csv")).size() == 3);
  CHECK(run_cli({"simulate", "--config", (dir / "cfg.json").string(), "--policy", (dir / "policy.bin").string(),
                 "--rounds", "2", "--seed", "1", "--out", dir.str()})
            .code == 0);
  CHECK(lines(slurp(dir / "trace.csv")).size() >= 51);
}

TEST_CASE("serve-env over stdio") {
  const std::string script =
      "{\"cmd\":\"handshake\"}\n"
      "{\"cmd\":\"reset\",\"seed\":1,\"round\":0}\n"
      "{\"cmd\":\"step\",\"action\":99}\n"
      "{\"cmd\":\"step\",\"action\":1}\n"
      "not json\n"
      "{\"cmd\":\"fly\"}\n"
      "{\"cmd\":\"close\"}\n"
      "{\"cmd\":\"handshake\"}\n";
  const auto r = run_cli({"serve-env", "--stdio", "--seed", "1"}, script);
  CHECK(r.code == 0);
  const auto out = lines(r.out);
  REQUIRE(out.size() == 7);  // nothing is answered after close
  const json hs = json::parse(out[0]);
  CHECK(hs["obs_dim"] == 13);
  CHECK(hs["n_actions"] == 5);
  CHECK(hs["protocol"] == 1);
  CHECK(hs["obs_low"].size() == 13);
  const json reset = json::parse(out[1]);
  CHECK(reset["obs"].size() == 13);
  CHECK(reset["round"] == 0);
  CHECK(json::parse(out[2])["error"] == "InvalidAction");
  const json step = json::parse(out[3]);
  CHECK(step.contains("reward"));
  CHECK(step["obs"].size() == 13);
  CHECK(step["terminated"] == false);
  CHECK(step["info"].contains("violations_so_far"));
  CHECK(json::parse(out[4])["error"] == "ProtocolError");
  CHECK(json::parse(out[5])["error"] == "ProtocolError");
  CHECK(json::parse(out[6])["ok"] == true);

  CHECK(run_cli({"serve-env", "--seed", "1"}).code == 2);
}

TEST_CASE("serve-env session reports episode errors") {
  cli::RunConfig cfg = cli::parse_run_config(R"({"seed": 2, "generation": {"subsets": 1, "tasks_per_subset": 1}})");
  cli::EnvSession session(cli::build_env(cfg));
  CHECK(json::parse(session.handle(R"({"cmd":"step","action":0})"))["error"] == "EpisodeOver");
  session.handle(R"({"cmd":"reset"})");
  const json big = json::parse(session.handle(R"({"cmd":"step","action":0})"));
  CHECK(big["terminated"] == true);
  CHECK(json::parse(session.handle(R"({"cmd":"step","action":0})"))["error"] == "EpisodeOver");
  CHECK(json::parse(session.handle(R"({"cmd":"reset","round":5})"))["error"] == "RoundOutOfRange");
  CHECK(json::parse(session.handle(R"({"cmd":"step","action":-1})"))["error"] == "InvalidAction");
  CHECK_FALSE(session.closed());
  CHECK(json::parse(session.handle(R"({"cmd":"handshake","protocol":2})"))["error"] == "ProtocolError");
  CHECK(json::parse(session.handle(R"({"cmd":"handshake","protocol":1})"))["protocol"] == 1);
}

TEST_CASE("generate with defaults") {
  TempDir dir("defaults");
  REQUIRE(run_cli({"generate", "--seed", "1", "--out", dir.str()}).code == 0);
  CHECK(lines(slurp(dir / "dataset.csv")).size() == 47500 + 1);
}
