#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qsim/dqn.hpp"
#include "qsim/env.hpp"
#include "qsim/qlearning.hpp"
#include "qsim/workload.hpp"

namespace qsim::cli {

enum ExitCode : int { kOk = 0, kPartial = 1, kInvalidConfig = 2 };

inline constexpr int kProtocolVersion = 1;

struct EnvOptions {
  double penalty = -10.0;
  std::int64_t max_steps = 0;
  bool normalize = false;
  RewardMode reward_mode = RewardMode::InverseCompletion;
  double success_reward = 1.0;
  bool static_features = false;
  double backlog_bound_s = 300.0;
};

// Resolved settings of one command. Precedence: flags > config file > defaults.
struct RunConfig {
  std::optional<std::filesystem::path> catalog_path;
  std::optional<std::filesystem::path> dataset_path;
  std::optional<std::filesystem::path> features_path;
  GenerationParams generation;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::int64_t> round;
  std::optional<std::int64_t> rounds;
  std::int64_t episodes = 100;
  std::vector<std::string> policies;
  EnvOptions env;
  std::string algo = "qlearning";
  std::int64_t iterations = 100;
  QLearningConfig qlearning;
  DqnConfig dqn;
};

/// Strict JSON config reader: unknown keys raise InvalidConfig.
RunConfig parse_run_config(std::string_view json_text);

/// Catalog, dataset and environment built from a config.
Env build_env(const RunConfig& cfg);
std::shared_ptr<const Dataset> build_dataset(const RunConfig& cfg);

// One serve-env session: one JSON request line in, one JSON response line out.
class EnvSession {
 public:
  explicit EnvSession(Env env) : env_(std::move(env)) {}
  std::string handle(const std::string& line);
  bool closed() const noexcept { return closed_; }

 private:
  Env env_;
  bool closed_ = false;
};

/// Serves sessions over a stream pair until "close" or end of input.
void serve_stream(EnvSession& session, std::istream& in, std::ostream& out);

/// Entry point shared by the binary and the tests. Output streams are injectable.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace qsim::cli
