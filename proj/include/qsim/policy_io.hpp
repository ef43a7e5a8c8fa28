#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "qsim/agents.hpp"
#include "qsim/dqn.hpp"
#include "qsim/qlearning.hpp"

namespace qsim {

inline constexpr int kPolicyFormatVersion = 1;

// Policy files start with a one-line JSON header
//   {"format":"qsim-policy","version":1,"kind":...}
// qtable files are that single line (table included); dqn files follow the
// header line with the raw little-endian float64 parameter vector.
std::string qtable_to_text(const QTablePolicy& policy);
QTablePolicy qtable_from_text(std::string_view text);
std::string dqn_to_bytes(const DqnPolicy& policy);
DqnPolicy dqn_from_bytes(std::string_view bytes);

void save_policy(const Policy& policy, const std::filesystem::path& path);

/// "random", "round_robin" and "greedy" name built-in policies; anything else
/// is read as a policy file. Throws FormatError for an unknown version or kind
/// and InvalidParams when the policy does not fit the environment.
std::unique_ptr<Policy> make_policy(std::string_view spec, const Env& env, std::uint64_t seed);

}  // namespace qsim
