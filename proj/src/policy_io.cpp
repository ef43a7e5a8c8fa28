#include "qsim/policy_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qsim {

namespace {

using nlohmann::json;

json header(const char* kind) { return {{"format", "qsim-policy"}, {"version", kPolicyFormatVersion}, {"kind", kind}}; }

json layout_json(const ObservationLayout& l) {
  return {{"n_nodes", l.n_nodes}, {"static_features", l.static_features}};
}

ObservationLayout layout_from(const json& j) {
  ObservationLayout l;
  l.n_nodes = j.at("n_nodes").get<std::size_t>();
  l.static_features = j.at("static_features").get<bool>();
  return l;
}

json parse_header(std::string_view line) {
  json h;
  try {
    h = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(1, std::string("policy header is not JSON: ") + e.what());
  }
  if (!h.is_object() || h.value("format", "") != "qsim-policy") throw FormatError(1, "not a qsim policy file");
  if (!h.contains("version") || !h["version"].is_number_integer() || h["version"].get<int>() != kPolicyFormatVersion) {
    throw FormatError(1, "unsupported policy file version " + (h.contains("version") ? h["version"].dump() : "(none)"));
  }
  return h;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open policy " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_layout(const ObservationLayout& l, const Env& env) {
  if (!(l == env.layout())) throw InvalidParams("policy was trained for a different cluster layout");
}

}  // namespace

std::string qtable_to_text(const QTablePolicy& policy) {
  json j = header("qtable");
  j["layout"] = layout_json(policy.discretizer().layout());
  j["n_actions"] = policy.n_actions();
  json rows = json::array();
  for (const auto& [key, q] : policy.table()) rows.push_back({{"key", std::to_string(key)}, {"q", q}});
  j["table"] = std::move(rows);
  return j.dump() + "\n";
}

QTablePolicy qtable_from_text(std::string_view text) {
  const auto nl = text.find('\n');
  const json j = parse_header(text.substr(0, nl));
  if (j.value("kind", "") != "qtable") throw FormatError(1, "expected a qtable policy");
  try {
    const auto layout = layout_from(j.at("layout"));
    const auto n = j.at("n_actions").get<std::size_t>();
    QTablePolicy::Table table;
    for (const auto& row : j.at("table")) {
      auto q = row.at("q").get<std::vector<double>>();
      if (q.size() != n) throw FormatError(1, "q-table row has the wrong width");
      table.emplace(std::stoull(row.at("key").get<std::string>()), std::move(q));
    }
    return QTablePolicy(StateDiscretizer(layout), n, std::move(table));
  } catch (const json::exception& e) {
    throw FormatError(1, std::string("bad qtable policy: ") + e.what());
  }
}

std::string dqn_to_bytes(const DqnPolicy& policy) {
  json j = header("dqn");
  j["layers"] = policy.network().sizes();
  j["n_params"] = policy.network().params().size();
  j["normalize"] = policy.input_bounds().has_value();
  if (policy.input_bounds()) {
    j["bounds_lo"] = policy.input_bounds()->lo;
    j["bounds_hi"] = policy.input_bounds()->hi;
  }
  std::string out = j.dump() + "\n";
  for (double p : policy.network().params()) {
    auto bits = std::bit_cast<std::uint64_t>(p);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.append(buf, 8);
  }
  return out;
}

DqnPolicy dqn_from_bytes(std::string_view bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw FormatError(1, "missing policy header line");
  const json j = parse_header(bytes.substr(0, nl));
  if (j.value("kind", "") != "dqn") throw FormatError(1, "expected a dqn policy");
  try {
    const auto sizes = j.at("layers").get<std::vector<std::size_t>>();
    const auto n = j.at("n_params").get<std::size_t>();
    const std::string_view blob = bytes.substr(nl + 1);
    if (blob.size() != n * 8) throw FormatError(2, "weight blob has " + std::to_string(blob.size()) + " bytes, expected " + std::to_string(n * 8));
    std::vector<double> params(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, blob.data() + 8 * i, 8);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      params[i] = std::bit_cast<double>(bits);
    }
    std::optional<ObservationBounds> bounds;
    if (j.at("normalize").get<bool>()) {
      bounds = ObservationBounds{j.at("bounds_lo").get<std::vector<double>>(), j.at("bounds_hi").get<std::vector<double>>()};
    }
    return DqnPolicy(Mlp(sizes, std::move(params)), std::move(bounds));
  } catch (const json::exception& e) {
    throw FormatError(1, std::string("bad dqn policy: ") + e.what());
  }
}

void save_policy(const Policy& policy, const std::filesystem::path& path) {
  std::string text;
  if (const auto* q = dynamic_cast<const QTablePolicy*>(&policy)) {
    text = qtable_to_text(*q);
  } else if (const auto* d = dynamic_cast<const DqnPolicy*>(&policy)) {
    text = dqn_to_bytes(*d);
  } else {
    text = header(policy.kind().c_str()).dump() + "\n";
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::unique_ptr<Policy> make_policy(std::string_view spec, const Env& env, std::uint64_t seed) {
  auto builtin = [&](std::string_view kind) -> std::unique_ptr<Policy> {
    if (kind == "random") return std::make_unique<RandomPolicy>(env.n_actions(), seed);
    if (kind == "round_robin") return std::make_unique<RoundRobinPolicy>(env.n_actions());
    if (kind == "greedy") return std::make_unique<GreedyPolicy>(env.config().catalog, env.layout());
    return nullptr;
  };
  if (auto p = builtin(spec)) return p;

  const std::string bytes = read_all(std::filesystem::path(spec));
  const auto nl = bytes.find('\n');
  const json h = parse_header(std::string_view(bytes).substr(0, nl));
  const std::string kind = h.value("kind", "");
  if (kind == "qtable") {
    auto p = std::make_unique<QTablePolicy>(qtable_from_text(bytes));
    check_layout(p->discretizer().layout(), env);
    return p;
  }
  if (kind == "dqn") {
    auto p = std::make_unique<DqnPolicy>(dqn_from_bytes(bytes));
    const auto& sizes = p->network().sizes();
    if (sizes.front() != env.obs_dim() || sizes.back() != env.n_actions()) {
      throw InvalidParams("dqn policy was trained for a different observation/action space");
    }
    return p;
  }
  if (auto p = builtin(kind)) return p;
  throw FormatError(1, "unknown policy kind '" + kind + "'");
}

}  // namespace qsim
