#include "qsim/workload.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "qsim/format.hpp"
#include "qsim/random.hpp"

namespace qsim {

namespace {

template <typename T>
void check_range(const Range<T>& r, T min_lo, const char* what) {
  if (r.lo > r.hi) throw InvalidParams(std::string(what) + " range is empty");
  if (r.lo < min_lo) throw InvalidParams(std::string(what) + " range starts below " + std::to_string(min_lo));
}

void check_tag(const std::string& tag) {
  if (tag.find_first_of(",\r\n\"") != std::string::npos) {
    throw InvalidParams("app tag '" + tag + "' contains a CSV delimiter");
  }
}

std::vector<double> draw_arrivals(const GenerationParams& p, Rng& rng) {
  std::vector<double> t(static_cast<std::size_t>(p.tasks_per_subset));
  if (p.arrival == ArrivalModel::Uniform) {
    for (auto& x : t) x = rng.uniform(0.0, p.window_s);
    std::sort(t.begin(), t.end());
  } else {
    const double rate = static_cast<double>(p.tasks_per_subset) / p.window_s;
    double clock = 0.0;
    for (auto& x : t) {
      clock += rng.exponential(rate);
      x = clock;
    }
  }
  return t;
}

template <typename Fill>
Dataset build(const GenerationParams& params, std::uint64_t seed, Fill&& fill) {
  params.validate();
  Rng rng(seed);
  Dataset d;
  d.seed = seed;
  d.params = params;
  d.subsets.resize(static_cast<std::size_t>(params.n_subsets));
  TaskId next_id = 0;
  for (auto& subset : d.subsets) {
    const auto arrivals = draw_arrivals(params, rng);
    subset.reserve(arrivals.size());
    for (double at : arrivals) {
      QTask t;
      t.id = next_id++;
      t.arrival_at = SimTime{at};
      fill(t, rng);
      subset.push_back(std::move(t));
    }
  }
  return d;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t b = 0;
  while (true) {
    const auto e = line.find(sep, b);
    out.push_back(line.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
    if (e == std::string_view::npos) break;
    b = e + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view s, std::size_t line, const char* column) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw FormatError(line, std::string("bad value '") + std::string(s) + "' in column " + column);
  }
  return v;
}

// Iterates lines with 1-based numbers, tolerating a trailing newline and '\r'.
template <typename F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t lineno = 0;
  std::size_t b = 0;
  while (b < text.size()) {
    auto e = text.find('\n', b);
    if (e == std::string_view::npos) e = text.size();
    std::string_view line = text.substr(b, e - b);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    f(++lineno, line);
    b = e + 1;
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

const std::vector<std::string>& default_app_tags() {
  static const std::vector<std::string> tags{
      "ae",  "dj",      "ghz",          "qft",          "qftentangled", "qnn",
      "qpeexact", "qpeinexact", "randomcircuit", "realamprandom", "su2random", "twolocalrandom"};
  return tags;
}

void GenerationParams::validate() const {
  if (n_subsets < 1) throw InvalidParams("n_subsets must be at least 1");
  if (tasks_per_subset < 1) throw InvalidParams("tasks_per_subset must be at least 1");
  if (!(window_s > 0.0)) throw InvalidParams("window_s must be positive");
  check_range<std::int64_t>(qubit_range, 1, "qubit");
  check_range<std::int64_t>(depth_range, 0, "depth");
  check_range<std::int64_t>(shots_range, 1, "shots");
  if (app_tags.empty()) throw InvalidParams("app_tags is empty");
  for (const auto& t : app_tags) check_tag(t);
}

std::size_t Dataset::total_tasks() const noexcept {
  std::size_t n = 0;
  for (const auto& s : subsets) n += s.size();
  return n;
}

Dataset generate_dataset(const GenerationParams& params, std::uint64_t seed) {
  return build(params, seed, [&](QTask& t, Rng& rng) {
    t.qubits = rng.uniform_int(params.qubit_range.lo, params.qubit_range.hi);
    t.depth1_layers = rng.uniform_int(params.depth_range.lo, params.depth_range.hi);
    t.shots = rng.uniform_int(params.shots_range.lo, params.shots_range.hi);
    t.app_tag = params.app_tags[rng.index(params.app_tags.size())];
  });
}

Dataset dataset_from_features(std::span<const CircuitFeatures> pool, const GenerationParams& params,
                              std::uint64_t seed) {
  if (pool.empty()) throw InvalidParams("feature pool is empty");
  for (const auto& f : pool) {
    if (f.qubits < 1) throw InvalidParams("circuit with no qubits in feature pool");
    check_tag(f.app_tag);
  }
  return build(params, seed, [&](QTask& t, Rng& rng) {
    const CircuitFeatures& f = pool[rng.index(pool.size())];
    t.qubits = f.qubits;
    t.depth1_layers = f.depth1_layers;
    t.shots = rng.uniform_int(params.shots_range.lo, params.shots_range.hi);
    t.app_tag = f.app_tag;
  });
}

const std::vector<QTask>& get_subset(const Dataset& dataset, std::int64_t round) {
  if (round < 0 || static_cast<std::size_t>(round) >= dataset.subsets.size()) {
    throw RoundOutOfRange("round " + std::to_string(round) + " but dataset has " +
                          std::to_string(dataset.subsets.size()) + " subsets");
  }
  return dataset.subsets[static_cast<std::size_t>(round)];
}

std::string dataset_to_csv(const Dataset& dataset) {
  std::string out = kDatasetCsvHeader;
  out += '\n';
  for (std::size_t s = 0; s < dataset.subsets.size(); ++s) {
    for (const auto& t : dataset.subsets[s]) {
      check_tag(t.app_tag);
      out += std::to_string(s);
      out += ',';
      out += std::to_string(t.id);
      out += ',';
      out += format_fixed(t.arrival_at.seconds, 6);
      out += ',';
      out += std::to_string(t.qubits);
      out += ',';
      out += std::to_string(t.depth1_layers);
      out += ',';
      out += std::to_string(t.shots);
      out += ',';
      out += t.app_tag;
      out += '\n';
    }
  }
  return out;
}

Dataset dataset_from_csv(std::string_view text) {
  std::map<std::int64_t, std::vector<QTask>> groups;
  bool saw_header = false;
  for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    if (!saw_header) {
      if (line != kDatasetCsvHeader) throw FormatError(lineno, "expected header '" + std::string(kDatasetCsvHeader) + "'");
      saw_header = true;
      return;
    }
    if (line.empty()) return;
    const auto f = split(line, ',');
    if (f.size() != 7) throw FormatError(lineno, "expected 7 columns, found " + std::to_string(f.size()));
    const auto subset = parse_number<std::int64_t>(f[0], lineno, "subset_id");
    if (subset < 0) throw FormatError(lineno, "negative subset_id");
    QTask t;
    t.id = parse_number<std::int64_t>(f[1], lineno, "task_id");
    t.arrival_at = SimTime{parse_number<double>(f[2], lineno, "arrival_s")};
    t.qubits = parse_number<std::int64_t>(f[3], lineno, "qubits");
    t.depth1_layers = parse_number<std::int64_t>(f[4], lineno, "depth1_layers");
    t.shots = parse_number<std::int64_t>(f[5], lineno, "shots");
    t.app_tag = std::string(f[6]);
    if (t.arrival_at.seconds < 0.0) throw FormatError(lineno, "negative arrival_s");
    if (t.qubits < 1) throw FormatError(lineno, "qubits must be positive");
    if (t.depth1_layers < 0) throw FormatError(lineno, "depth1_layers must be non-negative");
    if (t.shots < 1) throw FormatError(lineno, "shots must be positive");
    groups[subset].push_back(std::move(t));
  });
  if (!saw_header) throw FormatError(1, "empty dataset file");

  Dataset d;
  if (!groups.empty()) d.subsets.resize(static_cast<std::size_t>(groups.rbegin()->first) + 1);
  std::int64_t max_size = 0;
  for (auto& [id, tasks] : groups) {
    std::stable_sort(tasks.begin(), tasks.end(),
                     [](const QTask& a, const QTask& b) { return a.arrival_at < b.arrival_at; });
    max_size = std::max<std::int64_t>(max_size, static_cast<std::int64_t>(tasks.size()));
    d.subsets[static_cast<std::size_t>(id)] = std::move(tasks);
  }
  d.params.n_subsets = static_cast<std::int64_t>(d.subsets.size());
  d.params.tasks_per_subset = max_size;
  return d;
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  const std::string text = dataset_to_csv(dataset);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

Dataset load_csv(const std::filesystem::path& path) { return dataset_from_csv(read_file(path)); }

std::string features_to_csv(std::span<const FeatureRow> rows) {
  std::string out = kFeaturesCsvHeader;
  out += '\n';
  for (const auto& [source, f] : rows) {
    check_tag(source);
    check_tag(f.app_tag);
    out += source + ',' + f.app_tag + ',' + std::to_string(f.qubits) + ',' + std::to_string(f.depth1_layers) + ',' +
           std::to_string(f.gate_count) + '\n';
  }
  return out;
}

std::vector<CircuitFeatures> features_from_csv(std::string_view text) {
  std::vector<CircuitFeatures> out;
  bool saw_header = false;
  for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    if (!saw_header) {
      if (line != kFeaturesCsvHeader) throw FormatError(lineno, "expected header '" + std::string(kFeaturesCsvHeader) + "'");
      saw_header = true;
      return;
    }
    if (line.empty()) return;
    const auto f = split(line, ',');
    if (f.size() != 5) throw FormatError(lineno, "expected 5 columns, found " + std::to_string(f.size()));
    CircuitFeatures c;
    c.app_tag = std::string(f[1]);
    c.qubits = parse_number<std::int64_t>(f[2], lineno, "qubits");
    c.depth1_layers = parse_number<std::int64_t>(f[3], lineno, "depth1_layers");
    c.gate_count = parse_number<std::int64_t>(f[4], lineno, "gate_count");
    out.push_back(std::move(c));
  });
  if (!saw_header) throw FormatError(1, "empty features file");
  return out;
}

}  // namespace qsim
