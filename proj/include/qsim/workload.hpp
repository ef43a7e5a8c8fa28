#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qsim/cloud.hpp"
#include "qsim/qasm.hpp"

namespace qsim {

enum class ArrivalModel {
  Uniform,  // fixed count per window, i.i.d. uniform placement in [0, window)
  Poisson,  // fixed count, exponential gaps at rate count/window
};

template <typename T>
struct Range {
  T lo{};
  T hi{};
  bool operator==(const Range&) const = default;
};

/// The twelve benchmark applications the synthetic workload mixes.
const std::vector<std::string>& default_app_tags();

struct GenerationParams {
  std::int64_t n_subsets = 1900;
  std::int64_t tasks_per_subset = 25;
  double window_s = 60.0;
  Range<std::int64_t> qubit_range{2, 27};
  Range<std::int64_t> depth_range{10, 100};
  Range<std::int64_t> shots_range{500, 2000};
  std::vector<std::string> app_tags = default_app_tags();
  ArrivalModel arrival = ArrivalModel::Uniform;

  /// Throws InvalidParams.
  void validate() const;
  bool operator==(const GenerationParams&) const = default;
};

struct Dataset {
  std::vector<std::vector<QTask>> subsets;
  std::uint64_t seed = 0;
  GenerationParams params;

  std::size_t n_subsets() const noexcept { return subsets.size(); }
  std::size_t total_tasks() const noexcept;

  // Only the task content is compared; seed and params are not stored in CSV.
  bool operator==(const Dataset& other) const { return subsets == other.subsets; }
};

Dataset generate_dataset(const GenerationParams& params, std::uint64_t seed);

/// Circuits are drawn uniformly with replacement from `pool`; arrivals and
/// shots follow `params`. Throws InvalidParams on an empty pool.
Dataset dataset_from_features(std::span<const CircuitFeatures> pool, const GenerationParams& params,
                              std::uint64_t seed);

/// Tasks of subset `round`, in arrival order. Throws RoundOutOfRange.
const std::vector<QTask>& get_subset(const Dataset& dataset, std::int64_t round);

inline constexpr const char* kDatasetCsvHeader = "subset_id,task_id,arrival_s,qubits,depth1_layers,shots,app_tag";
inline constexpr const char* kFeaturesCsvHeader = "source,app_tag,qubits,depth1_layers,gate_count";

std::string dataset_to_csv(const Dataset& dataset);
/// Throws FormatError(line) on a bad header, row or field.
Dataset dataset_from_csv(std::string_view text);

/// Throws IoError when the file cannot be written.
void save_csv(const Dataset& dataset, const std::filesystem::path& path);
/// Throws IoError or FormatError.
Dataset load_csv(const std::filesystem::path& path);

/// A feature row as written by the extractor: (source label, features).
using FeatureRow = std::pair<std::string, CircuitFeatures>;
std::string features_to_csv(std::span<const FeatureRow> rows);
std::vector<CircuitFeatures> features_from_csv(std::string_view text);

}  // namespace qsim
