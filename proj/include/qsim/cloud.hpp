#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qsim/engine.hpp"

namespace qsim {

/// One row of a node catalog: the static capacity metrics of a quantum computer.
struct NodeSpec {
  std::string name;
  std::int64_t qubits = 0;
  std::int64_t quantum_volume = 0;
  double clops = 0.0;  // circuit layer operations per second
  double d1cps = 0.0;  // depth-1 circuit operations per second

  bool operator==(const NodeSpec&) const = default;
};

class NodeCatalog {
 public:
  NodeCatalog() = default;
  /// Throws InvalidParams on duplicate names or non-positive metrics.
  explicit NodeCatalog(std::vector<NodeSpec> entries);

  /// The five built-in IBM Quantum systems.
  static const NodeCatalog& builtin();

  /// JSON array of {"name","qubits","qv","clops","d1cps"}; unknown keys are rejected.
  static NodeCatalog from_json(std::string_view text);
  static NodeCatalog load(const std::filesystem::path& path);
  std::string to_json() const;

  const std::vector<NodeSpec>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const NodeSpec* find(std::string_view name) const;
  std::int64_t max_qubits() const;

  bool operator==(const NodeCatalog&) const = default;

 private:
  std::vector<NodeSpec> entries_;
};

struct QNode {
  NodeId id = 0;
  NodeSpec spec;
  SimTime next_free_at{};
  std::deque<TaskId> fifo_queue;  // queued or running, oldest first

  bool operator==(const QNode&) const = default;
};

struct QTask {
  TaskId id = 0;
  SimTime arrival_at{};
  std::int64_t qubits = 1;
  std::int64_t depth1_layers = 0;
  std::int64_t shots = 1;
  std::string app_tag;

  bool operator==(const QTask&) const = default;
};

// Outcome of one placement. On failure only task/node/dispatch are meaningful;
// the timing fields hold NaN.
struct ExecutionRecord {
  static constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

  TaskId task_id = -1;
  NodeId node_id = -1;
  SimTime dispatch_at{};
  SimTime start_at{kUndefined};
  double wait_s = kUndefined;
  double exec_s = kUndefined;
  double completion_s = kUndefined;
  bool success = false;
};

/// Node populated from the built-in catalog. Throws UnknownNodeModel.
QNode create_ibmq_node(std::string_view name, NodeId id = 0);
/// Same, looking the model up in a user catalog.
QNode create_node(const NodeCatalog& catalog, std::string_view name, NodeId id = 0);

/// (depth1_layers * shots) / d1cps, in seconds.
double estimate_execution_time(std::int64_t depth1_layers, std::int64_t shots, double d1cps);
inline double estimate_execution_time(const QTask& task, const QNode& node) {
  return estimate_execution_time(task.depth1_layers, task.shots, node.spec.d1cps);
}

/// Remaining queued work on the node as seen at `at`; never negative.
double backlog(const QNode& node, SimTime at);

bool fits(const QTask& task, const QNode& node);

/// Dispatches `task` to `node` at time `at`. A task needing more qubits than
/// the node has yields success=false and leaves node and engine untouched.
/// Otherwise the task joins the node's FIFO queue, its timing is computed in
/// closed form, and start/complete events are put on the engine calendar.
ExecutionRecord submit(const QTask& task, QNode& node, SimTime at, Engine& engine);

// Dispatcher owning the cluster's nodes.
class Broker {
 public:
  Broker() = default;
  /// One node per catalog entry, ids in catalog order.
  explicit Broker(const NodeCatalog& catalog);

  ExecutionRecord submit(const QTask& task, std::size_t node_index, SimTime at, Engine& engine);

  /// Bookkeeping for engine events: pops the finished task off its node queue.
  void on_event(const Event& ev);

  std::span<const QNode> nodes() const noexcept { return nodes_; }
  const QNode& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::uint64_t completed() const noexcept { return completed_; }

  bool operator==(const Broker&) const = default;

 private:
  std::vector<QNode> nodes_;
  std::uint64_t completed_ = 0;
};

}  // namespace qsim
