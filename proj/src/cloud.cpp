#include "qsim/cloud.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qsim {

namespace {

void validate(const NodeSpec& s) {
  if (s.name.empty()) throw InvalidParams("node name is empty");
  if (s.qubits < 1) throw InvalidParams("node '" + s.name + "' needs at least one qubit");
  if (s.quantum_volume < 1) throw InvalidParams("node '" + s.name + "' has non-positive QV");
  if (!(s.clops > 0.0)) throw InvalidParams("node '" + s.name + "' has non-positive CLOPS");
  if (!(s.d1cps > 0.0)) throw InvalidParams("node '" + s.name + "' has non-positive D1CPS");
}

}  // namespace

NodeCatalog::NodeCatalog(std::vector<NodeSpec> entries) : entries_(std::move(entries)) {
  std::set<std::string> names;
  for (const auto& e : entries_) {
    validate(e);
    if (!names.insert(e.name).second) throw InvalidParams("duplicate node name '" + e.name + "'");
  }
}

const NodeCatalog& NodeCatalog::builtin() {
  static const NodeCatalog catalog({
      {"washington", 127, 64, 850.0, 16967.5},
      {"kolkata", 27, 128, 2000.0, 39900.0},
      {"hanoi", 27, 64, 2300.0, 45935.0},
      {"perth", 7, 32, 2900.0, 57905.0},
      {"lagos", 7, 32, 2700.0, 53865.0},
  });
  return catalog;
}

NodeCatalog NodeCatalog::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(0, std::string("catalog is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw FormatError(0, "catalog must be a JSON array");
  static const std::set<std::string> kKeys{"name", "qubits", "qv", "clops", "d1cps"};
  std::vector<NodeSpec> entries;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& row = doc[i];
    const std::string where = "catalog entry " + std::to_string(i);
    if (!row.is_object()) throw FormatError(0, where + " is not an object");
    for (const auto& [key, _] : row.items()) {
      if (!kKeys.contains(key)) throw FormatError(0, where + " has unknown key '" + key + "'");
    }
    for (const auto& key : kKeys) {
      if (!row.contains(key)) throw FormatError(0, where + " is missing '" + key + "'");
    }
    try {
      NodeSpec s;
      s.name = row.at("name").get<std::string>();
      s.qubits = row.at("qubits").get<std::int64_t>();
      s.quantum_volume = row.at("qv").get<std::int64_t>();
      s.clops = row.at("clops").get<double>();
      s.d1cps = row.at("d1cps").get<double>();
      entries.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(0, where + ": " + e.what());
    }
  }
  return NodeCatalog(std::move(entries));
}

NodeCatalog NodeCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open catalog " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string NodeCatalog::to_json() const {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : entries_) {
    doc.push_back({{"name", e.name}, {"qubits", e.qubits}, {"qv", e.quantum_volume},
                   {"clops", e.clops}, {"d1cps", e.d1cps}});
  }
  return doc.dump(2);
}

const NodeSpec* NodeCatalog::find(std::string_view name) const {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const NodeSpec& e) { return e.name == name; });
  return it == entries_.end() ? nullptr : &*it;
}

std::int64_t NodeCatalog::max_qubits() const {
  std::int64_t m = 0;
  for (const auto& e : entries_) m = std::max(m, e.qubits);
  return m;
}

QNode create_node(const NodeCatalog& catalog, std::string_view name, NodeId id) {
  const NodeSpec* spec = catalog.find(name);
  if (spec == nullptr) throw UnknownNodeModel("no node model named '" + std::string(name) + "'");
  QNode node;
  node.id = id;
  node.spec = *spec;
  return node;
}

QNode create_ibmq_node(std::string_view name, NodeId id) {
  return create_node(NodeCatalog::builtin(), name, id);
}

double estimate_execution_time(std::int64_t depth1_layers, std::int64_t shots, double d1cps) {
  return static_cast<double>(depth1_layers) * static_cast<double>(shots) / d1cps;
}

double backlog(const QNode& node, SimTime at) {
  return std::max(0.0, node.next_free_at - at);
}

bool fits(const QTask& task, const QNode& node) { return task.qubits <= node.spec.qubits; }

ExecutionRecord submit(const QTask& task, QNode& node, SimTime at, Engine& engine) {
  ExecutionRecord rec;
  rec.task_id = task.id;
  rec.node_id = node.id;
  rec.dispatch_at = at;
  if (!fits(task, node)) return rec;

  const SimTime start = std::max(at, node.next_free_at);
  const double exec = estimate_execution_time(task, node);
  rec.start_at = start;
  rec.wait_s = start - at;
  rec.exec_s = exec;
  rec.completion_s = rec.wait_s + rec.exec_s;
  rec.success = true;

  node.next_free_at = start + exec;
  node.fifo_queue.push_back(task.id);
  engine.schedule(start, {EventKind::ExecutionStart, task.id, node.id, 0});
  engine.schedule(node.next_free_at, {EventKind::ExecutionComplete, task.id, node.id, 0});
  return rec;
}

Broker::Broker(const NodeCatalog& catalog) {
  nodes_.reserve(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    QNode n;
    n.id = static_cast<NodeId>(i);
    n.spec = catalog.entries()[i];
    nodes_.push_back(std::move(n));
  }
}

ExecutionRecord Broker::submit(const QTask& task, std::size_t node_index, SimTime at, Engine& engine) {
  return qsim::submit(task, nodes_.at(node_index), at, engine);
}

void Broker::on_event(const Event& ev) {
  if (ev.payload.kind != EventKind::ExecutionComplete) return;
  auto& q = nodes_.at(static_cast<std::size_t>(ev.payload.node)).fifo_queue;
  // FIFO: completions on a node arrive in submission order.
  if (q.empty() || q.front() != ev.payload.task) {
    throw std::logic_error("completion of task " + std::to_string(ev.payload.task) +
                           " out of FIFO order on node " + std::to_string(ev.payload.node));
  }
  q.pop_front();
  ++completed_;
}

}  // namespace qsim
