#pragma once

// Test-only reference computations, written independently of the library's
// code paths they check.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "qsim/random.hpp"

namespace qsim::testing {

struct OracleGate {
  std::string name;
  std::vector<int> qubits;
};

/// Layer count by repeated peeling: each pass schedules every gate whose
/// qubits are not claimed by an earlier unscheduled gate.
inline std::int64_t brute_force_depth(int n_qubits, const std::vector<OracleGate>& gates) {
  std::vector<bool> done(gates.size(), false);
  std::size_t remaining = gates.size();
  std::int64_t layers = 0;
  while (remaining > 0) {
    std::vector<bool> blocked(static_cast<std::size_t>(n_qubits), false);
    std::vector<std::size_t> this_layer;
    for (std::size_t g = 0; g < gates.size(); ++g) {
      if (done[g]) continue;
      bool free = true;
      for (int q : gates[g].qubits) free = free && !blocked[static_cast<std::size_t>(q)];
      if (free) this_layer.push_back(g);
      for (int q : gates[g].qubits) blocked[static_cast<std::size_t>(q)] = true;
    }
    for (auto g : this_layer) done[g] = true;
    remaining -= this_layer.size();
    ++layers;
  }
  return layers;
}

struct OracleCircuit {
  std::string qasm;
  int n_qubits = 0;
  std::vector<OracleGate> gates;  // barriers excluded, measures included
};

// Emits QASM for a gate list on a single register `q`.
inline std::string emit_single_register(int n, const std::vector<OracleGate>& gates, bool with_measure_all) {
  std::string s = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n";
  s += "qreg q[" + std::to_string(n) + "];\ncreg c[" + std::to_string(n) + "];\n";
  for (const auto& g : gates) {
    if (g.name == "measure") {
      if (!with_measure_all) s += "measure q[" + std::to_string(g.qubits[0]) + "] -> c[" + std::to_string(g.qubits[0]) + "];\n";
      continue;
    }
    s += g.name;
    if (g.name == "rz" || g.name == "cp") s += "(pi/4)";
    s += ' ';
    for (std::size_t k = 0; k < g.qubits.size(); ++k) {
      if (k) s += ',';
      s += "q[" + std::to_string(g.qubits[k]) + "]";
    }
    s += ";\n";
  }
  if (with_measure_all) s += "barrier q;\nmeasure q -> c;\n";
  return s;
}

inline OracleCircuit ghz(int n) {
  OracleCircuit c;
  c.n_qubits = n;
  c.gates.push_back({"h", {0}});
  for (int i = 0; i + 1 < n; ++i) c.gates.push_back({"cx", {i, i + 1}});
  for (int i = 0; i < n; ++i) c.gates.push_back({"measure", {i}});
  c.qasm = emit_single_register(n, c.gates, true);
  return c;
}

inline OracleCircuit qft_like(int n) {
  OracleCircuit c;
  c.n_qubits = n;
  for (int i = 0; i < n; ++i) {
    c.gates.push_back({"h", {i}});
    for (int j = i + 1; j < n; ++j) c.gates.push_back({"cp", {j, i}});
  }
  for (int i = 0; i < n / 2; ++i) c.gates.push_back({"swap", {i, n - 1 - i}});
  c.qasm = emit_single_register(n, c.gates, false);
  return c;
}

// Random circuit over two registers, with comments, barriers and a few
// register-broadcast statements, to exercise the parser as well.
inline OracleCircuit random_circuit(std::uint64_t seed) {
  Rng rng(seed);
  const int a = static_cast<int>(rng.uniform_int(1, 6));
  const int b = static_cast<int>(rng.uniform_int(1, 6));
  OracleCircuit c;
  c.n_qubits = a + b;
  auto ref = [&](int q) { return q < a ? "a[" + std::to_string(q) + "]" : "b[" + std::to_string(q - a) + "]"; };
  std::string s = "// random circuit\nOPENQASM 2.0;\ninclude \"qelib1.inc\";\n";
  s += "qreg a[" + std::to_string(a) + "];\nqreg b[" + std::to_string(b) + "]; creg m[" + std::to_string(a + b) + "];\n";
  const int n_ops = static_cast<int>(rng.uniform_int(0, 40));
  for (int k = 0; k < n_ops; ++k) {
    const auto kind = rng.uniform_int(0, 9);
    if (kind == 0) {
      s += "barrier a,b;\n";
    } else if (kind == 1) {
      s += "x a;  // broadcast\n";
      for (int q = 0; q < a; ++q) c.gates.push_back({"x", {q}});
    } else if (kind <= 4 || c.n_qubits < 2) {
      const int q = static_cast<int>(rng.uniform_int(0, c.n_qubits - 1));
      const char* names[] = {"h", "rz", "sx"};
      const std::string name = names[rng.uniform_int(0, 2)];
      s += name + (name == "rz" ? "(0.5*pi)" : "") + " " + ref(q) + ";\n";
      c.gates.push_back({name, {q}});
    } else if (kind <= 7) {
      int q0 = static_cast<int>(rng.uniform_int(0, c.n_qubits - 1));
      int q1 = static_cast<int>(rng.uniform_int(0, c.n_qubits - 2));
      if (q1 >= q0) ++q1;
      s += "CX " + ref(q0) + ", " + ref(q1) + ";\n";
      c.gates.push_back({"cx", {q0, q1}});
    } else {
      const int q = static_cast<int>(rng.uniform_int(0, c.n_qubits - 1));
      s += "measure " + ref(q) + " -> m[" + std::to_string(q) + "];\n";
      c.gates.push_back({"measure", {q}});
    }
  }
  c.qasm = s;
  return c;
}

/// Corpus used by the parser oracle checks: GHZ and QFT-like families plus random circuits.
inline std::vector<OracleCircuit> oracle_corpus() {
  std::vector<OracleCircuit> corpus;
  for (int n = 2; n <= 8; ++n) corpus.push_back(ghz(n));
  for (int n = 1; n <= 6; ++n) corpus.push_back(qft_like(n));
  for (std::uint64_t s = 0; s < 30; ++s) corpus.push_back(random_circuit(s));
  return corpus;
}

}  // namespace qsim::testing
