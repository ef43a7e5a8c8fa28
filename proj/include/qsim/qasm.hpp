#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qsim {

struct CircuitFeatures {
  std::int64_t qubits = 0;
  std::int64_t depth1_layers = 0;
  std::int64_t gate_count = 0;
  std::map<std::string, std::int64_t> gate_histogram;
  std::string app_tag;  // source algorithm; extractor fills in the file stem

  bool operator==(const CircuitFeatures&) const = default;
};

struct QuantumRegister {
  std::string name;
  std::int64_t size = 0;
  std::int64_t offset = 0;  // first global qubit index
};

/// One applied operation after broadcasting, on global qubit indices.
struct GateOp {
  std::string name;
  std::vector<std::int64_t> qubits;
};

struct Circuit {
  std::vector<QuantumRegister> qregs;
  std::vector<GateOp> ops;  // barriers are not recorded
  std::int64_t num_qubits() const;
};

// OpenQASM 2.0 subset: OPENQASM header, include, qreg, creg, gate calls with
// optional parameter lists, measure, reset, barrier and // comments. Register
// arguments broadcast as in the language definition. `gate`, `opaque` and
// `if` are rejected with ParseError. A version other than 2.x raises
// UnsupportedVersion.
Circuit parse_qasm(std::string_view source);

/// ASAP layering: a gate's layer is one more than the deepest layer among the
/// qubits it touches.
CircuitFeatures compute_features(const Circuit& circuit);

inline CircuitFeatures extract_features_qasm(std::string_view source) {
  return compute_features(parse_qasm(source));
}

}  // namespace qsim
