#include "qsim/qasm.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <set>

#include "qsim/errors.hpp"

namespace qsim {

namespace {

struct Statement {
  std::string text;
  std::size_t line = 1;
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Splits on ';' after dropping comments. Each statement remembers the line of
// its first non-blank character.
std::vector<Statement> split_statements(std::string_view src, std::size_t& trailing_line) {
  std::vector<Statement> out;
  Statement cur;
  bool started = false;
  std::size_t line = 1;
  bool in_string = false;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const char c = src[i];
    if (!in_string && c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') ++i;
      if (i < src.size()) {
        ++line;
        if (started) cur.text.push_back(' ');
      }
      continue;
    }
    if (c == '\n') ++line;
    if (c == '"') in_string = !in_string;
    if (c == ';' && !in_string) {
      cur.text = std::string(trim(cur.text));
      out.push_back(std::move(cur));
      cur = Statement{};
      started = false;
      continue;
    }
    if (!started && !is_space(c)) {
      started = true;
      cur.line = line;
    }
    if (started) cur.text.push_back(c == '\n' || c == '\r' || c == '\t' ? ' ' : c);
  }
  trailing_line = started ? cur.line : 0;
  if (started && !trim(cur.text).empty()) {
    throw ParseError(cur.line, "missing ';' after '" + std::string(trim(cur.text)) + "'");
  }
  return out;
}

class Cursor {
 public:
  Cursor(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  void skip_ws() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }
  bool done() {
    skip_ws();
    return pos_ >= s_.size();
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  std::string ident() {
    skip_ws();
    if (pos_ >= s_.size() || !is_ident_start(s_[pos_])) fail("expected identifier");
    const std::size_t b = pos_;
    while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(b, pos_ - b));
  }
  std::int64_t integer() {
    skip_ws();
    std::int64_t v = 0;
    const char* first = s_.data() + pos_;
    const char* last = s_.data() + s_.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr == first) fail("expected integer");
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }
  // Skips a balanced parenthesised expression; the opening '(' is already consumed.
  void skip_parens() {
    int depth = 1;
    while (pos_ < s_.size() && depth > 0) {
      if (s_[pos_] == '(') ++depth;
      if (s_[pos_] == ')') --depth;
      ++pos_;
    }
    if (depth != 0) fail("unbalanced parentheses");
  }
  std::string_view rest() {
    skip_ws();
    return s_.substr(pos_);
  }
  [[noreturn]] void fail(const std::string& reason) const {
    throw ParseError(line_, reason + " in '" + std::string(s_) + "'");
  }
  std::size_t line() const { return line_; }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

struct Argument {
  std::string reg;
  std::optional<std::int64_t> index;
};

Argument parse_argument(Cursor& c) {
  Argument a;
  a.reg = c.ident();
  if (c.accept('[')) {
    a.index = c.integer();
    c.expect(']');
  }
  return a;
}

std::vector<Argument> parse_argument_list(Cursor& c) {
  std::vector<Argument> args;
  args.push_back(parse_argument(c));
  while (c.accept(',')) args.push_back(parse_argument(c));
  return args;
}

class Builder {
 public:
  void add_qreg(const std::string& name, std::int64_t size, std::size_t line) {
    declare(name, line);
    if (size < 1) throw ParseError(line, "register '" + name + "' must have positive size");
    circuit_.qregs.push_back({name, size, next_qubit_});
    next_qubit_ += size;
  }
  void add_creg(const std::string& name, std::int64_t size, std::size_t line) {
    declare(name, line);
    if (size < 1) throw ParseError(line, "register '" + name + "' must have positive size");
    cregs_.emplace_back(name, size);
  }

  // Expands register arguments into one operand list per broadcast instance.
  std::vector<std::vector<std::int64_t>> expand(const std::vector<Argument>& args, std::size_t line) const {
    std::int64_t width = 1;
    bool broadcast = false;
    for (const auto& a : args) {
      const QuantumRegister& r = qreg(a.reg, line);
      if (a.index) {
        if (*a.index < 0 || *a.index >= r.size) {
          throw ParseError(line, "index " + std::to_string(*a.index) + " out of range for '" + a.reg + "'");
        }
      } else if (!broadcast) {
        broadcast = true;
        width = r.size;
      } else if (r.size != width) {
        throw ParseError(line, "register arguments of different sizes");
      }
    }
    std::vector<std::vector<std::int64_t>> out;
    for (std::int64_t k = 0; k < width; ++k) {
      std::vector<std::int64_t> qs;
      for (const auto& a : args) {
        const QuantumRegister& r = qreg(a.reg, line);
        qs.push_back(r.offset + (a.index ? *a.index : k));
      }
      std::set<std::int64_t> uniq(qs.begin(), qs.end());
      if (uniq.size() != qs.size()) throw ParseError(line, "repeated qubit operand");
      out.push_back(std::move(qs));
    }
    return out;
  }

  // Barrier operands: registers may have any sizes since nothing is broadcast.
  void check_qubits(const std::vector<Argument>& args, std::size_t line) const {
    for (const auto& a : args) {
      const QuantumRegister& r = qreg(a.reg, line);
      if (a.index && (*a.index < 0 || *a.index >= r.size)) {
        throw ParseError(line, "index " + std::to_string(*a.index) + " out of range for '" + a.reg + "'");
      }
    }
  }

  void check_cbits(const std::vector<Argument>& args, std::size_t line) const {
    for (const auto& a : args) {
      auto it = std::find_if(cregs_.begin(), cregs_.end(), [&](const auto& r) { return r.first == a.reg; });
      if (it == cregs_.end()) throw ParseError(line, "unknown classical register '" + a.reg + "'");
      if (a.index && (*a.index < 0 || *a.index >= it->second)) {
        throw ParseError(line, "index out of range for '" + a.reg + "'");
      }
    }
  }

  void add_op(const std::string& name, std::vector<std::int64_t> qubits) {
    circuit_.ops.push_back({lower(name), std::move(qubits)});
  }

  Circuit take() { return std::move(circuit_); }

  const QuantumRegister& qreg(const std::string& name, std::size_t line) const {
    for (const auto& r : circuit_.qregs) {
      if (r.name == name) return r;
    }
    throw ParseError(line, "unknown quantum register '" + name + "'");
  }

 private:
  void declare(const std::string& name, std::size_t line) {
    if (!names_.insert(name).second) throw ParseError(line, "register '" + name + "' declared twice");
  }

  Circuit circuit_;
  std::vector<std::pair<std::string, std::int64_t>> cregs_;
  std::set<std::string> names_;
  std::int64_t next_qubit_ = 0;
};

void parse_header(Cursor& c) {
  const std::string_view version = c.rest();
  if (version != "2.0" && version != "2") {
    throw UnsupportedVersion("OpenQASM version '" + std::string(version) + "' (only 2.0 is supported)");
  }
}

}  // namespace

std::int64_t Circuit::num_qubits() const {
  std::int64_t n = 0;
  for (const auto& r : qregs) n += r.size;
  return n;
}

Circuit parse_qasm(std::string_view source) {
  std::size_t trailing = 0;
  const auto statements = split_statements(source, trailing);
  Builder b;
  for (const auto& st : statements) {
    if (st.text.empty()) continue;
    Cursor c(st.text, st.line);
    const std::string kw = c.ident();
    if (kw == "OPENQASM") {
      parse_header(c);
    } else if (kw == "include") {
      const std::string_view rest = c.rest();
      if (rest.size() < 2 || rest.front() != '"' || rest.back() != '"') c.fail("include expects a quoted file name");
    } else if (kw == "qreg" || kw == "creg") {
      const std::string name = c.ident();
      c.expect('[');
      const std::int64_t size = c.integer();
      c.expect(']');
      if (!c.done()) c.fail("unexpected trailing text");
      if (kw == "qreg") {
        b.add_qreg(name, size, st.line);
      } else {
        b.add_creg(name, size, st.line);
      }
    } else if (kw == "barrier") {
      b.check_qubits(parse_argument_list(c), st.line);
      if (!c.done()) c.fail("unexpected trailing text");
    } else if (kw == "measure") {
      const Argument q = parse_argument(c);
      c.expect('-');
      c.expect('>');
      const Argument cbit = parse_argument(c);
      if (!c.done()) c.fail("unexpected trailing text");
      b.check_cbits({cbit}, st.line);
      if (q.index.has_value() != cbit.index.has_value()) c.fail("measure operands must both be bits or both registers");
      for (auto& qs : b.expand({q}, st.line)) b.add_op("measure", std::move(qs));
    } else if (kw == "gate" || kw == "opaque" || kw == "if") {
      c.fail("'" + kw + "' statements are not supported");
    } else {
      if (c.accept('(')) c.skip_parens();
      const auto args = parse_argument_list(c);
      if (!c.done()) c.fail("unexpected trailing text");
      for (auto& qs : b.expand(args, st.line)) b.add_op(kw, std::move(qs));
    }
  }
  return b.take();
}

CircuitFeatures compute_features(const Circuit& circuit) {
  CircuitFeatures f;
  f.qubits = circuit.num_qubits();
  std::vector<std::int64_t> layer(static_cast<std::size_t>(f.qubits), 0);
  for (const auto& op : circuit.ops) {
    std::int64_t top = 0;
    for (auto q : op.qubits) top = std::max(top, layer[static_cast<std::size_t>(q)]);
    for (auto q : op.qubits) layer[static_cast<std::size_t>(q)] = top + 1;
    f.depth1_layers = std::max(f.depth1_layers, top + 1);
    ++f.gate_count;
    ++f.gate_histogram[op.name];
  }
  return f;
}

}  // namespace qsim
