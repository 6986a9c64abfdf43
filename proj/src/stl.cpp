#include "sgda/stl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <utility>

#include "sgda/errors.hpp"

namespace sgda::stl {

const Signal* SignalTable::find(std::string_view name) const {
  for (const auto& s : signals)
    if (s.name == name) return &s;
  return nullptr;
}

const Signal& SignalTable::at(std::string_view name) const {
  const Signal* s = find(name);
  if (!s) throw EvalError("unresolvable signal name: " + std::string(name));
  return *s;
}

namespace {

FormulaPtr make_node(Formula::Kind kind, std::string signal, double threshold,
                     std::vector<FormulaPtr> children) {
  auto f = std::make_shared<Formula>();
  f->kind = kind;
  f->signal = std::move(signal);
  f->threshold = threshold;
  f->children = std::move(children);
  return f;
}

}  // namespace

FormulaPtr atom_ge(std::string signal, double threshold) {
  return make_node(Formula::Kind::AtomGe, std::move(signal), threshold, {});
}

FormulaPtr atom_le(std::string signal, double threshold) {
  return make_node(Formula::Kind::AtomLe, std::move(signal), threshold, {});
}

FormulaPtr negate(FormulaPtr f) {
  return make_node(Formula::Kind::Not, "", 0.0, {std::move(f)});
}

FormulaPtr conj(std::vector<FormulaPtr> children) {
  if (children.empty()) throw InputError("conj: needs at least one child");
  return make_node(Formula::Kind::And, "", 0.0, std::move(children));
}

FormulaPtr disj(std::vector<FormulaPtr> children) {
  if (children.empty()) throw InputError("disj: needs at least one child");
  return make_node(Formula::Kind::Or, "", 0.0, std::move(children));
}

FormulaPtr globally(FormulaPtr f) {
  return make_node(Formula::Kind::Globally, "", 0.0, {std::move(f)});
}

FormulaPtr eventually(FormulaPtr f) {
  return make_node(Formula::Kind::Eventually, "", 0.0, {std::move(f)});
}

std::string to_string(const Formula& f) {
  using K = Formula::Kind;
  switch (f.kind) {
    case K::AtomGe:
      return f.signal + " >= " + format_double(f.threshold);
    case K::AtomLe:
      return f.signal + " <= " + format_double(f.threshold);
    case K::Not:
      return "!(" + to_string(*f.children[0]) + ")";
    case K::And:
    case K::Or: {
      std::string sep = f.kind == K::And ? " & " : " | ";
      std::string out = "(";
      for (std::size_t i = 0; i < f.children.size(); ++i) {
        if (i) out += sep;
        out += to_string(*f.children[i]);
      }
      return out + ")";
    }
    case K::Globally:
      return "G(" + to_string(*f.children[0]) + ")";
    case K::Eventually:
      return "F(" + to_string(*f.children[0]) + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Parser {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eof() {
    skip_ws();
    return pos >= text.size();
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  bool consume(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c))
      throw ParseError("expected '" + std::string(1, c) + "' at offset " +
                       std::to_string(pos) + " in formula: " + std::string(text));
  }

  std::string identifier() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    if (start == pos)
      throw ParseError("expected identifier at offset " + std::to_string(start) +
                       " in formula: " + std::string(text));
    return std::string(text.substr(start, pos - start));
  }

  double number() {
    skip_ws();
    const char* begin = text.data() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin)
      throw ParseError("expected number at offset " + std::to_string(pos) +
                       " in formula: " + std::string(text));
    pos += static_cast<std::size_t>(end - begin);
    return v;
  }

  FormulaPtr parse_or() {
    std::vector<FormulaPtr> terms{parse_and()};
    while (consume('|')) terms.push_back(parse_and());
    return terms.size() == 1 ? terms[0] : disj(std::move(terms));
  }

  FormulaPtr parse_and() {
    std::vector<FormulaPtr> terms{parse_unary()};
    while (consume('&')) terms.push_back(parse_unary());
    return terms.size() == 1 ? terms[0] : conj(std::move(terms));
  }

  FormulaPtr parse_unary() {
    skip_ws();
    if (consume('!')) return negate(parse_unary());
    if (consume('(')) {
      auto f = parse_or();
      expect(')');
      return f;
    }
    // G(...) / F(...) unless the letter starts a longer identifier.
    if (pos < text.size() && (text[pos] == 'G' || text[pos] == 'F')) {
      char op = text[pos];
      std::size_t next = pos + 1;
      while (next < text.size() && std::isspace(static_cast<unsigned char>(text[next])))
        ++next;
      if (next < text.size() && text[next] == '(' &&
          (pos + 1 >= text.size() ||
           !(std::isalnum(static_cast<unsigned char>(text[pos + 1])) || text[pos + 1] == '_'))) {
        pos = next + 1;
        auto f = parse_or();
        expect(')');
        return op == 'G' ? globally(std::move(f)) : eventually(std::move(f));
      }
    }
    return parse_atom();
  }

  FormulaPtr parse_atom() {
    std::string name = identifier();
    skip_ws();
    if (pos + 1 < text.size() && text[pos + 1] == '=' &&
        (text[pos] == '>' || text[pos] == '<')) {
      char cmp = text[pos];
      pos += 2;
      double c = number();
      return cmp == '>' ? atom_ge(std::move(name), c) : atom_le(std::move(name), c);
    }
    throw ParseError("expected '>=' or '<=' after '" + name +
                     "' in formula: " + std::string(text));
  }
};

}  // namespace

FormulaPtr parse_formula(std::string_view text) {
  Parser p{text};
  auto f = p.parse_or();
  if (!p.eof())
    throw ParseError("trailing input at offset " + std::to_string(p.pos) +
                     " in formula: " + std::string(text));
  return f;
}

// ---------------------------------------------------------------------------
// Semantics

namespace {

std::size_t table_length(const SignalTable& table) {
  if (table.signals.empty()) throw EvalError("empty signal table");
  std::size_t n = table.signals.front().values.size();
  if (n == 0) throw EvalError("empty signal trace");
  for (const auto& s : table.signals)
    if (s.values.size() != n)
      throw EvalError("signal length mismatch for " + s.name);
  return n;
}

std::vector<double> rho(const Formula& f, const SignalTable& sig, std::size_t n) {
  using K = Formula::Kind;
  switch (f.kind) {
    case K::AtomGe: {
      const Signal& s = sig.at(f.signal);
      std::vector<double> out(n);
      for (std::size_t i = 0; i < n; ++i) out[i] = s.values[i] - f.threshold;
      return out;
    }
    case K::AtomLe: {
      const Signal& s = sig.at(f.signal);
      std::vector<double> out(n);
      for (std::size_t i = 0; i < n; ++i) out[i] = f.threshold - s.values[i];
      return out;
    }
    case K::Not: {
      auto out = rho(*f.children[0], sig, n);
      for (auto& v : out) v = -v;
      return out;
    }
    case K::And:
    case K::Or: {
      auto out = rho(*f.children[0], sig, n);
      for (std::size_t c = 1; c < f.children.size(); ++c) {
        auto v = rho(*f.children[c], sig, n);
        for (std::size_t i = 0; i < n; ++i)
          out[i] = f.kind == K::And ? std::min(out[i], v[i]) : std::max(out[i], v[i]);
      }
      return out;
    }
    case K::Globally:
    case K::Eventually: {
      auto out = rho(*f.children[0], sig, n);
      // suffix fold so nested temporal operators see proper suffix semantics
      for (std::size_t i = n - 1; i-- > 0;)
        out[i] = f.kind == K::Globally ? std::min(out[i], out[i + 1])
                                       : std::max(out[i], out[i + 1]);
      return out;
    }
  }
  throw EvalError("unknown formula node");
}

std::vector<char> sat(const Formula& f, const SignalTable& sig, std::size_t n) {
  using K = Formula::Kind;
  switch (f.kind) {
    case K::AtomGe: {
      const Signal& s = sig.at(f.signal);
      std::vector<char> out(n);
      for (std::size_t i = 0; i < n; ++i) out[i] = s.values[i] >= f.threshold;
      return out;
    }
    case K::AtomLe: {
      const Signal& s = sig.at(f.signal);
      std::vector<char> out(n);
      for (std::size_t i = 0; i < n; ++i) out[i] = s.values[i] <= f.threshold;
      return out;
    }
    case K::Not: {
      auto out = sat(*f.children[0], sig, n);
      for (auto& v : out) v = !v;
      return out;
    }
    case K::And:
    case K::Or: {
      auto out = sat(*f.children[0], sig, n);
      for (std::size_t c = 1; c < f.children.size(); ++c) {
        auto v = sat(*f.children[c], sig, n);
        for (std::size_t i = 0; i < n; ++i)
          out[i] = f.kind == K::And ? (out[i] && v[i]) : (out[i] || v[i]);
      }
      return out;
    }
    case K::Globally:
    case K::Eventually: {
      auto out = sat(*f.children[0], sig, n);
      for (std::size_t i = n - 1; i-- > 0;)
        out[i] = f.kind == K::Globally ? (out[i] && out[i + 1])
                                       : (out[i] || out[i + 1]);
      return out;
    }
  }
  throw EvalError("unknown formula node");
}

}  // namespace

bool eval_bool(const Formula& f, const SignalTable& signals) {
  return sat(f, signals, table_length(signals)).front() != 0;
}

double eval_quant(const Formula& f, const SignalTable& signals) {
  return rho(f, signals, table_length(signals)).front();
}

SignalTable extract_signals(const sim::Trajectory& traj,
                            const sim::ScenarioGeometry& geom) {
  sim::validate_geometry(geom);
  if (traj.steps.empty()) throw InputError("extract_signals: empty trajectory");

  const double radius_sum = geom.ego_radius + geom.ado_radius;
  Signal dist{"ego_ado_distance", {}, {}};
  Signal speed{"ego_speed", {}, {}};
  Signal brake{"brake_intensity", {}, {}};
  for (const auto& step : traj.steps) {
    const auto& st = step.state;
    dist.times.push_back(st.t);
    speed.times.push_back(st.t);
    brake.times.push_back(st.t);
    dist.values.push_back(
        std::hypot(st.ego.x - st.ado.x, st.ego.y - st.ado.y) - radius_sum);
    speed.values.push_back(st.ego.speed);
    brake.values.push_back(std::max(0.0, -step.action.longitudinal));
  }
  return SignalTable{{std::move(dist), std::move(speed), std::move(brake)}};
}

}  // namespace sgda::stl
