#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sgda/simenv.hpp"

namespace sgda::stl {

struct Signal {
  std::string name;
  std::vector<double> times;   // strictly increasing, uniform step
  std::vector<double> values;  // same length as times, non-empty
};

struct SignalTable {
  std::vector<Signal> signals;

  const Signal* find(std::string_view name) const;
  // Throws EvalError when the name does not resolve.
  const Signal& at(std::string_view name) const;
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// Untimed whole-trace STL fragment: atoms over named signals with >=/<=
// thresholds, Boolean connectives, and unbounded G/F.
struct Formula {
  enum class Kind { AtomGe, AtomLe, Not, And, Or, Globally, Eventually };
  Kind kind = Kind::AtomGe;
  std::string signal;      // atoms only
  double threshold = 0.0;  // atoms only
  std::vector<FormulaPtr> children;
};

FormulaPtr atom_ge(std::string signal, double threshold);
FormulaPtr atom_le(std::string signal, double threshold);
FormulaPtr negate(FormulaPtr f);
FormulaPtr conj(std::vector<FormulaPtr> children);
FormulaPtr disj(std::vector<FormulaPtr> children);
FormulaPtr globally(FormulaPtr f);
FormulaPtr eventually(FormulaPtr f);

std::string to_string(const Formula& f);

// Text grammar used in config files:
//   formula := and_expr ('|' and_expr)*
//   and_expr := unary ('&' unary)*
//   unary := '!' unary | 'G' '(' formula ')' | 'F' '(' formula ')'
//          | '(' formula ')' | atom
//   atom := identifier ('>=' | '<=') number
FormulaPtr parse_formula(std::string_view text);

// Standard Boolean semantics evaluated at time 0; G quantifies over every
// sample of the suffix, F over some sample. Atoms are closed (>= / <=).
bool eval_bool(const Formula& f, const SignalTable& signals);

// Quantitative semantics at time 0: atoms s(t)-c / c-s(t), Not negates,
// And min, Or max, G min over the suffix, F max over the suffix.
double eval_quant(const Formula& f, const SignalTable& signals);

// Derives the monitored signals from a trajectory: `ego_ado_distance` (gap:
// center distance minus the collision radius sum, <= 0 means overlap),
// `ego_speed` (m/s), `brake_intensity` (brake fraction in [0,1], 0 while
// throttling).
SignalTable extract_signals(const sim::Trajectory& traj,
                            const sim::ScenarioGeometry& geom);

}  // namespace sgda::stl
