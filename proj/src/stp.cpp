#include "sgda/stp.hpp"

#include <algorithm>
#include <cmath>

#include "sgda/errors.hpp"

namespace sgda::stp {

stl::FormulaPtr Specification::literal_formula(
    const std::vector<Property>& props) const {
  std::vector<stl::FormulaPtr> terms;
  terms.reserve(props.size());
  for (std::size_t i = 0; i < props.size(); ++i)
    terms.push_back(signs[i] ? props[i].formula : stl::negate(props[i].formula));
  return terms.size() == 1 ? terms[0] : stl::conj(std::move(terms));
}

std::string Specification::sign_string() const {
  std::string s;
  s.reserve(signs.size());
  for (bool b : signs) s.push_back(b ? '1' : '0');
  return s;
}

std::vector<std::size_t> Partition::landed_counts() const {
  std::vector<std::size_t> counts(landed.size());
  for (std::size_t j = 0; j < landed.size(); ++j) counts[j] = landed[j].size();
  return counts;
}

Partition build_partition(std::vector<Property> props) {
  const std::size_t l = props.size();
  if (l == 0) throw ConfigError("partition needs at least one property");
  if (l > kMaxProperties)
    throw ConfigError("partition cap exceeded: " + std::to_string(l) +
                      " properties (max " + std::to_string(kMaxProperties) + ")");
  for (const auto& p : props) {
    if (!(p.weight > 0.0 && p.weight < 1.0))
      throw ConfigError("property weight must lie strictly inside (0,1): " + p.name);
    if (!p.formula) throw ConfigError("property has no formula: " + p.name);
  }

  Partition part;
  part.properties = std::move(props);
  const std::size_t n = std::size_t{1} << l;
  part.specs.reserve(n);
  part.spec_weights.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    Specification spec;
    spec.index = j;
    spec.signs.resize(l);
    double w = 1.0;
    for (std::size_t i = 0; i < l; ++i) {
      bool sign = (j >> i) & 1;
      spec.signs[i] = sign;
      w *= sign ? part.properties[i].weight : 1.0 - part.properties[i].weight;
    }
    part.specs.push_back(std::move(spec));
    part.spec_weights.push_back(w);
  }
  part.landed.resize(n);
  part.attempts.assign(n, 0);
  return part;
}

std::vector<double> robustness_vector(const Partition& part,
                                      const stl::SignalTable& signals) {
  std::vector<double> rho;
  rho.reserve(part.properties.size());
  for (const auto& p : part.properties)
    rho.push_back(stl::eval_quant(*p.formula, signals));
  return rho;
}

std::vector<double> robustness_vector(const Partition& part,
                                      const sim::Trajectory& traj,
                                      const sim::ScenarioGeometry& geom) {
  return robustness_vector(part, stl::extract_signals(traj, geom));
}

double spec_robustness(const Specification& spec, const std::vector<double>& rho) {
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rho.size(); ++i)
    r = std::min(r, spec.signs[i] ? rho[i] : -rho[i]);
  return r;
}

std::size_t classify(const Partition& part, const stl::SignalTable& signals) {
  std::size_t index = 0;
  for (std::size_t i = 0; i < part.properties.size(); ++i)
    if (stl::eval_bool(*part.properties[i].formula, signals))
      index |= std::size_t{1} << i;
  return index;
}

std::size_t classify(const Partition& part, const sim::Trajectory& traj,
                     const sim::ScenarioGeometry& geom) {
  return classify(part, stl::extract_signals(traj, geom));
}

std::size_t classify_and_record(Partition& part, const sim::EnvCondition& e,
                                const sim::Trajectory& traj,
                                const sim::ScenarioGeometry& geom) {
  std::size_t j = classify(part, traj, geom);
  part.landed[j].push_back(LandedSample{e, traj});
  return j;
}

std::string partition_csv(const Partition& part) {
  std::string out = "spec_index,signs,landed,attempts,weight\n";
  for (std::size_t j = 0; j < part.num_specs(); ++j) {
    out += std::to_string(j) + "," + part.specs[j].sign_string() + "," +
           std::to_string(part.landed[j].size()) + "," +
           std::to_string(part.attempts[j]) + "," +
           format_double(part.spec_weights[j]) + "\n";
  }
  return out;
}

}  // namespace sgda::stp
