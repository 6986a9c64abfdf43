#include "sgda/ecselect.hpp"

#include <algorithm>
#include <numeric>

#include "sgda/errors.hpp"

namespace sgda::ecsel {

void OutcomePairTable::add_pair(std::size_t expert_spec, std::size_t il_spec) {
  ++involved.at(expert_spec);
  if (il_spec == expert_spec) {
    ++matched.at(expert_spec);
  } else {
    ++involved.at(il_spec);
  }
}

std::vector<double> selection_weights(const OutcomePairTable& table) {
  std::vector<double> w(table.num_specs(), 1.0);
  for (std::size_t j = 0; j < table.num_specs(); ++j) {
    if (table.involved[j] > 0)
      w[j] = static_cast<double>(table.involved[j] - table.matched[j]) /
             static_cast<double>(table.involved[j]);
  }
  return w;
}

namespace {

std::vector<std::size_t> select_uniform(std::size_t pool_size, std::size_t m,
                                        Rng& rng) {
  // partial Fisher-Yates
  std::vector<std::size_t> idx(pool_size);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = i + rng.next_index(pool_size - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  return idx;
}

}  // namespace

std::vector<std::size_t> ec_select(const std::vector<std::size_t>& pool_specs,
                                   const std::optional<std::vector<double>>& weights,
                                   std::size_t m, Rng& rng) {
  if (m > pool_specs.size())
    throw InputError("ec_select: m exceeds the pool size");
  if (!weights) return select_uniform(pool_specs.size(), m, rng);

  // bucket the pool by spec
  std::size_t num_specs = weights->size();
  std::vector<std::vector<std::size_t>> buckets(num_specs);
  for (std::size_t i = 0; i < pool_specs.size(); ++i)
    buckets.at(pool_specs[i]).push_back(i);

  std::vector<std::size_t> selected;
  selected.reserve(m);
  while (selected.size() < m) {
    double total = 0.0;
    for (std::size_t j = 0; j < num_specs; ++j)
      if (!buckets[j].empty()) total += (*weights)[j];
    std::size_t spec = num_specs;
    if (total > 0.0) {
      double u = rng.next_double() * total;
      double acc = 0.0;
      for (std::size_t j = 0; j < num_specs; ++j) {
        if (buckets[j].empty()) continue;
        acc += (*weights)[j];
        if (u < acc) {
          spec = j;
          break;
        }
      }
      if (spec == num_specs) {  // fp tail: take the last non-empty spec
        for (std::size_t j = num_specs; j-- > 0;)
          if (!buckets[j].empty()) {
            spec = j;
            break;
          }
      }
    } else {
      // all remaining weights zero: degenerate perfect-match case
      std::size_t remaining = 0;
      for (const auto& b : buckets) remaining += b.size();
      std::size_t pick = rng.next_index(remaining);
      for (std::size_t j = 0; j < num_specs; ++j) {
        if (pick < buckets[j].size()) {
          spec = j;
          break;
        }
        pick -= buckets[j].size();
      }
    }
    auto& bucket = buckets[spec];
    std::size_t k = rng.next_index(bucket.size());
    selected.push_back(bucket[k]);
    bucket[k] = bucket.back();
    bucket.pop_back();
  }
  return selected;
}

std::string selection_csv(const OutcomePairTable& table,
                          const std::vector<double>& weights,
                          const std::vector<std::size_t>& pool_specs,
                          const std::vector<std::size_t>& selected) {
  std::vector<std::size_t> pool_count(table.num_specs(), 0);
  std::vector<std::size_t> sel_count(table.num_specs(), 0);
  for (std::size_t s : pool_specs) ++pool_count.at(s);
  for (std::size_t i : selected) ++sel_count.at(pool_specs.at(i));

  std::string out = "spec_index,involved,matched,weight,pool,selected\n";
  for (std::size_t j = 0; j < table.num_specs(); ++j) {
    out += std::to_string(j) + "," + std::to_string(table.involved[j]) + "," +
           std::to_string(table.matched[j]) + "," + format_double(weights[j]) +
           "," + std::to_string(pool_count[j]) + "," +
           std::to_string(sel_count[j]) + "\n";
  }
  return out;
}

}  // namespace sgda::ecsel
