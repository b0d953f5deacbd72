#include "groves/representation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace groves {
namespace {

// Top-p bundles scored by the maximum valuation any remaining bidder places
// on them; ties go to the lower bundle index.
std::vector<int> top_bundles(const AuctionInstance& others, int p) {
  const int bundles = others.language.bundle_count();
  std::vector<double> score(bundles, 0.0);
  for (int b = 0; b < bundles; ++b)
    for (const auto& profile : others.profiles)
      score[b] = std::max(score[b], profile.values[b]);
  std::vector<int> order(bundles);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    if (score[lhs] != score[rhs]) return score[lhs] > score[rhs];
    return lhs < rhs;
  });
  order.resize(p);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

AuctionTensor build_tensor(const AuctionInstance& instance, int excluded) {
  const int n = instance.num_players();
  if (n < 2)
    throw std::invalid_argument("build_tensor: needs at least two bidders");
  if (excluded < 0 || excluded >= n)
    throw std::invalid_argument("build_tensor: excluded player out of range");

  const AuctionInstance others = instance.without_player(excluded);
  const int bundles = instance.language.bundle_count();

  AuctionTensor x;
  x.bundles = bundles;
  x.players = n - 1;
  x.channels = 2 * bundles + 1;
  x.data.assign(static_cast<std::size_t>(bundles) * x.players * x.channels,
                0.0);

  for (int m = 0; m < bundles; ++m)
    for (int j = 0; j < x.players; ++j)
      x.at(m, j, 0) = others.profiles[j].values[m];

  for (int p = 1; p <= bundles; ++p) {
    Allocation counterfactual;
    switch (instance.language.kind) {
      case LanguageKind::MultiUnitDmu:
        counterfactual = allocate_multi_unit(others, p);
        break;
      case LanguageKind::UnitDemand:
        counterfactual = allocate_unit_demand(others, top_bundles(others, p));
        break;
      case LanguageKind::HierarchicalBundles:
        counterfactual =
            allocate_hierarchical(others, top_bundles(others, p));
        break;
    }
    for (int j = 0; j < x.players; ++j) {
      for (int bundle : counterfactual.granted[j]) {
        x.at(bundle, j, 2 * p - 1) = 1.0;
        x.at(bundle, j, 2 * p) = x.at(bundle, j, 0);
      }
    }
  }
  return x;
}

std::vector<double> build_flat(const AuctionInstance& instance, int excluded) {
  const int n = instance.num_players();
  if (n < 2)
    throw std::invalid_argument("build_flat: needs at least two bidders");
  if (excluded < 0 || excluded >= n)
    throw std::invalid_argument("build_flat: excluded player out of range");

  const AuctionInstance others = instance.without_player(excluded);
  const int bundles = instance.language.bundle_count();
  const int cols = n - 1;

  // Canonical column order: descending total valuation, ties by descending
  // per-bundle values, so any relabeling of the other bidders flattens to
  // the same vector.
  std::vector<double> totals(cols, 0.0);
  for (int j = 0; j < cols; ++j)
    for (double v : others.profiles[j].values) totals[j] += v;
  std::vector<int> order(cols);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    if (totals[lhs] != totals[rhs]) return totals[lhs] > totals[rhs];
    return others.profiles[lhs].values > others.profiles[rhs].values;
  });

  std::vector<double> flat(static_cast<std::size_t>(bundles) * cols);
  for (int m = 0; m < bundles; ++m)
    for (int j = 0; j < cols; ++j)
      flat[static_cast<std::size_t>(m) * cols + j] =
          others.profiles[order[j]].values[m];
  return flat;
}

}  // namespace groves
