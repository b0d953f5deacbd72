#include "groves/auction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace groves {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::int64_t kBruteForceLimit = 10'000'000;

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument(message);
}

void require_language(const AuctionInstance& instance, LanguageKind kind,
                      const char* op) {
  if (instance.language.kind != kind)
    fail(std::string(op) + ": instance uses language " +
         instance.language.name());
}

// Maximum-weight bipartite matching with free disposal: every player may
// stay unmatched at weight 0. `weight` is players x candidates. Returns the
// optimal total weight; `assignment` (when non-null) receives one candidate
// index per player, or -1.
//
// Shortest-augmenting-path assignment with potentials on the cost matrix
// -weight, padded with one zero-cost dummy column per player.
double lap_max(const std::vector<std::vector<double>>& weight,
               std::vector<int>* assignment) {
  const int n = static_cast<int>(weight.size());
  if (assignment) assignment->assign(n, -1);
  if (n == 0) return 0.0;
  const int m = static_cast<int>(weight[0].size());
  const int cols = m + n;

  auto cost = [&](int row, int col) {
    return col < m ? -weight[row][col] : 0.0;
  };

  std::vector<double> u(n + 1, 0.0), v(cols + 1, 0.0);
  std::vector<int> match(cols + 1, 0);  // column -> row (1-based), 0 = free
  std::vector<int> way(cols + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(cols + 1, kInf);
    std::vector<char> used(cols + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  double total = 0.0;
  for (int j = 1; j <= m; ++j) {
    if (match[j] != 0) {
      total += weight[match[j] - 1][j - 1];
      if (assignment) (*assignment)[match[j] - 1] = j - 1;
    }
  }
  return total;
}

}  // namespace

BiddingLanguage BiddingLanguage::multi_unit_dmu(int num_items) {
  if (num_items < 1) fail("multi_unit_dmu: num_items must be positive");
  return {LanguageKind::MultiUnitDmu, num_items};
}

BiddingLanguage BiddingLanguage::unit_demand(int num_objects) {
  if (num_objects < 1) fail("unit_demand: num_objects must be positive");
  return {LanguageKind::UnitDemand, num_objects};
}

BiddingLanguage BiddingLanguage::hierarchical_bundles(int num_leaves) {
  if (!is_power_of_two(num_leaves))
    fail("hierarchical_bundles: num_leaves must be a positive power of two");
  return {LanguageKind::HierarchicalBundles, num_leaves};
}

int BiddingLanguage::bundle_count() const {
  return kind == LanguageKind::HierarchicalBundles ? 2 * size - 1 : size;
}

std::string BiddingLanguage::name() const {
  switch (kind) {
    case LanguageKind::MultiUnitDmu: return "multi_unit_dmu";
    case LanguageKind::UnitDemand: return "unit_demand";
    case LanguageKind::HierarchicalBundles: return "hierarchical_bundles";
  }
  return "unknown";
}

BiddingLanguage parse_language(const std::string& name, int size) {
  if (name == "multi_unit_dmu") return BiddingLanguage::multi_unit_dmu(size);
  if (name == "unit_demand") return BiddingLanguage::unit_demand(size);
  if (name == "hierarchical_bundles")
    return BiddingLanguage::hierarchical_bundles(size);
  fail("unknown bidding language: " + name);
}

BundleTree::BundleTree(int num_leaves) : num_leaves_(num_leaves) {
  if (!is_power_of_two(num_leaves))
    fail("BundleTree: leaf count must be a positive power of two");
  int width = num_leaves;
  int offset = 0;
  while (width >= 1) {
    offsets_.push_back(offset);
    offset += width;
    if (width == 1) break;
    width /= 2;
  }
}

int BundleTree::level_of(int node) const {
  for (int level = static_cast<int>(offsets_.size()) - 1; level >= 0; --level)
    if (node >= offsets_[level]) return level;
  fail("BundleTree: node index out of range");
}

int BundleTree::left_child(int node) const {
  const int level = level_of(node);
  if (level == 0) fail("BundleTree: leaf has no children");
  return offsets_[level - 1] + 2 * (node - offsets_[level]);
}

int BundleTree::right_child(int node) const { return left_child(node) + 1; }

std::pair<int, int> BundleTree::leaf_range(int node) const {
  const int level = level_of(node);
  const int span = 1 << level;
  const int first = (node - offsets_[level]) * span;
  return {first, first + span};
}

std::vector<BundleDescriptor> bundle_space(const BiddingLanguage& language) {
  std::vector<BundleDescriptor> bundles;
  if (language.kind == LanguageKind::HierarchicalBundles) {
    const BundleTree tree(language.size);
    for (int node = 0; node < tree.node_count(); ++node) {
      const auto [first, last] = tree.leaf_range(node);
      bundles.push_back({node, first, last - first});
    }
  } else {
    for (int i = 0; i < language.size; ++i) bundles.push_back({i, i, 1});
  }
  return bundles;
}

void validate_profile(const BiddingLanguage& language,
                      const ValuationProfile& profile) {
  const int expected = language.profile_length();
  if (static_cast<int>(profile.values.size()) != expected)
    fail("profile has " + std::to_string(profile.values.size()) +
         " values, language " + language.name() + " expects " +
         std::to_string(expected));
  for (double v : profile.values) {
    if (!std::isfinite(v)) fail("profile value is not finite");
    if (v < 0.0) fail("profile value is negative");
  }
  if (language.kind == LanguageKind::MultiUnitDmu) {
    for (std::size_t i = 1; i < profile.values.size(); ++i)
      if (profile.values[i] > profile.values[i - 1])
        fail("multi-unit marginals must be non-increasing (position " +
             std::to_string(i) + ")");
  }
  if (language.kind == LanguageKind::HierarchicalBundles) {
    const BundleTree tree(language.size);
    for (int node = tree.num_leaves(); node < tree.node_count(); ++node) {
      const double children = profile.values[tree.left_child(node)] +
                              profile.values[tree.right_child(node)];
      if (profile.values[node] < children)
        fail("bundle node " + std::to_string(node) +
             " is worth less than its two children");
    }
  }
}

AuctionInstance AuctionInstance::without_player(int player) const {
  if (player < 0 || player >= num_players())
    fail("without_player: index out of range");
  AuctionInstance rest{language, {}};
  rest.profiles.reserve(profiles.size() - 1);
  for (int j = 0; j < num_players(); ++j)
    if (j != player) rest.profiles.push_back(profiles[j]);
  return rest;
}

void AuctionInstance::validate() const {
  if (num_players() < 2) fail("auction requires at least two bidders");
  for (const auto& profile : profiles) validate_profile(language, profile);
}

double Allocation::welfare() const {
  double total = 0.0;
  for (double v : realized_value) total += v;
  return total;
}

bool Allocation::empty() const {
  for (const auto& g : granted)
    if (!g.empty()) return false;
  return true;
}

double profile_value_of(const BiddingLanguage& language,
                        const ValuationProfile& profile,
                        const std::vector<int>& granted) {
  double total = 0.0;
  for (int bundle : granted) {
    if (bundle < 0 || bundle >= language.bundle_count())
      fail("granted bundle index out of range");
    total += profile.values[bundle];
  }
  return total;
}

Allocation allocate_multi_unit(const AuctionInstance& instance,
                               int max_items) {
  require_language(instance, LanguageKind::MultiUnitDmu, "allocate_multi_unit");
  const int items = instance.language.size;
  if (max_items < 0 || max_items > items)
    fail("allocate_multi_unit: max_items out of range");
  const int n = instance.num_players();

  std::vector<int> count(n, 0);
  for (int granted = 0; granted < max_items; ++granted) {
    int best = -1;
    double best_value = -kInf;
    for (int j = 0; j < n; ++j) {
      if (count[j] >= items) continue;
      const double next = instance.profiles[j].values[count[j]];
      if (next > best_value) {
        best_value = next;
        best = j;
      }
    }
    if (best < 0) break;
    ++count[best];
  }

  Allocation allocation;
  allocation.granted.resize(n);
  allocation.realized_value.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    for (int slot = 0; slot < count[j]; ++slot) {
      allocation.granted[j].push_back(slot);
      allocation.realized_value[j] += instance.profiles[j].values[slot];
    }
  }
  return allocation;
}

Allocation allocate_unit_demand(const AuctionInstance& instance,
                                const std::vector<int>& allowed_objects) {
  require_language(instance, LanguageKind::UnitDemand, "allocate_unit_demand");
  const int objects = instance.language.size;
  std::vector<int> allowed = allowed_objects;
  std::sort(allowed.begin(), allowed.end());
  allowed.erase(std::unique(allowed.begin(), allowed.end()), allowed.end());
  for (int o : allowed)
    if (o < 0 || o >= objects)
      fail("allocate_unit_demand: allowed object out of range");

  const int n = instance.num_players();
  const int a = static_cast<int>(allowed.size());
  std::vector<std::vector<double>> weight(n, std::vector<double>(a, 0.0));
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < a; ++t)
      weight[i][t] = instance.profiles[i].values[allowed[t]];

  const double best = lap_max(weight, nullptr);
  const double tol = kMoneyTolerance * std::max(1.0, std::abs(best));

  // Resolve ties to the lexicographically smallest assignment vector, with
  // "unassigned" ordered after every object: fix players in index order and
  // keep the lowest-indexed object that still completes to an optimum.
  std::vector<char> taken(a, 0);
  std::vector<int> chosen(n, -1);
  double fixed = 0.0;
  for (int i = 0; i < n; ++i) {
    const int rest = n - i - 1;
    for (int t = 0; t < a; ++t) {
      if (taken[t]) continue;
      std::vector<std::vector<double>> sub(rest);
      for (int r = 0; r < rest; ++r) {
        sub[r].reserve(a);
        for (int s = 0; s < a; ++s)
          if (!taken[s] && s != t) sub[r].push_back(weight[i + 1 + r][s]);
      }
      if (fixed + weight[i][t] + lap_max(sub, nullptr) >= best - tol) {
        chosen[i] = t;
        taken[t] = 1;
        fixed += weight[i][t];
        break;
      }
    }
    // If no object kept the optimum, every optimal matching leaves player i
    // unassigned; continue with the next player.
  }

  Allocation allocation;
  allocation.granted.resize(n);
  allocation.realized_value.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (chosen[i] < 0) continue;
    const int object = allowed[chosen[i]];
    allocation.granted[i].push_back(object);
    allocation.realized_value[i] = instance.profiles[i].values[object];
  }
  return allocation;
}

Allocation allocate_hierarchical(const AuctionInstance& instance,
                                 const std::vector<int>& allowed_nodes) {
  require_language(instance, LanguageKind::HierarchicalBundles,
                   "allocate_hierarchical");
  const BundleTree tree(instance.language.size);
  const int nodes = tree.node_count();
  std::vector<char> allowed(nodes, 0);
  for (int node : allowed_nodes) {
    if (node < 0 || node >= nodes)
      fail("allocate_hierarchical: allowed node out of range");
    allowed[node] = 1;
  }

  const int n = instance.num_players();
  enum class Decision { None, Grant, Split };
  std::vector<double> best(nodes, 0.0);
  std::vector<Decision> decision(nodes, Decision::None);
  std::vector<int> winner(nodes, -1);

  // Children precede parents in canonical order, so one ascending pass is a
  // full bottom-up dynamic program.
  for (int node = 0; node < nodes; ++node) {
    double grant_value = -kInf;
    int grant_winner = -1;
    if (allowed[node]) {
      for (int i = 0; i < n; ++i) {
        const double v = instance.profiles[i].values[node];
        if (v > grant_value) {
          grant_value = v;
          grant_winner = i;
        }
      }
    }
    if (tree.is_leaf(node)) {
      if (allowed[node] && grant_value > 0.0) {
        best[node] = grant_value;
        decision[node] = Decision::Grant;
        winner[node] = grant_winner;
      }
    } else {
      const double split =
          best[tree.left_child(node)] + best[tree.right_child(node)];
      if (allowed[node] && grant_value > split) {
        best[node] = grant_value;
        decision[node] = Decision::Grant;
        winner[node] = grant_winner;
      } else {
        best[node] = split;
        decision[node] = Decision::Split;
      }
    }
  }

  Allocation allocation;
  allocation.granted.resize(n);
  allocation.realized_value.assign(n, 0.0);
  std::vector<int> stack{nodes - 1};
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    switch (decision[node]) {
      case Decision::Grant:
        allocation.granted[winner[node]].push_back(node);
        allocation.realized_value[winner[node]] +=
            instance.profiles[winner[node]].values[node];
        break;
      case Decision::Split:
        stack.push_back(tree.right_child(node));
        stack.push_back(tree.left_child(node));
        break;
      case Decision::None:
        break;
    }
  }
  for (auto& g : allocation.granted) std::sort(g.begin(), g.end());
  return allocation;
}

Allocation allocate(const AuctionInstance& instance) {
  if (instance.num_players() < 1) fail("allocate: no bidders");
  switch (instance.language.kind) {
    case LanguageKind::MultiUnitDmu:
      return allocate_multi_unit(instance, instance.language.size);
    case LanguageKind::UnitDemand: {
      std::vector<int> all(instance.language.size);
      for (int i = 0; i < instance.language.size; ++i) all[i] = i;
      return allocate_unit_demand(instance, all);
    }
    case LanguageKind::HierarchicalBundles: {
      std::vector<int> all(instance.language.bundle_count());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
      return allocate_hierarchical(instance, all);
    }
  }
  fail("allocate: unknown language");
}

namespace {

std::int64_t saturating_mul(std::int64_t a, std::int64_t b) {
  if (a > kBruteForceLimit || b > kBruteForceLimit) return kBruteForceLimit + 1;
  const std::int64_t r = a * b;
  return r > kBruteForceLimit ? kBruteForceLimit + 1 : r;
}

std::int64_t feasible_allocation_count(const AuctionInstance& instance) {
  const int n = instance.num_players();
  switch (instance.language.kind) {
    case LanguageKind::MultiUnitDmu: {
      // ways[r] = number of count vectors using exactly r items so far
      const int items = instance.language.size;
      std::vector<std::int64_t> ways(items + 1, 0);
      ways[0] = 1;
      for (int p = 0; p < n; ++p) {
        std::vector<std::int64_t> next(items + 1, 0);
        for (int used = 0; used <= items; ++used) {
          if (ways[used] == 0) continue;
          for (int c = 0; used + c <= items; ++c) {
            next[used + c] += ways[used];
            if (next[used + c] > kBruteForceLimit)
              return kBruteForceLimit + 1;
          }
        }
        ways.swap(next);
      }
      std::int64_t total = 0;
      for (auto w : ways) {
        total += w;
        if (total > kBruteForceLimit) return kBruteForceLimit + 1;
      }
      return total;
    }
    case LanguageKind::UnitDemand: {
      // Partial injective assignments of players to objects:
      // sum over k of C(n,k) * C(m,k) * k!.
      const int m = instance.language.size;
      std::int64_t total = 1;
      std::int64_t term = 1;
      for (int k = 1; k <= std::min(n, m); ++k) {
        term = saturating_mul(term, static_cast<std::int64_t>(n - k + 1) *
                                        (m - k + 1));
        if (term > kBruteForceLimit) return kBruteForceLimit + 1;
        term /= k;
        total += term;
        if (total > kBruteForceLimit) return kBruteForceLimit + 1;
      }
      return total;
    }
    case LanguageKind::HierarchicalBundles: {
      const BundleTree tree(instance.language.size);
      std::vector<std::int64_t> f(tree.node_count(), 0);
      for (int node = 0; node < tree.node_count(); ++node) {
        if (tree.is_leaf(node)) {
          f[node] = n + 1;
        } else {
          f[node] = n + saturating_mul(f[tree.left_child(node)],
                                       f[tree.right_child(node)]);
        }
        if (f[node] > kBruteForceLimit) return kBruteForceLimit + 1;
      }
      return f[tree.node_count() - 1];
    }
  }
  return kBruteForceLimit + 1;
}

struct BruteForceBest {
  double welfare = -kInf;
  Allocation allocation;
};

void consider(const AuctionInstance& instance,
              const std::vector<std::vector<int>>& granted,
              BruteForceBest& best) {
  double welfare = 0.0;
  for (int j = 0; j < instance.num_players(); ++j)
    welfare +=
        profile_value_of(instance.language, instance.profiles[j], granted[j]);
  if (welfare > best.welfare) {
    best.welfare = welfare;
    best.allocation.granted = granted;
    best.allocation.realized_value.assign(instance.num_players(), 0.0);
    for (int j = 0; j < instance.num_players(); ++j)
      best.allocation.realized_value[j] = profile_value_of(
          instance.language, instance.profiles[j], granted[j]);
  }
}

void brute_multi_unit(const AuctionInstance& instance, int player,
                      int remaining, std::vector<std::vector<int>>& granted,
                      BruteForceBest& best) {
  const int n = instance.num_players();
  if (player == n) {
    consider(instance, granted, best);
    return;
  }
  for (int c = 0; c <= remaining; ++c) {
    granted[player].clear();
    for (int slot = 0; slot < c; ++slot) granted[player].push_back(slot);
    brute_multi_unit(instance, player + 1, remaining - c, granted, best);
  }
  granted[player].clear();
}

void brute_unit_demand(const AuctionInstance& instance, int player,
                       std::vector<char>& taken,
                       std::vector<std::vector<int>>& granted,
                       BruteForceBest& best) {
  const int n = instance.num_players();
  if (player == n) {
    consider(instance, granted, best);
    return;
  }
  granted[player].clear();
  brute_unit_demand(instance, player + 1, taken, granted, best);
  for (int o = 0; o < instance.language.size; ++o) {
    if (taken[o]) continue;
    taken[o] = 1;
    granted[player] = {o};
    brute_unit_demand(instance, player + 1, taken, granted, best);
    granted[player].clear();
    taken[o] = 0;
  }
}

void brute_hierarchical(const AuctionInstance& instance, const BundleTree& tree,
                        std::vector<int>& todo,
                        std::vector<std::vector<int>>& granted,
                        BruteForceBest& best) {
  if (todo.empty()) {
    consider(instance, granted, best);
    return;
  }
  const int node = todo.back();
  todo.pop_back();
  // Option 1: leave the node unassigned / split it.
  if (tree.is_leaf(node)) {
    brute_hierarchical(instance, tree, todo, granted, best);
  } else {
    todo.push_back(tree.left_child(node));
    todo.push_back(tree.right_child(node));
    brute_hierarchical(instance, tree, todo, granted, best);
    todo.pop_back();
    todo.pop_back();
  }
  // Option 2: grant the whole subtree to one player.
  for (int j = 0; j < instance.num_players(); ++j) {
    granted[j].push_back(node);
    brute_hierarchical(instance, tree, todo, granted, best);
    granted[j].pop_back();
  }
  todo.push_back(node);
}

}  // namespace

Allocation brute_force_allocate(const AuctionInstance& instance) {
  if (instance.num_players() < 1) fail("brute_force_allocate: no bidders");
  if (feasible_allocation_count(instance) > kBruteForceLimit)
    throw std::runtime_error(
        "brute_force_allocate: more than 10^7 feasible allocations");

  BruteForceBest best;
  std::vector<std::vector<int>> granted(instance.num_players());
  switch (instance.language.kind) {
    case LanguageKind::MultiUnitDmu:
      brute_multi_unit(instance, 0, instance.language.size, granted, best);
      break;
    case LanguageKind::UnitDemand: {
      std::vector<char> taken(instance.language.size, 0);
      brute_unit_demand(instance, 0, taken, granted, best);
      break;
    }
    case LanguageKind::HierarchicalBundles: {
      const BundleTree tree(instance.language.size);
      std::vector<int> todo{tree.node_count() - 1};
      brute_hierarchical(instance, tree, todo, granted, best);
      break;
    }
  }
  for (auto& g : best.allocation.granted) std::sort(g.begin(), g.end());
  return best.allocation;
}

double social_welfare(const AuctionInstance& instance,
                      const Allocation& allocation) {
  const int n = instance.num_players();
  if (static_cast<int>(allocation.granted.size()) != n)
    fail("social_welfare: allocation does not match the bidder count");

  switch (instance.language.kind) {
    case LanguageKind::MultiUnitDmu: {
      int total_items = 0;
      for (const auto& g : allocation.granted) {
        for (std::size_t s = 0; s < g.size(); ++s)
          if (g[s] != static_cast<int>(s))
            fail("social_welfare: multi-unit grants must be the marginal "
                 "slots 0..c-1");
        total_items += static_cast<int>(g.size());
      }
      if (total_items > instance.language.size)
        fail("social_welfare: more items granted than exist");
      break;
    }
    case LanguageKind::UnitDemand: {
      std::vector<char> taken(instance.language.size, 0);
      for (const auto& g : allocation.granted) {
        if (g.size() > 1)
          fail("social_welfare: unit-demand bidder holds several objects");
        for (int o : g) {
          if (o < 0 || o >= instance.language.size)
            fail("social_welfare: object index out of range");
          if (taken[o]) fail("social_welfare: object granted twice");
          taken[o] = 1;
        }
      }
      break;
    }
    case LanguageKind::HierarchicalBundles: {
      const BundleTree tree(instance.language.size);
      std::vector<char> leaf_taken(instance.language.size, 0);
      for (const auto& g : allocation.granted) {
        for (int node : g) {
          if (node < 0 || node >= tree.node_count())
            fail("social_welfare: node index out of range");
          const auto [first, last] = tree.leaf_range(node);
          for (int leaf = first; leaf < last; ++leaf) {
            if (leaf_taken[leaf])
              fail("social_welfare: overlapping bundles granted");
            leaf_taken[leaf] = 1;
          }
        }
      }
      break;
    }
  }

  double welfare = 0.0;
  for (int j = 0; j < n; ++j)
    welfare += profile_value_of(instance.language, instance.profiles[j],
                                allocation.granted[j]);
  return welfare;
}

}  // namespace groves
