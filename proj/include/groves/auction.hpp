#pragma once

#include <string>
#include <utility>
#include <vector>

namespace groves {

// Tolerance used for all money-scale checks (individual rationality, budget
// sign, oracle cross-checks).
inline constexpr double kMoneyTolerance = 1e-9;

enum class LanguageKind { MultiUnitDmu, UnitDemand, HierarchicalBundles };

// One of the three preference schemes the toolkit supports. `size` is the
// defining extent: item count (multi-unit), object count (unit demand) or
// leaf count (hierarchical bundles; must be a power of two).
struct BiddingLanguage {
  LanguageKind kind = LanguageKind::MultiUnitDmu;
  int size = 1;

  static BiddingLanguage multi_unit_dmu(int num_items);
  static BiddingLanguage unit_demand(int num_objects);
  static BiddingLanguage hierarchical_bundles(int num_leaves);

  // Number of bundles |K| a profile expresses values over: marginal slots
  // for multi-unit, objects for unit demand, tree nodes for hierarchical.
  int bundle_count() const;
  // Length of a valid valuation vector (equals bundle_count()).
  int profile_length() const { return bundle_count(); }
  std::string name() const;
  bool operator==(const BiddingLanguage&) const = default;
};

// Inverse of BiddingLanguage::name(); throws on unknown names.
BiddingLanguage parse_language(const std::string& name, int size);

// Complete-binary-tree indexing for hierarchical bundles. Canonical node
// order: leaves left to right, then internal nodes bottom-up, left to right.
// For 4 leaves: nodes 0-3 leaves, 4 = {0,1}, 5 = {2,3}, 6 = root.
class BundleTree {
 public:
  explicit BundleTree(int num_leaves);
  int num_leaves() const { return num_leaves_; }
  int node_count() const { return 2 * num_leaves_ - 1; }
  bool is_leaf(int node) const { return node < num_leaves_; }
  int left_child(int node) const;
  int right_child(int node) const;
  // Half-open range of leaf indices covered by `node`.
  std::pair<int, int> leaf_range(int node) const;

 private:
  int level_of(int node) const;
  int num_leaves_ = 1;
  std::vector<int> offsets_;  // first node index of each level, leaves first
};

struct BundleDescriptor {
  int index = 0;
  int first_item = 0;  // first covered item / object / leaf
  int item_count = 1;  // number of covered items
};

std::vector<BundleDescriptor> bundle_space(const BiddingLanguage& language);

struct ValuationProfile {
  std::vector<double> values;
  bool operator==(const ValuationProfile&) const = default;
};

// Throws std::invalid_argument when the profile is invalid for the language:
// wrong length, negative entries, increasing multi-unit marginals, or an
// internal bundle worth less than its two children.
void validate_profile(const BiddingLanguage& language,
                      const ValuationProfile& profile);

struct AuctionInstance {
  BiddingLanguage language;
  std::vector<ValuationProfile> profiles;

  int num_players() const { return static_cast<int>(profiles.size()); }
  AuctionInstance without_player(int player) const;
  // Full validity: at least two bidders and every profile valid. Sub-auctions
  // built by without_player may hold a single bidder; the allocation oracles
  // accept those directly.
  void validate() const;
  bool operator==(const AuctionInstance&) const = default;
};

struct Allocation {
  // granted[j] holds the bundle indices granted to player j, ascending.
  // Multi-unit: marginal slots 0..c-1; unit demand: at most one object;
  // hierarchical: non-overlapping tree nodes.
  std::vector<std::vector<int>> granted;
  // Value of granted[j] to player j under the profile used to allocate.
  std::vector<double> realized_value;

  double welfare() const;
  bool empty() const;
};

// Value of a set of granted bundles to a player holding `profile`. Also used
// to score an allocation obtained under a misreport against true preferences.
double profile_value_of(const BiddingLanguage& language,
                        const ValuationProfile& profile,
                        const std::vector<int>& granted);

// Greedy exact allocation of at most `max_items` items: repeatedly grant one
// item to the player with the largest next marginal, ties to the lowest
// player index.
Allocation allocate_multi_unit(const AuctionInstance& instance, int max_items);

// Maximum-weight bipartite matching restricted to `allowed_objects`; players
// may stay unmatched (free disposal). Ties resolve to the lexicographically
// smallest assignment vector, where "unassigned" sorts after every object.
Allocation allocate_unit_demand(const AuctionInstance& instance,
                                const std::vector<int>& allowed_objects);

// Exact bottom-up tree dynamic program over `allowed_nodes`. Ties break
// toward splitting into children, then toward the lowest player index.
Allocation allocate_hierarchical(const AuctionInstance& instance,
                                 const std::vector<int>& allowed_nodes);

// Welfare-maximizing allocation over the full bundle space of the
// instance's language.
Allocation allocate(const AuctionInstance& instance);

// Exhaustive reference oracle. Refuses instances with more than 10^7
// feasible allocations.
Allocation brute_force_allocate(const AuctionInstance& instance);

// Sum of realized values. Validates feasibility (shape, disjointness) and
// recomputes values from the instance profiles; throws on infeasibility.
double social_welfare(const AuctionInstance& instance,
                      const Allocation& allocation);

}  // namespace groves
