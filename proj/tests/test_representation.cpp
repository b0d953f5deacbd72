#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <vector>

#include "doctest.h"
#include "groves/representation.hpp"
#include "groves/simulate.hpp"
#include "helpers.hpp"

using namespace groves;
using groves::testing::burrito;
using groves::testing::make_instance;
using groves::testing::small_spec;

namespace {

AuctionInstance sample(const BiddingLanguage& language, int n,
                       std::uint64_t seed) {
  DatasetSpec spec = groves::testing::small_spec(language, {n}, seed);
  SplitMix64 rng(seed);
  return sample_auction(spec, rng);
}

// Granted cells of one indicator channel as (bundle, player) pairs.
std::vector<std::pair<int, int>> granted_cells(const AuctionTensor& tensor,
                                               int channel) {
  std::vector<std::pair<int, int>> cells;
  for (int m = 0; m < tensor.bundles; ++m)
    for (int j = 0; j < tensor.players; ++j)
      if (tensor.at(m, j, channel) == 1.0) cells.emplace_back(m, j);
  return cells;
}

}  // namespace

TEST_CASE("tensor dimensions follow the bundle space") {
  DatasetSpec spec;
  spec.language = BiddingLanguage::multi_unit_dmu(3);
  spec.distribution = ValueDistribution::uniform(0.0, 1.0);
  spec.num_players = {5};
  spec.seed = 31;
  SplitMix64 rng(31ULL);
  const AuctionInstance instance = sample_auction(spec, rng);
  const AuctionTensor tensor = build_tensor(instance, 2);
  CHECK(tensor.bundles == 3);
  CHECK(tensor.players == 4);
  CHECK(tensor.channels == 7);
  CHECK(tensor.data.size() == 3u * 4u * 7u);

  const AuctionTensor hier = build_tensor(
      sample(BiddingLanguage::hierarchical_bundles(4), 3, 5), 0);
  CHECK(hier.bundles == 7);
  CHECK(hier.channels == 15);
  CHECK(hier.players == 2);
}

TEST_CASE("channel zero holds the others' valuations in order") {
  const auto instance = make_instance(BiddingLanguage::multi_unit_dmu(2),
                                      {{9, 7}, {5, 3}, {4, 1}});
  const AuctionTensor tensor = build_tensor(instance, 0);
  CHECK(tensor.at(0, 0, 0) == 5.0);
  CHECK(tensor.at(1, 0, 0) == 3.0);
  CHECK(tensor.at(0, 1, 0) == 4.0);
  CHECK(tensor.at(1, 1, 0) == 1.0);
}

TEST_CASE("counterfactual channels replay the greedy auction") {
  const auto instance = make_instance(BiddingLanguage::multi_unit_dmu(2),
                                      {{9, 7}, {5, 3}, {4, 1}});
  const AuctionTensor tensor = build_tensor(instance, 0);

  // Selling one item: only player p's first marginal (5) wins.
  CHECK(granted_cells(tensor, 1) ==
        std::vector<std::pair<int, int>>{{0, 0}});
  // Selling both: each player's first marginal wins.
  CHECK(granted_cells(tensor, 3) ==
        std::vector<std::pair<int, int>>{{0, 0}, {0, 1}});
}

TEST_CASE("a single remaining bidder sweeps the last counterfactual") {
  const auto instance = make_instance(BiddingLanguage::multi_unit_dmu(2),
                                      {{9, 7}, {5, 3}});
  const AuctionTensor tensor = build_tensor(instance, 0);
  CHECK(tensor.players == 1);
  CHECK(granted_cells(tensor, 3) ==
        std::vector<std::pair<int, int>>{{0, 0}, {1, 0}});
}

TEST_CASE("product channels equal valuation times indicator verbatim") {
  for (const BiddingLanguage& language :
       {BiddingLanguage::multi_unit_dmu(3), BiddingLanguage::unit_demand(3),
        BiddingLanguage::hierarchical_bundles(4)}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const AuctionInstance instance = sample(language, 3, seed);
      const AuctionTensor tensor = build_tensor(instance, 1);
      for (int p = 1; p <= tensor.bundles; ++p)
        for (int m = 0; m < tensor.bundles; ++m)
          for (int j = 0; j < tensor.players; ++j) {
            const double indicator = tensor.at(m, j, 2 * p - 1);
            CHECK((indicator == 0.0 || indicator == 1.0));
            CHECK(tensor.at(m, j, 2 * p) ==
                  tensor.at(m, j, 0) * indicator);
          }
    }
  }
}

TEST_CASE("indicator channels describe one feasible outcome each") {
  const BiddingLanguage language = BiddingLanguage::unit_demand(3);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const AuctionInstance instance = sample(language, 4, seed);
    const AuctionTensor tensor = build_tensor(instance, 0);
    for (int p = 1; p <= tensor.bundles; ++p) {
      const auto cells = granted_cells(tensor, 2 * p - 1);
      CHECK(static_cast<int>(cells.size()) <= p);
      std::vector<int> objects, players;
      for (const auto& [m, j] : cells) {
        objects.push_back(m);
        players.push_back(j);
      }
      std::sort(objects.begin(), objects.end());
      std::sort(players.begin(), players.end());
      CHECK(std::adjacent_find(objects.begin(), objects.end()) ==
            objects.end());
      CHECK(std::adjacent_find(players.begin(), players.end()) ==
            players.end());
    }
  }
}

TEST_CASE("granted units nest as the item budget grows") {
  const BiddingLanguage language = BiddingLanguage::multi_unit_dmu(4);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const AuctionInstance instance = sample(language, 4, seed);
    const AuctionTensor tensor = build_tensor(instance, 0);
    for (int p = 1; p < tensor.bundles; ++p) {
      const auto small = granted_cells(tensor, 2 * p - 1);
      const auto big = granted_cells(tensor, 2 * p + 1);
      for (const auto& cell : small)
        CHECK(std::find(big.begin(), big.end(), cell) != big.end());
    }
  }
}

TEST_CASE("permuting the other players permutes the columns") {
  const auto instance = make_instance(
      BiddingLanguage::unit_demand(2), {{1, 2}, {3, 9}, {8, 2}});
  const auto swapped = make_instance(
      BiddingLanguage::unit_demand(2), {{1, 2}, {8, 2}, {3, 9}});
  const AuctionTensor a = build_tensor(instance, 0);
  const AuctionTensor b = build_tensor(swapped, 0);
  for (int m = 0; m < a.bundles; ++m)
    for (int c = 0; c < a.channels; ++c) {
      CHECK(a.at(m, 0, c) == b.at(m, 1, c));
      CHECK(a.at(m, 1, c) == b.at(m, 0, c));
    }
}

TEST_CASE("the excluded player's report never reaches the tensor") {
  AuctionInstance instance = sample(BiddingLanguage::hierarchical_bundles(4),
                                    3, 17);
  const AuctionTensor before = build_tensor(instance, 1);
  // Scaling keeps the profile valid for every language, including the
  // parent-covers-children constraint of bundle trees.
  for (double& v : instance.profiles[1].values) v *= 3.0;
  instance.validate();
  const AuctionTensor after = build_tensor(instance, 1);
  CHECK(before.data == after.data);
}

TEST_CASE("top-bundle selection scores by the best bidder, ties low index") {
  // Object scores are max over the two remaining players: (2, 5, 5); the
  // single-object auction must pick object 1, and the matching gives it to
  // the lower-indexed player.
  const auto instance = make_instance(
      BiddingLanguage::unit_demand(3),
      {{0, 0, 0}, {1, 5, 5}, {2, 5, 0}});
  const AuctionTensor tensor = build_tensor(instance, 0);
  CHECK(granted_cells(tensor, 1) ==
        std::vector<std::pair<int, int>>{{1, 0}});
}

TEST_CASE("flat features are sorted by total valuation") {
  const auto instance = make_instance(
      BiddingLanguage::multi_unit_dmu(3),
      {{9, 9, 9}, {1, 1, 0}, {5, 3, 1}});
  const std::vector<double> flat = build_flat(instance, 0);
  REQUIRE(flat.size() == 6);
  // Player 2 (total 9) outranks player 1 (total 2); bundle-major layout.
  CHECK(flat == std::vector<double>{5, 1, 3, 1, 1, 0});

  const auto swapped = make_instance(
      BiddingLanguage::multi_unit_dmu(3),
      {{9, 9, 9}, {5, 3, 1}, {1, 1, 0}});
  CHECK(build_flat(swapped, 0) == flat);
}

TEST_CASE("flat features cover the burrito fixture") {
  CHECK(build_flat(burrito(), 0) == std::vector<double>{6.0});
  CHECK(build_flat(burrito(), 1) == std::vector<double>{12.0});
}

TEST_CASE("flat feature length scales with players and bundles") {
  const AuctionInstance instance =
      sample(BiddingLanguage::multi_unit_dmu(3), 10, 23);
  CHECK(build_flat(instance, 4).size() == 27);
}

TEST_CASE("tensors require at least two bidders") {
  AuctionInstance instance;
  instance.language = BiddingLanguage::unit_demand(1);
  instance.profiles.push_back(ValuationProfile{{1.0}});
  CHECK_THROWS(build_tensor(instance, 0));
  CHECK_THROWS(build_tensor(burrito(), 2));
}
