#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>

#include "doctest.h"
#include "groves/rng.hpp"
#include "groves/simulate.hpp"
#include "groves/vcg.hpp"
#include "helpers.hpp"

using namespace groves;
using groves::testing::burrito;
using groves::testing::make_instance;
using groves::testing::small_spec;

TEST_CASE("two-bidder single-object fixture") {
  const AuctionInstance instance = burrito();
  CHECK(h_vcg(instance, 0) == 6.0);
  CHECK(h_vcg(instance, 1) == 12.0);
  CHECK(groves_payment(instance, 0, 6.0) == 6.0);
  CHECK(groves_payment(instance, 1, 12.0) == 0.0);

  const MechanismOutcome outcome = vcg_outcome(instance);
  CHECK(outcome.allocation.granted[0] == std::vector<int>{0});
  CHECK(outcome.allocation.granted[1].empty());
  CHECK(outcome.payments[0] == 6.0);
  CHECK(outcome.payments[1] == 0.0);
  CHECK(outcome.utilities[0] == 6.0);
  CHECK(outcome.utilities[1] == 0.0);
  CHECK(outcome.budget == 6.0);
}

TEST_CASE("zero h gives the pure participation subsidy") {
  const AuctionInstance instance = burrito();
  CHECK(groves_payment(instance, 0, 0.0) == 0.0);   // others realize nothing
  CHECK(groves_payment(instance, 1, 0.0) == -12.0); // minus winner's value
}

TEST_CASE("removing a zero bidder leaves the others' welfare") {
  const auto instance = make_instance(BiddingLanguage::multi_unit_dmu(2),
                                      {{0, 0}, {5, 3}, {4, 1}});
  CHECK(h_vcg(instance, 0) == allocate(instance.without_player(0)).welfare());
  CHECK(h_vcg(instance, 0) == doctest::Approx(9.0));
}

TEST_CASE("removed-player welfare matches brute force") {
  SplitMix64 rng(101ULL);
  const DatasetSpec spec = small_spec(BiddingLanguage::multi_unit_dmu(2), {3}, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const AuctionInstance instance = sample_auction(spec, rng);
    for (int excluded = 0; excluded < 3; ++excluded) {
      const AuctionInstance others = instance.without_player(excluded);
      CHECK(h_vcg(instance, excluded) ==
            doctest::Approx(brute_force_allocate(others).welfare())
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("identical bidders pay their full value") {
  const auto instance = make_instance(BiddingLanguage::unit_demand(1),
                                      {{7.0}, {7.0}, {7.0}});
  const MechanismOutcome outcome = vcg_outcome(instance);
  const int winner = 0;  // ties to the lowest index
  CHECK(outcome.allocation.granted[winner] == std::vector<int>{0});
  CHECK(outcome.payments[winner] == 7.0);
  CHECK(outcome.utilities[winner] == 0.0);
}

TEST_CASE("removed-player welfare ignores that player's report") {
  AuctionInstance instance = burrito();
  const double before = h_vcg(instance, 0);
  instance.profiles[0].values[0] = 1000.0;
  CHECK(h_vcg(instance, 0) == before);
}

TEST_CASE("pivot payments are individually rational and never subsidized") {
  SplitMix64 rng(2024ULL);
  const std::vector<BiddingLanguage> languages = {
      BiddingLanguage::multi_unit_dmu(3), BiddingLanguage::unit_demand(3),
      BiddingLanguage::hierarchical_bundles(4)};
  for (const BiddingLanguage& language : languages) {
    DatasetSpec spec = small_spec(language, {2, 3, 4}, 77);
    for (int trial = 0; trial < 1000; ++trial) {
      const AuctionInstance instance = sample_auction(spec, rng);
      const MechanismOutcome outcome = vcg_outcome(instance);
      for (double u : outcome.utilities) CHECK(u >= -1e-9);
      CHECK(outcome.budget >= -1e-9);
    }
  }
}

TEST_CASE("outcome assembly fills utilities and budget") {
  const AuctionInstance instance = burrito();
  const MechanismOutcome outcome =
      outcome_for_payments(instance, {3.0, -1.0});
  CHECK(outcome.utilities[0] == 9.0);
  CHECK(outcome.utilities[1] == 1.0);
  CHECK(outcome.budget == 2.0);
}

TEST_CASE("degenerate bidder counts are rejected") {
  AuctionInstance instance;
  instance.language = BiddingLanguage::unit_demand(1);
  instance.profiles.push_back(ValuationProfile{{5.0}});
  CHECK_THROWS(h_vcg(instance, 0));
  CHECK_THROWS(vcg_outcome(instance));
}
