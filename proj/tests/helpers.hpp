#pragma once

#include <vector>

#include "groves/auction.hpp"
#include "groves/simulate.hpp"

namespace groves::testing {

inline AuctionInstance make_instance(
    const BiddingLanguage& language,
    const std::vector<std::vector<double>>& profiles) {
  AuctionInstance instance;
  instance.language = language;
  for (const auto& values : profiles)
    instance.profiles.push_back(ValuationProfile{values});
  instance.validate();
  return instance;
}

// The two-bidder single-object fixture used throughout: player 0 values the
// object at 12, player 1 at 6.
inline AuctionInstance burrito() {
  return make_instance(BiddingLanguage::unit_demand(1), {{12.0}, {6.0}});
}

inline DatasetSpec small_spec(const BiddingLanguage& language,
                              std::vector<int> num_players,
                              std::uint64_t seed) {
  DatasetSpec spec;
  spec.language = language;
  spec.distribution = ValueDistribution::uniform(0.0, 1.0);
  spec.num_players = std::move(num_players);
  spec.seed = seed;
  return spec;
}

}  // namespace groves::testing
