#pragma once

#include <vector>

#include "groves/auction.hpp"

namespace groves {

// Counterfactual auction stack for one excluded bidder. Axes are
// (bundle index |K|, other-player index n-1, channel 2|K|+1), row-major.
//
// Channel 0 holds the other players' valuation matrix. For p = 1..|K|,
// channel 2p-1 is the 0/1 allocation indicator of the auction among the
// other players restricted to the top-p bundles (multi-unit: at most p
// items), and channel 2p is the elementwise product of channel 0 with that
// indicator.
struct AuctionTensor {
  int bundles = 0;   // |K|
  int players = 0;   // n - 1
  int channels = 0;  // 2|K| + 1
  std::vector<double> data;

  double& at(int bundle, int player, int channel) {
    return data[(static_cast<std::size_t>(bundle) * players + player) *
                    channels +
                channel];
  }
  double at(int bundle, int player, int channel) const {
    return data[(static_cast<std::size_t>(bundle) * players + player) *
                    channels +
                channel];
  }
};

// Builds the tensor for `excluded`. Bitwise independent of the excluded
// player's profile; other players keep their original relative order.
AuctionTensor build_tensor(const AuctionInstance& instance, int excluded);

// Flattened channel-0 matrix for the fixed-n baseline backbone, player
// columns sorted by descending total valuation (ties by descending column
// values) so that relabeling the other bidders cannot change the input.
// Length |K| * (n - 1), bundle-major.
std::vector<double> build_flat(const AuctionInstance& instance, int excluded);

}  // namespace groves
