#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "groves/auction.hpp"
#include "groves/rng.hpp"

namespace groves {

enum class DistributionKind { ClippedGaussian, HierarchicalGaussian, Uniform };

// Valuation distribution. Every sampled value is clipped at 0 from below.
//
// ClippedGaussian:      a = mean, b = stddev
// Uniform:              a = low,  b = high
// HierarchicalGaussian: per auction mu ~ N(a, b) and
//                       sigma = max(N(c, d), 1e-3); values ~ N(mu, sigma).
struct ValueDistribution {
  DistributionKind kind = DistributionKind::Uniform;
  double a = 0.0;
  double b = 1.0;
  double c = 0.0;
  double d = 0.0;

  static ValueDistribution clipped_gaussian(double mean, double stddev);
  static ValueDistribution hierarchical_gaussian(double mean_of_mean,
                                                 double stddev_of_mean,
                                                 double mean_of_stddev,
                                                 double stddev_of_stddev);
  static ValueDistribution uniform(double low, double high);
  void validate() const;
  std::string name() const;
  bool operator==(const ValueDistribution&) const = default;
};

struct DatasetSpec {
  BiddingLanguage language;
  ValueDistribution distribution;
  std::vector<int> num_players{2};  // allowed bidder counts, each >= 2
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const DatasetSpec&) const = default;
};

struct AuctionDataset {
  DatasetSpec spec;
  std::vector<AuctionInstance> instances;
  bool operator==(const AuctionDataset&) const = default;
};

// One fresh valuation profile. For the hierarchical Gaussian a private
// (mu, sigma) pair is drawn first; used for audit misreports.
ValuationProfile sample_profile(const BiddingLanguage& language,
                                const ValueDistribution& distribution,
                                SplitMix64& rng);

// One auction: bidder count uniform over spec.num_players, one shared
// (mu, sigma) per auction for the hierarchical Gaussian, then one profile
// per bidder.
AuctionInstance sample_auction(const DatasetSpec& spec, SplitMix64& rng);

// `count` iid instances; instance i is drawn from the stream keyed by
// (spec.seed, i), so output is bit-reproducible and independent of the
// worker count.
AuctionDataset generate_dataset(const DatasetSpec& spec, std::int64_t count,
                                int threads = 1);

// Hex digest identifying (spec, count); stored in dataset headers and in
// training checkpoints.
std::string dataset_fingerprint(const DatasetSpec& spec, std::int64_t count);

// JSON-lines file: one header object, then one instance per line. Values are
// serialized as decimals with 17 significant digits, so loading reproduces
// every double exactly. A ".gz" suffix selects gzip compression.
void save_dataset(const AuctionDataset& dataset, const std::string& path);

// Validates the header and every instance; errors name the offending line.
AuctionDataset load_dataset(const std::string& path);

}  // namespace groves
