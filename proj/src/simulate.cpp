#include "groves/simulate.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

#include "groves/parallel.hpp"
#include "json.hpp"
#include "textio.hpp"

namespace groves {
namespace {

using nlohmann::json;
using detail::format_double17;

constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "groves-forge-dataset";
constexpr double kSigmaFloor = 1e-3;

// A per-auction value sampler with the hierarchical Gaussian's (mu, sigma)
// already materialized, so every bidder in the auction shares them.
struct BaseSampler {
  DistributionKind kind;
  double p1, p2;

  double draw(SplitMix64& rng) const {
    double v;
    if (kind == DistributionKind::Uniform)
      v = rng.next_uniform(p1, p2);
    else
      v = rng.next_normal(p1, p2);
    return v < 0.0 ? 0.0 : v;
  }
};

BaseSampler materialize(const ValueDistribution& dist, SplitMix64& rng) {
  if (dist.kind == DistributionKind::HierarchicalGaussian) {
    const double mu = rng.next_normal(dist.a, dist.b);
    const double sigma = std::max(rng.next_normal(dist.c, dist.d), kSigmaFloor);
    return {dist.kind, mu, sigma};
  }
  return {dist.kind, dist.a, dist.b};
}

ValuationProfile sample_profile_from(const BiddingLanguage& language,
                                     const BaseSampler& base,
                                     SplitMix64& rng) {
  ValuationProfile profile;
  switch (language.kind) {
    case LanguageKind::MultiUnitDmu: {
      profile.values.resize(language.size);
      for (double& v : profile.values) v = base.draw(rng);
      // Decreasing marginal utility: each bidder's per-item values are
      // sorted descending independently.
      std::sort(profile.values.begin(), profile.values.end(),
                std::greater<double>());
      break;
    }
    case LanguageKind::UnitDemand: {
      profile.values.resize(language.size);
      for (double& v : profile.values) v = base.draw(rng);
      break;
    }
    case LanguageKind::HierarchicalBundles: {
      const BundleTree tree(language.size);
      profile.values.resize(tree.node_count());
      for (int leaf = 0; leaf < tree.num_leaves(); ++leaf)
        profile.values[leaf] = base.draw(rng);
      // Internal nodes bottom-up: worth the sum of their two children times
      // an occasional complementarity bonus, so every bundle is worth at
      // least its parts.
      for (int node = tree.num_leaves(); node < tree.node_count(); ++node) {
        const double delta = rng.next_bernoulli(0.2) ? 1.0 : 0.0;
        const double eps = std::max(rng.next_normal(0.1, 0.01), 0.0);
        const double children = profile.values[tree.left_child(node)] +
                                profile.values[tree.right_child(node)];
        profile.values[node] = children * (1.0 + delta * eps);
      }
      break;
    }
  }
  return profile;
}

std::string language_to_json(const BiddingLanguage& language) {
  return "{\"kind\":\"" + language.name() +
         "\",\"size\":" + std::to_string(language.size) + "}";
}

std::string distribution_to_json(const ValueDistribution& dist) {
  std::string out = "{\"kind\":\"" + dist.name() + "\"";
  switch (dist.kind) {
    case DistributionKind::ClippedGaussian:
      out += ",\"mean\":" + format_double17(dist.a) +
             ",\"stddev\":" + format_double17(dist.b);
      break;
    case DistributionKind::Uniform:
      out += ",\"low\":" + format_double17(dist.a) +
             ",\"high\":" + format_double17(dist.b);
      break;
    case DistributionKind::HierarchicalGaussian:
      out += ",\"mean_of_mean\":" + format_double17(dist.a) +
             ",\"stddev_of_mean\":" + format_double17(dist.b) +
             ",\"mean_of_stddev\":" + format_double17(dist.c) +
             ",\"stddev_of_stddev\":" + format_double17(dist.d);
      break;
  }
  return out + "}";
}

BiddingLanguage language_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const int size = j.at("size").get<int>();
  if (kind == "multi_unit_dmu") return BiddingLanguage::multi_unit_dmu(size);
  if (kind == "unit_demand") return BiddingLanguage::unit_demand(size);
  if (kind == "hierarchical_bundles")
    return BiddingLanguage::hierarchical_bundles(size);
  throw std::runtime_error("unknown language kind: " + kind);
}

ValueDistribution distribution_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "clipped_gaussian")
    return ValueDistribution::clipped_gaussian(j.at("mean").get<double>(),
                                               j.at("stddev").get<double>());
  if (kind == "uniform")
    return ValueDistribution::uniform(j.at("low").get<double>(),
                                      j.at("high").get<double>());
  if (kind == "hierarchical_gaussian")
    return ValueDistribution::hierarchical_gaussian(
        j.at("mean_of_mean").get<double>(),
        j.at("stddev_of_mean").get<double>(),
        j.at("mean_of_stddev").get<double>(),
        j.at("stddev_of_stddev").get<double>());
  throw std::runtime_error("unknown distribution kind: " + kind);
}

std::string header_body(const DatasetSpec& spec, std::int64_t count) {
  std::string players = "[";
  for (std::size_t i = 0; i < spec.num_players.size(); ++i) {
    if (i) players += ',';
    players += std::to_string(spec.num_players[i]);
  }
  players += "]";
  return std::string("\"format\":\"") + kFormatName +
         "\",\"version\":" + std::to_string(kFormatVersion) +
         ",\"language\":" + language_to_json(spec.language) +
         ",\"distribution\":" + distribution_to_json(spec.distribution) +
         ",\"num_players\":" + players +
         ",\"seed\":" + std::to_string(spec.seed) +
         ",\"count\":" + std::to_string(count);
}

[[noreturn]] void line_error(const detail::LineReader& reader,
                             const std::string& message) {
  throw std::runtime_error(reader.path() + ": line " +
                           std::to_string(reader.line_number()) + ": " +
                           message);
}

}  // namespace

ValueDistribution ValueDistribution::clipped_gaussian(double mean,
                                                      double stddev) {
  ValueDistribution d{DistributionKind::ClippedGaussian, mean, stddev, 0, 0};
  d.validate();
  return d;
}

ValueDistribution ValueDistribution::hierarchical_gaussian(
    double mean_of_mean, double stddev_of_mean, double mean_of_stddev,
    double stddev_of_stddev) {
  ValueDistribution d{DistributionKind::HierarchicalGaussian, mean_of_mean,
                      stddev_of_mean, mean_of_stddev, stddev_of_stddev};
  d.validate();
  return d;
}

ValueDistribution ValueDistribution::uniform(double low, double high) {
  ValueDistribution d{DistributionKind::Uniform, low, high, 0, 0};
  d.validate();
  return d;
}

void ValueDistribution::validate() const {
  switch (kind) {
    case DistributionKind::ClippedGaussian:
      if (!(b > 0.0))
        throw std::invalid_argument("clipped_gaussian: stddev must be > 0");
      break;
    case DistributionKind::HierarchicalGaussian:
      if (!(b > 0.0) || !(d > 0.0))
        throw std::invalid_argument(
            "hierarchical_gaussian: stddev parameters must be > 0");
      break;
    case DistributionKind::Uniform:
      if (!(a < b))
        throw std::invalid_argument("uniform: low must be below high");
      break;
  }
}

std::string ValueDistribution::name() const {
  switch (kind) {
    case DistributionKind::ClippedGaussian: return "clipped_gaussian";
    case DistributionKind::HierarchicalGaussian: return "hierarchical_gaussian";
    case DistributionKind::Uniform: return "uniform";
  }
  return "unknown";
}

void DatasetSpec::validate() const {
  distribution.validate();
  if (num_players.empty())
    throw std::invalid_argument("dataset spec: num_players is empty");
  for (int n : num_players)
    if (n < 2)
      throw std::invalid_argument(
          "dataset spec: every bidder count must be >= 2");
}

ValuationProfile sample_profile(const BiddingLanguage& language,
                                const ValueDistribution& distribution,
                                SplitMix64& rng) {
  const BaseSampler base = materialize(distribution, rng);
  return sample_profile_from(language, base, rng);
}

AuctionInstance sample_auction(const DatasetSpec& spec, SplitMix64& rng) {
  const int n =
      spec.num_players[rng.next_index(static_cast<int>(spec.num_players.size()))];
  const BaseSampler base = materialize(spec.distribution, rng);
  AuctionInstance instance{spec.language, {}};
  instance.profiles.reserve(n);
  for (int i = 0; i < n; ++i)
    instance.profiles.push_back(
        sample_profile_from(spec.language, base, rng));
  return instance;
}

AuctionDataset generate_dataset(const DatasetSpec& spec, std::int64_t count,
                                int threads) {
  spec.validate();
  if (count < 1)
    throw std::invalid_argument("generate_dataset: count must be positive");
  AuctionDataset dataset;
  dataset.spec = spec;
  dataset.instances.resize(count);
  parallel_for(count, threads, [&](std::int64_t i) {
    SplitMix64 rng(SplitMix64::mix(spec.seed, static_cast<std::uint64_t>(i)));
    dataset.instances[i] = sample_auction(spec, rng);
  });
  return dataset;
}

std::string dataset_fingerprint(const DatasetSpec& spec, std::int64_t count) {
  return detail::hex64(detail::fnv1a(header_body(spec, count)));
}

void save_dataset(const AuctionDataset& dataset, const std::string& path) {
  dataset.spec.validate();
  detail::LineWriter writer(path);
  const std::int64_t count =
      static_cast<std::int64_t>(dataset.instances.size());
  writer.write_line("{" + header_body(dataset.spec, count) +
                    ",\"fingerprint\":\"" +
                    dataset_fingerprint(dataset.spec, count) + "\"}");
  std::string line;
  for (const auto& instance : dataset.instances) {
    line = "{\"n\":" + std::to_string(instance.num_players()) +
           ",\"language\":\"" + instance.language.name() +
           "\",\"profiles\":[";
    for (int i = 0; i < instance.num_players(); ++i) {
      if (i) line += ',';
      line += '[';
      const auto& values = instance.profiles[i].values;
      for (std::size_t k = 0; k < values.size(); ++k) {
        if (k) line += ',';
        line += format_double17(values[k]);
      }
      line += ']';
    }
    line += "]}";
    writer.write_line(line);
  }
  writer.close();
}

AuctionDataset load_dataset(const std::string& path) {
  detail::LineReader reader(path);
  std::string line;
  if (!reader.next_line(line))
    throw std::runtime_error(path + ": empty file, expected a header line");

  AuctionDataset dataset;
  std::int64_t declared = 0;
  try {
    const json header = json::parse(line);
    if (header.at("format").get<std::string>() != kFormatName)
      line_error(reader, "not a dataset file (format field mismatch)");
    if (header.at("version").get<int>() != kFormatVersion)
      line_error(reader, "unsupported dataset version");
    dataset.spec.language = language_from_json(header.at("language"));
    dataset.spec.distribution =
        distribution_from_json(header.at("distribution"));
    dataset.spec.num_players =
        header.at("num_players").get<std::vector<int>>();
    dataset.spec.seed = header.at("seed").get<std::uint64_t>();
    declared = header.at("count").get<std::int64_t>();
  } catch (const json::exception& e) {
    line_error(reader, std::string("invalid header: ") + e.what());
  }
  dataset.spec.validate();

  while (reader.next_line(line)) {
    if (line.empty()) line_error(reader, "blank line");
    AuctionInstance instance;
    instance.language = dataset.spec.language;
    try {
      const json j = json::parse(line);
      const int n = j.at("n").get<int>();
      if (j.at("language").get<std::string>() !=
          dataset.spec.language.name())
        line_error(reader, "instance language differs from the header");
      const auto& profiles = j.at("profiles");
      if (!profiles.is_array() || static_cast<int>(profiles.size()) != n)
        line_error(reader, "profile count does not match n");
      for (const auto& p : profiles) {
        ValuationProfile profile;
        profile.values = p.get<std::vector<double>>();
        instance.profiles.push_back(std::move(profile));
      }
    } catch (const json::exception& e) {
      line_error(reader, std::string("invalid instance: ") + e.what());
    }
    if (instance.num_players() < 2)
      line_error(reader, "instance has fewer than two bidders");
    if (std::find(dataset.spec.num_players.begin(),
                  dataset.spec.num_players.end(), instance.num_players()) ==
        dataset.spec.num_players.end())
      line_error(reader, "bidder count not listed in the header");
    try {
      for (const auto& profile : instance.profiles)
        validate_profile(instance.language, profile);
    } catch (const std::exception& e) {
      line_error(reader, e.what());
    }
    dataset.instances.push_back(std::move(instance));
  }

  if (static_cast<std::int64_t>(dataset.instances.size()) != declared)
    throw std::runtime_error(
        path + ": header declares " + std::to_string(declared) +
        " instances, file holds " + std::to_string(dataset.instances.size()));
  return dataset;
}

}  // namespace groves
