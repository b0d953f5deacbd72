#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "groves/simulate.hpp"
#include "helpers.hpp"

using namespace groves;
using groves::testing::small_spec;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  REQUIRE(out.good());
}

std::string temp_path(const std::string& name) {
  return "sim_test_" + name;
}

}  // namespace

TEST_CASE("multi-unit profiles come out sorted") {
  DatasetSpec spec;
  spec.language = BiddingLanguage::multi_unit_dmu(15);
  spec.distribution = ValueDistribution::hierarchical_gaussian(10, 1, 2, 0.5);
  spec.num_players = {10};
  spec.seed = 3;
  SplitMix64 rng(9ULL);
  for (int trial = 0; trial < 50; ++trial) {
    const AuctionInstance instance = sample_auction(spec, rng);
    CHECK(instance.num_players() == 10);
    for (const ValuationProfile& profile : instance.profiles) {
      REQUIRE(profile.values.size() == 15);
      for (std::size_t m = 1; m < profile.values.size(); ++m)
        CHECK(profile.values[m - 1] >= profile.values[m]);
    }
  }
}

TEST_CASE("uniform draws stay inside their support") {
  const DatasetSpec spec = small_spec(BiddingLanguage::unit_demand(3), {2, 3}, 8);
  SplitMix64 rng(10ULL);
  for (int trial = 0; trial < 200; ++trial) {
    const AuctionInstance instance = sample_auction(spec, rng);
    for (const ValuationProfile& profile : instance.profiles)
      for (double v : profile.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
  }
}

TEST_CASE("every distribution clips at zero") {
  DatasetSpec spec = small_spec(BiddingLanguage::unit_demand(2), {2}, 4);
  spec.distribution = ValueDistribution::clipped_gaussian(-5.0, 1.0);
  SplitMix64 rng(11ULL);
  for (int trial = 0; trial < 100; ++trial) {
    const AuctionInstance instance = sample_auction(spec, rng);
    for (const ValuationProfile& profile : instance.profiles)
      for (double v : profile.values) CHECK(v >= 0.0);
  }
}

TEST_CASE("bundle values dominate the sum of their leaves") {
  DatasetSpec spec;
  spec.language = BiddingLanguage::hierarchical_bundles(8);
  spec.distribution = ValueDistribution::hierarchical_gaussian(10, 1, 2, 0.5);
  spec.num_players = {2};
  spec.seed = 12;
  SplitMix64 rng(12ULL);
  const BundleTree tree(8);
  int samples = 0;
  while (samples < 10000) {
    const AuctionInstance instance = sample_auction(spec, rng);
    for (const ValuationProfile& profile : instance.profiles) {
      for (int node = 8; node < tree.node_count(); ++node) {
        const auto [first, last] = tree.leaf_range(node);
        double leaf_sum = 0.0;
        for (int leaf = first; leaf < last; ++leaf)
          leaf_sum += profile.values[leaf];
        CHECK(profile.values[node] >= leaf_sum - 1e-9);
      }
      samples += tree.node_count() - 8;
    }
  }
}

TEST_CASE("clipped gaussian matches its nominal mean") {
  const ValueDistribution dist = ValueDistribution::clipped_gaussian(10, 2);
  const BiddingLanguage language = BiddingLanguage::unit_demand(1);
  SplitMix64 rng(77ULL);
  const int draws = 100000;
  double sum = 0.0;
  for (int i = 0; i < draws; ++i)
    sum += sample_profile(language, dist, rng).values[0];
  const double standard_error = 2.0 / std::sqrt(static_cast<double>(draws));
  CHECK(std::abs(sum / draws - 10.0) <= 3.0 * standard_error);
}

TEST_CASE("generation is reproducible and worker-count independent") {
  const DatasetSpec spec = small_spec(BiddingLanguage::multi_unit_dmu(2),
                                      {2, 3}, 99);
  const AuctionDataset one = generate_dataset(spec, 64, 1);
  const AuctionDataset again = generate_dataset(spec, 64, 1);
  const AuctionDataset sharded = generate_dataset(spec, 64, 7);
  CHECK(one == again);
  CHECK(one == sharded);
  CHECK(generate_dataset(spec, 1, 1).instances.size() == 1);

  DatasetSpec other = spec;
  other.seed = 100;
  CHECK(!(generate_dataset(other, 64, 1) == one));
}

TEST_CASE("fingerprints identify spec and count") {
  const DatasetSpec spec = small_spec(BiddingLanguage::multi_unit_dmu(2), {3}, 1);
  CHECK(dataset_fingerprint(spec, 10) == dataset_fingerprint(spec, 10));
  CHECK(dataset_fingerprint(spec, 10) != dataset_fingerprint(spec, 11));
  DatasetSpec reseeded = spec;
  reseeded.seed = 2;
  CHECK(dataset_fingerprint(spec, 10) != dataset_fingerprint(reseeded, 10));
}

TEST_CASE("datasets round-trip exactly, plain and gzipped") {
  DatasetSpec spec = small_spec(BiddingLanguage::hierarchical_bundles(4),
                                {2, 3}, 21);
  spec.distribution = ValueDistribution::hierarchical_gaussian(10, 1, 2, 0.5);
  const AuctionDataset dataset = generate_dataset(spec, 40, 1);

  for (const char* name : {"roundtrip.jsonl", "roundtrip.jsonl.gz"}) {
    const std::string path = temp_path(name);
    save_dataset(dataset, path);
    const AuctionDataset loaded = load_dataset(path);
    CHECK(loaded == dataset);
    std::remove(path.c_str());
  }
}

TEST_CASE("saving twice yields identical bytes") {
  const DatasetSpec spec = small_spec(BiddingLanguage::unit_demand(2), {2}, 5);
  const AuctionDataset dataset = generate_dataset(spec, 16, 1);
  const std::string a = temp_path("bytes_a.jsonl");
  const std::string b = temp_path("bytes_b.jsonl");
  save_dataset(dataset, a);
  save_dataset(dataset, b);
  CHECK(read_file(a) == read_file(b));
  std::remove(a.c_str());
  std::remove(b.c_str());
}

TEST_CASE("a hand-written two-bidder file loads") {
  const std::string path = temp_path("fixture.jsonl");
  write_file(
      path,
      "{\"format\":\"groves-forge-dataset\",\"version\":1,"
      "\"language\":{\"kind\":\"unit_demand\",\"size\":1},"
      "\"distribution\":{\"kind\":\"uniform\",\"low\":0,\"high\":20},"
      "\"num_players\":[2],\"seed\":1,\"count\":1,\"fingerprint\":\"0\"}\n"
      "{\"n\":2,\"language\":\"unit_demand\",\"profiles\":[[12],[6]]}\n");
  const AuctionDataset loaded = load_dataset(path);
  REQUIRE(loaded.instances.size() == 1);
  CHECK(loaded.instances[0].num_players() == 2);
  CHECK(loaded.instances[0].profiles[0].values[0] == 12.0);
  CHECK(loaded.instances[0].profiles[1].values[0] == 6.0);
  std::remove(path.c_str());
}

TEST_CASE("load failures name the offending line") {
  const DatasetSpec spec = small_spec(BiddingLanguage::multi_unit_dmu(2), {2}, 6);
  const AuctionDataset dataset = generate_dataset(spec, 3, 1);
  const std::string good = temp_path("good.jsonl");
  save_dataset(dataset, good);
  std::string text = read_file(good);
  std::remove(good.c_str());

  SUBCASE("malformed json") {
    const std::string path = temp_path("bad_json.jsonl");
    write_file(path, text + "{not json\n");
    CHECK_THROWS_WITH_AS(load_dataset(path),
                         doctest::Contains("line 5"), std::runtime_error);
    std::remove(path.c_str());
  }

  SUBCASE("non-monotone marginals are rejected with the line number") {
    const std::string path = temp_path("bad_profile.jsonl");
    write_file(path,
               text.substr(0, text.find('\n') + 1) +
                   "{\"n\":2,\"language\":\"multi_unit_dmu\","
                   "\"profiles\":[[0.1,0.9],[0.5,0.5]]}\n");
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("line 2"),
                         std::runtime_error);
    std::remove(path.c_str());
  }

  SUBCASE("count mismatch is rejected") {
    const std::string path = temp_path("bad_count.jsonl");
    write_file(path, text + text.substr(text.find('\n') + 1));
    CHECK_THROWS(load_dataset(path));
    std::remove(path.c_str());
  }
}

TEST_CASE("distribution parameters are validated") {
  CHECK_THROWS(ValueDistribution::uniform(1.0, 1.0).validate());
  CHECK_THROWS(ValueDistribution::clipped_gaussian(0.0, 0.0).validate());
  CHECK_THROWS(ValueDistribution::hierarchical_gaussian(1, 0, 1, 1).validate());
  CHECK_NOTHROW(ValueDistribution::hierarchical_gaussian(10, 1, 2, 0.5)
                    .validate());
  DatasetSpec spec = small_spec(BiddingLanguage::unit_demand(1), {}, 1);
  CHECK_THROWS(spec.validate());
  spec.num_players = {1};
  CHECK_THROWS(spec.validate());
}
