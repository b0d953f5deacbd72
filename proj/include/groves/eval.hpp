#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "groves/mechanisms.hpp"

namespace groves {

// Test-set summary for one payment rule. Reductions are percentages of the
// VCG budget returned to the bidders: reduction = (1 - B/B_vcg) * 100,
// defined per auction only when B_vcg exceeds the money tolerance. Deficit
// and IR counters use the same tolerance but cover every auction.
struct EvalReport {
  std::string mechanism;
  std::int64_t num_auctions = 0;
  double mean_budget_reduction_pct = 0.0;   // mean over defined reductions
  double reduction_ratio_of_sums_pct = 0.0; // (1 - sum B / sum B_vcg) * 100
  double deficit_fraction = 0.0;            // B < -tolerance
  double max_deficit_pct_of_vcg = 0.0;
  double ir_violation_fraction = 0.0;       // any utility < -tolerance
  std::int64_t zero_vcg_budget_auctions = 0;

  // Histogram of the percent of VCG budget returned. `edges` are the finite
  // bin boundaries (-100..100 in steps of 5); counts has edges.size() + 1
  // entries: underflow, the spans between consecutive edges (last span
  // closed at 100), overflow. An auction lands in the overflow bin exactly
  // when it is flagged as a deficit, so counts always sum to num_auctions
  // and the mass above 100 equals deficit_fraction * num_auctions.
  // Zero-VCG-budget auctions without a deficit count as fully returned.
  std::vector<double> histogram_edges;
  std::vector<std::int64_t> histogram_counts;
};

EvalReport evaluate(const PaymentRule& rule, const AuctionDataset& test_set,
                    int threads = 1);

// Best utility gain the audited bidder can find over truthful reporting:
// max over sampled misreports of u(misreport) - u(truth), with utility
// scored against the true profile. Misreports are the truth scaled by
// {0, 0.5, 2} followed by fresh draws from `distribution`. Non-positive
// results (within tolerance) mean the audit found no profitable deviation.
double truthfulness_audit(const PaymentRule& rule,
                          const AuctionInstance& instance, int player,
                          int num_misreports,
                          const ValueDistribution& distribution,
                          SplitMix64& rng);

// Writes the report as a one-row CSV with a header, and the histogram as a
// second CSV ("<stem>_histogram.csv") with rows bin_low,bin_high,count.
void emit_report(const EvalReport& report, const std::string& path);

}  // namespace groves
