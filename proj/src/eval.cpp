#include "groves/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "groves/parallel.hpp"
#include "textio.hpp"

namespace groves {
namespace {

struct AuctionRow {
  double budget = 0.0;
  double vcg_budget = 0.0;
  bool deficit = false;
  bool ir_violation = false;
};

constexpr double kHistLow = -100.0;
constexpr double kHistHigh = 100.0;
constexpr double kHistStep = 5.0;

}  // namespace

EvalReport evaluate(const PaymentRule& rule, const AuctionDataset& test_set,
                    int threads) {
  const std::int64_t count =
      static_cast<std::int64_t>(test_set.instances.size());
  if (count == 0) throw std::invalid_argument("evaluate: empty test set");

  std::vector<AuctionRow> rows(count);
  parallel_for(count, threads, [&](std::int64_t l) {
    const AuctionInstance& instance = test_set.instances[l];
    const MechanismOutcome outcome =
        outcome_for_payments(instance, rule.payments(instance));
    AuctionRow& row = rows[l];
    row.vcg_budget = vcg_outcome(instance).budget;
    row.budget = outcome.budget;
    row.deficit = outcome.budget < -kMoneyTolerance;
    for (double u : outcome.utilities)
      if (u < -kMoneyTolerance) row.ir_violation = true;
  });

  EvalReport report;
  report.mechanism = rule.name();
  report.num_auctions = count;
  for (double e = kHistLow; e <= kHistHigh + 0.5 * kHistStep; e += kHistStep)
    report.histogram_edges.push_back(e);
  const std::size_t spans = report.histogram_edges.size() - 1;
  report.histogram_counts.assign(spans + 2, 0);

  double reduction_sum = 0.0, budget_sum = 0.0, vcg_sum = 0.0;
  std::int64_t reduction_count = 0, deficits = 0, ir_violations = 0;
  for (const AuctionRow& row : rows) {
    budget_sum += row.budget;
    vcg_sum += row.vcg_budget;
    if (row.deficit) ++deficits;
    if (row.ir_violation) ++ir_violations;

    const bool defined = row.vcg_budget > kMoneyTolerance;
    double reduction = 100.0;
    if (defined) {
      reduction = (1.0 - row.budget / row.vcg_budget) * 100.0;
      reduction_sum += reduction;
      ++reduction_count;
      if (row.deficit)
        report.max_deficit_pct_of_vcg =
            std::max(report.max_deficit_pct_of_vcg, reduction - 100.0);
    } else {
      ++report.zero_vcg_budget_auctions;
    }

    // The deficit flag alone decides overflow, so the mass above 100% always
    // matches the deficit count.
    if (row.deficit) {
      ++report.histogram_counts.back();
    } else if (reduction < kHistLow) {
      ++report.histogram_counts.front();
    } else {
      auto span = static_cast<std::size_t>((reduction - kHistLow) / kHistStep);
      span = std::min(span, spans - 1);
      ++report.histogram_counts[span + 1];
    }
  }

  report.mean_budget_reduction_pct =
      reduction_count ? reduction_sum / reduction_count : 0.0;
  report.reduction_ratio_of_sums_pct =
      vcg_sum > kMoneyTolerance ? (1.0 - budget_sum / vcg_sum) * 100.0 : 0.0;
  report.deficit_fraction = static_cast<double>(deficits) / count;
  report.ir_violation_fraction = static_cast<double>(ir_violations) / count;
  return report;
}

double truthfulness_audit(const PaymentRule& rule,
                          const AuctionInstance& instance, int player,
                          int num_misreports,
                          const ValueDistribution& distribution,
                          SplitMix64& rng) {
  instance.validate();
  if (player < 0 || player >= instance.num_players())
    throw std::invalid_argument("truthfulness_audit: player out of range");
  if (num_misreports <= 0) return 0.0;

  const ValuationProfile truth = instance.profiles[player];
  auto utility_under = [&](const AuctionInstance& reported) {
    const Allocation allocation = allocate(reported);
    const std::vector<double> t = rule.payments(reported);
    return profile_value_of(instance.language, truth,
                            allocation.granted[player]) -
           t[player];
  };
  const double truthful_utility = utility_under(instance);

  double best_gain = -std::numeric_limits<double>::infinity();
  const double scales[] = {0.0, 0.5, 2.0};
  for (int m = 0; m < num_misreports; ++m) {
    AuctionInstance reported = instance;
    if (m < 3) {
      for (double& v : reported.profiles[player].values) v *= scales[m];
    } else {
      reported.profiles[player] =
          sample_profile(instance.language, distribution, rng);
    }
    best_gain = std::max(best_gain, utility_under(reported) - truthful_utility);
  }
  return best_gain;
}

void emit_report(const EvalReport& report, const std::string& path) {
  using detail::format_double17;
  {
    detail::LineWriter writer(path);
    writer.write_line(
        "mechanism,num_auctions,mean_budget_reduction_pct,"
        "reduction_ratio_of_sums_pct,deficit_fraction,max_deficit_pct_of_vcg,"
        "ir_violation_fraction,zero_vcg_budget_auctions");
    std::string row = report.mechanism;
    row += ',' + std::to_string(report.num_auctions);
    row += ',' + format_double17(report.mean_budget_reduction_pct);
    row += ',' + format_double17(report.reduction_ratio_of_sums_pct);
    row += ',' + format_double17(report.deficit_fraction);
    row += ',' + format_double17(report.max_deficit_pct_of_vcg);
    row += ',' + format_double17(report.ir_violation_fraction);
    row += ',' + std::to_string(report.zero_vcg_budget_auctions);
    writer.write_line(row);
    writer.close();
  }

  std::string hist_path = path;
  const std::string suffix = ".csv";
  if (hist_path.size() >= suffix.size() &&
      hist_path.compare(hist_path.size() - suffix.size(), suffix.size(),
                        suffix) == 0)
    hist_path.resize(hist_path.size() - suffix.size());
  hist_path += "_histogram.csv";

  detail::LineWriter writer(hist_path);
  writer.write_line("bin_low,bin_high,count");
  const auto& edges = report.histogram_edges;
  const auto& counts = report.histogram_counts;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    std::string low = b == 0 ? "-inf" : format_double17(edges[b - 1]);
    std::string high =
        b + 1 == counts.size() ? "inf" : format_double17(edges[b]);
    writer.write_line(low + ',' + high + ',' + std::to_string(counts[b]));
  }
  writer.close();
}

}  // namespace groves
