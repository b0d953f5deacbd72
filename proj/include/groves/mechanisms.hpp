#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "groves/neural.hpp"
#include "groves/simulate.hpp"
#include "groves/vcg.hpp"

namespace groves {

// Anything that maps an auction instance to a signed payment vector. The
// allocation is always the efficient one from allocate(); rules differ only
// in what they charge.
class PaymentRule {
 public:
  virtual ~PaymentRule() = default;
  virtual std::string name() const = 0;
  virtual std::vector<double> payments(const AuctionInstance& instance) const = 0;
};

class VcgRule : public PaymentRule {
 public:
  std::string name() const override { return "vcg"; }
  std::vector<double> payments(const AuctionInstance& instance) const override;
};

// Deliberately non-truthful negative control: winners pay their own bid for
// what they win. Exists so audits have something to catch.
class FirstPriceRule : public PaymentRule {
 public:
  std::string name() const override { return "first-price"; }
  std::vector<double> payments(const AuctionInstance& instance) const override;
};

enum class MechanismKind { GrovesDirect, Redistribution };
enum class Backbone { CounterfactualCnn, FlatMlp };

// A trained payment rule. GrovesDirect charges
//   t_i = net(x_i) - sum over j != i of v_j(k*),
// Redistribution charges t_i = t_i^VCG - net(x_i); the non-negative network
// output makes the rebate keep every bidder at least as well off as VCG.
class LearnedMechanism : public PaymentRule {
 public:
  MechanismKind kind = MechanismKind::Redistribution;
  Backbone backbone = Backbone::CounterfactualCnn;
  BiddingLanguage language;
  PaymentNetwork cnn;  // CounterfactualCnn backbone
  FlatNet mlp;         // FlatMlp backbone
  int flat_n = 0;      // bidder count the flat backbone was trained with
  std::string dataset_fingerprint;
  std::int64_t iterations_completed = 0;

  std::string name() const override;
  std::vector<double> payments(const AuctionInstance& instance) const override;
  // Network output for one bidder (the h estimate or the rebate). Throws for
  // the flat backbone when the instance's bidder count differs from flat_n.
  double network_output(const AuctionInstance& instance, int player) const;

 private:
  void require_compatible(const AuctionInstance& instance) const;
};

// Rebate r_i = max(0, c_0 + sum_q c_q * s_q) over the descending-sorted
// total valuations s of the other n-1 bidders; charges t_i^VCG - r_i.
class LinearRedistributionRule : public PaymentRule {
 public:
  int n = 0;
  std::vector<double> coefficients;  // size n: intercept + n-1 slopes

  std::string name() const override { return "linear"; }
  std::vector<double> payments(const AuctionInstance& instance) const override;
  double rebate(const AuctionInstance& instance, int player) const;
};

struct TrainConfig {
  double lr = 1e-5;
  int batch_size = 256;
  std::int64_t iterations = 250000;
  double lambda_b = 100.0;  // budget-deficit penalty weight
  double lambda_r = 100.0;  // individual-rationality penalty weight
  std::uint64_t seed = 1;
  std::int64_t eval_every = 1000;
  std::int64_t checkpoint_every = 5000;
  int threads = 1;
};

struct TrainMetricsRow {
  std::int64_t iteration = 0;
  double loss = 0.0;
  double budget_reduction = 0.0;  // percent, on the held-out slice
  double deficit_fraction = 0.0;
  double ir_violation_fraction = 0.0;
};

struct TrainHooks {
  std::function<void(const TrainMetricsRow&)> on_metrics;
  std::function<void(const LearnedMechanism&, const AdamState&, std::int64_t)>
      on_checkpoint;
};

// Batch-mean training objective: payments plus quadratic hinge penalties for
// budget deficits and IR violations. Gradients (with respect to network
// parameters only; allocations and VCG terms are constants) are accumulated
// into the matching zeros_like() buffer when one is supplied.
double mechanism_loss(const LearnedMechanism& mech,
                      const std::vector<AuctionInstance>& batch,
                      double lambda_b, double lambda_r,
                      PaymentNetwork* cnn_grads = nullptr,
                      FlatNet* mlp_grads = nullptr);

// Adam on the sampled-batch objective. Batches draw with replacement from
// the head of `train_set`; the tail (a tenth, at most 256 instances) is held
// out for the periodic metrics. Aborts with a final checkpoint callback when
// the loss turns non-finite.
LearnedMechanism train(const TrainConfig& config,
                       const AuctionDataset& train_set, MechanismKind kind,
                       Backbone backbone, const TrainHooks& hooks = {});

struct LinearFitConfig {
  std::int64_t iterations = 4000;
  double lr = 0.02;
  double lambda_b = 100.0;
  double lambda_r = 100.0;
};

// Fits the linear rebate family on the same objective by full-batch
// subgradient descent (Adam); the clamp at zero enters through its
// subgradient. Requires a single-n dataset.
LinearRedistributionRule fit_linear_redistribution(
    const AuctionDataset& train_set, int n, const LinearFitConfig& config = {});

// Versioned JSON checkpoint: shapes, parameters and Adam state as
// 17-significant-digit decimals, plus the fingerprint of the dataset the
// mechanism was trained on.
void save_checkpoint(const LearnedMechanism& mech, const AdamState* adam,
                     const std::string& path);
void save_linear_checkpoint(const LinearRedistributionRule& rule,
                            const std::string& fingerprint,
                            const std::string& path);

struct LoadedCheckpoint {
  std::string mechanism;  // "g-cnn", "r-cnn", "g-mlp", "r-mlp" or "linear"
  std::string dataset_fingerprint;
  std::int64_t iterations = 0;
  std::unique_ptr<PaymentRule> rule;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

std::string mechanism_label(MechanismKind kind, Backbone backbone);

}  // namespace groves
