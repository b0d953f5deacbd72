#include "groves/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "groves/parallel.hpp"
#include "groves/representation.hpp"
#include "json.hpp"
#include "textio.hpp"

namespace groves {
namespace {

using nlohmann::json;
using detail::format_double17;

constexpr const char* kCheckpointFormat = "groves-forge-checkpoint";
constexpr int kCheckpointVersion = 1;

// Everything about one instance that stays constant during training:
// per-player input features, efficient-allocation values and VCG payments.
struct InstanceCache {
  const AuctionInstance* instance = nullptr;
  int n = 0;
  std::vector<AuctionTensor> tensors;       // CounterfactualCnn backbone
  std::vector<std::vector<double>> flats;   // FlatMlp backbone
  std::vector<double> vcg;                  // Clarke-pivot payments
  std::vector<double> realized;             // v_i(k*)
  std::vector<double> others_welfare;       // sum over j != i of v_j(k*)
  double vcg_budget = 0.0;
};

InstanceCache build_cache(const AuctionInstance& instance, Backbone backbone) {
  InstanceCache cache;
  cache.instance = &instance;
  cache.n = instance.num_players();
  const MechanismOutcome vcg = vcg_outcome(instance);
  cache.vcg = vcg.payments;
  cache.vcg_budget = vcg.budget;
  cache.realized = vcg.allocation.realized_value;
  const double welfare = vcg.allocation.welfare();
  cache.others_welfare.resize(cache.n);
  for (int i = 0; i < cache.n; ++i)
    cache.others_welfare[i] = welfare - cache.realized[i];
  if (backbone == Backbone::CounterfactualCnn) {
    cache.tensors.reserve(cache.n);
    for (int i = 0; i < cache.n; ++i)
      cache.tensors.push_back(build_tensor(instance, i));
  } else {
    cache.flats.reserve(cache.n);
    for (int i = 0; i < cache.n; ++i)
      cache.flats.push_back(build_flat(instance, i));
  }
  return cache;
}

double cached_network_output(const LearnedMechanism& mech,
                             const InstanceCache& cache, int player,
                             ForwardTrace* cnn_trace, FlatTrace* mlp_trace) {
  if (mech.backbone == Backbone::CounterfactualCnn)
    return forward(mech.cnn, cache.tensors[player], cnn_trace);
  return flat_forward(mech.mlp, cache.flats[player], mlp_trace);
}

double signed_output_direction(MechanismKind kind) {
  // GrovesDirect payments rise with the network output, redistribution
  // payments fall with it.
  return kind == MechanismKind::GrovesDirect ? 1.0 : -1.0;
}

double cached_payment(const LearnedMechanism& mech, const InstanceCache& cache,
                      int player, double output) {
  if (mech.kind == MechanismKind::GrovesDirect)
    return output - cache.others_welfare[player];
  return cache.vcg[player] - output;
}

// Per-instance objective and, optionally, parameter gradients scaled by
// `grad_scale` (the batch-mean factor).
double loss_one_instance(const LearnedMechanism& mech,
                         const InstanceCache& cache, double lambda_b,
                         double lambda_r, double grad_scale,
                         PaymentNetwork* cnn_grads, FlatNet* mlp_grads,
                         std::vector<ForwardTrace>& cnn_traces,
                         std::vector<FlatTrace>& mlp_traces) {
  const int n = cache.n;
  const bool want_grads = cnn_grads || mlp_grads;
  if (want_grads) {
    if (mech.backbone == Backbone::CounterfactualCnn)
      cnn_traces.resize(n);
    else
      mlp_traces.resize(n);
  }

  std::vector<double> t(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    ForwardTrace* ct = want_grads && mech.backbone == Backbone::CounterfactualCnn
                           ? &cnn_traces[i]
                           : nullptr;
    FlatTrace* ft = want_grads && mech.backbone == Backbone::FlatMlp
                        ? &mlp_traces[i]
                        : nullptr;
    const double output = cached_network_output(mech, cache, i, ct, ft);
    t[i] = cached_payment(mech, cache, i, output);
    total += t[i];
  }

  const double deficit = std::min(total, 0.0);
  double loss = total + lambda_b * deficit * deficit;
  std::vector<double> slack(n);
  for (int i = 0; i < n; ++i) {
    slack[i] = std::min(cache.realized[i] - t[i], 0.0);
    loss += lambda_r * slack[i] * slack[i];
  }

  if (want_grads) {
    const double direction = signed_output_direction(mech.kind);
    for (int i = 0; i < n; ++i) {
      const double dl_dt = 1.0 + 2.0 * lambda_b * deficit -
                           2.0 * lambda_r * slack[i];
      const double upstream = grad_scale * direction * dl_dt;
      if (mech.backbone == Backbone::CounterfactualCnn)
        backward(mech.cnn, cache.tensors[i], cnn_traces[i], upstream,
                 *cnn_grads);
      else
        flat_backward(mech.mlp, cache.flats[i], mlp_traces[i], upstream,
                      *mlp_grads);
    }
  }
  return loss;
}

void accumulate(PaymentNetwork& into, const PaymentNetwork& from) {
  auto dst = into.named_parameters();
  auto src = from.named_parameters();
  for (std::size_t i = 0; i < dst.size(); ++i)
    for (std::size_t k = 0; k < dst[i].tensor->numel(); ++k)
      dst[i].tensor->data[k] += src[i].tensor->data[k];
}

void accumulate(FlatNet& into, const FlatNet& from) {
  auto dst = into.named_parameters();
  auto src = from.named_parameters();
  for (std::size_t i = 0; i < dst.size(); ++i)
    for (std::size_t k = 0; k < dst[i].tensor->numel(); ++k)
      dst[i].tensor->data[k] += src[i].tensor->data[k];
}

// Mean objective over the referenced caches; gradients, when requested, are
// reduced over fixed-order worker chunks so the result does not depend on
// scheduling.
double loss_over_caches(const LearnedMechanism& mech,
                        const std::vector<const InstanceCache*>& batch,
                        double lambda_b, double lambda_r,
                        PaymentNetwork* cnn_grads, FlatNet* mlp_grads,
                        int threads) {
  const std::int64_t count = static_cast<std::int64_t>(batch.size());
  if (count == 0) throw std::invalid_argument("loss: empty batch");
  const double grad_scale = 1.0 / static_cast<double>(count);

  const int workers = static_cast<int>(
      std::min<std::int64_t>(std::max(threads, 1), count));
  if (workers <= 1) {
    double total = 0.0;
    std::vector<ForwardTrace> cnn_traces;
    std::vector<FlatTrace> mlp_traces;
    for (const InstanceCache* cache : batch)
      total += loss_one_instance(mech, *cache, lambda_b, lambda_r, grad_scale,
                                 cnn_grads, mlp_grads, cnn_traces, mlp_traces);
    return total / static_cast<double>(count);
  }

  std::vector<double> partial_loss(workers, 0.0);
  std::vector<PaymentNetwork> partial_cnn;
  std::vector<FlatNet> partial_mlp;
  for (int w = 0; w < workers; ++w) {
    if (cnn_grads) partial_cnn.push_back(cnn_grads->zeros_like());
    if (mlp_grads) partial_mlp.push_back(mlp_grads->zeros_like());
  }
  const std::int64_t chunk = (count + workers - 1) / workers;
  parallel_for(workers, workers, [&](std::int64_t w) {
    std::vector<ForwardTrace> cnn_traces;
    std::vector<FlatTrace> mlp_traces;
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min(count, begin + chunk);
    for (std::int64_t i = begin; i < end; ++i)
      partial_loss[w] += loss_one_instance(
          mech, *batch[i], lambda_b, lambda_r, grad_scale,
          cnn_grads ? &partial_cnn[w] : nullptr,
          mlp_grads ? &partial_mlp[w] : nullptr, cnn_traces, mlp_traces);
  });
  double total = 0.0;
  for (int w = 0; w < workers; ++w) {
    total += partial_loss[w];
    if (cnn_grads) accumulate(*cnn_grads, partial_cnn[w]);
    if (mlp_grads) accumulate(*mlp_grads, partial_mlp[w]);
  }
  return total / static_cast<double>(count);
}

// Descending total valuations of everyone but `player`; the feature vector
// of the linear rebate family.
std::vector<double> sorted_other_totals(const AuctionInstance& instance,
                                        int player) {
  std::vector<double> stats;
  stats.reserve(instance.num_players() - 1);
  for (int j = 0; j < instance.num_players(); ++j) {
    if (j == player) continue;
    double total = 0.0;
    for (double v : instance.profiles[j].values) total += v;
    stats.push_back(total);
  }
  std::sort(stats.begin(), stats.end(), std::greater<double>());
  return stats;
}

std::string tensor_json(const NamedTensorView& p) {
  std::string out = "{\"name\":\"" + p.name + "\",\"shape\":[";
  for (std::size_t i = 0; i < p.tensor->shape.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(p.tensor->shape[i]);
  }
  out += "],\"data\":[";
  for (std::size_t i = 0; i < p.tensor->numel(); ++i) {
    if (i) out += ',';
    out += format_double17(p.tensor->data[i]);
  }
  return out + "]}";
}

std::string tensor_list_json(const std::vector<NamedTensorView>& params) {
  std::string out = "[";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) out += ',';
    out += tensor_json(params[i]);
  }
  return out + "]";
}

void load_tensor_list(const json& list, std::vector<NamedTensor> params,
                      const std::string& path) {
  if (list.size() != params.size())
    throw std::runtime_error(path + ": checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& entry = list.at(i);
    if (entry.at("name").get<std::string>() != params[i].name)
      throw std::runtime_error(path + ": unexpected tensor " +
                               entry.at("name").get<std::string>());
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    if (shape != params[i].tensor->shape)
      throw std::runtime_error(path + ": tensor " + params[i].name +
                               " has the wrong shape");
    const auto data = entry.at("data").get<std::vector<double>>();
    if (data.size() != params[i].tensor->numel())
      throw std::runtime_error(path + ": tensor " + params[i].name +
                               " has the wrong length");
    params[i].tensor->data = data;
  }
}

}  // namespace

std::vector<double> VcgRule::payments(const AuctionInstance& instance) const {
  return vcg_outcome(instance).payments;
}

std::vector<double> FirstPriceRule::payments(
    const AuctionInstance& instance) const {
  // Pay-your-bid: the textbook way to break truthfulness.
  return allocate(instance).realized_value;
}

std::string mechanism_label(MechanismKind kind, Backbone backbone) {
  const std::string prefix =
      kind == MechanismKind::GrovesDirect ? "g-" : "r-";
  return prefix +
         (backbone == Backbone::CounterfactualCnn ? "cnn" : "mlp");
}

std::string LearnedMechanism::name() const {
  return mechanism_label(kind, backbone);
}

void LearnedMechanism::require_compatible(const AuctionInstance& instance) const {
  if (instance.num_players() < 2)
    throw std::invalid_argument(name() + ": needs >= 2 bidders");
  if (instance.language != language)
    throw std::invalid_argument(name() +
                                ": instance language differs from training");
  if (backbone == Backbone::FlatMlp && instance.num_players() != flat_n)
    throw std::runtime_error(
        name() + ": flat backbone was trained for n=" +
        std::to_string(flat_n) + " and cannot evaluate an n=" +
        std::to_string(instance.num_players()) +
        " auction; use the counterfactual backbone for variable n");
}

double LearnedMechanism::network_output(const AuctionInstance& instance,
                                        int player) const {
  require_compatible(instance);
  if (backbone == Backbone::CounterfactualCnn)
    return forward(cnn, build_tensor(instance, player));
  return flat_forward(mlp, build_flat(instance, player));
}

std::vector<double> LearnedMechanism::payments(
    const AuctionInstance& instance) const {
  require_compatible(instance);
  const int n = instance.num_players();
  const InstanceCache cache = build_cache(instance, backbone);
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) {
    const double output = cached_network_output(
        *this, cache, i, nullptr, nullptr);
    t[i] = cached_payment(*this, cache, i, output);
  }
  return t;
}

double LinearRedistributionRule::rebate(const AuctionInstance& instance,
                                        int player) const {
  const std::vector<double> stats = sorted_other_totals(instance, player);
  double pre = coefficients.at(0);
  for (std::size_t q = 0; q < stats.size(); ++q)
    pre += coefficients.at(q + 1) * stats[q];
  return pre > 0.0 ? pre : 0.0;
}

std::vector<double> LinearRedistributionRule::payments(
    const AuctionInstance& instance) const {
  if (instance.num_players() != n)
    throw std::runtime_error(
        "linear: rule was fitted for n=" + std::to_string(n) +
        " and cannot evaluate an n=" +
        std::to_string(instance.num_players()) + " auction");
  const MechanismOutcome vcg = vcg_outcome(instance);
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = vcg.payments[i] - rebate(instance, i);
  return t;
}

double mechanism_loss(const LearnedMechanism& mech,
                      const std::vector<AuctionInstance>& batch,
                      double lambda_b, double lambda_r,
                      PaymentNetwork* cnn_grads, FlatNet* mlp_grads) {
  std::vector<InstanceCache> caches;
  caches.reserve(batch.size());
  for (const auto& instance : batch)
    caches.push_back(build_cache(instance, mech.backbone));
  std::vector<const InstanceCache*> refs;
  refs.reserve(caches.size());
  for (const auto& c : caches) refs.push_back(&c);
  return loss_over_caches(mech, refs, lambda_b, lambda_r, cnn_grads,
                          mlp_grads, 1);
}

LearnedMechanism train(const TrainConfig& config,
                       const AuctionDataset& train_set, MechanismKind kind,
                       Backbone backbone, const TrainHooks& hooks) {
  if (train_set.instances.empty())
    throw std::invalid_argument("train: empty training set");
  if (config.batch_size < 1 || config.iterations < 0 || config.lr <= 0.0)
    throw std::invalid_argument("train: invalid configuration");
  train_set.spec.validate();

  const BiddingLanguage& language = train_set.spec.language;
  const int bundles = language.bundle_count();

  LearnedMechanism mech;
  mech.kind = kind;
  mech.backbone = backbone;
  mech.language = language;
  mech.dataset_fingerprint = dataset_fingerprint(
      train_set.spec, static_cast<std::int64_t>(train_set.instances.size()));

  if (backbone == Backbone::CounterfactualCnn) {
    mech.cnn = init_network(bundles, 2 * bundles + 1,
                            SplitMix64::mix(config.seed, 1));
  } else {
    const int n = train_set.instances.front().num_players();
    for (const auto& instance : train_set.instances)
      if (instance.num_players() != n)
        throw std::invalid_argument(
            "train: the flat backbone needs a single-n training set");
    mech.flat_n = n;
    mech.mlp = init_flat_net(bundles * (n - 1), SplitMix64::mix(config.seed, 1));
  }

  const std::int64_t count =
      static_cast<std::int64_t>(train_set.instances.size());
  std::vector<InstanceCache> caches(count);
  parallel_for(count, config.threads, [&](std::int64_t i) {
    caches[i] = build_cache(train_set.instances[i], backbone);
  });

  // Hold out the tail for the periodic metrics so they are not computed on
  // sampled training points.
  const std::int64_t holdout =
      count >= 10 ? std::min<std::int64_t>(256, count / 10) : 0;
  const std::int64_t sample_range = count - holdout;
  const std::int64_t metric_begin = holdout > 0 ? sample_range : 0;

  auto slice_metrics = [&](double loss, std::int64_t iteration) {
    if (!hooks.on_metrics) return;
    TrainMetricsRow row;
    row.iteration = iteration;
    row.loss = loss;
    double reduction_sum = 0.0;
    std::int64_t reduction_count = 0, deficits = 0, ir_violations = 0;
    for (std::int64_t l = metric_begin; l < count; ++l) {
      const InstanceCache& cache = caches[l];
      double budget = 0.0;
      bool ir_bad = false;
      for (int i = 0; i < cache.n; ++i) {
        const double output =
            cached_network_output(mech, cache, i, nullptr, nullptr);
        const double t = cached_payment(mech, cache, i, output);
        budget += t;
        if (cache.realized[i] - t < -kMoneyTolerance) ir_bad = true;
      }
      if (cache.vcg_budget > kMoneyTolerance) {
        reduction_sum += (1.0 - budget / cache.vcg_budget) * 100.0;
        ++reduction_count;
      }
      if (budget < -kMoneyTolerance) ++deficits;
      if (ir_bad) ++ir_violations;
    }
    const std::int64_t slice = count - metric_begin;
    row.budget_reduction =
        reduction_count ? reduction_sum / reduction_count : 0.0;
    row.deficit_fraction = slice ? static_cast<double>(deficits) / slice : 0.0;
    row.ir_violation_fraction =
        slice ? static_cast<double>(ir_violations) / slice : 0.0;
    hooks.on_metrics(row);
  };

  PaymentNetwork cnn_grads;
  FlatNet mlp_grads;
  std::vector<NamedTensor> params;
  std::vector<NamedTensorView> grad_views;
  if (backbone == Backbone::CounterfactualCnn) {
    cnn_grads = mech.cnn.zeros_like();
    params = mech.cnn.named_parameters();
    grad_views = static_cast<const PaymentNetwork&>(cnn_grads).named_parameters();
  } else {
    mlp_grads = mech.mlp.zeros_like();
    params = mech.mlp.named_parameters();
    grad_views = static_cast<const FlatNet&>(mlp_grads).named_parameters();
  }
  AdamState adam = adam_state_for(grad_views);

  SplitMix64 batch_rng(SplitMix64::mix(config.seed, 2));
  std::vector<const InstanceCache*> batch(config.batch_size);

  for (std::int64_t it = 1; it <= config.iterations; ++it) {
    for (int b = 0; b < config.batch_size; ++b)
      batch[b] =
          &caches[batch_rng.next_index(static_cast<int>(sample_range))];
    // Contiguous same-n groups within the batch (seeded draw order kept
    // inside each group).
    std::stable_sort(batch.begin(), batch.end(),
                     [](const InstanceCache* a, const InstanceCache* b) {
                       return a->n < b->n;
                     });

    if (backbone == Backbone::CounterfactualCnn)
      for (auto& p : cnn_grads.named_parameters()) p.tensor->fill(0.0);
    else
      for (auto& p : mlp_grads.named_parameters()) p.tensor->fill(0.0);

    const double loss = loss_over_caches(
        mech, batch, config.lambda_b, config.lambda_r,
        backbone == Backbone::CounterfactualCnn ? &cnn_grads : nullptr,
        backbone == Backbone::FlatMlp ? &mlp_grads : nullptr, config.threads);

    if (!std::isfinite(loss)) {
      mech.iterations_completed = it - 1;
      if (hooks.on_checkpoint) hooks.on_checkpoint(mech, adam, it - 1);
      throw std::runtime_error(
          "train: non-finite loss at iteration " + std::to_string(it) +
          " (lr=" + format_double17(config.lr) +
          ", batch_size=" + std::to_string(config.batch_size) +
          "); wrote the last checkpoint");
    }

    adam_step(params, grad_views, adam, config.lr);
    mech.iterations_completed = it;

    if (config.eval_every > 0 &&
        (it % config.eval_every == 0 || it == config.iterations))
      slice_metrics(loss, it);
    if (hooks.on_checkpoint && config.checkpoint_every > 0 &&
        (it % config.checkpoint_every == 0 || it == config.iterations))
      hooks.on_checkpoint(mech, adam, it);
  }
  if (config.iterations == 0 && hooks.on_checkpoint)
    hooks.on_checkpoint(mech, adam, 0);
  return mech;
}

LinearRedistributionRule fit_linear_redistribution(
    const AuctionDataset& train_set, int n, const LinearFitConfig& config) {
  if (train_set.instances.empty())
    throw std::invalid_argument("fit_linear_redistribution: empty dataset");
  if (n < 2) throw std::invalid_argument("fit_linear_redistribution: n < 2");
  for (const auto& instance : train_set.instances)
    if (instance.num_players() != n)
      throw std::invalid_argument(
          "fit_linear_redistribution: dataset mixes bidder counts");

  const std::int64_t count =
      static_cast<std::int64_t>(train_set.instances.size());
  // stats[l][i] = descending totals of the others; constants from VCG.
  std::vector<std::vector<std::vector<double>>> stats(count);
  std::vector<std::vector<double>> vcg(count), realized(count);
  for (std::int64_t l = 0; l < count; ++l) {
    const AuctionInstance& instance = train_set.instances[l];
    const MechanismOutcome outcome = vcg_outcome(instance);
    vcg[l] = outcome.payments;
    realized[l] = outcome.allocation.realized_value;
    stats[l].resize(n);
    for (int i = 0; i < n; ++i) stats[l][i] = sorted_other_totals(instance, i);
  }

  Tensor coef({static_cast<std::size_t>(n)});
  // A small positive intercept so the clamp starts in its active region;
  // with all-zero coefficients the subgradient would vanish everywhere.
  coef.data[0] = 0.01;
  Tensor grad({static_cast<std::size_t>(n)});
  std::vector<NamedTensor> params{{"coef", &coef}};
  std::vector<NamedTensorView> grad_views{{"coef", &grad}};
  AdamState adam = adam_state_for(grad_views);

  for (std::int64_t it = 0; it < config.iterations; ++it) {
    grad.fill(0.0);
    const double scale = 1.0 / static_cast<double>(count);
    for (std::int64_t l = 0; l < count; ++l) {
      double total = 0.0;
      std::vector<double> pre(n), t(n);
      for (int i = 0; i < n; ++i) {
        double p = coef.data[0];
        for (int q = 0; q < n - 1; ++q)
          p += coef.data[q + 1] * stats[l][i][q];
        pre[i] = p;
        t[i] = vcg[l][i] - (p > 0.0 ? p : 0.0);
        total += t[i];
      }
      const double deficit = std::min(total, 0.0);
      for (int i = 0; i < n; ++i) {
        if (pre[i] <= 0.0) continue;
        const double slack = std::min(realized[l][i] - t[i], 0.0);
        const double dl_dr = -1.0 - 2.0 * config.lambda_b * deficit +
                             2.0 * config.lambda_r * slack;
        grad.data[0] += scale * dl_dr;
        for (int q = 0; q < n - 1; ++q)
          grad.data[q + 1] += scale * dl_dr * stats[l][i][q];
      }
    }
    adam_step(params, grad_views, adam, config.lr);
  }

  LinearRedistributionRule rule;
  rule.n = n;
  rule.coefficients = coef.data;
  return rule;
}

void save_checkpoint(const LearnedMechanism& mech, const AdamState* adam,
                     const std::string& path) {
  std::string out = "{\"format\":\"";
  out += kCheckpointFormat;
  out += "\",\"version\":" + std::to_string(kCheckpointVersion);
  out += ",\"mechanism\":\"" + mech.name() + "\"";
  out += ",\"language\":{\"kind\":\"" + mech.language.name() +
         "\",\"size\":" + std::to_string(mech.language.size) + "}";
  out += ",\"flat_n\":" + std::to_string(mech.flat_n);
  out += ",\"dataset_fingerprint\":\"" + mech.dataset_fingerprint + "\"";
  out += ",\"iterations\":" + std::to_string(mech.iterations_completed);
  const auto params = mech.backbone == Backbone::CounterfactualCnn
                          ? mech.cnn.named_parameters()
                          : mech.mlp.named_parameters();
  out += ",\"tensors\":" + tensor_list_json(params);
  if (adam) {
    out += ",\"adam\":{\"step\":" + std::to_string(adam->step) + ",\"m\":[";
    for (std::size_t i = 0; i < adam->m.size(); ++i) {
      if (i) out += ',';
      out += tensor_json({params[i].name, &adam->m[i]});
    }
    out += "],\"v\":[";
    for (std::size_t i = 0; i < adam->v.size(); ++i) {
      if (i) out += ',';
      out += tensor_json({params[i].name, &adam->v[i]});
    }
    out += "]}";
  }
  out += "}";
  detail::LineWriter writer(path);
  writer.write_line(out);
  writer.close();
}

void save_linear_checkpoint(const LinearRedistributionRule& rule,
                            const std::string& fingerprint,
                            const std::string& path) {
  std::string out = "{\"format\":\"";
  out += kCheckpointFormat;
  out += "\",\"version\":" + std::to_string(kCheckpointVersion);
  out += ",\"mechanism\":\"linear\",\"n\":" + std::to_string(rule.n);
  out += ",\"dataset_fingerprint\":\"" + fingerprint + "\"";
  out += ",\"coefficients\":[";
  for (std::size_t i = 0; i < rule.coefficients.size(); ++i) {
    if (i) out += ',';
    out += format_double17(rule.coefficients[i]);
  }
  out += "]}";
  detail::LineWriter writer(path);
  writer.write_line(out);
  writer.close();
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  detail::LineReader reader(path);
  std::string text, line;
  while (reader.next_line(line)) text += line;

  LoadedCheckpoint loaded;
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw std::runtime_error("not a checkpoint file");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw std::runtime_error("unsupported checkpoint version");
    loaded.mechanism = j.at("mechanism").get<std::string>();
    loaded.dataset_fingerprint =
        j.value("dataset_fingerprint", std::string());

    if (loaded.mechanism == "linear") {
      auto rule = std::make_unique<LinearRedistributionRule>();
      rule->n = j.at("n").get<int>();
      rule->coefficients = j.at("coefficients").get<std::vector<double>>();
      if (static_cast<int>(rule->coefficients.size()) != rule->n)
        throw std::runtime_error("coefficient count must equal n");
      loaded.rule = std::move(rule);
      return loaded;
    }

    auto mech = std::make_unique<LearnedMechanism>();
    if (loaded.mechanism == "g-cnn" || loaded.mechanism == "g-mlp")
      mech->kind = MechanismKind::GrovesDirect;
    else if (loaded.mechanism == "r-cnn" || loaded.mechanism == "r-mlp")
      mech->kind = MechanismKind::Redistribution;
    else
      throw std::runtime_error("unknown mechanism: " + loaded.mechanism);
    mech->backbone = loaded.mechanism.ends_with("cnn")
                         ? Backbone::CounterfactualCnn
                         : Backbone::FlatMlp;
    const json& lang = j.at("language");
    mech->language = parse_language(lang.at("kind").get<std::string>(),
                                    lang.at("size").get<int>());
    mech->flat_n = j.at("flat_n").get<int>();
    mech->dataset_fingerprint = loaded.dataset_fingerprint;
    mech->iterations_completed = j.at("iterations").get<std::int64_t>();
    loaded.iterations = mech->iterations_completed;

    const int bundles = mech->language.bundle_count();
    if (mech->backbone == Backbone::CounterfactualCnn) {
      mech->cnn = init_network(bundles, 2 * bundles + 1, 0);
      load_tensor_list(j.at("tensors"), mech->cnn.named_parameters(), path);
    } else {
      if (mech->flat_n < 2)
        throw std::runtime_error("flat checkpoint is missing flat_n");
      mech->mlp = init_flat_net(bundles * (mech->flat_n - 1), 0);
      load_tensor_list(j.at("tensors"), mech->mlp.named_parameters(), path);
    }
    loaded.rule = std::move(mech);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": invalid checkpoint: " + e.what());
  }
  return loaded;
}

}  // namespace groves
