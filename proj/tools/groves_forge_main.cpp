// groves-forge: generate auction data, train payment rules, evaluate and
// audit them. Every command resolves one RunConfig (defaults <- preset <-
// config file <- flags), validates it, and writes the resolved form to the
// output directory so any run can be reproduced from its artifacts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "groves/config.hpp"
#include "groves/eval.hpp"

namespace fs = std::filesystem;
using namespace groves;

namespace {

constexpr int kExitFailure = 1;     // operational error
constexpr int kExitCheckFailed = 2; // an audit or oracle check did not pass

struct CommonFlags {
  std::string preset;
  std::string config_path;
  std::string out_dir;
  std::string data_path;
  std::string seeds;
  std::string mechanism;
  std::vector<std::string> sets;
  int threads = -1;
  std::int64_t count_train = -1;
  std::int64_t count_test = -1;
  std::int64_t iterations = -1;
  bool force = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--preset", flags.preset,
                  "Named preset (paper-dmu15, paper-unit8, paper-hier8, "
                  "desk-n3, desk-var-n)");
  cmd->add_option("--config", flags.config_path, "key=value config file");
  cmd->add_option("--out", flags.out_dir, "Output directory");
  cmd->add_option("--data", flags.data_path,
                  "Dataset directory (defaults to the output directory)");
  cmd->add_option("--seeds,--seed", flags.seeds,
                  "Training seed or comma-separated list");
  cmd->add_option("--mechanism", flags.mechanism,
                  "g-cnn | r-cnn | g-mlp | r-mlp | linear | vcg | first-price");
  cmd->add_option("--threads", flags.threads,
                  "Worker threads (default 1; env GROVES_FORGE_THREADS)");
  cmd->add_option("--count-train", flags.count_train, "Training auctions");
  cmd->add_option("--count-test", flags.count_test, "Test auctions");
  cmd->add_option("--iterations", flags.iterations, "Training iterations");
  cmd->add_option("--set", flags.sets, "Extra key=value override (repeatable)")
      ->type_name("KEY=VALUE");
  cmd->add_flag("--force", flags.force, "Overwrite existing outputs");
}

RunConfig resolve_flags(const CommonFlags& flags) {
  std::map<std::string, std::string> overrides;
  for (const std::string& entry : flags.sets) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set expects key=value, got '" + entry + "'");
    overrides[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  if (!flags.out_dir.empty()) overrides["out_dir"] = flags.out_dir;
  if (!flags.data_path.empty()) overrides["data_path"] = flags.data_path;
  if (!flags.seeds.empty()) overrides["seeds"] = flags.seeds;
  if (!flags.mechanism.empty()) overrides["mechanism"] = flags.mechanism;
  if (flags.count_train >= 0)
    overrides["count_train"] = std::to_string(flags.count_train);
  if (flags.count_test >= 0)
    overrides["count_test"] = std::to_string(flags.count_test);
  if (flags.iterations >= 0)
    overrides["iterations"] = std::to_string(flags.iterations);
  if (flags.force) overrides["force"] = "true";

  if (flags.threads >= 0) {
    overrides["threads"] = std::to_string(flags.threads);
  } else if (const char* env = std::getenv("GROVES_FORGE_THREADS")) {
    overrides["threads"] = env;
  }
  return resolve_config(flags.preset, flags.config_path, overrides);
}

std::string data_dir(const RunConfig& config) {
  return config.data_path.empty() ? config.out_dir : config.data_path;
}

void write_resolved(const RunConfig& config) {
  fs::create_directories(config.out_dir);
  std::ofstream out(fs::path(config.out_dir) / "resolved.cfg",
                    std::ios::binary);
  out << config.resolved_text();
  if (!out) throw std::runtime_error("cannot write resolved.cfg");
}

std::string dataset_file(const std::string& dir, const std::string& stem) {
  const fs::path plain = fs::path(dir) / (stem + ".jsonl");
  const fs::path gz = fs::path(dir) / (stem + ".jsonl.gz");
  if (fs::exists(plain)) return plain.string();
  if (fs::exists(gz)) return gz.string();
  throw std::runtime_error("no " + stem + ".jsonl(.gz) in " + dir +
                           "; run gen-data first");
}

AuctionDataset load_matching_dataset(const RunConfig& config,
                                     const std::string& stem,
                                     const DatasetSpec& expected,
                                     std::int64_t expected_count) {
  const std::string path = dataset_file(data_dir(config), stem);
  AuctionDataset dataset = load_dataset(path);
  if (!(dataset.spec == expected))
    throw std::runtime_error(path +
                             ": dataset settings differ from this config; "
                             "regenerate with gen-data or fix the config");
  if (static_cast<std::int64_t>(dataset.instances.size()) != expected_count)
    throw std::runtime_error(
        path + ": holds " + std::to_string(dataset.instances.size()) +
        " auctions but the config asks for " + std::to_string(expected_count));
  return dataset;
}

std::string seed_dir(const RunConfig& config, std::uint64_t seed) {
  return (fs::path(config.out_dir) / ("seed_" + std::to_string(seed)))
      .string();
}

struct TrainedSpec {
  MechanismKind kind;
  Backbone backbone;
};

std::optional<TrainedSpec> trained_spec(MechanismSelect m) {
  switch (m) {
    case MechanismSelect::GCnn:
      return TrainedSpec{MechanismKind::GrovesDirect,
                         Backbone::CounterfactualCnn};
    case MechanismSelect::RCnn:
      return TrainedSpec{MechanismKind::Redistribution,
                         Backbone::CounterfactualCnn};
    case MechanismSelect::GMlp:
      return TrainedSpec{MechanismKind::GrovesDirect, Backbone::FlatMlp};
    case MechanismSelect::RMlp:
      return TrainedSpec{MechanismKind::Redistribution, Backbone::FlatMlp};
    default:
      return std::nullopt;
  }
}

std::string format_g(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  return buffer;
}

int cmd_gen_data(const RunConfig& config) {
  write_resolved(config);
  const std::string dir = data_dir(config);
  fs::create_directories(dir);
  const fs::path train_path = fs::path(dir) / "train.jsonl";
  const fs::path test_path = fs::path(dir) / "test.jsonl";
  for (const fs::path& path : {train_path, test_path})
    if (fs::exists(path) && !config.force)
      throw std::runtime_error(path.string() +
                               " exists; pass --force to overwrite");

  const AuctionDataset train_set =
      generate_dataset(config.train_spec(), config.count_train, config.threads);
  save_dataset(train_set, train_path.string());
  std::cout << "wrote " << train_path.string() << " (" << config.count_train
            << " auctions, fingerprint "
            << dataset_fingerprint(config.train_spec(), config.count_train)
            << ")\n";

  const AuctionDataset test_set =
      generate_dataset(config.test_spec(), config.count_test, config.threads);
  save_dataset(test_set, test_path.string());
  std::cout << "wrote " << test_path.string() << " (" << config.count_test
            << " auctions, fingerprint "
            << dataset_fingerprint(config.test_spec(), config.count_test)
            << ")\n";
  return 0;
}

int cmd_train(const RunConfig& config) {
  write_resolved(config);
  const AuctionDataset train_set = load_matching_dataset(
      config, "train", config.train_spec(), config.count_train);
  const std::string fingerprint =
      dataset_fingerprint(train_set.spec,
                          static_cast<std::int64_t>(train_set.instances.size()));

  for (std::uint64_t seed : config.seeds) {
    const std::string dir = seed_dir(config, seed);
    fs::create_directories(dir);
    const std::string checkpoint_path =
        (fs::path(dir) / "checkpoint.json").string();

    if (config.mechanism == MechanismSelect::Linear) {
      const LinearRedistributionRule rule =
          fit_linear_redistribution(train_set, config.n_train.at(0));
      save_linear_checkpoint(rule, fingerprint, checkpoint_path);
      std::cout << "seed " << seed << ": fitted linear rebate, wrote "
                << checkpoint_path << "\n";
      continue;
    }
    const std::optional<TrainedSpec> spec = trained_spec(config.mechanism);
    if (!spec)
      throw std::runtime_error(mechanism_select_name(config.mechanism) +
                               " has no parameters to train");

    TrainConfig train_config = config.train;
    train_config.seed = seed;
    train_config.threads = config.threads;

    std::ofstream metrics(fs::path(dir) / "metrics.csv", std::ios::binary);
    metrics << "iteration,loss,budget_reduction_pct,deficit_fraction,"
               "ir_violation_fraction\n";
    TrainHooks hooks;
    hooks.on_metrics = [&](const TrainMetricsRow& row) {
      metrics << row.iteration << ',' << format_g(row.loss) << ','
              << format_g(row.budget_reduction) << ','
              << format_g(row.deficit_fraction) << ','
              << format_g(row.ir_violation_fraction) << '\n';
      metrics.flush();
      std::cout << "seed " << seed << " iter " << row.iteration << ": loss "
                << format_g(row.loss) << ", holdout reduction "
                << format_g(row.budget_reduction) << "%, deficits "
                << format_g(row.deficit_fraction * 100.0) << "%, IR viol "
                << format_g(row.ir_violation_fraction * 100.0) << "%\n";
    };
    hooks.on_checkpoint = [&](const LearnedMechanism& mech,
                              const AdamState& adam, std::int64_t) {
      save_checkpoint(mech, &adam, checkpoint_path);
    };

    const LearnedMechanism mech =
        train(train_config, train_set, spec->kind, spec->backbone, hooks);
    save_checkpoint(mech, nullptr, checkpoint_path);
    std::cout << "seed " << seed << ": trained " << mech.name() << " for "
              << mech.iterations_completed << " iterations, wrote "
              << checkpoint_path << "\n";
  }
  return 0;
}

// Loads the rule a config points at: an analytic baseline, or the checkpoint
// trained under the given seed.
std::unique_ptr<PaymentRule> rule_for(const RunConfig& config,
                                      std::uint64_t seed,
                                      std::string* fingerprint) {
  if (config.mechanism == MechanismSelect::Vcg)
    return std::make_unique<VcgRule>();
  if (config.mechanism == MechanismSelect::FirstPrice)
    return std::make_unique<FirstPriceRule>();
  const std::string path =
      (fs::path(seed_dir(config, seed)) / "checkpoint.json").string();
  LoadedCheckpoint loaded = load_checkpoint(path);
  if (loaded.mechanism != mechanism_select_name(config.mechanism))
    throw std::runtime_error(path + ": holds a " + loaded.mechanism +
                             " mechanism but the config selects " +
                             mechanism_select_name(config.mechanism));
  if (fingerprint) *fingerprint = loaded.dataset_fingerprint;
  return std::move(loaded.rule);
}

bool uses_checkpoints(MechanismSelect m) {
  return m != MechanismSelect::Vcg && m != MechanismSelect::FirstPrice;
}

void warn_fingerprint(const RunConfig& config, const std::string& fingerprint) {
  if (fingerprint.empty()) return;
  const std::string expected =
      dataset_fingerprint(config.train_spec(), config.count_train);
  if (fingerprint != expected)
    std::cout << "note: checkpoint was trained on a different dataset "
                 "(fingerprint "
              << fingerprint << ", this config generates " << expected
              << "); fine for cross-n evaluation\n";
}

int cmd_eval(const RunConfig& config) {
  write_resolved(config);
  const AuctionDataset test_set = load_matching_dataset(
      config, "test", config.test_spec(), config.count_test);

  std::vector<EvalReport> reports;
  if (uses_checkpoints(config.mechanism)) {
    for (std::uint64_t seed : config.seeds) {
      std::string fingerprint;
      const std::unique_ptr<PaymentRule> rule =
          rule_for(config, seed, &fingerprint);
      warn_fingerprint(config, fingerprint);
      EvalReport report = evaluate(*rule, test_set, config.threads);
      emit_report(report,
                  (fs::path(seed_dir(config, seed)) / "report.csv").string());
      std::cout << "seed " << seed << " " << report.mechanism
                << ": mean reduction "
                << format_g(report.mean_budget_reduction_pct) << "%, deficits "
                << format_g(report.deficit_fraction * 100.0) << "%, IR viol "
                << format_g(report.ir_violation_fraction * 100.0) << "%\n";
      reports.push_back(std::move(report));
    }
  } else {
    const std::unique_ptr<PaymentRule> rule = rule_for(config, 0, nullptr);
    EvalReport report = evaluate(*rule, test_set, config.threads);
    emit_report(report, (fs::path(config.out_dir) / "report.csv").string());
    std::cout << report.mechanism << ": mean reduction "
              << format_g(report.mean_budget_reduction_pct) << "%, deficits "
              << format_g(report.deficit_fraction * 100.0) << "%, IR viol "
              << format_g(report.ir_violation_fraction * 100.0) << "%\n";
    reports.push_back(std::move(report));
  }

  // Seed-to-seed spread, matching how multi-seed results are usually quoted.
  auto mean_stddev = [&](auto&& field) {
    double mean = 0.0;
    for (const EvalReport& r : reports) mean += field(r);
    mean /= reports.size();
    double var = 0.0;
    for (const EvalReport& r : reports) {
      const double d = field(r) - mean;
      var += d * d;
    }
    const double stddev =
        reports.size() > 1 ? std::sqrt(var / (reports.size() - 1)) : 0.0;
    return std::pair<double, double>(mean, stddev);
  };
  const auto reduction = mean_stddev(
      [](const EvalReport& r) { return r.mean_budget_reduction_pct; });
  const auto deficit =
      mean_stddev([](const EvalReport& r) { return r.deficit_fraction; });
  const auto ir = mean_stddev(
      [](const EvalReport& r) { return r.ir_violation_fraction; });

  std::ofstream summary(fs::path(config.out_dir) / "eval_summary.csv",
                        std::ios::binary);
  summary << "mechanism,seeds,mean_budget_reduction_pct_mean,"
             "mean_budget_reduction_pct_stddev,deficit_fraction_mean,"
             "deficit_fraction_stddev,ir_violation_fraction_mean,"
             "ir_violation_fraction_stddev\n";
  summary << reports.front().mechanism << ',' << reports.size() << ','
          << format_g(reduction.first) << ',' << format_g(reduction.second)
          << ',' << format_g(deficit.first) << ',' << format_g(deficit.second)
          << ',' << format_g(ir.first) << ',' << format_g(ir.second) << '\n';
  if (reports.size() > 1)
    std::cout << "across " << reports.size() << " seeds: reduction "
              << format_g(reduction.first) << "% +- "
              << format_g(reduction.second) << "\n";
  return 0;
}

int cmd_audit(const RunConfig& config) {
  write_resolved(config);

  AuctionDataset test_set;
  try {
    test_set = load_matching_dataset(config, "test", config.test_spec(),
                                     config.count_test);
  } catch (const std::exception&) {
    std::cout << "no stored test set; sampling " << config.count_test
              << " auctions in memory\n";
    test_set =
        generate_dataset(config.test_spec(), config.count_test, config.threads);
  }

  std::ofstream audit_csv(fs::path(config.out_dir) / "audit.csv",
                          std::ios::binary);
  audit_csv << "seed,check,value,threshold,pass\n";

  const std::vector<std::uint64_t> seeds =
      uses_checkpoints(config.mechanism) ? config.seeds
                                         : std::vector<std::uint64_t>{0};
  bool all_pass = true;
  for (std::uint64_t seed : seeds) {
    std::string fingerprint;
    const std::unique_ptr<PaymentRule> rule =
        rule_for(config, seed, &fingerprint);
    warn_fingerprint(config, fingerprint);

    auto record = [&](const std::string& check, double value,
                      double threshold, bool pass) {
      audit_csv << seed << ',' << check << ',' << format_g(value) << ','
                << format_g(threshold) << ',' << (pass ? "true" : "false")
                << '\n';
      std::cout << rule->name() << " " << check << ": " << format_g(value)
                << (pass ? " (pass)" : " (FAIL)") << "\n";
      if (!pass) all_pass = false;
    };

    // Allocator vs. the exhaustive reference on the instances under audit.
    const int oracle_count = static_cast<int>(std::min<std::int64_t>(
        config.audit_instances,
        static_cast<std::int64_t>(test_set.instances.size())));
    double max_gap = 0.0;
    bool oracle_ran = true;
    try {
      for (int l = 0; l < oracle_count; ++l) {
        const AuctionInstance& instance = test_set.instances[l];
        const double fast = allocate(instance).welfare();
        const double exact = brute_force_allocate(instance).welfare();
        max_gap = std::max(max_gap, std::abs(fast - exact));
      }
    } catch (const std::exception& e) {
      oracle_ran = false;
      std::cout << "oracle check skipped: " << e.what() << "\n";
    }
    if (oracle_ran) record("oracle_welfare_gap", max_gap, 1e-9,
                           max_gap <= 1e-9);

    SplitMix64 audit_rng(SplitMix64::mix(config.data_seed, 0x61756474ULL));
    double max_gain = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < config.audit_instances; ++l) {
      const AuctionInstance& instance =
          test_set.instances[l % test_set.instances.size()];
      const int players =
          std::min(config.audit_players, instance.num_players());
      for (int p = 0; p < players; ++p)
        max_gain = std::max(
            max_gain, truthfulness_audit(*rule, instance, p,
                                         config.audit_misreports,
                                         config.distribution, audit_rng));
    }
    record("truthfulness_max_gain", max_gain, 1e-9, max_gain <= 1e-9);

    const EvalReport report = evaluate(*rule, test_set, config.threads);
    const bool claims_ir = config.mechanism != MechanismSelect::GCnn &&
                           config.mechanism != MechanismSelect::GMlp;
    if (claims_ir) {
      record("ir_violation_fraction", report.ir_violation_fraction, 0.0,
             report.ir_violation_fraction == 0.0);
    } else {
      std::cout << rule->name() << " ir_violation_fraction: "
                << format_g(report.ir_violation_fraction)
                << " (reported; no guarantee for this mechanism)\n";
      audit_csv << seed << ",ir_violation_fraction,"
                << format_g(report.ir_violation_fraction) << ",,true\n";
    }
    const bool claims_wbb = config.mechanism == MechanismSelect::Vcg ||
                            config.mechanism == MechanismSelect::FirstPrice;
    if (claims_wbb) {
      record("deficit_fraction", report.deficit_fraction, 0.0,
             report.deficit_fraction == 0.0);
    } else {
      std::cout << rule->name() << " deficit_fraction: "
                << format_g(report.deficit_fraction)
                << " (reported; no guarantee for this mechanism)\n";
      audit_csv << seed << ",deficit_fraction,"
                << format_g(report.deficit_fraction) << ",,true\n";
    }
  }
  std::cout << (all_pass ? "audit passed" : "audit FAILED") << "\n";
  return all_pass ? 0 : kExitCheckFailed;
}

int cmd_oracle_check(const RunConfig& config) {
  write_resolved(config);
  const std::int64_t count = std::max(1, config.audit_instances);
  const AuctionDataset sample =
      generate_dataset(config.train_spec(), count, config.threads);
  double max_gap = 0.0;
  for (const AuctionInstance& instance : sample.instances) {
    const Allocation fast = allocate(instance);
    const Allocation exact = brute_force_allocate(instance);
    social_welfare(instance, fast);
    max_gap = std::max(max_gap, std::abs(fast.welfare() - exact.welfare()));
  }
  std::cout << "checked " << count << " instances, max welfare gap "
            << format_g(max_gap) << "\n";
  if (max_gap > 1e-9) {
    std::cout << "oracle check FAILED\n";
    return kExitCheckFailed;
  }
  std::cout << "oracle check passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "groves-forge: learned Groves-family payment rules for "
      "restricted-preference auctions"};
  app.require_subcommand(1);

  CommonFlags flags;
  CLI::App* gen = app.add_subcommand(
      "gen-data", "Sample train/test auction datasets to JSONL");
  CLI::App* train_cmd = app.add_subcommand(
      "train", "Train a payment rule; one subdirectory per seed");
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Evaluate checkpoints or analytic baselines on the test set");
  CLI::App* audit_cmd = app.add_subcommand(
      "audit", "Truthfulness / IR / budget audit; nonzero exit on failure");
  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle-check", "Compare the allocator against exhaustive search");
  for (CLI::App* cmd : {gen, train_cmd, eval_cmd, audit_cmd, oracle_cmd})
    add_common_flags(cmd, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig config = resolve_flags(flags);
    if (gen->parsed()) return cmd_gen_data(config);
    if (train_cmd->parsed()) return cmd_train(config);
    if (eval_cmd->parsed()) return cmd_eval(config);
    if (audit_cmd->parsed()) return cmd_audit(config);
    if (oracle_cmd->parsed()) return cmd_oracle_check(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
