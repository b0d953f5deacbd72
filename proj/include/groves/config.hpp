#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "groves/mechanisms.hpp"
#include "groves/simulate.hpp"

namespace groves {

enum class MechanismSelect { GCnn, RCnn, GMlp, RMlp, Linear, Vcg, FirstPrice };

std::string mechanism_select_name(MechanismSelect m);
MechanismSelect parse_mechanism_select(const std::string& text);

// One fully resolved run description shared by every subcommand. Values are
// layered: built-in defaults, then a preset, then a key=value config file,
// then command-line flags.
struct RunConfig {
  BiddingLanguage language = BiddingLanguage::multi_unit_dmu(2);
  ValueDistribution distribution = ValueDistribution::uniform(0.0, 1.0);
  std::vector<int> n_train{3};
  std::vector<int> n_test;  // empty: same as n_train
  std::int64_t count_train = 100000;
  std::int64_t count_test = 2000;
  std::uint64_t data_seed = 1;
  std::vector<std::uint64_t> seeds{1};  // training seeds, one run per seed
  TrainConfig train;
  MechanismSelect mechanism = MechanismSelect::RCnn;
  std::string out_dir = "out";
  std::string data_path;  // dataset directory (train.jsonl / test.jsonl)
  int threads = 1;
  bool force = false;
  // Audit knobs.
  int audit_instances = 100;
  int audit_players = 3;
  int audit_misreports = 50;

  std::vector<int> effective_n_test() const;
  DatasetSpec train_spec() const;
  DatasetSpec test_spec() const;  // independent stream derived from data_seed
  // Deterministic key=value dump of every resolved field.
  std::string resolved_text() const;
  void validate() const;
};

// Named presets: the three full-scale experiment settings plus desk-scale
// runs that finish on a laptop.
std::vector<std::string> preset_names();
std::map<std::string, std::string> preset_values(const std::string& name);

std::map<std::string, std::string> parse_config_file(const std::string& path);

// defaults <- preset <- config file <- overrides; unknown keys are errors.
RunConfig resolve_config(const std::string& preset,
                         const std::string& config_path,
                         const std::map<std::string, std::string>& overrides);

}  // namespace groves
