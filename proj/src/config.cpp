#include "groves/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#include "textio.hpp"

namespace groves {
namespace {

using detail::format_double17;

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw std::runtime_error("config key '" + key + "': cannot parse '" + value +
                           "' as " + expected);
}

std::string trim(const std::string& text) {
  std::size_t begin = text.find_first_not_of(" \t");
  std::size_t end = text.find_last_not_of(" \t");
  if (begin == std::string::npos) return "";
  return text.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    bad_value(key, value, "a number");
  }
}

std::int64_t parse_i64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long parsed = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    bad_value(key, value, "an integer");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  const std::int64_t wide = parse_i64(key, value);
  if (wide < INT32_MIN || wide > INT32_MAX)
    bad_value(key, value, "a 32-bit integer");
  return static_cast<int>(wide);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long parsed = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    bad_value(key, value, "an unsigned integer");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> parts;
  std::size_t begin = 0;
  while (begin <= value.size()) {
    const std::size_t comma = value.find(',', begin);
    const std::size_t end = comma == std::string::npos ? value.size() : comma;
    const std::string part = trim(value.substr(begin, end - begin));
    if (!part.empty()) parts.push_back(part);
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return parts;
}

std::vector<int> parse_int_list(const std::string& key,
                                const std::string& value) {
  std::vector<int> out;
  for (const std::string& part : split_commas(value))
    out.push_back(parse_int(key, part));
  return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& key,
                                          const std::string& value) {
  std::vector<std::uint64_t> out;
  for (const std::string& part : split_commas(value))
    out.push_back(parse_u64(key, part));
  return out;
}

DistributionKind parse_distribution_kind(const std::string& value) {
  if (value == "clipped_gaussian") return DistributionKind::ClippedGaussian;
  if (value == "hierarchical_gaussian")
    return DistributionKind::HierarchicalGaussian;
  if (value == "uniform") return DistributionKind::Uniform;
  throw std::runtime_error(
      "config key 'distribution': unknown kind '" + value +
      "' (expected clipped_gaussian, hierarchical_gaussian or uniform)");
}

template <typename T>
std::string join_list(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

// Applies one layer of key=value settings on top of `config`. Unknown keys
// are errors so typos never silently fall back to defaults.
void apply_layer(const std::map<std::string, std::string>& layer,
                 RunConfig& config) {
  if (layer.count("language") || layer.count("language_size")) {
    const std::string name = layer.count("language")
                                 ? layer.at("language")
                                 : config.language.name();
    const int size = layer.count("language_size")
                         ? parse_int("language_size", layer.at("language_size"))
                         : config.language.size;
    config.language = parse_language(name, size);
  }
  if (layer.count("distribution"))
    config.distribution.kind =
        parse_distribution_kind(layer.at("distribution"));

  for (const auto& [key, value] : layer) {
    if (key == "language" || key == "language_size" || key == "distribution")
      continue;
    if (key == "dist_a") config.distribution.a = parse_double(key, value);
    else if (key == "dist_b") config.distribution.b = parse_double(key, value);
    else if (key == "dist_c") config.distribution.c = parse_double(key, value);
    else if (key == "dist_d") config.distribution.d = parse_double(key, value);
    else if (key == "n_train") config.n_train = parse_int_list(key, value);
    else if (key == "n_test") config.n_test = parse_int_list(key, value);
    else if (key == "count_train") config.count_train = parse_i64(key, value);
    else if (key == "count_test") config.count_test = parse_i64(key, value);
    else if (key == "data_seed") config.data_seed = parse_u64(key, value);
    else if (key == "seeds") config.seeds = parse_u64_list(key, value);
    else if (key == "mechanism") config.mechanism = parse_mechanism_select(value);
    else if (key == "lr") config.train.lr = parse_double(key, value);
    else if (key == "batch_size") config.train.batch_size = parse_int(key, value);
    else if (key == "iterations") config.train.iterations = parse_i64(key, value);
    else if (key == "lambda_b") config.train.lambda_b = parse_double(key, value);
    else if (key == "lambda_r") config.train.lambda_r = parse_double(key, value);
    else if (key == "eval_every") config.train.eval_every = parse_i64(key, value);
    else if (key == "checkpoint_every")
      config.train.checkpoint_every = parse_i64(key, value);
    else if (key == "out_dir") config.out_dir = value;
    else if (key == "data_path") config.data_path = value;
    else if (key == "threads") config.threads = parse_int(key, value);
    else if (key == "force") config.force = parse_bool(key, value);
    else if (key == "audit_instances")
      config.audit_instances = parse_int(key, value);
    else if (key == "audit_players")
      config.audit_players = parse_int(key, value);
    else if (key == "audit_misreports")
      config.audit_misreports = parse_int(key, value);
    else
      throw std::runtime_error("unknown config key: " + key);
  }
}

}  // namespace

std::string mechanism_select_name(MechanismSelect m) {
  switch (m) {
    case MechanismSelect::GCnn: return "g-cnn";
    case MechanismSelect::RCnn: return "r-cnn";
    case MechanismSelect::GMlp: return "g-mlp";
    case MechanismSelect::RMlp: return "r-mlp";
    case MechanismSelect::Linear: return "linear";
    case MechanismSelect::Vcg: return "vcg";
    case MechanismSelect::FirstPrice: return "first-price";
  }
  return "unknown";
}

MechanismSelect parse_mechanism_select(const std::string& text) {
  if (text == "g-cnn") return MechanismSelect::GCnn;
  if (text == "r-cnn") return MechanismSelect::RCnn;
  if (text == "g-mlp") return MechanismSelect::GMlp;
  if (text == "r-mlp") return MechanismSelect::RMlp;
  if (text == "linear") return MechanismSelect::Linear;
  if (text == "vcg") return MechanismSelect::Vcg;
  if (text == "first-price") return MechanismSelect::FirstPrice;
  throw std::runtime_error(
      "unknown mechanism '" + text +
      "' (expected g-cnn, r-cnn, g-mlp, r-mlp, linear, vcg or first-price)");
}

std::vector<int> RunConfig::effective_n_test() const {
  return n_test.empty() ? n_train : n_test;
}

DatasetSpec RunConfig::train_spec() const {
  return DatasetSpec{language, distribution, n_train, data_seed};
}

DatasetSpec RunConfig::test_spec() const {
  return DatasetSpec{language, distribution, effective_n_test(),
                     SplitMix64::mix(data_seed, 0x74657374ULL)};
}

std::string RunConfig::resolved_text() const {
  std::string out;
  auto line = [&](const std::string& key, const std::string& value) {
    out += key + "=" + value + "\n";
  };
  line("language", language.name());
  line("language_size", std::to_string(language.size));
  line("distribution", distribution.name());
  line("dist_a", format_double17(distribution.a));
  line("dist_b", format_double17(distribution.b));
  line("dist_c", format_double17(distribution.c));
  line("dist_d", format_double17(distribution.d));
  line("n_train", join_list(n_train));
  line("n_test", join_list(n_test));
  line("count_train", std::to_string(count_train));
  line("count_test", std::to_string(count_test));
  line("data_seed", std::to_string(data_seed));
  line("seeds", join_list(seeds));
  line("mechanism", mechanism_select_name(mechanism));
  line("lr", format_double17(train.lr));
  line("batch_size", std::to_string(train.batch_size));
  line("iterations", std::to_string(train.iterations));
  line("lambda_b", format_double17(train.lambda_b));
  line("lambda_r", format_double17(train.lambda_r));
  line("eval_every", std::to_string(train.eval_every));
  line("checkpoint_every", std::to_string(train.checkpoint_every));
  line("out_dir", out_dir);
  line("data_path", data_path);
  line("threads", std::to_string(threads));
  line("force", force ? "true" : "false");
  line("audit_instances", std::to_string(audit_instances));
  line("audit_players", std::to_string(audit_players));
  line("audit_misreports", std::to_string(audit_misreports));
  return out;
}

void RunConfig::validate() const {
  train_spec().validate();
  test_spec().validate();
  if (count_train < 1) throw std::runtime_error("count_train must be >= 1");
  if (count_test < 1) throw std::runtime_error("count_test must be >= 1");
  if (seeds.empty()) throw std::runtime_error("seeds must not be empty");
  if (train.lr <= 0.0) throw std::runtime_error("lr must be positive");
  if (train.batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
  if (train.iterations < 0)
    throw std::runtime_error("iterations must be >= 0");
  if (train.lambda_b < 0.0 || train.lambda_r < 0.0)
    throw std::runtime_error("penalty weights must be >= 0");
  if (train.eval_every < 0 || train.checkpoint_every < 0)
    throw std::runtime_error("eval_every and checkpoint_every must be >= 0");
  if (threads < 1) throw std::runtime_error("threads must be >= 1");
  if (audit_instances < 0 || audit_players < 0 || audit_misreports < 0)
    throw std::runtime_error("audit settings must be >= 0");
  const bool fixed_n = mechanism == MechanismSelect::GMlp ||
                       mechanism == MechanismSelect::RMlp ||
                       mechanism == MechanismSelect::Linear;
  if (fixed_n) {
    if (n_train.size() != 1)
      throw std::runtime_error(
          mechanism_select_name(mechanism) +
          " needs a single training bidder count; set n_train to one value");
    if (effective_n_test() != n_train)
      throw std::runtime_error(
          mechanism_select_name(mechanism) +
          " cannot generalize across bidder counts; n_test must equal n_train");
  }
}

std::vector<std::string> preset_names() {
  return {"paper-dmu15", "paper-unit8", "paper-hier8", "desk-n3",
          "desk-var-n"};
}

std::map<std::string, std::string> preset_values(const std::string& name) {
  const std::map<std::string, std::string> full_scale = {
      {"distribution", "hierarchical_gaussian"},
      {"dist_a", "10"},
      {"dist_b", "1"},
      {"dist_c", "2"},
      {"dist_d", "0.5"},
      {"n_train", "10"},
      {"count_train", "100000"},
      {"count_test", "2000"},
      {"iterations", "250000"},
  };
  const std::map<std::string, std::string> desk = {
      {"language", "multi_unit_dmu"},
      {"language_size", "2"},
      {"distribution", "uniform"},
      {"dist_a", "0"},
      {"dist_b", "1"},
      {"n_train", "3"},
      {"count_train", "10000"},
      {"count_test", "2000"},
      {"iterations", "20000"},
      {"lr", "1e-4"},
  };

  std::map<std::string, std::string> values;
  if (name == "paper-dmu15") {
    values = full_scale;
    values["language"] = "multi_unit_dmu";
    values["language_size"] = "15";
  } else if (name == "paper-unit8") {
    values = full_scale;
    values["language"] = "unit_demand";
    values["language_size"] = "8";
  } else if (name == "paper-hier8") {
    values = full_scale;
    values["language"] = "hierarchical_bundles";
    values["language_size"] = "8";
  } else if (name == "desk-n3") {
    values = desk;
  } else if (name == "desk-var-n") {
    values = desk;
    values["n_train"] = "3,5";
    values["n_test"] = "4";
  } else {
    std::string known;
    for (const std::string& p : preset_names()) {
      if (!known.empty()) known += ", ";
      known += p;
    }
    throw std::runtime_error("unknown preset '" + name + "' (available: " +
                             known + ")");
  }
  return values;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  detail::LineReader reader(path);
  std::map<std::string, std::string> values;
  std::string line;
  while (reader.next_line(line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ": line " +
                               std::to_string(reader.line_number()) +
                               ": expected key=value");
    const std::string key = trim(stripped.substr(0, eq));
    if (key.empty())
      throw std::runtime_error(path + ": line " +
                               std::to_string(reader.line_number()) +
                               ": empty key");
    values[key] = trim(stripped.substr(eq + 1));
  }
  return values;
}

RunConfig resolve_config(const std::string& preset,
                         const std::string& config_path,
                         const std::map<std::string, std::string>& overrides) {
  RunConfig config;
  if (!preset.empty()) apply_layer(preset_values(preset), config);
  if (!config_path.empty()) apply_layer(parse_config_file(config_path), config);
  apply_layer(overrides, config);
  config.train.threads = config.threads;
  config.validate();
  return config;
}

}  // namespace groves
