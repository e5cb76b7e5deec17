// SPDX-License-Identifier: Apache-2.0
#include "asn/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "asn/errors.hpp"

namespace asn {
namespace {

template <typename Enum, std::size_t N>
using NameTable = std::array<std::pair<Enum, const char*>, N>;

constexpr NameTable<Backbone, 2> kBackbones{{{Backbone::small, "small"}, {Backbone::full, "full"}}};
constexpr NameTable<LatentMode, 2> kLatents{{{LatentMode::kl, "kl"}, {LatentMode::fc, "fc"}}};
constexpr NameTable<MetricVariant, 4> kVariants{{{MetricVariant::lifted_asn, "lifted_asn"},
                                                 {MetricVariant::lifted, "lifted"},
                                                 {MetricVariant::triplet, "triplet"},
                                                 {MetricVariant::npair, "npair"}}};
constexpr NameTable<Similarity, 2> kSimilarities{
    {{Similarity::dot, "dot"}, {Similarity::neg_sq_euclidean, "neg_sq_euclidean"}}};
constexpr NameTable<RewardKind, 3> kRewards{{{RewardKind::embedding, "embedding"},
                                             {RewardKind::ground_truth, "ground_truth"},
                                             {RewardKind::zero, "zero"}}};

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError(std::string(key), "invalid value '" + std::string(value) + "' for '" +
                                          std::string(key) + "' (expected " + std::string(expected) + ")");
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T out{};
  auto trimmed = boost::algorithm::trim_copy(std::string(text));
  auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), out);
  if (ec != std::errc() || ptr != trimmed.data() + trimmed.size() || trimmed.empty()) {
    bad_value(key, text, "a number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  auto t = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(std::string(text)));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  bad_value(key, text, "true|false");
}

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view key, std::string_view text, const NameTable<Enum, N>& table) {
  auto t = boost::algorithm::trim_copy(std::string(text));
  std::string expected;
  for (const auto& [value, name] : table) {
    if (t == name) return value;
    expected += expected.empty() ? name : std::string("|") + name;
  }
  bad_value(key, text, expected);
}

template <typename Enum, std::size_t N>
std::string enum_name(Enum v, const NameTable<Enum, N>& table) {
  for (const auto& [value, name] : table) {
    if (value == v) return name;
  }
  return "?";
}

std::vector<std::string> parse_list(std::string_view text) {
  std::vector<std::string> parts;
  std::string s(text);
  boost::algorithm::split(parts, s, boost::is_any_of(","));
  std::vector<std::string> out;
  for (auto& p : parts) {
    boost::algorithm::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename Access>
Field field(std::string key, Access access) {
  using T = std::remove_reference_t<decltype(access(std::declval<ExperimentConfig&>()))>;
  Field f;
  f.key = key;
  f.set = [access, key](ExperimentConfig& c, std::string_view v) {
    T& slot = access(c);
    if constexpr (std::is_same_v<T, bool>) {
      slot = parse_bool(key, v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      slot = boost::algorithm::trim_copy(std::string(v));
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      slot = parse_list(v);
    } else if constexpr (std::is_same_v<T, Backbone>) {
      slot = parse_enum(key, v, kBackbones);
    } else if constexpr (std::is_same_v<T, LatentMode>) {
      slot = parse_enum(key, v, kLatents);
    } else if constexpr (std::is_same_v<T, MetricVariant>) {
      slot = parse_enum(key, v, kVariants);
    } else if constexpr (std::is_same_v<T, Similarity>) {
      slot = parse_enum(key, v, kSimilarities);
    } else if constexpr (std::is_same_v<T, RewardKind>) {
      slot = parse_enum(key, v, kRewards);
    } else {
      slot = parse_number<T>(key, v);
    }
  };
  f.get = [access](const ExperimentConfig& c) -> std::string {
    const T& slot = access(const_cast<ExperimentConfig&>(c));
    if constexpr (std::is_same_v<T, bool>) {
      return slot ? "true" : "false";
    } else if constexpr (std::is_same_v<T, std::string>) {
      return slot;
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      return boost::algorithm::join(slot, ",");
    } else if constexpr (std::is_enum_v<T>) {
      return to_string(slot);
    } else if constexpr (std::is_floating_point_v<T>) {
      return format_double(slot);
    } else {
      return std::to_string(slot);
    }
  };
  return f;
}

#define ASN_FIELD(key, member) field(key, [](ExperimentConfig& c) -> auto& { return c.member; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      ASN_FIELD("global.seed", seed),
      ASN_FIELD("global.output_dir", output_dir),
      ASN_FIELD("global.strict_determinism", strict_determinism),

      ASN_FIELD("dataio.root", dataio.root),
      ASN_FIELD("dataio.tasks", dataio.generator.tasks),
      ASN_FIELD("dataio.demos_per_task", dataio.generator.demos_per_task),
      ASN_FIELD("dataio.fraction_unsuccessful", dataio.generator.fraction_unsuccessful),
      ASN_FIELD("dataio.frames_per_demo", dataio.generator.frames_per_demo),
      ASN_FIELD("dataio.image_size", dataio.generator.image_size),
      ASN_FIELD("dataio.fps", dataio.generator.fps),
      ASN_FIELD("dataio.test_tasks", dataio.test_tasks),
      ASN_FIELD("dataio.validation_demos_per_task", dataio.validation_demos_per_task),
      ASN_FIELD("dataio.test_demos_per_task", dataio.test_demos_per_task),
      ASN_FIELD("dataio.augment", dataio.augment.enabled),
      ASN_FIELD("dataio.brightness_min", dataio.augment.brightness_min),
      ASN_FIELD("dataio.brightness_max", dataio.augment.brightness_max),
      ASN_FIELD("dataio.contrast_min", dataio.augment.contrast_min),
      ASN_FIELD("dataio.contrast_max", dataio.augment.contrast_max),
      ASN_FIELD("dataio.saturation_min", dataio.augment.saturation_min),
      ASN_FIELD("dataio.saturation_max", dataio.augment.saturation_max),
      ASN_FIELD("dataio.mirror_prob", dataio.augment.mirror_prob),
      ASN_FIELD("dataio.crop", dataio.augment.crop),
      ASN_FIELD("dataio.crop_min_area", dataio.augment.crop_min_area),
      ASN_FIELD("dataio.view_pairs", dataio.batch.view_pairs),
      ASN_FIELD("dataio.batch_frames", dataio.batch.frames),
      ASN_FIELD("dataio.negative_margin", dataio.batch.negative_margin),
      ASN_FIELD("dataio.num_domain_frames", dataio.skill.num_domain_frames),
      ASN_FIELD("dataio.stride", dataio.skill.stride),
      ASN_FIELD("dataio.skill_batch", dataio.skill_batch),

      ASN_FIELD("encoder.backbone", encoder.backbone),
      ASN_FIELD("encoder.embedding_dim", encoder.embedding_dim),
      ASN_FIELD("encoder.feature_channels", encoder.feature_channels),
      ASN_FIELD("encoder.input_size", encoder.input_size),
      ASN_FIELD("encoder.inception_blocks", encoder.inception_blocks),
      ASN_FIELD("encoder.l2_normalize", encoder.l2_normalize),
      ASN_FIELD("encoder.pretrained_path", encoder.pretrained_path),

      ASN_FIELD("discriminator.latent", discriminator.latent),
      ASN_FIELD("discriminator.latent_dim", discriminator.latent_dim),
      ASN_FIELD("discriminator.hidden", discriminator.hidden),
      ASN_FIELD("discriminator.dropout", discriminator.dropout),
      ASN_FIELD("discriminator.num_classes", discriminator.num_classes),

      ASN_FIELD("losses.alpha", losses.alpha),
      ASN_FIELD("losses.beta", losses.beta),
      ASN_FIELD("losses.lambda", losses.lambda_margin),
      ASN_FIELD("losses.xi_sim", losses.xi_sim),
      ASN_FIELD("losses.triplet_margin", losses.triplet_margin),
      ASN_FIELD("losses.variant", losses.variant),
      ASN_FIELD("losses.similarity", losses.similarity),
      ASN_FIELD("losses.encoder_entropy", losses.encoder_entropy),
      ASN_FIELD("losses.discriminator_entropy", losses.discriminator_entropy),

      ASN_FIELD("trainer.learning_rate", trainer.learning_rate),
      ASN_FIELD("trainer.steps", trainer.steps),
      ASN_FIELD("trainer.encoder_updates", trainer.encoder_updates),
      ASN_FIELD("trainer.discriminator_updates", trainer.discriminator_updates),
      ASN_FIELD("trainer.adversarial", trainer.adversarial),
      ASN_FIELD("trainer.success_only", trainer.success_only),
      ASN_FIELD("trainer.checkpoint_every", trainer.checkpoint_every),
      ASN_FIELD("trainer.eval_every", trainer.eval_every),

      ASN_FIELD("evaluation.tsne_perplexity", evaluation.tsne_perplexity),
      ASN_FIELD("evaluation.tsne_iterations", evaluation.tsne_iterations),

      ASN_FIELD("rl.reward", rl.reward),
      ASN_FIELD("rl.learning_rate", rl.learning_rate),
      ASN_FIELD("rl.minibatch", rl.minibatch),
      ASN_FIELD("rl.iterations", rl.iterations),
      ASN_FIELD("rl.episodes_per_iteration", rl.episodes_per_iteration),
      ASN_FIELD("rl.epochs", rl.epochs),
      ASN_FIELD("rl.clip", rl.clip),
      ASN_FIELD("rl.gae_lambda", rl.gae_lambda),
      ASN_FIELD("rl.discount", rl.discount),
      ASN_FIELD("rl.hidden", rl.hidden),
      ASN_FIELD("rl.init_log_std", rl.init_log_std),
      ASN_FIELD("rl.max_speed", rl.max_speed),
      ASN_FIELD("rl.terminate_threshold", rl.terminate_threshold),
      ASN_FIELD("rl.goal_threshold", rl.goal_threshold),
      ASN_FIELD("rl.xi_reward", rl.xi_reward),
      ASN_FIELD("rl.xi_reward_percentile", rl.xi_reward_percentile),
      ASN_FIELD("rl.bonus", rl.bonus),
      ASN_FIELD("rl.agent_view", rl.agent_view),
      ASN_FIELD("rl.demo_view", rl.demo_view),
  };
  return table;
}

#undef ASN_FIELD

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw UnknownKeyError(std::string(key));
}

void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw ConfigError(key, std::string(key) + ": " + what);
}

}  // namespace

std::string to_string(Backbone b) { return enum_name(b, kBackbones); }
std::string to_string(LatentMode m) { return enum_name(m, kLatents); }
std::string to_string(MetricVariant v) { return enum_name(v, kVariants); }
std::string to_string(Similarity s) { return enum_name(s, kSimilarities); }
std::string to_string(RewardKind r) { return enum_name(r, kRewards); }

void ExperimentConfig::validate() const {
  const auto& g = dataio.generator;
  require(g.demos_per_task >= 0, "dataio.demos_per_task", "must be >= 0");
  require(g.fraction_unsuccessful >= 0.0 && g.fraction_unsuccessful < 1.0,
          "dataio.fraction_unsuccessful", "must lie in [0, 1)");
  require(g.frames_per_demo >= 2, "dataio.frames_per_demo", "must be >= 2");
  require(g.image_size >= 8, "dataio.image_size", "must be >= 8");
  require(dataio.batch.view_pairs >= 1, "dataio.view_pairs", "must be >= 1");
  require(dataio.batch.frames >= 2 && dataio.batch.frames % (2 * dataio.batch.view_pairs) == 0,
          "dataio.batch_frames", "must be a positive multiple of 2 * view_pairs");
  require(dataio.batch.negative_margin >= 0, "dataio.negative_margin", "must be >= 0");
  require(dataio.skill.num_domain_frames >= 1, "dataio.num_domain_frames", "must be >= 1");
  require(dataio.skill.stride >= 1, "dataio.stride", "must be >= 1");
  require(dataio.skill_batch >= 1, "dataio.skill_batch", "must be >= 1");
  require(dataio.augment.mirror_prob >= 0.0 && dataio.augment.mirror_prob <= 1.0, "dataio.mirror_prob",
          "must lie in [0, 1]");
  require(dataio.augment.crop_min_area > 0.0 && dataio.augment.crop_min_area <= 1.0,
          "dataio.crop_min_area", "must lie in (0, 1]");
  require(dataio.augment.brightness_min <= dataio.augment.brightness_max, "dataio.brightness_min",
          "must not exceed brightness_max");
  require(dataio.augment.contrast_min <= dataio.augment.contrast_max, "dataio.contrast_min",
          "must not exceed contrast_max");
  require(dataio.augment.saturation_min <= dataio.augment.saturation_max, "dataio.saturation_min",
          "must not exceed saturation_max");

  require(encoder.embedding_dim >= 2, "encoder.embedding_dim", "must be >= 2");
  require(encoder.feature_channels >= 1, "encoder.feature_channels", "must be >= 1");
  require(encoder.input_size >= 16, "encoder.input_size", "must be >= 16");
  require(encoder.inception_blocks >= 1 && encoder.inception_blocks <= 3, "encoder.inception_blocks",
          "must lie in [1, 3]");

  require(discriminator.latent_dim >= 1, "discriminator.latent_dim", "must be >= 1");
  require(discriminator.hidden >= 1, "discriminator.hidden", "must be >= 1");
  require(discriminator.dropout >= 0.0 && discriminator.dropout < 1.0, "discriminator.dropout",
          "must lie in [0, 1)");
  require(discriminator.num_classes >= 1, "discriminator.num_classes", "must be >= 1");

  require(losses.alpha >= 0.0, "losses.alpha", "must be >= 0");
  require(losses.beta >= 0.0, "losses.beta", "must be >= 0");
  require(losses.lambda_margin > 0.0, "losses.lambda", "must be > 0");
  require(losses.xi_sim >= 0.0, "losses.xi_sim", "must be >= 0");

  require(trainer.learning_rate > 0.0, "trainer.learning_rate", "must be > 0");
  require(trainer.steps >= 0, "trainer.steps", "must be >= 0");
  require(trainer.encoder_updates >= 1, "trainer.encoder_updates", "must be >= 1");
  require(trainer.discriminator_updates >= 0, "trainer.discriminator_updates", "must be >= 0");

  require(evaluation.tsne_perplexity > 0.0, "evaluation.tsne_perplexity", "must be > 0");

  require(rl.learning_rate > 0.0, "rl.learning_rate", "must be > 0");
  require(rl.minibatch >= 1, "rl.minibatch", "must be >= 1");
  require(rl.episodes_per_iteration >= 1, "rl.episodes_per_iteration", "must be >= 1");
  require(rl.xi_reward >= 0.0, "rl.xi_reward", "must be >= 0 (0 = self-calibrated)");
  require(rl.xi_reward_percentile > 0.0 && rl.xi_reward_percentile <= 100.0, "rl.xi_reward_percentile",
          "must lie in (0, 100]");
  require(rl.agent_view == 0 || rl.agent_view == 1, "rl.agent_view", "must be 0 or 1");
  require(rl.demo_view == 0 || rl.demo_view == 1, "rl.demo_view", "must be 0 or 1");
}

void set_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
  find_field(key).set(config, value);
}

std::string get_value(const ExperimentConfig& config, std::string_view key) {
  return find_field(key).get(config);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(std::string(assignment), "override '" + std::string(assignment) +
                                                   "' is not of the form section.key=value");
  }
  auto key = boost::algorithm::trim_copy(std::string(assignment.substr(0, eq)));
  set_value(config, key, assignment.substr(eq + 1));
}

ExperimentConfig parse_config(std::string_view text) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("", std::string("config parse error: ") + e.what());
  }
  ExperimentConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      // Top-level keys outside a section are not part of the schema.
      throw UnknownKeyError(section);
    }
    for (const auto& [key, value] : body) {
      set_value(config, section + "." + key, value.data());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string to_text(const ExperimentConfig& config) {
  std::ostringstream out;
  std::string current;
  for (const auto& f : fields()) {
    auto dot = f.key.find('.');
    auto section = f.key.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << '\n';
      out << '[' << section << "]\n";
      current = section;
    }
    out << f.key.substr(dot + 1) << " = " << f.get(config) << '\n';
  }
  return out.str();
}

void write_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write config file " + path.string());
  out << to_text(config);
}

}  // namespace asn
