// SPDX-License-Identifier: Apache-2.0
#include "asn/cli.hpp"

#include <CLI11.hpp>
#include <boost/algorithm/string.hpp>
#include <cstdlib>
#include <iostream>

#include "asn/checkpoint.hpp"
#include "asn/config.hpp"
#include "asn/dataio/synthetic.hpp"
#include "asn/errors.hpp"
#include "asn/evaluation.hpp"
#include "asn/rl.hpp"
#include "asn/trainer.hpp"

namespace asn::cli {
namespace fs = std::filesystem;
namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool wants_out = true) {
  cmd->add_option("--config", c.config_path, "configuration file");
  cmd->add_option("--set", c.overrides, "section.key=value override (repeatable)");
  cmd->add_option("overrides", c.overrides, "section.key=value overrides");
  if (wants_out) cmd->add_option("--out", c.out, "output directory");
}

ExperimentConfig effective_config(const Common& c) {
  ExperimentConfig config;
  if (!c.config_path.empty()) {
    if (!fs::exists(c.config_path)) throw LoadError("config file not found: " + c.config_path);
    config = load_config(c.config_path);
  }
  for (const auto& o : c.overrides) apply_override(config, o);
  config.validate();
  return config;
}

fs::path output_dir(const Common& c, const ExperimentConfig& config, const std::string& command) {
  if (!c.out.empty()) return c.out;
  fs::path root = config.output_dir;
  if (const char* env = std::getenv("ASN_OUTPUT_ROOT"); env && *env && config.output_dir == ExperimentConfig{}.output_dir) {
    root = env;
  }
  return root / command;
}

fs::path freeze(const ExperimentConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  write_config(config, dir / "config.ini");
  return dir;
}

dataio::MultiTaskDataset load_split(const fs::path& root, dataio::Split split, std::ostream& err) {
  auto report = dataio::load_dataset(root, split);
  for (const auto& r : report.rejected) err << "warning: rejected " << r.demo_id << ": " << r.reason << '\n';
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  return std::move(report.dataset);
}

// Demo directories are <root>/<split>/<task>/<demo_id>.
dataio::Demonstration load_demo_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw LoadError("demonstration not found: " + dir.string());
  const fs::path canonical = fs::weakly_canonical(dir);
  return dataio::load_demonstration(canonical, canonical.parent_path().filename().string());
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  if (text.empty()) return parts;
  boost::split(parts, text, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  std::erase_if(parts, [](const std::string& p) { return p.empty(); });
  return parts;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarial skill network embeddings: data, training, evaluation and RL"};
  app.require_subcommand(1);

  Common synth_c;
  auto* synth = app.add_subcommand("synth-data", "generate the synthetic multi-view dataset");
  add_common(synth, synth_c);

  Common train_c;
  std::string train_data, resume;
  bool validate = true;
  auto* train = app.add_subcommand("train", "train the embedding");
  add_common(train, train_c);
  train->add_option("--data", train_data, "dataset root")->required();
  train->add_option("--resume", resume, "resume from a training checkpoint");
  train->add_flag("!--no-validation", validate, "skip best-alignment checkpoint selection");

  Common eval_c;
  std::string eval_ckpt, eval_data, eval_tasks, eval_split = "test";
  auto* eval = app.add_subcommand("eval-align", "alignment of held-out view pairs");
  add_common(eval, eval_c);
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--data", eval_data)->required();
  eval->add_option("--tasks", eval_tasks, "comma-separated task names (default: all in the split)");
  eval->add_option("--split", eval_split);

  Common tsne_c;
  std::string tsne_ckpt, tsne_demo;
  int tsne_view = 0;
  auto* tsne = app.add_subcommand("plot-tsne", "t-SNE trajectory of one demonstration");
  add_common(tsne, tsne_c);
  tsne->add_option("--checkpoint", tsne_ckpt)->required();
  tsne->add_option("--demo", tsne_demo, "demonstration directory")->required();
  tsne->add_option("--view", tsne_view)->check(CLI::Range(0, 1));

  Common reward_c;
  std::string reward_ckpt, reward_demo;
  int reward_view = 0;
  auto* reward = app.add_subcommand("plot-reward", "reward curve against the final frame of the other view");
  add_common(reward, reward_c);
  reward->add_option("--checkpoint", reward_ckpt)->required();
  reward->add_option("--demo", reward_demo, "demonstration directory")->required();
  reward->add_option("--view", reward_view)->check(CLI::Range(0, 1));

  Common rl_c;
  std::string rl_ckpt, rl_demo, rl_env = "toy";
  bool rl_random = false;
  auto* rl_cmd = app.add_subcommand("rl-train", "PPO imitation from a single demonstration");
  add_common(rl_cmd, rl_c);
  rl_cmd->add_option("--checkpoint", rl_ckpt, "embedding checkpoint");
  rl_cmd->add_flag("--random-embedding", rl_random, "use an untrained encoder instead of a checkpoint");
  rl_cmd->add_option("--demo", rl_demo, "demonstration directory")->required();
  rl_cmd->add_option("--env", rl_env)->check(CLI::IsMember({"toy"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (synth->parsed()) {
      auto config = effective_config(synth_c);
      fs::path root = synth_c.out.empty() ? fs::path(config.dataio.root) : fs::path(synth_c.out);
      if (root.empty()) root = output_dir(synth_c, config, "data");
      config.dataio.root = root.string();
      for (auto split : {dataio::Split::train, dataio::Split::validation, dataio::Split::test}) {
        auto ds = dataio::generate_split(config.dataio, config.seed, split);
        dataio::save_dataset(ds, root);
        out << to_string(split) << ": " << ds.size() << " demonstrations\n";
      }
      freeze(config, root);
      out << "dataset written to " << root.string() << '\n';
    } else if (train->parsed()) {
      auto config = effective_config(train_c);
      config.dataio.root = train_data;
      const auto dir = freeze(config, output_dir(train_c, config, "train"));
      const auto data = load_split(train_data, dataio::Split::train, err);
      std::optional<dataio::MultiTaskDataset> validation;
      if (validate && fs::is_directory(fs::path(train_data) / "validation")) {
        validation = load_split(train_data, dataio::Split::validation, err);
      }
      FitOptions options;
      options.out_dir = dir;
      if (!resume.empty()) options.resume = resume;
      if (validation && !validation->empty()) options.validation = &*validation;
      const auto every = std::max<std::int64_t>(1, config.trainer.steps / 20);
      options.on_step = [&](const TrainMetrics& m) {
        if (m.step % every == 0) {
          out << "step " << m.step << " lifted " << m.lifted << " H_cond " << m.h_cond << " H_marg " << m.h_marg
              << '\n';
        }
      };
      const auto result = fit(config, data, options);
      out << "checkpoint: " << result.checkpoint.string() << '\n';
      if (result.best_checkpoint) {
        out << "best checkpoint: " << result.best_checkpoint->string() << " (alignment " << *result.best_alignment
            << ")\n";
      }
    } else if (eval->parsed()) {
      auto config = effective_config(eval_c);
      const auto dir = freeze(config, output_dir(eval_c, config, "eval"));
      const auto data = load_split(eval_data, dataio::parse_split(eval_split), err);
      const auto report = eval::evaluate_transfer(fs::path(eval_ckpt), data, split_list(eval_tasks));
      eval::write_report(report, dir);
      out << "alignment " << report.mean << " (view0->view1 " << report.mean_forward << ", view1->view0 "
          << report.mean_backward << ") over " << report.per_video.size() << " videos\n";
    } else if (tsne->parsed()) {
      auto config = effective_config(tsne_c);
      const auto dir = freeze(config, output_dir(tsne_c, config, "tsne"));
      auto encoder = load_encoder(tsne_ckpt);
      const auto demo = load_demo_dir(tsne_demo);
      eval::TsneOptions options{config.evaluation.tsne_perplexity, config.evaluation.tsne_iterations, config.seed};
      const auto path = dir / (demo.demo_id + "_tsne.png");
      const auto plot = eval::emit_trajectory_plot(encoder, demo, path, options, tsne_view);
      out << "wrote " << path.string() << " (curve order " << eval::curve_order_correlation(plot.points) << ")\n";
    } else if (reward->parsed()) {
      auto config = effective_config(reward_c);
      const auto dir = freeze(config, output_dir(reward_c, config, "reward"));
      auto encoder = load_encoder(reward_ckpt);
      const auto demo = load_demo_dir(reward_demo);
      const auto& goal = demo.views.at(1 - reward_view).back();
      const auto path = dir / (demo.demo_id + "_reward.png");
      eval::emit_reward_curve(encoder, demo, goal, path, reward_view);
      out << "wrote " << path.string() << '\n';
    } else if (rl_cmd->parsed()) {
      auto config = effective_config(rl_c);
      if (rl_ckpt.empty() == !rl_random) throw ConfigError("rl.checkpoint", "pass exactly one of --checkpoint or --random-embedding");
      const auto dir = freeze(config, output_dir(rl_c, config, "rl"));
      const auto demo = load_demo_dir(rl_demo);
      Encoder encoder{nullptr};
      if (rl_random) {
        torch::manual_seed(config.seed);
        encoder = Encoder(config.encoder);
      } else {
        encoder = load_encoder(rl_ckpt);
      }
      rl::PpoSetup setup;
      setup.config = config.rl;
      setup.seed = config.seed;
      setup.image_size = demo.views[0].front().pixels.size;
      setup.on_iteration = [&](const rl::IterationStats& s) {
        out << "iteration " << s.iteration << " return " << s.mean_return << " eval distance " << s.eval_distance
            << '\n';
      };
      const auto result = rl::ppo_train(demo, encoder, setup);
      rl::write_learning_curve(result.curve, dir);
      torch::save(result.policy, (dir / "policy.pt").string());
      out << "final distance " << result.final_distance << (result.reached_goal ? " (goal reached)" : "") << '\n';
    }
  } catch (const UnknownKeyError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const LoadError& e) {
    err << "error: " << e.what() << '\n';
    return kExitMissing;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace asn::cli
