#include "app/commands.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "app/config.hpp"
#include "app/datasets.hpp"
#include "app/manifest.hpp"
#include "app/plot.hpp"
#include "xirl/common/csv.hpp"
#include "xirl/common/errors.hpp"
#include "xirl/demo/demo_io.hpp"
#include "xirl/demo/generate.hpp"
#include "xirl/diffcore/checkpoint.hpp"
#include "xirl/repr/alignment.hpp"
#include "xirl/repr/train.hpp"
#include "xirl/reward/reward_model.hpp"
#include "xirl/rl/trainer.hpp"

namespace xirl::app {
namespace {

namespace fs = std::filesystem;

struct Context {
  std::vector<std::string> argv;
  std::string config_path;
  ExperimentConfig config;

  void load() {
    if (!config_path.empty()) config = load_config(config_path);
  }
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------- gen-demos

struct GenArgs {
  std::vector<std::string> embodiments = {"all"};
  int count = -1;
  std::int64_t seed = -1;
  int grid = -1;
  std::string out;
};

int gen_demos(Context& ctx, const GenArgs& a) {
  ctx.load();
  auto& dc = ctx.config.demos;
  if (a.count >= 0) dc.count = a.count;
  if (a.seed >= 0) dc.seed = static_cast<std::uint64_t>(a.seed);
  if (a.grid >= 0) dc.grid_size = a.grid;
  if (dc.count < 1) throw ConfigError("--count must be at least 1");
  const auto embodiments = parse_embodiment_list(a.embodiments);
  const std::string root = resolve_output(a.out, ctx.config);

  std::vector<demo::DemoSet> sets;
  for (auto e : embodiments) {
    sets.push_back(demo::generate_demos(e, dc.count, dc.seed, demo::GenerateOptions{dc.grid_size}));
  }
  const demo::DemoSet merged = demo::merge(sets);
  demo::save_demo_set(merged, root);

  std::cout << fmt::format("{:<12} {:>6} {:>10} {:>10}\n", "embodiment", "count", "mean_len", "std_len");
  nlohmann::json stats = nlohmann::json::object();
  for (auto e : embodiments) {
    const auto demos = merged.of(e);
    double mean = 0.0;
    for (const auto& d : demos) mean += d.length();
    mean /= static_cast<double>(demos.size());
    double var = 0.0;
    for (const auto& d : demos) var += (d.length() - mean) * (d.length() - mean);
    const double sd = demos.size() > 1 ? std::sqrt(var / static_cast<double>(demos.size() - 1)) : 0.0;
    std::cout << fmt::format("{:<12} {:>6} {:>10.2f} {:>10.2f}\n", env::name(e), demos.size(), mean, sd);
    stats[std::string(env::name(e))] = {{"count", demos.size()}, {"mean_length", mean}, {"std_length", sd}};
  }

  RunManifest m("gen-demos", ctx.argv);
  m.set_config(to_json(ctx.config, repr::Algorithm::kTcc));
  m.add_output(root);
  m.set("length_stats", stats);
  m.write(root);
  return kExitOk;
}

// ---------------------------------------------------------------- train-repr

struct ReprArgs {
  std::string algo = "tcc";
  std::vector<std::string> demos;
  std::vector<std::string> heldout;
  std::string out;
  std::int64_t seed = -1;
  int iterations = -1;
};

nlohmann::json video_ids(const VideoCollection& v) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < v.demos.size(); ++i) {
    j[std::string(env::name(v.demos[i].embodiment))].push_back(v.episode_seeds[i]);
  }
  return j;
}

struct ReprOutcome {
  int exit_code = kExitOk;
  std::string checkpoint;
};

ReprOutcome train_repr_into(Context& ctx, repr::Algorithm algo, const VideoCollection& train_set,
                            const VideoCollection* heldout, const std::string& dir, std::int64_t seed, int iterations,
                            const std::string& command) {
  repr::ReprTrainConfig cfg = resolve_repr(ctx.config, algo);
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (iterations >= 0) cfg.iterations = iterations;
  cfg.validate();
  const auto distance = ctx.config.distance;

  RunManifest m(command, ctx.argv);
  nlohmann::json resolved = to_json(ctx.config, algo);
  resolved["repr"] = repr::config_to_json(cfg);
  m.set_config(resolved);
  for (const auto& r : train_set.roots) m.add_input(r);
  if (heldout) {
    for (const auto& r : heldout->roots) m.add_input(r);
  }

  const fs::path out(dir);
  const std::string ckpt_path = (out / "encoder.xckp").string();
  const std::string eval_path = (out / "train_eval.csv").string();
  std::span<const demo::Demonstration> held;
  if (heldout) held = heldout->demos;

  std::vector<repr::EvalRow> rows;
  auto log_row = [&](const repr::EvalRow& r) {
    rows.push_back(r);
    std::cerr << fmt::format("[{}] iter {:>6} loss {:.5f} train_tau {:.4f} heldout_tau {:.4f}\n", to_string(algo),
                             r.iteration, r.loss, r.train_tau, r.heldout_tau);
  };
  auto write_rows = [&] {
    auto os = open_out(eval_path);
    repr::write_eval_csv(os, rows, heldout != nullptr);
    m.add_output(eval_path);
  };

  repr::EncoderModel model;
  ReprOutcome outcome;
  outcome.checkpoint = ckpt_path;
  try {
    auto result = repr::train(cfg, train_set.demos, held, log_row);
    model = std::move(result.model);
    rows = result.rows;
    if (result.skipped_videos > 0) m.set("skipped_videos", result.skipped_videos);
  } catch (const repr::DivergenceError& ex) {
    std::cerr << "error: " << ex.what() << "; keeping the last finite model\n";
    model = ex.last_good();
    outcome.exit_code = kExitRuntime;
    m.set("diverged", ex.what());
  }
  model.info["train_videos"] = video_ids(train_set);

  fs::create_directories(out);
  try {
    const auto rm = reward::build_reward_model(model, train_set.demos, distance);
    diff::save_checkpoint(reward::to_checkpoint(rm), ckpt_path);
  } catch (const NumericError& ex) {
    // The encoder is still worth keeping even when g or kappa are unusable.
    std::cerr << "error: reward fit failed: " << ex.what() << "\n";
    diff::save_checkpoint(repr::to_checkpoint(model), ckpt_path);
    outcome.exit_code = kExitRuntime;
  }
  write_rows();
  m.add_output(ckpt_path);
  m.write(dir);
  return outcome;
}

int train_repr(Context& ctx, const ReprArgs& a) {
  ctx.load();
  const auto algo = repr::parse_algorithm(a.algo);
  const auto train_set = load_videos(a.demos);
  std::optional<VideoCollection> heldout;
  if (!a.heldout.empty()) heldout = load_videos(a.heldout);
  const std::string dir = resolve_output(a.out, ctx.config);
  return train_repr_into(ctx, algo, train_set, heldout ? &*heldout : nullptr, dir, a.seed, a.iterations, "train-repr")
      .exit_code;
}

// ---------------------------------------------------------------- eval-repr

struct EvalReprArgs {
  std::string ckpt;
  std::vector<std::string> demos;
  std::string out;
  std::size_t max_pairs = 0;
  int max_traces = 50;
};

bool was_trained_on(const nlohmann::json& info, env::Embodiment e, std::uint64_t seed) {
  if (!info.contains("train_videos")) return false;
  const auto& tv = info.at("train_videos");
  const std::string key(env::name(e));
  if (!tv.contains(key)) return false;
  for (const auto& s : tv.at(key)) {
    if (s.get<std::uint64_t>() == seed) return true;
  }
  return false;
}

int eval_repr(Context& ctx, const EvalReprArgs& a) {
  ctx.load();
  const auto ckpt = diff::load_checkpoint(a.ckpt);
  const auto rm = reward::reward_model_from_checkpoint(ckpt);
  const auto videos = load_videos(a.demos);
  const fs::path out = resolve_output(a.out, ctx.config);

  std::vector<diff::Matrix> train_seqs, held_seqs;
  std::vector<env::Embodiment> train_labels, held_labels;
  std::vector<diff::Matrix> all_seqs;
  for (std::size_t i = 0; i < videos.demos.size(); ++i) {
    auto seq = repr::embed_sequence(rm.encoder, demo::VideoView(videos.demos[i]));
    all_seqs.push_back(seq);
    if (was_trained_on(rm.encoder.info, videos.demos[i].embodiment, videos.episode_seeds[i])) {
      train_seqs.push_back(std::move(seq));
      train_labels.push_back(videos.demos[i].embodiment);
    } else {
      held_seqs.push_back(std::move(seq));
      held_labels.push_back(videos.demos[i].embodiment);
    }
  }

  RunManifest m("eval-repr", ctx.argv);
  m.add_input(a.ckpt);
  for (const auto& r : videos.roots) m.add_input(r);

  // pairwise taus over every evaluated video
  const auto all = repr::alignment_summary(all_seqs, videos.labels(), a.max_pairs);
  {
    const auto path = out / "alignment.csv";
    auto os = open_out(path);
    CsvWriter w(os, {"video_a", "video_b", "embodiment_a", "embodiment_b", "tau"});
    for (const auto& p : all.pairs) {
      w.row({double(p.a), double(p.b), double(static_cast<int>(p.embodiment_a)),
             double(static_cast<int>(p.embodiment_b)), p.tau});
    }
    m.add_output(path.string());
  }
  {
    std::vector<std::string> header = {"mean_train_tau"};
    std::vector<double> row;
    const auto ts = train_seqs.size() >= 2 ? repr::alignment_summary(train_seqs, train_labels, a.max_pairs)
                                           : repr::AlignmentSummary{{}, std::nan(""), std::nan(""), std::nan("")};
    row.push_back(ts.mean);
    if (!held_seqs.empty()) {
      const auto hs = held_seqs.size() >= 2 ? repr::alignment_summary(held_seqs, held_labels, a.max_pairs)
                                            : repr::AlignmentSummary{{}, std::nan(""), std::nan(""), std::nan("")};
      header.insert(header.end(), {"mean_heldout_tau", "mean_heldout_same_tau", "mean_heldout_cross_tau"});
      row.insert(row.end(), {hs.mean, hs.mean_same, hs.mean_cross});
    }
    const auto path = out / "alignment_summary.csv";
    auto os = open_out(path);
    CsvWriter w(os, header);
    w.row(row);
    m.add_output(path.string());
    for (std::size_t i = 0; i < header.size(); ++i) std::cout << header[i] << " " << format_number(row[i]) << "\n";
  }
  {
    const auto path = out / "reward_progress.csv";
    auto os = open_out(path);
    CsvWriter w(os, {"embodiment", "index", "length", "spearman", "first_reward", "last_reward"});
    int traces = 0;
    for (std::size_t i = 0; i < videos.demos.size(); ++i) {
      const demo::VideoView v(videos.demos[i]);
      const Eigen::VectorXd r = rm.from_embeddings(all_seqs[i]);
      std::vector<double> trace(r.data(), r.data() + r.size());
      std::vector<double> frames(trace.size());
      std::iota(frames.begin(), frames.end(), 0.0);
      w.row({double(static_cast<int>(v.embodiment())), double(videos.indices[i]), double(v.length()),
             repr::spearman(frames, trace), trace.front(), trace.back()});
      if (traces < a.max_traces) {
        const auto tp = out / "traces" / fmt::format("{}_{:06}.csv", env::name(v.embodiment()), videos.indices[i]);
        auto ts = open_out(tp);
        reward::write_trace_csv(ts, trace, v);
        ++traces;
      }
    }
    m.add_output(path.string());
    if (traces > 0) m.add_output((out / "traces").string());
  }
  m.write(out.string());
  return kExitOk;
}

// ---------------------------------------------------------------- train-policy

struct PolicyArgs {
  std::string embodiment = "longstick";
  std::string reward = "env";
  std::string ckpt;
  std::string out;
  std::int64_t seed = -1;
  int steps = -1;
};

int train_policy_into(Context& ctx, env::Embodiment e, rl::RewardSource source, const std::string& ckpt,
                      const std::string& dir, std::int64_t seed, int steps, const std::string& command,
                      double* final_success = nullptr) {
  rl::SacConfig cfg = ctx.config.sac;
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (steps >= 0) cfg.total_steps = steps;
  cfg.validate();

  std::optional<reward::RewardModel> model;
  if (source != rl::RewardSource::kEnv) {
    if (ckpt.empty()) throw ConfigError("--reward " + std::string(to_string(source)) + " needs --ckpt");
    model = reward::reward_model_from_checkpoint(diff::load_checkpoint(ckpt));
  }

  RunManifest m(command, ctx.argv);
  nlohmann::json resolved = to_json(ctx.config, repr::Algorithm::kTcc);
  resolved.erase("repr");
  resolved["sac"]["seed"] = cfg.seed;
  resolved["sac"]["total_steps"] = cfg.total_steps;
  resolved["policy"] = {{"embodiment", std::string(env::name(e))}, {"reward", std::string(to_string(source))}};
  m.set_config(resolved);
  if (!ckpt.empty()) m.add_input(ckpt);

  const auto result = rl::train_policy(e, source, model ? &*model : nullptr, cfg, [&](const rl::CurveRow& r) {
    std::cerr << fmt::format("[{} {}] step {:>7} success {:.3f} reward {:.3f} temp {:.4f}\n", env::name(e),
                             to_string(source), r.step, r.success_rate, r.mean_episode_reward, r.temperature);
  });

  const fs::path out(dir);
  fs::create_directories(out);
  {
    auto os = open_out(out / "curve.csv");
    rl::write_curve_csv(os, result.curve);
  }
  {
    auto os = open_out(out / "reward_stats.csv");
    CsvWriter w(os, {"count", "min", "max", "mean"});
    w.row({double(result.rewards.count), result.rewards.min, result.rewards.max, result.rewards.mean});
  }
  auto c = rl::to_checkpoint(result.policy);
  c.metadata["embodiment"] = std::string(env::name(e));
  c.metadata["reward"] = std::string(to_string(source));
  c.metadata["seed"] = cfg.seed;
  c.metadata["config_sha256"] = sha256_hex(resolved.dump());
  diff::save_checkpoint(c, (out / "policy.xckp").string());
  for (const char* f : {"curve.csv", "reward_stats.csv", "policy.xckp"}) m.add_output((out / f).string());
  m.write(dir);
  if (final_success != nullptr) *final_success = result.curve.empty() ? std::nan("") : result.curve.back().success_rate;
  return kExitOk;
}

int train_policy(Context& ctx, const PolicyArgs& a) {
  ctx.load();
  const auto e = env::parse_embodiment(a.embodiment);
  if (!e) throw ConfigError("unknown embodiment '" + a.embodiment + "'");
  const auto source = rl::parse_reward_source(a.reward);
  return train_policy_into(ctx, *e, source, a.ckpt, resolve_output(a.out, ctx.config), a.seed, a.steps,
                           "train-policy");
}

// ---------------------------------------------------------------- eval-policy

struct EvalPolicyArgs {
  std::string policy;
  int episodes = 50;
  std::uint64_t seed = 0;
  std::string embodiment;
};

int eval_policy(Context& ctx, const EvalPolicyArgs& a) {
  ctx.load();
  if (a.episodes < 1) throw ConfigError("--episodes must be at least 1");
  const auto c = diff::load_checkpoint(a.policy);
  const auto params = rl::agent_from_checkpoint(c);
  std::string name = a.embodiment.empty() ? c.metadata.value("embodiment", std::string()) : a.embodiment;
  const auto e = env::parse_embodiment(name);
  if (!e) throw ConfigError("policy checkpoint has no embodiment; pass --embodiment");
  const auto r = rl::evaluate(params, *e, a.episodes, rl::eval_seed(a.seed));
  std::cout << format_number(r.success_rate) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- export-embeddings

struct ExportArgs {
  std::string ckpt;
  std::vector<std::string> demos;
  std::string out;
};

int export_embeddings(Context& ctx, const ExportArgs& a) {
  ctx.load();
  const auto enc = repr::from_checkpoint(diff::load_checkpoint(a.ckpt));
  const auto videos = load_videos(a.demos);
  const fs::path out = resolve_output(a.out, ctx.config);
  std::vector<std::string> header = {"embodiment", "index", "frame"};
  for (int k = 0; k < enc.embedding_dim(); ++k) header.push_back(fmt::format("e{}", k));
  const auto path = out / "embeddings.csv";
  {
    auto os = open_out(path);
    CsvWriter w(os, header);
    std::vector<double> row(header.size());
    for (std::size_t i = 0; i < videos.demos.size(); ++i) {
      const auto seq = repr::embed_sequence(enc, demo::VideoView(videos.demos[i]));
      for (Eigen::Index f = 0; f < seq.rows(); ++f) {
        row[0] = static_cast<int>(videos.demos[i].embodiment);
        row[1] = videos.indices[i];
        row[2] = static_cast<double>(f);
        for (Eigen::Index k = 0; k < seq.cols(); ++k) row[3 + static_cast<std::size_t>(k)] = seq(f, k);
        w.row(row);
      }
    }
  }
  RunManifest m("export-embeddings", ctx.argv);
  m.add_input(a.ckpt);
  for (const auto& r : videos.roots) m.add_input(r);
  m.add_output(path.string());
  m.write(out.string());
  return kExitOk;
}

// ---------------------------------------------------------------- plot

struct PlotArgs {
  std::vector<std::string> inputs;
  std::vector<std::string> labels;
  std::string out;
  std::string kind = "curve";
};

int plot(Context& ctx, const PlotArgs& a) {
  ctx.load();
  const auto kind = parse_plot_kind(a.kind);
  if (!a.labels.empty() && a.labels.size() != a.inputs.size()) {
    throw ConfigError("--label must be given once per --in");
  }
  std::vector<Series> series;
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    const auto table = read_csv(a.inputs[i]);
    std::string label = a.labels.empty() ? fs::path(a.inputs[i]).parent_path().filename().string() : a.labels[i];
    if (label.empty()) label = fs::path(a.inputs[i]).stem().string();
    try {
      for (auto& s : series_from_csv(table, kind, label)) series.push_back(std::move(s));
    } catch (const FormatError& ex) {
      throw FormatError(a.inputs[i] + ": " + ex.what());
    }
  }
  const std::string svg = kind == PlotKind::kCurve ? render_svg(series, "environment steps", "success rate")
                                                   : render_svg(series, "frame", "reward");
  const fs::path out = resolve_output(a.out, ctx.config);
  auto os = open_out(out);
  os << svg;
  return kExitOk;
}

// ---------------------------------------------------------------- run-xmagical-suite

struct SuiteArgs {
  std::string demos;
  std::string out;
  int iterations = -1;
  int steps = -1;
};

int run_suite(Context& ctx, const SuiteArgs& a) {
  ctx.load();
  const fs::path out = resolve_output(a.out, ctx.config);
  std::string demo_root = a.demos;
  if (demo_root.empty()) {
    demo_root = (out / "demos").string();
    if (!fs::exists(fs::path(demo_root) / "manifest.json")) {
      std::vector<demo::DemoSet> sets;
      for (auto e : env::kAllEmbodiments) {
        sets.push_back(demo::generate_demos(e, ctx.config.demos.count, ctx.config.demos.seed,
                                            demo::GenerateOptions{ctx.config.demos.grid_size}));
      }
      demo::save_demo_set(demo::merge(sets), demo_root);
    }
  }

  int code = kExitOk;
  auto summary = open_out(out / "summary.csv");
  summary << "held_out,method,seed,final_success\n";
  for (auto held : ctx.config.suite.held_out) {
    std::vector<std::string> train_args, held_args;
    for (auto e : env::kAllEmbodiments) {
      const std::string arg = (fs::path(demo_root) / std::string(env::name(e))).string();
      (e == held ? held_args : train_args).push_back(arg);
    }
    const auto train_set = load_videos(train_args);
    auto heldout = load_videos(held_args);
    if (static_cast<int>(heldout.demos.size()) > ctx.config.suite.heldout_demos) {
      heldout.demos.resize(static_cast<std::size_t>(ctx.config.suite.heldout_demos));
      heldout.episode_seeds.resize(heldout.demos.size());
      heldout.indices.resize(heldout.demos.size());
    }
    const fs::path base = out / std::string(env::name(held));
    std::vector<std::pair<std::string, std::string>> methods = {{"env", ""}};
    for (auto algo : {repr::Algorithm::kTcc, repr::Algorithm::kGoalClassifier}) {
      const std::string name(to_string(algo));
      const auto r = train_repr_into(ctx, algo, train_set, &heldout, (base / name).string(), -1, a.iterations,
                                     "run-xmagical-suite");
      code = std::max(code, r.exit_code);
      if (r.exit_code == kExitOk) methods.emplace_back(name, r.checkpoint);
    }
    for (const auto& [method, ckpt] : methods) {
      const auto source = ckpt.empty() ? rl::RewardSource::kEnv : rl::RewardSource::kLearned;
      for (auto seed : ctx.config.suite.policy_seeds) {
        double success = 0.0;
        train_policy_into(ctx, held, source, ckpt, (base / ("policy_" + method) / fmt::format("seed{}", seed)).string(),
                          static_cast<std::int64_t>(seed), a.steps, "run-xmagical-suite", &success);
        summary << env::name(held) << "," << method << "," << seed << "," << format_number(success) << "\n";
        summary.flush();
      }
    }
  }
  RunManifest m("run-xmagical-suite", ctx.argv);
  m.set_config(to_json(ctx.config, repr::Algorithm::kTcc));
  m.add_input(demo_root);
  m.add_output((out / "summary.csv").string());
  m.write(out.string());
  return code;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Cross-embodiment reward learning workbench"};
  app.require_subcommand(1);
  Context ctx;
  ctx.argv.assign(argv, argv + argc);
  app.add_option("--config", ctx.config_path, "JSON experiment config")->check(CLI::ExistingFile);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-demos", "Record scripted demonstrations");
  g->add_option("--embodiment", gen.embodiments, "Embodiment name(s) or 'all'")->delimiter(',');
  g->add_option("--count", gen.count, "Demos per embodiment");
  g->add_option("--seed", gen.seed, "Base seed");
  g->add_option("--grid", gen.grid, "Render resolution");
  g->add_option("--out", gen.out, "Dataset root")->required();

  ReprArgs ra;
  auto* tr = app.add_subcommand("train-repr", "Train an embedding on demonstration videos");
  tr->add_option("--algo", ra.algo, "tcc | tcn | lifs | goal_classifier");
  tr->add_option("--demos", ra.demos, "Dataset root or <root>/<embodiment>")->required();
  tr->add_option("--heldout-demos", ra.heldout, "Videos scored but not trained on");
  tr->add_option("--seed", ra.seed, "Overrides repr.seed");
  tr->add_option("--iterations", ra.iterations, "Overrides repr.iterations");
  tr->add_option("--out", ra.out, "Output directory")->required();

  EvalReprArgs er;
  auto* ev = app.add_subcommand("eval-repr", "Alignment and reward diagnostics for a trained encoder");
  ev->add_option("--ckpt", er.ckpt, "Encoder checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--demos", er.demos, "Dataset root or <root>/<embodiment>")->required();
  ev->add_option("--max-pairs", er.max_pairs, "Cap on scored video pairs (0 = all)");
  ev->add_option("--max-traces", er.max_traces, "Reward traces written");
  ev->add_option("--out", er.out, "Output directory")->required();

  PolicyArgs pa;
  auto* tp = app.add_subcommand("train-policy", "Train a SAC policy");
  tp->add_option("--embodiment", pa.embodiment, "Embodiment name");
  tp->add_option("--reward", pa.reward, "env | learned | learned+sparse");
  tp->add_option("--ckpt", pa.ckpt, "Reward checkpoint for learned rewards")->check(CLI::ExistingFile);
  tp->add_option("--seed", pa.seed, "Overrides sac.seed");
  tp->add_option("--steps", pa.steps, "Overrides sac.total_steps");
  tp->add_option("--out", pa.out, "Output directory")->required();

  EvalPolicyArgs ep;
  auto* evp = app.add_subcommand("eval-policy", "Success rate of a trained policy");
  evp->add_option("--policy", ep.policy, "Policy checkpoint")->required()->check(CLI::ExistingFile);
  evp->add_option("--episodes", ep.episodes, "Evaluation episodes");
  evp->add_option("--seed", ep.seed, "Evaluation seed");
  evp->add_option("--embodiment", ep.embodiment, "Overrides the checkpoint's embodiment");

  ExportArgs ex;
  auto* xe = app.add_subcommand("export-embeddings", "Write per-frame embeddings as CSV");
  xe->add_option("--ckpt", ex.ckpt, "Encoder checkpoint")->required()->check(CLI::ExistingFile);
  xe->add_option("--demos", ex.demos, "Dataset root or <root>/<embodiment>")->required();
  xe->add_option("--out", ex.out, "Output directory")->required();

  PlotArgs pl;
  auto* p = app.add_subcommand("plot", "Render CSV series to SVG");
  p->add_option("--in", pl.inputs, "Input CSV files")->required();
  p->add_option("--label", pl.labels, "Legend label per input");
  p->add_option("--kind", pl.kind, "curve | reward-trace");
  p->add_option("--out", pl.out, "Output SVG")->required();

  SuiteArgs su;
  auto* s = app.add_subcommand("run-xmagical-suite", "Hold-one-out encoders and policies for every embodiment");
  s->add_option("--demos", su.demos, "Existing dataset root (generated when omitted)");
  s->add_option("--iterations", su.iterations, "Overrides repr.iterations");
  s->add_option("--steps", su.steps, "Overrides sac.total_steps");
  s->add_option("--out", su.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*g) return gen_demos(ctx, gen);
    if (*tr) return train_repr(ctx, ra);
    if (*ev) return eval_repr(ctx, er);
    if (*tp) return train_policy(ctx, pa);
    if (*evp) return eval_policy(ctx, ep);
    if (*xe) return export_embeddings(ctx, ex);
    if (*p) return plot(ctx, pl);
    if (*s) return run_suite(ctx, su);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace xirl::app
