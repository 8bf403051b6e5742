#include "xirl/repr/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>

#include "xirl/common/csv.hpp"
#include "xirl/repr/alignment.hpp"

namespace xirl::repr {
namespace {

using diff::Matrix;
using diff::Var;

struct SampledVideo {
  std::size_t video = 0;
  std::vector<int> indices;
};

std::vector<std::size_t> pick_videos(std::size_t available, int batch, std::mt19937_64& rng) {
  std::vector<std::size_t> all(available);
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> out;
  std::sample(all.begin(), all.end(), std::back_inserter(out), batch, rng);
  return out;
}

/// Builds one stacked input matrix and the row range of every video inside it.
Matrix stack_inputs(std::span<const demo::VideoView> videos, const std::vector<SampledVideo>& batch,
                    std::vector<std::vector<std::size_t>>& rows) {
  std::size_t total = 0;
  for (const auto& s : batch) total += s.indices.size();
  const auto width = static_cast<Eigen::Index>(videos[batch.front().video].frame(0).size());
  Matrix x(static_cast<Eigen::Index>(total), width);
  rows.clear();
  std::size_t r = 0;
  for (const auto& s : batch) {
    std::vector<std::size_t> mine;
    const Matrix part = frames_matrix(videos[s.video], s.indices);
    x.middleRows(static_cast<Eigen::Index>(r), part.rows()) = part;
    for (std::size_t k = 0; k < s.indices.size(); ++k) mine.push_back(r + k);
    r += s.indices.size();
    rows.push_back(std::move(mine));
  }
  return x;
}

class Trainer {
 public:
  Trainer(const ReprTrainConfig& config, std::span<const demo::Demonstration> train_set,
          std::span<const demo::Demonstration> heldout)
      : config_(config), train_(demo::views(train_set)), heldout_(demo::views(heldout)), rng_(config.seed) {
    EncoderShape shape;
    shape.grid_size = train_set.front().grid_size;
    shape.hidden = config.hidden;
    shape.embedding_dim = config.embedding_dim;
    shape.normalize = config.normalize;
    model_ = make_encoder(config.algorithm, shape, config.temperature, rng_);
    for (const auto& d : train_set) {
      if (d.grid_size != shape.grid_size) throw ConsistencyError("train: videos rendered at different grid sizes");
      if (std::find(model_.embodiments.begin(), model_.embodiments.end(), d.embodiment) == model_.embodiments.end()) {
        model_.embodiments.push_back(d.embodiment);
      }
    }
    std::sort(model_.embodiments.begin(), model_.embodiments.end());
    for (const auto& d : train_set) labels_.push_back(d.embodiment);
    auto params = trainable();
    adam_ = diff::make_adam(config.adam, std::vector<const diff::Tensor*>(params.begin(), params.end()));
    const std::size_t stride = std::max<std::size_t>(1, train_.size() / std::max<std::size_t>(1, config.eval_train_videos));
    for (std::size_t i = 0; i < train_.size() && eval_train_.size() < config.eval_train_videos; i += stride) {
      eval_train_.push_back(train_[i]);
    }
  }

  TrainResult run(const EvalCallback& on_eval) {
    TrainResult result;
    EncoderModel best = model_;
    double best_tau = -std::numeric_limits<double>::infinity();
    double window_loss = 0.0;
    int window = 0;
    for (int it = 0; it < config_.iterations; ++it) {
      std::optional<EncoderModel> untrained;
      if (it == 0) untrained = model_;
      // step() leaves the model untouched when the loss is non-finite.
      const double loss = step();
      if (!std::isfinite(loss)) {
        throw DivergenceError("train: loss became non-finite at iteration " + std::to_string(it), model_);
      }
      if (untrained) {
        // The first row describes the untrained model.
        std::swap(model_, *untrained);
        emit(result, 0, loss, on_eval, best, best_tau);
        std::swap(model_, *untrained);
      }
      window_loss += loss;
      ++window;
      const int done = it + 1;
      if (done % config_.eval_period == 0 || done == config_.iterations) {
        emit(result, done, window_loss / window, on_eval, best, best_tau);
        window_loss = 0.0;
        window = 0;
      }
    }
    result.model = config_.early_stopping && !result.rows.empty() ? best : model_;
    result.skipped_videos = skipped_;
    result.model.info = config_to_json(config_);
    if (config_.early_stopping && !result.rows.empty()) result.model.info["selected_tau"] = best_tau;
    return result;
  }

  EncoderModel initial_model() const { return model_; }

 private:
  std::vector<diff::Tensor*> trainable() {
    auto params = trainable_tensors(model_);
    if (model_.log_temperature && !config_.learn_temperature) params.pop_back();
    return params;
  }

  void emit(TrainResult& result, int iteration, double loss, const EvalCallback& on_eval, EncoderModel& best,
            double& best_tau) {
    EvalRow row;
    row.iteration = iteration;
    row.loss = loss;
    row.train_tau = mean_tau(model_, eval_train_, config_.eval_pairs);
    row.heldout_tau = heldout_.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : mean_tau(model_, heldout_, config_.eval_pairs);
    const double selector = heldout_.empty() ? row.train_tau : row.heldout_tau;
    if (selector > best_tau) {
      best_tau = selector;
      best = model_;
    }
    result.rows.push_back(row);
    if (on_eval) on_eval(row);
  }

  std::vector<SampledVideo> sample_batch() {
    const int batch = std::min<int>(config_.batch_size, static_cast<int>(train_.size()));
    std::vector<std::size_t> chosen = pick_videos(train_.size(), batch, rng_);
    if (config_.algorithm == Algorithm::kLifs) {
      // LIFS aligns different embodiments; retry a few times for a mixed batch.
      for (int attempt = 0; attempt < 16 && !mixed(chosen); ++attempt) chosen = pick_videos(train_.size(), batch, rng_);
    }
    std::vector<SampledVideo> out;
    for (std::size_t v : chosen) {
      const int length = train_[v].length();
      demo::FrameSamplerConfig sc{config_.sampler, std::min(config_.frames, length)};
      if (config_.algorithm == Algorithm::kGoalClassifier) {
        const int last_negative = length - 1 - config_.negative_gap;
        if (length < config_.negative_gap + 2) {
          ++skipped_;
          continue;
        }
        sc.frames = std::min(config_.frames - 1, last_negative + 1);
        std::vector<int> idx = demo::sample_frames(last_negative + 1, sc, rng_);
        idx.push_back(length - 1);
        out.push_back({v, std::move(idx)});
        continue;
      }
      if (config_.algorithm == Algorithm::kTcn && sc.frames <= config_.tcn_windows.negative + 1) {
        ++skipped_;
        continue;
      }
      out.push_back({v, demo::sample_frames(length, sc, rng_)});
    }
    return out;
  }

  bool mixed(const std::vector<std::size_t>& chosen) const {
    for (std::size_t k = 1; k < chosen.size(); ++k) {
      if (labels_[chosen[k]] != labels_[chosen[0]]) return true;
    }
    return false;
  }

  double step() {
    std::vector<SampledVideo> batch = sample_batch();
    const std::size_t minimum = config_.algorithm == Algorithm::kTcc || config_.algorithm == Algorithm::kLifs ? 2 : 1;
    for (int attempt = 0; batch.size() < minimum; ++attempt) {
      if (attempt > 100) throw ContractError("train: could not assemble a usable batch");
      batch = sample_batch();
    }
    std::vector<std::vector<std::size_t>> rows;
    Matrix inputs = stack_inputs(train_, batch, rows);

    diff::Tape tape;
    const ModelVars vars = bind_model(tape, model_);
    const Var x = tape.constant(std::move(inputs));
    const Var all = embed_on_tape(tape, model_, vars, x);
    std::vector<Var> per_video;
    for (const auto& r : rows) per_video.push_back(tape.gather_rows(all, r));

    Var loss{};
    switch (config_.algorithm) {
      case Algorithm::kTcc: {
        std::vector<SequenceVar> seqs;
        for (std::size_t k = 0; k < batch.size(); ++k) {
          seqs.push_back({per_video[k], normalized_times(batch[k].indices, train_[batch[k].video].length())});
        }
        loss = tcc_loss(tape, seqs, config_.temperature);
        break;
      }
      case Algorithm::kTcn:
        loss = tcn_batch_loss(tape, per_video, *vars.log_temperature, config_.tcn_windows);
        break;
      case Algorithm::kLifs: {
        std::vector<LifsPair> pairs;
        const bool any_mixed = [&] {
          for (std::size_t a = 0; a < batch.size(); ++a) {
            for (std::size_t b = 0; b < batch.size(); ++b) {
              if (labels_[batch[a].video] != labels_[batch[b].video]) return true;
            }
          }
          return false;
        }();
        for (std::size_t a = 0; a < batch.size(); ++a) {
          for (std::size_t b = 0; b < batch.size(); ++b) {
            if (a == b || (any_mixed && labels_[batch[a].video] == labels_[batch[b].video])) continue;
            pairs.push_back({a, b,
                             lifs_pairing(batch[a].indices, train_[batch[a].video].length(), batch[b].indices,
                                          train_[batch[b].video].length())});
          }
        }
        const Var rec = diff::forward_mlp(tape, *model_.decoder, *vars.decoder, all);
        std::vector<Var> recs{rec};
        std::vector<Var> ins{x};
        loss = lifs_loss(tape, per_video, pairs, recs, ins, config_.lambda_rec);
        break;
      }
      case Algorithm::kGoalClassifier: {
        const Var logits = diff::forward_mlp(tape, *model_.head, *vars.head, all);
        std::vector<int> labels;
        for (const auto& s : batch) {
          for (std::size_t k = 0; k < s.indices.size(); ++k) labels.push_back(k + 1 == s.indices.size() ? 1 : 0);
        }
        loss = goal_classifier_loss(tape, logits, labels);
        break;
      }
    }
    const double value = tape.scalar(loss);
    if (!std::isfinite(value)) return value;
    tape.backward(loss);
    std::vector<diff::Tensor> grads = collect_model_grads(tape, model_, vars);
    auto params = trainable();
    grads.resize(params.size());
    diff::adam_step(adam_, params, grads);
    return value;
  }

  ReprTrainConfig config_;
  std::vector<demo::VideoView> train_;
  std::vector<demo::VideoView> heldout_;
  std::vector<demo::VideoView> eval_train_;
  std::vector<env::Embodiment> labels_;
  std::mt19937_64 rng_;
  EncoderModel model_;
  diff::AdamState adam_;
  int skipped_ = 0;
};

}  // namespace

void ReprTrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be non-negative");
  if ((algorithm == Algorithm::kTcc || algorithm == Algorithm::kLifs) && batch_size < 2) {
    throw ConfigError("batch size must be at least 2 for tcc and lifs");
  }
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (frames < 2) throw ConfigError("frames per video must be at least 2");
  if (embedding_dim < 1) throw ConfigError("embedding dim must be positive");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (eval_period < 1) throw ConfigError("eval period must be positive");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (negative_gap < 1) throw ConfigError("negative gap must be positive");
}

ReprTrainConfig default_train_config(Algorithm algorithm) {
  ReprTrainConfig c;
  c.algorithm = algorithm;
  switch (algorithm) {
    case Algorithm::kTcc:
      c.temperature = 0.1;
      break;
    case Algorithm::kGoalClassifier:
      c.frames = 15;
      break;
    case Algorithm::kLifs:
      c.frames = 15;
      c.normalize = true;
      c.sampler = demo::SamplerMode::kEvenlySpaced;
      c.early_stopping = true;
      break;
    case Algorithm::kTcn:
      c.frames = 20;
      c.normalize = true;
      c.sampler = demo::SamplerMode::kContiguous;
      c.temperature = 0.1;
      c.learn_temperature = true;
      break;
  }
  return c;
}

double mean_tau(const EncoderModel& model, std::span<const demo::VideoView> videos, std::size_t max_pairs) {
  if (videos.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<Matrix> seqs;
  std::vector<env::Embodiment> labels;
  for (const auto& v : videos) {
    seqs.push_back(embed_sequence(model, v));
    labels.push_back(v.embodiment());
  }
  return alignment_summary(seqs, labels, max_pairs).mean;
}

TrainResult train(const ReprTrainConfig& config, std::span<const demo::Demonstration> train_set,
                  std::span<const demo::Demonstration> heldout, const EvalCallback& on_eval) {
  config.validate();
  if (train_set.empty()) throw ContractError("train: empty demo set");
  if ((config.algorithm == Algorithm::kTcc || config.algorithm == Algorithm::kLifs) && train_set.size() < 2) {
    throw ContractError("train: tcc and lifs need at least two videos");
  }
  Trainer trainer(config, train_set, heldout);
  if (config.iterations == 0) {
    TrainResult r;
    r.model = trainer.initial_model();
    r.model.info = config_to_json(config);
    return r;
  }
  return trainer.run(on_eval);
}

void write_eval_csv(std::ostream& out, std::span<const EvalRow> rows, bool with_heldout) {
  std::vector<std::string> header = {"iteration", "loss", "mean_train_tau"};
  if (with_heldout) header.emplace_back("mean_heldout_tau");
  CsvWriter w(out, header);
  for (const auto& r : rows) {
    std::vector<double> v = {double(r.iteration), r.loss, r.train_tau};
    if (with_heldout) v.push_back(r.heldout_tau);
    w.row(v);
  }
}

nlohmann::json config_to_json(const ReprTrainConfig& c) {
  return {{"algorithm", std::string(to_string(c.algorithm))},
          {"iterations", c.iterations},
          {"batch_size", c.batch_size},
          {"frames", c.frames},
          {"sampler", std::string(demo::to_string(c.sampler))},
          {"embedding_dim", c.embedding_dim},
          {"hidden", c.hidden},
          {"normalize", c.normalize},
          {"temperature", c.temperature},
          {"learn_temperature", c.learn_temperature},
          {"tcn_positive_window", c.tcn_windows.positive},
          {"tcn_negative_window", c.tcn_windows.negative},
          {"lambda_rec", c.lambda_rec},
          {"negative_gap", c.negative_gap},
          {"learning_rate", c.adam.learning_rate},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon},
          {"weight_decay", c.adam.weight_decay},
          {"eval_period", c.eval_period},
          {"eval_pairs", c.eval_pairs},
          {"eval_train_videos", c.eval_train_videos},
          {"early_stopping", c.early_stopping},
          {"seed", c.seed}};
}

}  // namespace xirl::repr
