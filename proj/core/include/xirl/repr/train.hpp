#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "xirl/common/errors.hpp"
#include "xirl/demo/demo.hpp"
#include "xirl/demo/sampler.hpp"
#include "xirl/diffcore/adam.hpp"
#include "xirl/repr/encoder.hpp"
#include "xirl/repr/losses.hpp"

namespace xirl::repr {

struct ReprTrainConfig {
  Algorithm algorithm = Algorithm::kTcc;
  int iterations = 2000;
  int batch_size = 4;
  int frames = 40;
  demo::SamplerMode sampler = demo::SamplerMode::kUniform;
  int embedding_dim = 32;
  std::vector<std::size_t> hidden = {256, 128};
  bool normalize = false;
  /// Softmax temperature for TCC; initial temperature for TCN.
  double temperature = 1.0;
  bool learn_temperature = false;
  TcnWindows tcn_windows;
  double lambda_rec = 1.0;
  int negative_gap = 5;  // goal classifier negatives sit at least this far from the last frame
  diff::AdamConfig adam{1e-4, 0.99, 0.999, 1e-8, 1e-5};
  int eval_period = 100;
  std::size_t eval_pairs = 64;
  std::size_t eval_train_videos = 12;
  bool early_stopping = false;  // keep the model with the best evaluation tau
  std::uint64_t seed = 0;

  /// Throws ConfigError on inconsistent values.
  void validate() const;
};

/// Defaults of each algorithm at desk scale.
ReprTrainConfig default_train_config(Algorithm algorithm);

struct EvalRow {
  int iteration = 0;
  double loss = 0.0;        // mean batch loss since the previous row
  double train_tau = 0.0;
  double heldout_tau = 0.0;  // NaN without held-out videos
};

struct TrainResult {
  EncoderModel model;
  std::vector<EvalRow> rows;
  int skipped_videos = 0;  // goal classifier: videos too short to give negatives
};

/// Raised when a batch loss turns non-finite; carries the last finite model.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, EncoderModel last_good)
      : NumericError(what), last_good_(std::move(last_good)) {}
  [[nodiscard]] const EncoderModel& last_good() const { return last_good_; }

 private:
  EncoderModel last_good_;
};

using EvalCallback = std::function<void(const EvalRow&)>;

/// Trains an encoder on the merged videos; embodiment labels are only used by
/// LIFS to pick cross-embodiment pairs. Held-out videos feed the evaluation
/// rows and early stopping.
TrainResult train(const ReprTrainConfig& config, std::span<const demo::Demonstration> train_set,
                  std::span<const demo::Demonstration> heldout = {}, const EvalCallback& on_eval = {});

/// Mean tau over ordered pairs of the given videos, embedded with `model`.
double mean_tau(const EncoderModel& model, std::span<const demo::VideoView> videos, std::size_t max_pairs);

/// CSV with header iteration,loss,mean_train_tau[,mean_heldout_tau].
void write_eval_csv(std::ostream& out, std::span<const EvalRow> rows, bool with_heldout);

nlohmann::json config_to_json(const ReprTrainConfig& config);

}  // namespace xirl::repr
