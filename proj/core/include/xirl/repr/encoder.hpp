#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xirl/demo/demo.hpp"
#include "xirl/diffcore/checkpoint.hpp"
#include "xirl/diffcore/mlp.hpp"
#include "xirl/diffcore/tape.hpp"

namespace xirl::repr {

enum class Algorithm { kTcc, kTcn, kLifs, kGoalClassifier };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm a);

/// Frame encoder phi plus the algorithm-specific extras it was trained with.
struct EncoderModel {
  Algorithm algorithm = Algorithm::kTcc;
  int grid_size = env::kDefaultGrid;
  bool normalize = false;
  diff::MlpParams encoder;                // G*G*3 -> hidden... -> d
  std::optional<diff::MlpParams> head;     // goal classifier logit, d -> 1
  std::optional<diff::MlpParams> decoder;  // LIFS reconstruction, d -> G*G*3
  std::optional<diff::Tensor> log_temperature;  // TCN learned temperature, shape [1]
  std::vector<env::Embodiment> embodiments;  // embodiments seen in training
  nlohmann::json info = nlohmann::json::object();  // training bookkeeping

  [[nodiscard]] int embedding_dim() const { return static_cast<int>(encoder.out_features()); }
  [[nodiscard]] std::size_t input_dim() const {
    return static_cast<std::size_t>(grid_size) * static_cast<std::size_t>(grid_size) * env::kChannels;
  }

  bool operator==(const EncoderModel&) const = default;
};

struct EncoderShape {
  int grid_size = env::kDefaultGrid;
  std::vector<std::size_t> hidden = {256, 128};
  int embedding_dim = 32;
  bool normalize = false;
};

/// Fresh model with fan-in uniform initialisation. Extras (head, decoder,
/// temperature) are created as the algorithm requires.
EncoderModel make_encoder(Algorithm algorithm, const EncoderShape& shape, double initial_temperature,
                          std::mt19937_64& rng);

/// Rows of {0,1} inputs for the chosen frames of a video.
diff::Matrix frames_matrix(const demo::VideoView& video, std::span<const int> indices);
/// Single rendered grid as a 1 x (G*G*3) row.
diff::Matrix grid_row(std::span<const std::uint8_t> grid);

/// phi over raw input rows, normalised when the model says so. Thread-safe on
/// a shared model.
diff::Matrix embed_rows(const EncoderModel& model, const Eigen::Ref<const diff::Matrix>& inputs);

/// Row k is phi(frame k). Throws DimensionError on a grid-size mismatch.
diff::Matrix embed_sequence(const EncoderModel& model, const demo::VideoView& video);
diff::Matrix embed_frames(const EncoderModel& model, const demo::VideoView& video, std::span<const int> indices);

/// Tape handles for a model's trainable tensors.
struct ModelVars {
  diff::MlpVars encoder;
  std::optional<diff::MlpVars> head;
  std::optional<diff::MlpVars> decoder;
  std::optional<diff::Var> log_temperature;
};

/// Trainable tensors in a fixed order: encoder, head, decoder, temperature.
std::vector<diff::Tensor*> trainable_tensors(EncoderModel& model);

ModelVars bind_model(diff::Tape& tape, const EncoderModel& model);
/// Gradients for `trainable_tensors(model)`, in the same order.
std::vector<diff::Tensor> collect_model_grads(const diff::Tape& tape, const EncoderModel& model, const ModelVars& vars);
diff::Var embed_on_tape(diff::Tape& tape, const EncoderModel& model, const ModelVars& vars, diff::Var inputs);

diff::Checkpoint to_checkpoint(const EncoderModel& model);
EncoderModel from_checkpoint(const diff::Checkpoint& ckpt);

}  // namespace xirl::repr
