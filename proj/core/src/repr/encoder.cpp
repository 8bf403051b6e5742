#include "xirl/repr/encoder.hpp"

#include <cmath>
#include <string>

#include "xirl/common/errors.hpp"

namespace xirl::repr {

Algorithm parse_algorithm(std::string_view name) {
  if (name == "tcc") return Algorithm::kTcc;
  if (name == "tcn") return Algorithm::kTcn;
  if (name == "lifs") return Algorithm::kLifs;
  if (name == "goal_classifier") return Algorithm::kGoalClassifier;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kTcc: return "tcc";
    case Algorithm::kTcn: return "tcn";
    case Algorithm::kLifs: return "lifs";
    case Algorithm::kGoalClassifier: return "goal_classifier";
  }
  return "tcc";
}

EncoderModel make_encoder(Algorithm algorithm, const EncoderShape& shape, double initial_temperature,
                          std::mt19937_64& rng) {
  if (shape.embedding_dim < 1) throw ConfigError("embedding dim must be positive");
  EncoderModel m;
  m.algorithm = algorithm;
  m.grid_size = shape.grid_size;
  m.normalize = shape.normalize;
  std::vector<std::size_t> widths = {m.input_dim()};
  widths.insert(widths.end(), shape.hidden.begin(), shape.hidden.end());
  widths.push_back(static_cast<std::size_t>(shape.embedding_dim));
  m.encoder = diff::make_mlp(widths, diff::Activation::kRelu, diff::Activation::kIdentity,
                             diff::InitScheme::kFanInUniform, rng);
  const auto d = static_cast<std::size_t>(shape.embedding_dim);
  switch (algorithm) {
    case Algorithm::kGoalClassifier:
      m.head = diff::make_mlp({d, 1}, diff::Activation::kIdentity, diff::Activation::kIdentity,
                              diff::InitScheme::kFanInUniform, rng);
      break;
    case Algorithm::kLifs: {
      std::vector<std::size_t> dec = {d};
      dec.insert(dec.end(), shape.hidden.rbegin(), shape.hidden.rend());
      dec.push_back(m.input_dim());
      m.decoder = diff::make_mlp(dec, diff::Activation::kRelu, diff::Activation::kIdentity,
                                 diff::InitScheme::kFanInUniform, rng);
      break;
    }
    case Algorithm::kTcn:
      if (!(initial_temperature > 0.0)) throw ConfigError("temperature must be positive");
      m.log_temperature = diff::Tensor({1}, std::log(initial_temperature));
      break;
    case Algorithm::kTcc:
      break;
  }
  return m;
}

diff::Matrix frames_matrix(const demo::VideoView& video, std::span<const int> indices) {
  const auto width = static_cast<Eigen::Index>(video.frame(0).size());
  diff::Matrix x(static_cast<Eigen::Index>(indices.size()), width);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto f = video.frame(indices[r]);
    for (Eigen::Index c = 0; c < width; ++c) x(static_cast<Eigen::Index>(r), c) = f[static_cast<std::size_t>(c)];
  }
  return x;
}

diff::Matrix grid_row(std::span<const std::uint8_t> grid) {
  diff::Matrix x(1, static_cast<Eigen::Index>(grid.size()));
  for (std::size_t c = 0; c < grid.size(); ++c) x(0, static_cast<Eigen::Index>(c)) = grid[c];
  return x;
}

diff::Matrix embed_rows(const EncoderModel& model, const Eigen::Ref<const diff::Matrix>& inputs) {
  if (static_cast<std::size_t>(inputs.cols()) != model.input_dim()) {
    throw DimensionError("encoder expects " + std::to_string(model.input_dim()) + " inputs per frame (grid " +
                         std::to_string(model.grid_size) + "), got " + std::to_string(inputs.cols()));
  }
  diff::Matrix e = diff::forward_mlp(model.encoder, inputs);
  if (model.normalize) {
    for (Eigen::Index r = 0; r < e.rows(); ++r) {
      const double n = e.row(r).norm();
      if (n <= 0.0) throw NumericError("embedding with zero norm cannot be normalised");
      e.row(r) /= n;
    }
  }
  return e;
}

diff::Matrix embed_frames(const EncoderModel& model, const demo::VideoView& video, std::span<const int> indices) {
  if (video.grid_size() != model.grid_size) {
    throw DimensionError("video rendered at grid " + std::to_string(video.grid_size()) + ", encoder trained at " +
                         std::to_string(model.grid_size));
  }
  return embed_rows(model, frames_matrix(video, indices));
}

diff::Matrix embed_sequence(const EncoderModel& model, const demo::VideoView& video) {
  std::vector<int> all(static_cast<std::size_t>(video.length()));
  for (int k = 0; k < video.length(); ++k) all[static_cast<std::size_t>(k)] = k;
  return embed_frames(model, video, all);
}

std::vector<diff::Tensor*> trainable_tensors(EncoderModel& model) {
  std::vector<diff::Tensor*> out = model.encoder.tensors();
  if (model.head) {
    auto h = model.head->tensors();
    out.insert(out.end(), h.begin(), h.end());
  }
  if (model.decoder) {
    auto d = model.decoder->tensors();
    out.insert(out.end(), d.begin(), d.end());
  }
  if (model.log_temperature) out.push_back(&*model.log_temperature);
  return out;
}

ModelVars bind_model(diff::Tape& tape, const EncoderModel& model) {
  ModelVars v;
  v.encoder = diff::bind_parameters(tape, model.encoder);
  if (model.head) v.head = diff::bind_parameters(tape, *model.head);
  if (model.decoder) v.decoder = diff::bind_parameters(tape, *model.decoder);
  if (model.log_temperature) v.log_temperature = tape.parameter(*model.log_temperature);
  return v;
}

std::vector<diff::Tensor> collect_model_grads(const diff::Tape& tape, const EncoderModel& model,
                                              const ModelVars& vars) {
  std::vector<diff::Tensor> out = diff::collect_grads(tape, model.encoder, vars.encoder);
  if (model.head) {
    auto h = diff::collect_grads(tape, *model.head, *vars.head);
    out.insert(out.end(), h.begin(), h.end());
  }
  if (model.decoder) {
    auto d = diff::collect_grads(tape, *model.decoder, *vars.decoder);
    out.insert(out.end(), d.begin(), d.end());
  }
  if (model.log_temperature) out.push_back(tape.grad(*vars.log_temperature, {1}));
  return out;
}

diff::Var embed_on_tape(diff::Tape& tape, const EncoderModel& model, const ModelVars& vars, diff::Var inputs) {
  diff::Var e = diff::forward_mlp(tape, model.encoder, vars.encoder, inputs);
  return model.normalize ? tape.normalize_rows(e) : e;
}

diff::Checkpoint to_checkpoint(const EncoderModel& model) {
  diff::Checkpoint c;
  diff::store_mlp(c, "encoder", model.encoder);
  if (model.head) diff::store_mlp(c, "head", *model.head);
  if (model.decoder) diff::store_mlp(c, "decoder", *model.decoder);
  if (model.log_temperature) c.tensors.emplace_back("log_temperature", *model.log_temperature);
  auto& meta = c.metadata;
  meta["kind"] = "encoder";
  meta["algorithm"] = std::string(to_string(model.algorithm));
  meta["embedding_dim"] = model.embedding_dim();
  meta["normalize"] = model.normalize;
  meta["grid_size"] = model.grid_size;
  meta["embodiments"] = nlohmann::json::array();
  for (auto e : model.embodiments) meta["embodiments"].push_back(std::string(env::name(e)));
  meta["training"] = model.info;
  return c;
}

EncoderModel from_checkpoint(const diff::Checkpoint& ckpt) {
  EncoderModel m;
  try {
    const auto& meta = ckpt.metadata;
    m.algorithm = parse_algorithm(meta.at("algorithm").get<std::string>());
    m.normalize = meta.at("normalize").get<bool>();
    m.grid_size = meta.at("grid_size").get<int>();
    for (const auto& e : meta.at("embodiments")) {
      const auto emb = env::parse_embodiment(e.get<std::string>());
      if (!emb) throw FormatError("checkpoint lists unknown embodiment " + e.dump());
      m.embodiments.push_back(*emb);
    }
    m.info = meta.value("training", nlohmann::json::object());
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("encoder checkpoint metadata: ") + ex.what());
  }
  m.encoder = diff::load_mlp(ckpt, "encoder");
  if (ckpt.metadata.at("networks").contains("head")) m.head = diff::load_mlp(ckpt, "head");
  if (ckpt.metadata.at("networks").contains("decoder")) m.decoder = diff::load_mlp(ckpt, "decoder");
  if (ckpt.has_tensor("log_temperature")) m.log_temperature = ckpt.tensor("log_temperature");
  if (m.encoder.in_features() != m.input_dim()) throw FormatError("encoder input width does not match grid size");
  if (static_cast<int>(m.encoder.out_features()) != ckpt.metadata.at("embedding_dim").get<int>()) {
    throw FormatError("encoder output width does not match embedding_dim");
  }
  return m;
}

}  // namespace xirl::repr
