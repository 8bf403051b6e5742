#include "xirl/reward/reward_model.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "xirl/common/csv.hpp"
#include "xirl/common/errors.hpp"

namespace xirl::reward {

DistanceKind parse_distance_kind(std::string_view name) {
  if (name == "squared") return DistanceKind::kSquared;
  if (name == "euclidean") return DistanceKind::kEuclidean;
  throw ConfigError("unknown distance kind '" + std::string(name) + "'");
}

std::string_view to_string(DistanceKind kind) { return kind == DistanceKind::kSquared ? "squared" : "euclidean"; }

double embedding_distance(const Eigen::Ref<const Eigen::VectorXd>& e, const Eigen::Ref<const Eigen::VectorXd>& g,
                          DistanceKind kind) {
  if (e.size() != g.size()) throw DimensionError("embedding and goal dimensions differ");
  const double sq = (e - g).squaredNorm();
  return kind == DistanceKind::kSquared ? sq : std::sqrt(sq);
}

Eigen::VectorXd goal_from_embeddings(const Eigen::Ref<const diff::Matrix>& last_frames) {
  if (last_frames.rows() == 0) throw ContractError("goal: no demonstrations");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(last_frames.cols());
  for (Eigen::Index i = 0; i < last_frames.rows(); ++i) g += last_frames.row(i).transpose();
  return g / static_cast<double>(last_frames.rows());
}

double kappa_from_embeddings(const Eigen::Ref<const diff::Matrix>& first_frames,
                             const Eigen::Ref<const Eigen::VectorXd>& g, DistanceKind kind) {
  if (first_frames.rows() == 0) throw ContractError("kappa: no demonstrations");
  double total = 0.0;
  for (Eigen::Index i = 0; i < first_frames.rows(); ++i) {
    total += embedding_distance(first_frames.row(i).transpose(), g, kind);
  }
  const double kappa = total / static_cast<double>(first_frames.rows());
  if (!(kappa >= 1e-9)) {
    throw NumericError("kappa is degenerate (" + std::to_string(kappa) +
                       "): first-frame embeddings already sit at the goal");
  }
  return kappa;
}

namespace {

diff::Matrix endpoint_embeddings(const repr::EncoderModel& encoder, std::span<const demo::VideoView> videos,
                                 bool last) {
  if (videos.empty()) throw ContractError("reward: no demonstrations");
  diff::Matrix inputs(static_cast<Eigen::Index>(videos.size()), static_cast<Eigen::Index>(encoder.input_dim()));
  for (std::size_t i = 0; i < videos.size(); ++i) {
    if (videos[i].grid_size() != encoder.grid_size) throw DimensionError("reward: video grid size differs from encoder");
    const int k = last ? videos[i].length() - 1 : 0;
    inputs.row(static_cast<Eigen::Index>(i)) = repr::grid_row(videos[i].frame(k));
  }
  return repr::embed_rows(encoder, inputs);
}

}  // namespace

Eigen::VectorXd compute_goal(const repr::EncoderModel& encoder, std::span<const demo::VideoView> videos) {
  return goal_from_embeddings(endpoint_embeddings(encoder, videos, true));
}

double compute_kappa(const repr::EncoderModel& encoder, std::span<const demo::VideoView> videos,
                     const Eigen::Ref<const Eigen::VectorXd>& g, DistanceKind kind) {
  return kappa_from_embeddings(endpoint_embeddings(encoder, videos, false), g, kind);
}

Eigen::VectorXd RewardModel::from_embeddings(const Eigen::Ref<const diff::Matrix>& embeddings) const {
  Eigen::VectorXd r(embeddings.rows());
  if (is_classifier()) {
    const diff::Matrix logits = diff::forward_mlp(*encoder.head, embeddings);
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = 1.0 / (1.0 + std::exp(-logits(i, 0)));
    return r;
  }
  if (!goal || !kappa) throw ConfigError("reward model has no goal embedding or kappa");
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    r(i) = -embedding_distance(embeddings.row(i).transpose(), *goal, distance) / *kappa;
  }
  return r;
}

double RewardModel::operator()(std::span<const std::uint8_t> grid) const {
  if (grid.size() != encoder.input_dim()) {
    throw DimensionError("reward: observation has " + std::to_string(grid.size()) + " cells, encoder expects " +
                         std::to_string(encoder.input_dim()));
  }
  return from_embeddings(repr::embed_rows(encoder, repr::grid_row(grid)))(0);
}

RewardModel build_reward_model(repr::EncoderModel encoder, std::span<const demo::Demonstration> demos,
                               DistanceKind kind) {
  diff::round_to_f32(encoder.encoder);
  if (encoder.head) diff::round_to_f32(*encoder.head);
  if (encoder.decoder) diff::round_to_f32(*encoder.decoder);
  if (encoder.log_temperature) encoder.log_temperature->values()[0] = static_cast<float>(encoder.log_temperature->values()[0]);
  RewardModel m;
  m.distance = kind;
  if (encoder.algorithm != repr::Algorithm::kGoalClassifier) {
    const auto videos = demo::views(demos);
    m.goal = compute_goal(encoder, videos);
    m.kappa = compute_kappa(encoder, videos, *m.goal, kind);
  }
  m.encoder = std::move(encoder);
  return m;
}

std::vector<double> reward_trace(const RewardModel& model, const demo::VideoView& video) {
  const Eigen::VectorXd r = model.from_embeddings(repr::embed_sequence(model.encoder, video));
  return {r.data(), r.data() + r.size()};
}

void write_trace_csv(std::ostream& out, std::span<const double> learned, const demo::VideoView& video) {
  if (learned.size() != static_cast<std::size_t>(video.length())) throw DimensionError("trace length differs from video");
  CsvWriter w(out, {"frame_index", "learned_reward", "env_reward"});
  for (std::size_t k = 0; k < learned.size(); ++k) {
    w.row({double(k), learned[k], double(video.env_reward(static_cast<int>(k)))});
  }
}

diff::Checkpoint to_checkpoint(const RewardModel& model) {
  diff::Checkpoint c = repr::to_checkpoint(model.encoder);
  c.metadata["distance"] = std::string(to_string(model.distance));
  if (model.goal) c.metadata["goal"] = std::vector<double>(model.goal->data(), model.goal->data() + model.goal->size());
  if (model.kappa) c.metadata["kappa"] = *model.kappa;
  return c;
}

RewardModel reward_model_from_checkpoint(const diff::Checkpoint& ckpt) {
  RewardModel m;
  m.encoder = repr::from_checkpoint(ckpt);
  const auto& meta = ckpt.metadata;
  try {
    m.distance = parse_distance_kind(meta.value("distance", std::string("squared")));
    if (meta.contains("goal")) {
      const auto g = meta.at("goal").get<std::vector<double>>();
      m.goal = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
    }
    if (meta.contains("kappa")) m.kappa = meta.at("kappa").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("reward metadata: ") + ex.what());
  }
  if (!m.is_classifier()) {
    if (!m.goal || !m.kappa) throw ConfigError("checkpoint has no goal embedding and kappa; run train-repr to fit them");
    if (m.goal->size() != m.encoder.embedding_dim()) throw FormatError("goal embedding has the wrong dimension");
    if (!(*m.kappa > 0.0)) throw FormatError("kappa must be positive");
  }
  return m;
}

}  // namespace xirl::reward
