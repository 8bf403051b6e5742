#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "xirl/common/csv.hpp"
#include "xirl/common/errors.hpp"
#include "xirl/demo/generate.hpp"
#include "xirl/diffcore/checkpoint.hpp"
#include "xirl/reward/reward_model.hpp"

namespace xirl::reward {
namespace {

using diff::Matrix;

RewardModel manual(Eigen::VectorXd g, double kappa) {
  RewardModel m;
  m.goal = std::move(g);
  m.kappa = kappa;
  return m;
}

repr::EncoderModel small_encoder(std::uint64_t seed, repr::Algorithm a = repr::Algorithm::kTcc) {
  std::mt19937_64 rng(seed);
  return repr::make_encoder(a, {16, {24}, 6, false}, 1.0, rng);
}

TEST(Goal, MeanOfLastFrames) {
  Matrix last(2, 2);
  last << 1, 0, 0, 1;
  EXPECT_TRUE(goal_from_embeddings(last).isApprox(Eigen::Vector2d(0.5, 0.5)));
  EXPECT_TRUE(goal_from_embeddings(last.topRows(1)).isApprox(Eigen::Vector2d(1, 0)));
  EXPECT_THROW(goal_from_embeddings(Matrix(0, 2)), ContractError);
}

TEST(Goal, MatchesScalarRecomputationOverDemos) {
  const auto enc = small_encoder(1);
  const auto demos = demo::generate_demos(env::Embodiment::kMediumstick, 10, 2, {16}).demos;
  const auto videos = demo::views(demos);
  const Eigen::VectorXd g = compute_goal(enc, videos);
  Eigen::VectorXd ref = Eigen::VectorXd::Zero(6);
  for (const auto& d : demos) {
    // independent path: forward the raw last grid through the MLP
    Matrix x(1, static_cast<Eigen::Index>(d.frame_bytes()));
    const auto last = d.grid(d.length() - 1);
    for (std::size_t i = 0; i < last.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = last[i];
    ref += diff::forward_mlp(enc.encoder, x).row(0).transpose();
  }
  ref /= 10.0;
  EXPECT_LT((g - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kappa, SquaredDistanceExamples) {
  Matrix first(1, 2);
  first << 3, 4;
  EXPECT_DOUBLE_EQ(kappa_from_embeddings(first, Eigen::Vector2d::Zero(), DistanceKind::kSquared), 25.0);
  EXPECT_DOUBLE_EQ(kappa_from_embeddings(first, Eigen::Vector2d::Zero(), DistanceKind::kEuclidean), 5.0);
  Matrix two(2, 1);
  two << std::sqrt(10.0), std::sqrt(30.0);
  EXPECT_NEAR(kappa_from_embeddings(two, Eigen::VectorXd::Zero(1), DistanceKind::kSquared), 20.0, 1e-12);
}

TEST(Kappa, DegenerateIsAnError) {
  Matrix first(3, 2);
  first.setConstant(0.25);
  EXPECT_THROW(kappa_from_embeddings(first, Eigen::Vector2d(0.25, 0.25), DistanceKind::kSquared), NumericError);
}

TEST(Reward, ZeroAtGoalAndScaledDistance) {
  const RewardModel m = manual(Eigen::Vector2d::Zero(), 5.0);
  Matrix e(2, 2);
  e << 0, 0, 3, 4;
  const Eigen::VectorXd r = m.from_embeddings(e);
  EXPECT_EQ(r(0), 0.0);
  EXPECT_DOUBLE_EQ(r(1), -5.0);
}

TEST(Reward, MonotoneInDistance) {
  const RewardModel m = manual(Eigen::Vector3d(0.1, -0.2, 0.3), 2.0);
  Matrix e(5, 3);
  for (int k = 0; k < 5; ++k) e.row(k) = (m.goal->transpose().array() + 0.3 * k).matrix();
  const Eigen::VectorXd r = m.from_embeddings(e);
  for (int k = 1; k < 5; ++k) EXPECT_LT(r(k), r(k - 1));
}

TEST(Reward, TranslationAndScaleInvariance) {
  std::mt19937_64 rng(3);
  const Matrix first = testing::random_matrix(6, 4, rng), last = testing::random_matrix(6, 4, rng),
               probe = testing::random_matrix(10, 4, rng);
  auto fit = [](const Matrix& f, const Matrix& l) {
    const Eigen::VectorXd g = goal_from_embeddings(l);
    return manual(g, kappa_from_embeddings(f, g, DistanceKind::kSquared));
  };
  const Eigen::VectorXd base = fit(first, last).from_embeddings(probe);

  const Eigen::RowVectorXd shift = testing::random_matrix(1, 4, rng, 5.0).row(0);
  Matrix f2 = first, l2 = last, p2 = probe;
  f2.rowwise() += shift;
  l2.rowwise() += shift;
  p2.rowwise() += shift;
  EXPECT_LT((fit(f2, l2).from_embeddings(p2) - base).cwiseAbs().maxCoeff(), 1e-9);

  const RewardModel scaled = fit(3.0 * first, 3.0 * last);
  EXPECT_NEAR(*scaled.kappa, 9.0 * *fit(first, last).kappa, 1e-9);
  EXPECT_NEAR(scaled.from_embeddings(3.0 * first).mean(), -1.0, 1e-9);
}

TEST(Reward, FirstFramesAverageMinusOne) {
  const auto demos = demo::generate_demos(env::Embodiment::kShortstick, 8, 4, {16}).demos;
  const RewardModel m = build_reward_model(small_encoder(4), demos);
  double sum = 0.0;
  for (const auto& d : demos) sum += reward_trace(m, demo::VideoView(d)).front();
  EXPECT_NEAR(sum / 8.0, -1.0, 1e-9);
  // the last-frame embeddings average to g, so their distances are small on average
  EXPECT_GT(m(demos[0].grid(demos[0].length() - 1)), -1.0);
}

TEST(Reward, TraceLengthAndCsv) {
  const auto demos = demo::generate_demos(env::Embodiment::kLongstick, 2, 4, {16}).demos;
  const RewardModel m = build_reward_model(small_encoder(5), demos);
  const demo::VideoView v(demos[1]);
  const auto trace = reward_trace(m, v);
  EXPECT_EQ(trace.size(), static_cast<std::size_t>(v.length()));
  std::ostringstream os;
  write_trace_csv(os, trace, v);
  std::istringstream is(os.str());
  const auto t = parse_csv(is, "trace");
  EXPECT_EQ(t.header, (std::vector<std::string>{"frame_index", "learned_reward", "env_reward"}));
  EXPECT_EQ(t.rows.size(), trace.size());
  EXPECT_EQ(t.rows.back()[2], 1.0);
  EXPECT_THROW(write_trace_csv(os, std::span(trace).first(1), v), DimensionError);
}

TEST(Reward, ZeroEncoderGivesConstantTrace) {
  auto enc = small_encoder(6);
  for (auto* t : enc.encoder.tensors()) std::fill(t->values().begin(), t->values().end(), 0.0);
  const auto demos = demo::generate_demos(env::Embodiment::kLongstick, 2, 1, {16}).demos;
  // g equals every embedding, so kappa cannot be fit
  EXPECT_THROW(build_reward_model(enc, demos), NumericError);
  RewardModel m;
  m.encoder = enc;
  m.goal = Eigen::VectorXd::Ones(6);
  m.kappa = 2.0;
  const auto trace = reward_trace(m, demo::VideoView(demos[0]));
  for (double r : trace) EXPECT_EQ(r, trace.front());
}

TEST(Reward, CheckpointRoundTripReproducesRewards) {
  const auto demos = demo::generate_demos(env::Embodiment::kGripper, 3, 2, {16}).demos;
  for (auto kind : {DistanceKind::kSquared, DistanceKind::kEuclidean}) {
    const RewardModel m = build_reward_model(small_encoder(7), demos, kind);
    const auto back = reward_model_from_checkpoint(diff::decode_checkpoint(diff::encode_checkpoint(to_checkpoint(m))));
    EXPECT_EQ(back.distance, kind);
    EXPECT_EQ(*back.kappa, *m.kappa);
    EXPECT_EQ(*back.goal, *m.goal);
    EXPECT_EQ(reward_trace(back, demo::VideoView(demos[0])), reward_trace(m, demo::VideoView(demos[0])));
  }
}

TEST(Reward, MissingGoalIsAConfigError) {
  const auto ckpt = repr::to_checkpoint(small_encoder(8));
  EXPECT_THROW(reward_model_from_checkpoint(ckpt), ConfigError);
}

TEST(Reward, ClassifierOutputsProbabilities) {
  const auto demos = demo::generate_demos(env::Embodiment::kLongstick, 2, 3, {16}).demos;
  const RewardModel m = build_reward_model(small_encoder(9, repr::Algorithm::kGoalClassifier), demos);
  EXPECT_TRUE(m.is_classifier());
  EXPECT_FALSE(m.goal.has_value());
  for (double r : reward_trace(m, demo::VideoView(demos[0]))) {
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
  }
  const auto back = reward_model_from_checkpoint(diff::decode_checkpoint(diff::encode_checkpoint(to_checkpoint(m))));
  EXPECT_TRUE(back.is_classifier());
}

TEST(Reward, GridSizeMismatch) {
  const auto demos = demo::generate_demos(env::Embodiment::kLongstick, 2, 3, {16}).demos;
  const RewardModel m = build_reward_model(small_encoder(10), demos);
  const std::vector<std::uint8_t> wrong(32 * 32 * 3, 0);
  EXPECT_THROW((void)m(wrong), DimensionError);
}

}  // namespace
}  // namespace xirl::reward
