#include <benchmark/benchmark.h>

#include <random>

#include "xirl/diffcore/tape.hpp"
#include "xirl/env/oracle.hpp"
#include "xirl/env/render.hpp"
#include "xirl/repr/encoder.hpp"
#include "xirl/repr/losses.hpp"
#include "xirl/rl/sac.hpp"

namespace {

using namespace xirl;
using diff::Matrix;

Matrix random_frames(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// 40 frames through the default 64x64 encoder.
void BM_EncoderForward(benchmark::State& state) {
  std::mt19937_64 rng(0);
  const auto model = repr::make_encoder(repr::Algorithm::kTcc, {}, 1.0, rng);
  const Matrix x = random_frames(40, static_cast<Eigen::Index>(model.input_dim()), rng);
  for (auto _ : state) benchmark::DoNotOptimize(repr::embed_rows(model, x));
  state.SetItemsProcessed(state.iterations() * 40);
}
BENCHMARK(BM_EncoderForward)->Unit(benchmark::kMillisecond);

// Batch of 4 sequences x 40 frames x 32 dims, loss plus backward.
void BM_TccLossBackward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Matrix> embs(4, Matrix(40, 32));
  for (auto& e : embs) {
    for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = n(rng);
  }
  const auto times = repr::normalized_times(40);
  for (auto _ : state) {
    diff::Tape tape;
    std::vector<repr::SequenceVar> batch;
    for (const auto& e : embs) batch.push_back({tape.variable(e), times});
    const auto loss = repr::tcc_loss(tape, batch, 1.0);
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.scalar(loss));
  }
}
BENCHMARK(BM_TccLossBackward)->Unit(benchmark::kMillisecond);

// One SAC update at the default sizes (batch 256, 2x256 hidden).
void BM_SacUpdate(benchmark::State& state) {
  std::mt19937_64 rng(2);
  rl::SacConfig config;
  auto agent = rl::make_agent(env::kStackedStateDim, 2, config, rng);
  rl::Batch b;
  b.states = random_frames(256, env::kStackedStateDim, rng);
  b.actions = random_frames(256, 2, rng);
  b.rewards = random_frames(256, 1, rng);
  b.next_states = random_frames(256, env::kStackedStateDim, rng);
  b.not_done = Matrix::Ones(256, 1);
  for (auto _ : state) benchmark::DoNotOptimize(rl::update(agent, b, rng));
}
BENCHMARK(BM_SacUpdate)->Unit(benchmark::kMillisecond);

// Oracle step plus a 64x64 render.
void BM_EnvStepRender(benchmark::State& state) {
  auto s = env::reset(env::Embodiment::kGripper, 0);
  std::vector<std::uint8_t> frame(static_cast<std::size_t>(env::kDefaultGrid * env::kDefaultGrid * env::kChannels));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    if (s.step >= env::spec(s.embodiment).horizon) s = env::reset(env::Embodiment::kGripper, ++seed);
    s = env::step(s, env::oracle_policy(s)).state;
    env::render_into(s, env::kDefaultGrid, frame.data());
    benchmark::DoNotOptimize(frame.data());
  }
}
BENCHMARK(BM_EnvStepRender)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
