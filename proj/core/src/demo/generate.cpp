#include "xirl/demo/generate.hpp"

#include <deque>
#include <algorithm>

#include "xirl/common/errors.hpp"
#include "xirl/env/oracle.hpp"

namespace xirl::demo {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void append_frame(Demonstration& d, const env::EnvState& s, const env::Action& a, double reward) {
  const std::size_t offset = d.grids.size();
  d.grids.resize(offset + d.frame_bytes());
  env::render_into(s, d.grid_size, d.grids.data() + offset);
  const auto sv = env::state_vector(s);
  std::array<float, env::kStateDim> state{};
  for (std::size_t i = 0; i < sv.size(); ++i) state[i] = static_cast<float>(sv[i]);
  d.states.push_back(state);
  d.actions.push_back({static_cast<float>(a.forward), static_cast<float>(a.turn), static_cast<float>(a.grip)});
  d.rewards.push_back(static_cast<float>(reward));
}

}  // namespace

std::uint64_t episode_seed(std::uint64_t base_seed, int attempt) {
  return splitmix64(base_seed ^ splitmix64(static_cast<std::uint64_t>(attempt)));
}

Demonstration record_episode(env::Embodiment embodiment, std::uint64_t seed, int grid_size) {
  Demonstration d;
  d.embodiment = embodiment;
  d.grid_size = grid_size;
  env::EnvState s = env::reset(embodiment, seed);
  double reward = env::in_zone_fraction(s);
  const int horizon = env::spec(embodiment).horizon;
  const int action_dim = env::spec(embodiment).action_dim;
  while (reward < 1.0 && s.step < horizon) {
    env::Action a = env::oracle_policy(s);
    if (action_dim < 3) a.grip = 0.0;
    append_frame(d, s, a, reward);
    const auto r = env::step(s, a);
    s = r.state;
    reward = r.reward;
  }
  append_frame(d, s, env::Action{}, reward);
  return d;
}

DemoSet generate_demos(env::Embodiment embodiment, int count, std::uint64_t seed, const GenerateOptions& options) {
  if (count < 1) throw ContractError("generate_demos: count must be at least 1");
  if (options.failure_window < 1) throw ContractError("generate_demos: failure window must be positive");
  DemoSet set;
  set.manifest.grid_size = options.grid_size;
  EmbodimentEntry entry;
  entry.embodiment = embodiment;
  entry.seed = seed;
  std::deque<bool> window;
  int attempt = 0;
  while (entry.count < count) {
    const std::uint64_t s = episode_seed(seed, attempt++);
    Demonstration d = record_episode(embodiment, s, options.grid_size);
    const bool ok = d.success();
    window.push_back(ok);
    if (static_cast<int>(window.size()) > options.failure_window) window.pop_front();
    if (ok) {
      set.demos.push_back(std::move(d));
      entry.episode_seeds.push_back(s);
      ++entry.count;
    }
    if (static_cast<int>(window.size()) == options.failure_window) {
      const int failures = static_cast<int>(std::count(window.begin(), window.end(), false));
      if (2 * failures > options.failure_window) {
        throw NumericError("generate_demos: oracle failed " + std::to_string(failures) + " of the last " +
                           std::to_string(options.failure_window) + " " + std::string(env::name(embodiment)) +
                           " episodes (attempt " + std::to_string(attempt) + ")");
      }
    }
  }
  entry.attempts = attempt;
  set.manifest.entries.push_back(std::move(entry));
  return set;
}

DemoSet merge(const std::vector<DemoSet>& sets) {
  DemoSet out;
  if (sets.empty()) return out;
  out.manifest = sets.front().manifest;
  out.manifest.entries.clear();
  for (const auto& s : sets) {
    if (s.manifest.grid_size != out.manifest.grid_size) throw ConsistencyError("merge: grid sizes differ");
    for (const auto& e : s.manifest.entries) {
      for (const auto& have : out.manifest.entries) {
        if (have.embodiment == e.embodiment) {
          throw ConsistencyError("merge: embodiment " + std::string(env::name(e.embodiment)) + " appears twice");
        }
      }
      out.manifest.entries.push_back(e);
    }
    out.demos.insert(out.demos.end(), s.demos.begin(), s.demos.end());
  }
  return out;
}

}  // namespace xirl::demo
