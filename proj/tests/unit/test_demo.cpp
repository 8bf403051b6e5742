#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <numeric>

#include "support.hpp"
#include "xirl/common/bytes.hpp"
#include "xirl/common/errors.hpp"
#include "xirl/demo/demo_io.hpp"
#include "xirl/demo/generate.hpp"
#include "xirl/demo/sampler.hpp"
#include "xirl/env/render.hpp"

namespace xirl::demo {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = testing::slurp(e.path());
  }
  return out;
}

TEST(Generate, SameSeedGivesIdenticalDirectories) {
  TempDir a("gen_a"), b("gen_b");
  save_demo_set(generate_demos(env::Embodiment::kLongstick, 10, 7, {32}), a.str());
  save_demo_set(generate_demos(env::Embodiment::kLongstick, 10, 7, {32}), b.str());
  const auto ta = tree_bytes(a.path());
  EXPECT_EQ(ta.size(), 11u);  // ten demos plus the manifest
  EXPECT_EQ(ta, tree_bytes(b.path()));
}

TEST(Generate, EveryDemoSucceedsAndMatchesItsSeed) {
  const DemoSet set = generate_demos(env::Embodiment::kGripper, 6, 1, {32});
  ASSERT_EQ(set.demos.size(), 6u);
  const auto& entry = set.manifest.entries.at(0);
  EXPECT_EQ(entry.count, 6);
  EXPECT_GE(entry.attempts, 6);
  for (std::size_t i = 0; i < set.demos.size(); ++i) {
    const auto& d = set.demos[i];
    EXPECT_TRUE(d.success());
    EXPECT_GE(d.length(), 2);
    EXPECT_EQ(d.rewards.back(), 1.0f);
    for (int k = 0; k + 1 < d.length(); ++k) EXPECT_LT(d.rewards[static_cast<std::size_t>(k)], 1.0f);
    EXPECT_EQ(record_episode(env::Embodiment::kGripper, entry.episode_seeds[i], 32), d);
    // first frame is the reset observation
    EXPECT_EQ(env::render(env::reset(env::Embodiment::kGripper, entry.episode_seeds[i]), 32).cells,
              std::vector<std::uint8_t>(d.grid(0).begin(), d.grid(0).end()));
  }
}

TEST(Generate, LengthOrderingAcrossEmbodiments) {
  std::vector<double> mean;
  for (auto e : env::kAllEmbodiments) {
    const DemoSet s = generate_demos(e, 100, 0, {16});
    double sum = 0;
    for (const auto& d : s.demos) sum += d.length();
    mean.push_back(sum / 100.0);
  }
  EXPECT_LT(mean[0], mean[1]);
  EXPECT_LT(mean[1], mean[2]);
  EXPECT_LT(mean[2], mean[3]);
}

TEST(Generate, EpisodeSeedsDiffer) {
  EXPECT_NE(episode_seed(0, 0), episode_seed(0, 1));
  EXPECT_NE(episode_seed(0, 0), episode_seed(1, 0));
  EXPECT_EQ(episode_seed(5, 3), episode_seed(5, 3));
  EXPECT_THROW(generate_demos(env::Embodiment::kLongstick, 0, 0), ContractError);
}

TEST(DemoIo, EncodeDecodeRoundTrip) {
  const DemoSet set = generate_demos(env::Embodiment::kMediumstick, 2, 4, {24});
  for (const auto& d : set.demos) {
    const auto bytes = encode_demo(d);
    const Demonstration back = decode_demo(bytes, "mem");
    EXPECT_EQ(back, d);
    EXPECT_EQ(encode_demo(back), bytes);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "XMDM");
  }
}

TEST(DemoIo, SaveLoadSaveIsByteIdentical) {
  TempDir a("io_a"), b("io_b");
  const DemoSet set = merge({generate_demos(env::Embodiment::kLongstick, 3, 2, {16}),
                             generate_demos(env::Embodiment::kShortstick, 2, 2, {16})});
  save_demo_set(set, a.str());
  const DemoSet back = load_demo_set(a.str());
  EXPECT_EQ(back.manifest, set.manifest);
  EXPECT_EQ(back.demos, set.demos);
  save_demo_set(back, b.str());
  EXPECT_EQ(tree_bytes(a.path()), tree_bytes(b.path()));
  EXPECT_TRUE(fs::exists(demo_path(a.str(), env::Embodiment::kShortstick, 1)));
}

TEST(DemoIo, CorruptionIsAFormatError) {
  const DemoSet set = generate_demos(env::Embodiment::kLongstick, 1, 0, {16});
  const auto good = encode_demo(set.demos[0]);

  auto bad_len = good;
  bad_len[7] ^= 0x01;  // frame count
  EXPECT_THROW(decode_demo(bad_len, "x"), FormatError);

  auto zero_len = good;
  zero_len[7] = zero_len[8] = zero_len[9] = zero_len[10] = 0;
  EXPECT_THROW(decode_demo(zero_len, "x"), FormatError);

  auto bad_magic = good;
  bad_magic[0] = 'Q';
  EXPECT_THROW(decode_demo(bad_magic, "x"), FormatError);

  auto flipped = good;
  flipped[good.size() / 2] ^= 0x40;  // payload bit flip caught by the checksum
  EXPECT_THROW(decode_demo(flipped, "x"), FormatError);

  auto cut = good;
  cut.resize(good.size() - 1);
  EXPECT_THROW(decode_demo(cut, "x"), FormatError);
}

TEST(DemoIo, ManifestMismatchIsAConsistencyError) {
  TempDir dir("manifest");
  save_demo_set(generate_demos(env::Embodiment::kLongstick, 3, 0, {16}), dir.str());
  fs::remove(demo_path(dir.str(), env::Embodiment::kLongstick, 2));
  EXPECT_THROW(load_demo_set(dir.str()), ConsistencyError);

  TempDir extra("manifest_extra");
  save_demo_set(generate_demos(env::Embodiment::kLongstick, 2, 0, {16}), extra.str());
  fs::copy_file(demo_path(extra.str(), env::Embodiment::kLongstick, 0),
                demo_path(extra.str(), env::Embodiment::kLongstick, 2));
  EXPECT_THROW(load_demo_set(extra.str()), ConsistencyError);
}

TEST(DemoIo, ManifestJsonRoundTripAndStrictness) {
  const DemoSet set = generate_demos(env::Embodiment::kGripper, 2, 9, {16});
  const std::string text = manifest_to_json(set.manifest);
  EXPECT_EQ(manifest_from_json(text, "m"), set.manifest);
  EXPECT_THROW(manifest_from_json("{", "m"), FormatError);
  EXPECT_THROW(manifest_from_json(R"({"task":"sweep_to_top"})", "m"), FormatError);
}

TEST(DemoIo, SavingOneEmbodimentKeepsOthers) {
  TempDir dir("merge");
  save_demo_set(generate_demos(env::Embodiment::kLongstick, 2, 0, {16}), dir.str());
  save_demo_set(generate_demos(env::Embodiment::kGripper, 2, 0, {16}), dir.str());
  const DemoSet back = load_demo_set(dir.str());
  EXPECT_EQ(back.manifest.entries.size(), 2u);
  EXPECT_EQ(back.of(env::Embodiment::kLongstick).size(), 2u);
}

TEST(Sampler, FullUniformDrawCoversEveryFrame) {
  std::mt19937_64 rng(0);
  const auto idx = sample_frames(12, {SamplerMode::kUniform, 12}, rng);
  std::vector<int> expect(12);
  std::iota(expect.begin(), expect.end(), 0);
  EXPECT_EQ(idx, expect);
}

TEST(Sampler, ContiguousForced) {
  std::mt19937_64 rng(0);
  EXPECT_EQ(sample_frames(3, {SamplerMode::kContiguous, 3}, rng), (std::vector<int>{0, 1, 2}));
  for (int t = 0; t < 50; ++t) {
    const auto idx = sample_frames(20, {SamplerMode::kContiguous, 5}, rng);
    ASSERT_EQ(idx.size(), 5u);
    EXPECT_EQ(idx.back() - idx.front(), 4);
    EXPECT_LE(idx.back(), 19);
  }
}

TEST(Sampler, EvenlySpacedEndpoints) {
  std::mt19937_64 rng(0);
  const auto idx = sample_frames(10, {SamplerMode::kEvenlySpaced, 4}, rng);
  EXPECT_EQ(idx, (std::vector<int>{0, 3, 6, 9}));
  EXPECT_EQ(sample_frames(5, {SamplerMode::kEvenlySpaced, 1}, rng), (std::vector<int>{0}));
}

TEST(Sampler, RejectsBadSizes) {
  std::mt19937_64 rng(0);
  EXPECT_THROW(sample_frames(5, {SamplerMode::kUniform, 6}, rng), ContractError);
  EXPECT_THROW(sample_frames(5, {SamplerMode::kUniform, 0}, rng), ContractError);
  EXPECT_THROW(parse_sampler_mode("random"), ConfigError);
}

TEST(Sampler, UniformIsFlatUnderChiSquare) {
  // 10^4 draws of 3 frames from 10; every frame should appear 3000 times.
  std::mt19937_64 rng(123);
  std::vector<int> counts(10, 0);
  for (int t = 0; t < 10000; ++t) {
    const auto idx = sample_frames(10, {SamplerMode::kUniform, 3}, rng);
    ASSERT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    ASSERT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
    for (int i : idx) ++counts[static_cast<std::size_t>(i)];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 3000.0) * (c - 3000.0) / 3000.0;
  // 9 degrees of freedom, upper 0.1% point.
  EXPECT_LT(chi2, 27.877);
}

}  // namespace
}  // namespace xirl::demo
