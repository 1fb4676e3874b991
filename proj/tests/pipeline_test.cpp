#include "qrng/pipeline.hpp"

#include <gtest/gtest.h>

#include <random>

#include "qrng/error.hpp"
#include "test_util.hpp"

using namespace qrng;
using namespace qrng::extractor;

TEST(Pipeline, RandomShapesMatchReference) {
  std::mt19937_64 g(77);
  for (int t = 0; t < 40; ++t) {
    ToeplitzConfig cfg;
    cfg.b = 1 + g() % 16;
    const std::size_t K = 4 + g() % 12;  // rounds per frame
    cfg.k_in = K * cfg.b;
    cfg.j = (1 + g() % K) * cfg.b;
    cfg.n_s = cfg.n_b = 1 + g() % 5;
    const std::size_t frames = 1 + g() % (3 * cfg.n_b + 2);
    const auto seed = testutil::random_bits(cfg.seed_bits(), g());
    const auto in = testutil::random_bits(frames * cfg.k_in, g());
    const auto res = pipeline_run(in, cfg, seed);
    EXPECT_EQ(res.output, extract_reference(in, cfg, seed))
        << "j=" << cfg.j << " k=" << cfg.k_in << " b=" << cfg.b << " n_b=" << cfg.n_b << " frames=" << frames;
    EXPECT_LE(res.trace.max_fillers_per_cycle, 1u);
    EXPECT_EQ(res.trace.invocations.size(), frames);
  }
}

TEST(Pipeline, DefaultTiming) {
  ToeplitzConfig cfg;
  const auto seed = make_seed(cfg.seed_bits(), 1);
  const auto in = testutil::random_bits(2 * cfg.n_b * cfg.k_in, 5);
  const auto res = pipeline_run(in, cfg, seed);
  EXPECT_EQ(res.output, extract_reference(in, cfg, seed));
  ASSERT_EQ(res.trace.invocations.size(), 2 * cfg.n_b);
  for (const auto& inv : res.trace.invocations) {
    EXPECT_EQ(inv.acc_cycles, 120u);
    EXPECT_EQ(inv.out_cycles, 53u);
    EXPECT_EQ(inv.block, inv.frame % cfg.n_b);
    EXPECT_LE(inv.acc_start, inv.acc_end);
    EXPECT_LE(inv.acc_end, inv.out_start);
  }
  EXPECT_EQ(res.trace.max_fillers_per_cycle, 1u);
  EXPECT_EQ(res.trace.done_pulses.size(), res.trace.invocations.size());
  EXPECT_EQ(res.trace.collations, 2u);
  EXPECT_EQ(res.trace.flushed_frames, 0u);
}

TEST(Pipeline, PartialCollationIsFlushed) {
  ToeplitzConfig cfg;
  const auto seed = make_seed(cfg.seed_bits(), 2);
  const auto in = testutil::random_bits(7 * cfg.k_in, 6);
  const auto res = pipeline_run(in, cfg, seed);
  EXPECT_EQ(res.output, extract_reference(in, cfg, seed));
  EXPECT_EQ(res.trace.collations, 0u);
  EXPECT_EQ(res.trace.flushed_frames, 7u);
}

TEST(Pipeline, CycleRecording) {
  ToeplitzConfig cfg;
  cfg.n_s = cfg.n_b = 2;
  const auto seed = make_seed(cfg.seed_bits(), 3);
  const auto in = testutil::random_bits(4 * cfg.k_in, 7);
  const auto res = pipeline_run(in, cfg, seed, {.record_cycles = true});
  EXPECT_EQ(res.trace.per_cycle.size(), res.trace.cycles);
  for (const auto& c : res.trace.per_cycle) {
    ASSERT_EQ(c.stages.size(), 2u);
    for (auto f : c.full_buffers) EXPECT_LE(f, 2u);
  }
}

TEST(Pipeline, ClippedRoundsAreRemovedBeforeFraming) {
  ToeplitzConfig cfg;
  cfg.b = 24;
  cfg.k_in = 4 * 24;
  cfg.j = 48;
  cfg.n_s = cfg.n_b = 2;
  std::mt19937 g(9);
  std::vector<std::int16_t> x(50), p(50);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<std::int16_t>(static_cast<int>(g() % 4000) - 2000);
    p[i] = static_cast<std::int16_t>(static_cast<int>(g() % 4000) - 2000);
  }
  x[3] = 2047;
  p[10] = -2048;
  const auto blk = source::SampleBlock::from_codes(x, p, source::Origin::synthetic, 1);
  ASSERT_EQ(blk.clipped_count(), 2u);
  const auto seed = testutil::random_bits(cfg.seed_bits(), 4);
  const auto res = pipeline_run(blk, cfg, seed);
  // 48 clean rounds make 12 whole frames.
  EXPECT_EQ(res.output.size(), 12 * cfg.j);
  EXPECT_EQ(res.output, extract_reference(frame_align(rounds_to_bits(blk), cfg), cfg, seed));
}

TEST(Pipeline, RejectsBadInput) {
  ToeplitzConfig cfg;
  const auto seed = make_seed(cfg.seed_bits(), 1);
  EXPECT_THROW((void)pipeline_run(testutil::random_bits(cfg.k_in + 1, 1), cfg, seed), ValidationError);
  EXPECT_THROW((void)pipeline_run(BitStream{}, cfg, seed), ValidationError);
  cfg.k_in = 72;
  cfg.j = 48;
  EXPECT_THROW((void)pipeline_run(testutil::random_bits(72, 1), cfg, testutil::random_bits(cfg.seed_bits(), 1)),
               ValidationError);
}

TEST(GenerationStage, ShiftWalksTheReversedSeed) {
  ToeplitzConfig cfg;
  cfg.j = 8;
  cfg.k_in = 16;
  cfg.b = 4;
  const auto seed = testutil::random_bits(cfg.seed_bits(), 3);
  GenerationStage gen(cfg, seed);
  gen.reseed();
  EXPECT_EQ(gen.width(), cfg.j + cfg.b - 1);
  // Bit t of the register after s shifts is seed[len - 1 - (s b + t)].
  const std::size_t len = seed.size();
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t t = 0; t < gen.width(); ++t) {
      ASSERT_EQ(gen.reg().get(t), seed.get(len - 1 - (s * cfg.b + t))) << s << "," << t;
    }
    gen.shift();
  }
  EXPECT_EQ(gen.words_since_reseed(), 3u);
}
