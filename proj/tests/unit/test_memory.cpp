#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "coxam/json_io.hpp"
#include "coxam/memory.hpp"

namespace coxam {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(Memory, EncodingIdenticalSlotsMergesUses) {
  MemoryStore m;
  const ChunkId a = m.encode(ChunkType::kFactor, factor_chunk("Alcohol", 30.0), 1.0);
  const ChunkId b = m.encode(ChunkType::kFactor, factor_chunk("Alcohol", 30.0), 2.0);
  EXPECT_EQ(a, b);
  EXPECT_EQ(m.size(), 1u);
  EXPECT_EQ(m.chunk(a).use_count(), 2u);
}

TEST(Memory, FactorChunkFollowsTemplate) {
  const Slots s = factor_chunk("Alcohol", 30.0);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(std::get<std::string>(s.at(slot::kAttribute)), "Alcohol");
  EXPECT_DOUBLE_EQ(std::get<double>(s.at(slot::kFactor)), 30.0);
}

TEST(Memory, EncodingInThePastIsRejected) {
  MemoryStore m;
  m.set_clock(5.0);
  EXPECT_THROW(m.encode(ChunkType::kFactor, factor_chunk("x", 1.0), 4.0), Error);
  EXPECT_THROW(m.set_clock(4.0), Error);
}

TEST(Memory, ChunkTemplatesRejectWrongSlots) {
  EXPECT_THROW(make_chunk_slots(ChunkType::kFactor, {{slot::kAttribute, std::string("x")}}), Error);
  EXPECT_THROW(make_chunk_slots(ChunkType::kLeafLabel, {{slot::kNodeId, 1.0}, {slot::kLabel, 1.0}, {slot::kThreshold, 2.0}}),
               Error);
}

TEST(Memory, ThresholdChunkCarriesNodeAndAttribute) {
  const Slots s = node_threshold_chunk(3, "pH", 3.2);
  EXPECT_TRUE(s.count(slot::kNodeId));
  EXPECT_TRUE(s.count(slot::kAttribute));
  EXPECT_TRUE(s.count(slot::kThreshold));
}

TEST(Memory, LeafChunkHasNoThresholdOrChildren) {
  const Slots s = leaf_label_chunk(4, Label::Negative);
  EXPECT_FALSE(s.count(slot::kThreshold));
  EXPECT_FALSE(s.count(slot::kChildNodeId));
  EXPECT_TRUE(s.count(slot::kLabel));
}

TEST(Memory, ActivationSingleUseIsZero) {
  MemoryStore m;
  const ChunkId id = m.encode(ChunkType::kFactor, factor_chunk("x", 1.0), 0.0);
  const Cue cue{{ChunkType::kFactor}, {{slot::kAttribute, std::string("x")}}};
  EXPECT_NEAR(activation(m.chunk(id), cue, 1.0, 0.0), 0.0, 1e-12);
}

TEST(Memory, ActivationSumsDecayedUses) {
  MemoryStore m;
  m.encode(ChunkType::kFactor, factor_chunk("x", 1.0), 0.0);
  const ChunkId id = m.encode(ChunkType::kFactor, factor_chunk("x", 1.0), 3.0);
  const Cue cue{{ChunkType::kFactor}, {{slot::kAttribute, std::string("x")}}};
  EXPECT_NEAR(activation(m.chunk(id), cue, 4.0, 0.0), std::log(1.5), 1e-12);
}

TEST(Memory, MismatchCostsOnePerSlot) {
  MemoryStore m;
  const ChunkId id = m.encode(ChunkType::kFactor, factor_chunk("x", 1.0), 0.0);
  const Cue cue{{ChunkType::kFactor}, {{slot::kAttribute, std::string("y")}}};
  EXPECT_EQ(mismatch_count(m.chunk(id), cue), 1);
  EXPECT_NEAR(activation(m.chunk(id), cue, 1.0, 0.0), -1.0, 1e-12);
}

TEST(Memory, BaseLevelWithoutPastUsesIsMinusInfinity) {
  MemoryStore m;
  const ChunkId id = m.encode(ChunkType::kFactor, factor_chunk("x", 1.0), 2.0);
  EXPECT_EQ(base_level_activation(m.chunk(id), 2.0), -kInf);
  EXPECT_THROW(base_level_activation(m.chunk(id), 1.0), Error);
}

TEST(Memory, InfiniteThresholdsDecideRetrieval) {
  MemoryStore m;
  m.encode(ChunkType::kFactor, factor_chunk("x", 1.0), 0.0);
  m.set_clock(1.0);
  const Cue cue{{ChunkType::kFactor}, {{slot::kAttribute, std::string("x")}}};
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    EXPECT_TRUE(retrieve(m, cue, {-kInf, 0.3}, rng).success());
    EXPECT_FALSE(retrieve(m, cue, {kInf, 0.3}, rng).success());
  }
}

TEST(Memory, StrongerChunkWinsWithLowNoise) {
  // Uses at dt = 1 and 4 give activation ln(1.5) ~ 0.41; the weaker chunk mismatches one slot
  // at activation -1.
  int strong_wins = 0;
  constexpr int kDraws = 10000;
  Rng rng(7);
  for (int i = 0; i < kDraws; ++i) {
    MemoryStore m;
    const ChunkId strong = m.encode(ChunkType::kFactor, factor_chunk("x", 1.0), 0.0);
    m.encode(ChunkType::kFactor, factor_chunk("x", 1.0), 3.0);
    m.encode(ChunkType::kFactor, factor_chunk("y", 2.0), 3.0);
    m.set_clock(4.0);
    const Cue cue{{ChunkType::kFactor}, {{slot::kAttribute, std::string("x")}}};
    const auto r = retrieve(m, cue, {0.0, 0.01}, rng);
    strong_wins += r.chunk == strong ? 1 : 0;
  }
  EXPECT_GE(static_cast<double>(strong_wins) / kDraws, 0.99);
}

TEST(Memory, RetrievalProbabilityIsLogistic) {
  EXPECT_NEAR(retrieval_probability(0.0, {0.0, 0.3}), 0.5, 1e-12);
  EXPECT_NEAR(retrieval_probability(0.3, {0.0, 0.3}), logistic(1.0), 1e-12);
  EXPECT_EQ(retrieval_probability(5.0, {kInf, 0.3}), 0.0);
  EXPECT_EQ(retrieval_probability(-5.0, {-kInf, 0.3}), 1.0);
}

TEST(Memory, SuccessfulRetrievalAddsAUse) {
  MemoryStore m;
  const ChunkId id = m.encode(ChunkType::kFactor, factor_chunk("x", 1.0), 0.0);
  m.set_clock(1.0);
  Rng rng(3);
  const Cue cue{{ChunkType::kFactor}, {{slot::kAttribute, std::string("x")}}};
  ASSERT_TRUE(retrieve(m, cue, {-kInf, 0.3}, rng).success());
  EXPECT_EQ(m.chunk(id).use_count(), 2u);
}

TEST(Memory, ForecastHasNoSideEffects) {
  MemoryStore m;
  const ChunkId id = m.encode(ChunkType::kFactor, factor_chunk("x", 1.0), 0.0);
  m.set_clock(1.0);
  const Cue cue{{ChunkType::kFactor}, {{slot::kAttribute, std::string("x")}}};
  const auto f = forecast_retrieval(m, cue, {0.0, 0.3});
  EXPECT_EQ(f.chunk, id);
  EXPECT_NEAR(f.probability, 0.5, 1e-12);
  EXPECT_EQ(m.chunk(id).use_count(), 1u);
}

TEST(Memory, AvailabilityCueFiltersByTargetClass) {
  MemoryStore m;
  const ChunkId pos = m.encode(ChunkType::kAvailability, availability_chunk(Label::Positive, 2, 1.5), 0.0);
  const ChunkId neg = m.encode(ChunkType::kAvailability, availability_chunk(Label::Negative, 2, 1.5), 0.0);
  EXPECT_NE(pos, neg);
  const Cue cue{{ChunkType::kAvailability}, {{slot::kTargetClass, 1.0}}};
  EXPECT_EQ(mismatch_count(m.chunk(pos), cue), 0);
  EXPECT_EQ(mismatch_count(m.chunk(neg), cue), 1);
  m.set_clock(1.0);
  Rng rng(1);
  EXPECT_EQ(retrieve(m, cue, {-kInf, 0.01}, rng).chunk, pos);
}

TEST(Memory, StoreRoundTripsThroughJson) {
  MemoryStore m;
  m.encode(ChunkType::kNodeThreshold, node_threshold_chunk(0, "pH", 3.2), 0.0);
  m.encode(ChunkType::kMentalFactor, mental_factor_chunk("pH", 0.5, 1.0), 1.0);
  m.set_clock(3.0);
  const MemoryStore back = memory_from_json(to_json(m));
  EXPECT_EQ(to_json(back), to_json(m));
  EXPECT_EQ(back.clock(), 3.0);
}

TEST(Memory, FromChunksRejectsUnorderedUses) {
  Chunk c;
  c.id = 0;
  c.type = ChunkType::kFactor;
  c.slots = factor_chunk("x", 1.0);
  c.use_times = {2.0, 1.0};
  EXPECT_THROW(MemoryStore::from_chunks({c}, 3.0), Error);
}

}  // namespace
}  // namespace coxam
