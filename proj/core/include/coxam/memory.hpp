#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "coxam/common.hpp"

namespace coxam {

using SlotValue = std::variant<std::string, double>;
using Slots = std::map<std::string, SlotValue>;

/// Chunk category, used as a hard retrieval filter in the manner of an ACT-R "isa" test.
enum class ChunkType {
  kFactor,
  kMentalFactor,
  kNodeAttribute,
  kNodeThreshold,
  kNodeChild,
  kLeafLabel,
  kAvailability,
};

std::string_view chunk_type_name(ChunkType type);
std::optional<ChunkType> parse_chunk_type(std::string_view name);

using ChunkId = int;

struct Chunk {
  ChunkId id = 0;
  ChunkType type = ChunkType::kFactor;
  Slots slots;
  /// Strictly increasing simulation times (seconds) at which the chunk was used.
  std::vector<double> use_times;

  std::size_t use_count() const { return use_times.size(); }
};

struct Cue {
  std::vector<ChunkType> types;
  Slots slots;
};

struct RetrievalParams {
  /// Retrieval threshold kappa; may be +/- infinity.
  double kappa = -1.0;
  /// Activation noise scale zeta, > 0.
  double zeta = 0.3;
};

/// Declarative memory of one agent. Not thread-safe; one store per agent.
class MemoryStore {
 public:
  double clock() const { return clock_; }
  void set_clock(double t);
  void advance(double dt) { set_clock(clock_ + dt); }

  /// Adds a use at time `t` to the chunk with identical type and slots, or creates it.
  ChunkId encode(ChunkType type, const Slots& slots, double t);
  ChunkId encode(ChunkType type, const Slots& slots) { return encode(type, slots, clock_); }

  /// Records a use at the current clock.
  void touch(ChunkId id);
  /// Overwrites slot values in place, keeping the use history (mental-factor beliefs).
  void update_slots(ChunkId id, const Slots& slots);

  const Chunk& chunk(ChunkId id) const;
  const std::vector<Chunk>& chunks() const { return chunks_; }
  std::size_t size() const { return chunks_.size(); }
  bool empty() const { return chunks_.empty(); }

  std::optional<ChunkId> find(ChunkType type, const Slots& slots) const;

  /// Restores a store from serialized chunks; validates invariants.
  static MemoryStore from_chunks(std::vector<Chunk> chunks, double clock);

 private:
  void add_use(Chunk& c, double t);

  std::vector<Chunk> chunks_;
  double clock_ = 0.0;
};

/// ln(sum_j dt_j^-0.5) over uses strictly before t; -inf when there are none. Throws when a
/// use lies after t.
double base_level_activation(const Chunk& chunk, double t);

/// Number of cue slots the chunk lacks or contradicts.
int mismatch_count(const Chunk& chunk, const Cue& cue);

/// Base-level activation minus one per mismatched cue slot, plus the supplied noise sample.
double activation(const Chunk& chunk, const Cue& cue, double t, double noise_sample);

/// Sample from Logistic(0, zeta).
double sample_activation_noise(Rng& rng, double zeta);

/// P(A + noise > kappa) for deterministic activation A.
double retrieval_probability(double activation, const RetrievalParams& params);

struct RetrievalResult {
  std::optional<ChunkId> chunk;
  double activation = -std::numeric_limits<double>::infinity();
  bool success() const { return chunk.has_value(); }
};

/// Noisy retrieval over chunks of the cue's types that share at least one cue slot name.
/// Succeeds iff the best noisy activation exceeds kappa; the winner gains a use at the clock.
/// Ties go to the lowest id.
RetrievalResult retrieve(MemoryStore& store, const Cue& cue, const RetrievalParams& params, Rng& rng);

/// Side-effect-free expectation used for planning: the noise-free best candidate and the
/// probability that it clears the threshold.
struct RetrievalForecast {
  std::optional<ChunkId> chunk;
  double probability = 0.0;
};
RetrievalForecast forecast_retrieval(const MemoryStore& store, const Cue& cue,
                                     const RetrievalParams& params);

// Chunk templates.
namespace slot {
inline constexpr const char* kAttribute = "Attribute";
inline constexpr const char* kFactor = "Factor";
inline constexpr const char* kMu = "Mu";
inline constexpr const char* kSigma = "Sigma";
inline constexpr const char* kNodeId = "Node id";
inline constexpr const char* kThreshold = "Threshold";
inline constexpr const char* kBranch = "Branch";
inline constexpr const char* kChildNodeId = "Child node id";
inline constexpr const char* kLabel = "Label";
inline constexpr const char* kTargetClass = "Target Class";
inline constexpr const char* kDelta = "Delta";
}  // namespace slot

/// Reserved attribute name under which the intercept is remembered as a factor chunk.
inline constexpr const char* kInterceptAttribute = "(intercept)";

/// Validates that `slots` carries exactly the slots of the template for `type`.
Slots make_chunk_slots(ChunkType type, const Slots& slots);

Slots factor_chunk(const std::string& attribute, double factor);
Slots mental_factor_chunk(const std::string& attribute, double mu, double sigma);
Slots node_attribute_chunk(int node_id, const std::string& attribute);
Slots node_threshold_chunk(int node_id, const std::string& attribute, double threshold);
Slots node_child_chunk(int node_id, const std::string& branch, int child_id);
Slots leaf_label_chunk(int node_id, Label label);
Slots availability_chunk(Label target, std::size_t attribute, double delta);

double slot_number(const Chunk& chunk, const std::string& name);
const std::string& slot_text(const Chunk& chunk, const std::string& name);

}  // namespace coxam
