#include "coxam/memory.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace coxam {

std::string_view chunk_type_name(ChunkType type) {
  switch (type) {
    case ChunkType::kFactor: return "factor";
    case ChunkType::kMentalFactor: return "mental_factor";
    case ChunkType::kNodeAttribute: return "node_attribute";
    case ChunkType::kNodeThreshold: return "node_threshold";
    case ChunkType::kNodeChild: return "node_child";
    case ChunkType::kLeafLabel: return "leaf_label";
    case ChunkType::kAvailability: return "availability";
  }
  return "unknown";
}

std::optional<ChunkType> parse_chunk_type(std::string_view name) {
  for (auto t : {ChunkType::kFactor, ChunkType::kMentalFactor, ChunkType::kNodeAttribute,
                 ChunkType::kNodeThreshold, ChunkType::kNodeChild, ChunkType::kLeafLabel,
                 ChunkType::kAvailability}) {
    if (chunk_type_name(t) == name) return t;
  }
  return std::nullopt;
}

void MemoryStore::set_clock(double t) {
  if (t < clock_) throw Error(ErrorCode::kPrecondition, "memory clock cannot move backwards");
  clock_ = t;
}

void MemoryStore::add_use(Chunk& c, double t) {
  // A second use at the same instant is the same use.
  if (!c.use_times.empty() && c.use_times.back() >= t) return;
  c.use_times.push_back(t);
}

ChunkId MemoryStore::encode(ChunkType type, const Slots& slots, double t) {
  if (t < clock_) {
    throw Error(ErrorCode::kPrecondition, "encode time precedes the memory clock");
  }
  clock_ = t;
  if (const auto existing = find(type, slots)) {
    add_use(chunks_[static_cast<std::size_t>(*existing)], t);
    return *existing;
  }
  Chunk c;
  c.id = static_cast<ChunkId>(chunks_.size());
  c.type = type;
  c.slots = slots;
  c.use_times.push_back(t);
  chunks_.push_back(std::move(c));
  return chunks_.back().id;
}

void MemoryStore::touch(ChunkId id) {
  if (id < 0 || static_cast<std::size_t>(id) >= chunks_.size()) {
    throw Error(ErrorCode::kNotFound, "no chunk " + std::to_string(id));
  }
  add_use(chunks_[static_cast<std::size_t>(id)], clock_);
}

void MemoryStore::update_slots(ChunkId id, const Slots& slots) {
  if (id < 0 || static_cast<std::size_t>(id) >= chunks_.size()) {
    throw Error(ErrorCode::kNotFound, "no chunk " + std::to_string(id));
  }
  auto& c = chunks_[static_cast<std::size_t>(id)];
  for (const auto& [k, v] : slots) c.slots[k] = v;
}

const Chunk& MemoryStore::chunk(ChunkId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= chunks_.size()) {
    throw Error(ErrorCode::kNotFound, "no chunk " + std::to_string(id));
  }
  return chunks_[static_cast<std::size_t>(id)];
}

std::optional<ChunkId> MemoryStore::find(ChunkType type, const Slots& slots) const {
  for (const auto& c : chunks_) {
    if (c.type == type && c.slots == slots) return c.id;
  }
  return std::nullopt;
}

MemoryStore MemoryStore::from_chunks(std::vector<Chunk> chunks, double clock) {
  MemoryStore store;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (chunks[i].id != static_cast<ChunkId>(i)) {
      throw Error(ErrorCode::kInvariant, "chunk ids must be contiguous from 0");
    }
    const auto& uses = chunks[i].use_times;
    if (uses.empty()) throw Error(ErrorCode::kInvariant, "chunk without any use");
    for (std::size_t j = 1; j < uses.size(); ++j) {
      if (!(uses[j] > uses[j - 1])) throw Error(ErrorCode::kInvariant, "use times must increase");
    }
    if (uses.back() > clock) throw Error(ErrorCode::kInvariant, "use time after the clock");
  }
  store.chunks_ = std::move(chunks);
  store.clock_ = clock;
  return store;
}

double base_level_activation(const Chunk& chunk, double t) {
  double sum = 0.0;
  for (double u : chunk.use_times) {
    const double dt = t - u;
    if (dt < 0.0) {
      throw Error(ErrorCode::kPrecondition, "activation requested before a use of the chunk");
    }
    // A use at the current instant has not decayed into a trace yet.
    if (dt > 0.0) sum += 1.0 / std::sqrt(dt);
  }
  if (sum <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(sum);
}

int mismatch_count(const Chunk& chunk, const Cue& cue) {
  int m = 0;
  for (const auto& [name, value] : cue.slots) {
    const auto it = chunk.slots.find(name);
    if (it == chunk.slots.end() || !(it->second == value)) ++m;
  }
  return m;
}

double activation(const Chunk& chunk, const Cue& cue, double t, double noise_sample) {
  return base_level_activation(chunk, t) - mismatch_count(chunk, cue) + noise_sample;
}

double sample_activation_noise(Rng& rng, double zeta) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double p = u(rng);
  while (p <= 0.0 || p >= 1.0) p = u(rng);
  return zeta * std::log(p / (1.0 - p));
}

double retrieval_probability(double a, const RetrievalParams& params) {
  if (params.kappa == std::numeric_limits<double>::infinity()) return 0.0;
  if (params.kappa == -std::numeric_limits<double>::infinity()) return 1.0;
  return logistic((a - params.kappa) / params.zeta);
}

namespace {

bool candidate(const Chunk& c, const Cue& cue) {
  if (!cue.types.empty() && std::find(cue.types.begin(), cue.types.end(), c.type) == cue.types.end()) {
    return false;
  }
  for (const auto& [name, value] : cue.slots) {
    if (c.slots.count(name)) return true;
  }
  return false;
}

void validate_cue(const Cue& cue) {
  if (cue.slots.empty()) throw Error(ErrorCode::kPrecondition, "retrieval cue must be non-empty");
}

}  // namespace

RetrievalResult retrieve(MemoryStore& store, const Cue& cue, const RetrievalParams& params, Rng& rng) {
  validate_cue(cue);
  if (!(params.zeta > 0.0)) throw Error(ErrorCode::kPrecondition, "zeta must be positive");
  RetrievalResult best;
  const double t = store.clock();
  for (const auto& c : store.chunks()) {
    if (!candidate(c, cue)) continue;
    const double a = activation(c, cue, t, sample_activation_noise(rng, params.zeta));
    // Strict comparison keeps the lowest id on ties.
    if (!best.chunk || a > best.activation) {
      best.chunk = c.id;
      best.activation = a;
    }
  }
  if (!best.chunk || !(best.activation > params.kappa)) {
    best.chunk.reset();
    return best;
  }
  store.touch(*best.chunk);
  return best;
}

RetrievalForecast forecast_retrieval(const MemoryStore& store, const Cue& cue,
                                     const RetrievalParams& params) {
  validate_cue(cue);
  RetrievalForecast out;
  double best = -std::numeric_limits<double>::infinity();
  const double t = store.clock();
  for (const auto& c : store.chunks()) {
    if (!candidate(c, cue)) continue;
    const double a = activation(c, cue, t, 0.0);
    if (!out.chunk || a > best) {
      out.chunk = c.id;
      best = a;
    }
  }
  if (out.chunk) out.probability = retrieval_probability(best, params);
  return out;
}

Slots make_chunk_slots(ChunkType type, const Slots& slots) {
  std::set<std::string> required;
  switch (type) {
    case ChunkType::kFactor: required = {slot::kAttribute, slot::kFactor}; break;
    case ChunkType::kMentalFactor: required = {slot::kAttribute, slot::kMu, slot::kSigma}; break;
    case ChunkType::kNodeAttribute: required = {slot::kNodeId, slot::kAttribute}; break;
    case ChunkType::kNodeThreshold:
      required = {slot::kNodeId, slot::kAttribute, slot::kThreshold};
      break;
    case ChunkType::kNodeChild: required = {slot::kNodeId, slot::kBranch, slot::kChildNodeId}; break;
    case ChunkType::kLeafLabel: required = {slot::kNodeId, slot::kLabel}; break;
    case ChunkType::kAvailability:
      required = {slot::kTargetClass, slot::kAttribute, slot::kDelta};
      break;
  }
  for (const auto& name : required) {
    if (!slots.count(name)) {
      throw Error(ErrorCode::kPrecondition, std::string(chunk_type_name(type)) +
                                                " chunk is missing required slot '" + name + "'");
    }
  }
  for (const auto& [name, value] : slots) {
    if (!required.count(name)) {
      throw Error(ErrorCode::kPrecondition, std::string(chunk_type_name(type)) +
                                                " chunk has unexpected slot '" + name + "'");
    }
  }
  return slots;
}

Slots factor_chunk(const std::string& attribute, double factor) {
  return make_chunk_slots(ChunkType::kFactor, {{slot::kAttribute, attribute}, {slot::kFactor, factor}});
}

Slots mental_factor_chunk(const std::string& attribute, double mu, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::kInvariant, "mental factor sigma must be positive");
  return make_chunk_slots(ChunkType::kMentalFactor,
                          {{slot::kAttribute, attribute}, {slot::kMu, mu}, {slot::kSigma, sigma}});
}

Slots node_attribute_chunk(int node_id, const std::string& attribute) {
  return make_chunk_slots(ChunkType::kNodeAttribute,
                          {{slot::kNodeId, static_cast<double>(node_id)}, {slot::kAttribute, attribute}});
}

Slots node_threshold_chunk(int node_id, const std::string& attribute, double threshold) {
  return make_chunk_slots(ChunkType::kNodeThreshold, {{slot::kNodeId, static_cast<double>(node_id)},
                                                      {slot::kAttribute, attribute},
                                                      {slot::kThreshold, threshold}});
}

Slots node_child_chunk(int node_id, const std::string& branch, int child_id) {
  return make_chunk_slots(ChunkType::kNodeChild, {{slot::kNodeId, static_cast<double>(node_id)},
                                                  {slot::kBranch, branch},
                                                  {slot::kChildNodeId, static_cast<double>(child_id)}});
}

Slots leaf_label_chunk(int node_id, Label label) {
  return make_chunk_slots(ChunkType::kLeafLabel, {{slot::kNodeId, static_cast<double>(node_id)},
                                                  {slot::kLabel, static_cast<double>(to_int(label))}});
}

Slots availability_chunk(Label target, std::size_t attribute, double delta) {
  return make_chunk_slots(ChunkType::kAvailability,
                          {{slot::kTargetClass, static_cast<double>(to_int(target))},
                           {slot::kAttribute, static_cast<double>(attribute)},
                           {slot::kDelta, delta}});
}

double slot_number(const Chunk& chunk, const std::string& name) {
  const auto it = chunk.slots.find(name);
  if (it == chunk.slots.end() || !std::holds_alternative<double>(it->second)) {
    throw Error(ErrorCode::kInvariant, "chunk " + std::to_string(chunk.id) + " has no numeric slot '" + name + "'");
  }
  return std::get<double>(it->second);
}

const std::string& slot_text(const Chunk& chunk, const std::string& name) {
  const auto it = chunk.slots.find(name);
  if (it == chunk.slots.end() || !std::holds_alternative<std::string>(it->second)) {
    throw Error(ErrorCode::kInvariant, "chunk " + std::to_string(chunk.id) + " has no text slot '" + name + "'");
  }
  return std::get<std::string>(it->second);
}

}  // namespace coxam
