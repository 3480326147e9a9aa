#pragma once

#include <cstdint>
#include <vector>

#include "swarmgrid/world.hpp"

namespace swarmgrid {

struct ObservationConfig {
  int32_t id_bits = 10;
  bool minimap = false;
  int32_t minimap_bins = 8;
  bool operator==(const ObservationConfig&) const = default;
};

/// Tensor dimensions for one group's observations.
///
/// View channels: 0 is wall/out-of-map, then (presence, hp fraction) per group
/// in creation order. Feature layout: id embedding, last-action one-hot, last
/// reward, x/width, y/height, then the flattened minimap when enabled.
struct ObservationShape {
  int32_t channels = 0;
  int32_t height = 0;
  int32_t width = 0;
  int32_t features = 0;
  int32_t n_actions = 0;

  size_t view_size() const { return static_cast<size_t>(channels) * height * width; }
  size_t input_size() const { return view_size() + static_cast<size_t>(features); }
  bool operator==(const ObservationShape&) const = default;
};

ObservationShape observation_shape(const World& world, GroupId group, const ObservationConfig& cfg);

struct Observation {
  ObservationShape shape;
  std::vector<float> view;      // [C, H, W]
  std::vector<float> features;  // [F]
};

struct ObservationBatch {
  ObservationShape shape;
  std::vector<AgentId> ids;     // ascending
  std::vector<float> views;     // [N, C, H, W]
  std::vector<float> features;  // [N, F]

  size_t size() const { return ids.size(); }
};

/// Little-endian binary code of id mod 2^bits.
std::vector<float> id_embedding(uint64_t agent_id, int32_t bits);

/// Per-group anchor histogram over a bins x bins partition, normalised by group
/// population. Layout [G, bins, bins]; extinct groups are all zero.
std::vector<float> global_minimap(const World& world, int32_t bins);

Observation observe_agent(const World& world, AgentId id, const ObservationConfig& cfg);
ObservationBatch observe_group(const World& world, GroupId group, const ObservationConfig& cfg);

}  // namespace swarmgrid
