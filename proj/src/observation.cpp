#include "swarmgrid/observation.hpp"

#include <algorithm>
#include <string>

#include "swarmgrid/engine.hpp"
#include "swarmgrid/error.hpp"

namespace swarmgrid {

namespace {

void check_config(const ObservationConfig& cfg) {
  if (cfg.id_bits < 1 || cfg.id_bits > 63) fail(ErrorCode::kInvalidConfig, "id_bits must be in [1, 63]");
  if (cfg.minimap && cfg.minimap_bins < 1) fail(ErrorCode::kInvalidConfig, "minimap bins must be >= 1");
}

void fill_view(const World& world, const Agent& a, int32_t range, float* view) {
  const int32_t side = 2 * range + 1;
  const size_t plane = static_cast<size_t>(side) * side;
  const size_t channels = 1 + 2 * world.groups().size();
  std::fill(view, view + channels * plane, 0.0f);
  for (int32_t r = 0; r < side; ++r) {
    for (int32_t c = 0; c < side; ++c) {
      Offset d = rotate_offset({c - range, r - range}, a.dir);
      int32_t x = a.pos.x + d.dx;
      int32_t y = a.pos.y + d.dy;
      size_t at = static_cast<size_t>(r) * side + c;
      if (!world.in_bounds(x, y)) {
        view[at] = 1.0f;
        continue;
      }
      uint32_t slot = world.cell(x, y);
      if (slot == kEmptyCell) continue;
      if (slot == kWallCell) {
        view[at] = 1.0f;
        continue;
      }
      const Agent& other = *world.find(slot);
      size_t ch = 1 + 2 * static_cast<size_t>(other.group);
      view[ch * plane + at] = 1.0f;
      view[(ch + 1) * plane + at] = static_cast<float>(other.hp / world.type_of(other).max_hp);
    }
  }
}

void fill_features(const World& world, const Agent& a, const ObservationConfig& cfg, const ObservationShape& shape,
                   const std::vector<float>& minimap, float* out) {
  std::fill(out, out + shape.features, 0.0f);
  float* p = out;
  for (int32_t b = 0; b < cfg.id_bits; ++b) *p++ = static_cast<float>((static_cast<uint64_t>(a.id) >> b) & 1u);
  p[a.last_action] = 1.0f;
  p += shape.n_actions;
  *p++ = static_cast<float>(a.last_reward);
  *p++ = static_cast<float>(a.pos.x) / static_cast<float>(world.width());
  *p++ = static_cast<float>(a.pos.y) / static_cast<float>(world.height());
  std::copy(minimap.begin(), minimap.end(), p);
}

}  // namespace

ObservationShape observation_shape(const World& world, GroupId group, const ObservationConfig& cfg) {
  check_config(cfg);
  if (group >= world.groups().size()) fail(ErrorCode::kLookup, "unknown group id " + std::to_string(group));
  const auto& t = world.type_of(group);
  ObservationShape s;
  s.channels = 1 + 2 * static_cast<int32_t>(world.groups().size());
  s.height = s.width = 2 * t.view_range + 1;
  s.n_actions = static_cast<int32_t>(action_count(t));
  s.features = cfg.id_bits + s.n_actions + 3;
  if (cfg.minimap) s.features += static_cast<int32_t>(world.groups().size()) * cfg.minimap_bins * cfg.minimap_bins;
  return s;
}

std::vector<float> id_embedding(uint64_t agent_id, int32_t bits) {
  std::vector<float> out(static_cast<size_t>(std::max(bits, 0)));
  for (int32_t b = 0; b < bits && b < 64; ++b) out[b] = static_cast<float>((agent_id >> b) & 1u);
  return out;
}

std::vector<float> global_minimap(const World& world, int32_t bins) {
  if (bins < 1) fail(ErrorCode::kInvalidConfig, "minimap bins must be >= 1");
  const size_t groups = world.groups().size();
  const size_t plane = static_cast<size_t>(bins) * bins;
  std::vector<float> out(groups * plane, 0.0f);
  std::vector<double> counts(out.size(), 0.0);
  for (const Agent& a : world.agents()) {
    auto bx = static_cast<size_t>(static_cast<int64_t>(a.pos.x) * bins / world.width());
    auto by = static_cast<size_t>(static_cast<int64_t>(a.pos.y) * bins / world.height());
    counts[a.group * plane + by * bins + bx] += 1.0;
  }
  for (size_t g = 0; g < groups; ++g) {
    double pop = static_cast<double>(world.members(static_cast<GroupId>(g)).size());
    if (pop == 0.0) continue;
    for (size_t i = 0; i < plane; ++i) out[g * plane + i] = static_cast<float>(counts[g * plane + i] / pop);
  }
  return out;
}

Observation observe_agent(const World& world, AgentId id, const ObservationConfig& cfg) {
  const Agent& a = world.agent(id);
  Observation obs;
  obs.shape = observation_shape(world, a.group, cfg);
  obs.view.resize(obs.shape.view_size());
  obs.features.resize(static_cast<size_t>(obs.shape.features));
  std::vector<float> minimap;
  if (cfg.minimap) minimap = global_minimap(world, cfg.minimap_bins);
  fill_view(world, a, world.type_of(a).view_range, obs.view.data());
  fill_features(world, a, cfg, obs.shape, minimap, obs.features.data());
  return obs;
}

ObservationBatch observe_group(const World& world, GroupId group, const ObservationConfig& cfg) {
  ObservationBatch batch;
  batch.shape = observation_shape(world, group, cfg);
  auto members = world.members(group);
  batch.ids.assign(members.begin(), members.end());
  const size_t n = batch.ids.size();
  const size_t vsz = batch.shape.view_size();
  const auto fsz = static_cast<size_t>(batch.shape.features);
  batch.views.resize(n * vsz);
  batch.features.resize(n * fsz);
  std::vector<float> minimap;
  if (cfg.minimap) minimap = global_minimap(world, cfg.minimap_bins);
  const int32_t range = world.type_of(group).view_range;
  for (size_t i = 0; i < n; ++i) {
    const Agent& a = *world.find(batch.ids[i]);
    fill_view(world, a, range, batch.views.data() + i * vsz);
    fill_features(world, a, cfg, batch.shape, minimap, batch.features.data() + i * fsz);
  }
  return batch;
}

}  // namespace swarmgrid
