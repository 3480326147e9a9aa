#pragma once

#include <cstdint>

#include "json.hpp"

namespace swarmgrid {

struct BenchOptions {
  uint32_t agents = 1000;
  int32_t map = 128;
  uint64_t steps = 100;
  uint64_t seed = 0;
  bool observe = false;
  int32_t view_range = 3;
};

struct BenchResult {
  uint32_t agents = 0;
  uint64_t steps = 0;
  double spawn_seconds = 0.0;
  double seconds = 0.0;
  double steps_per_second = 0.0;
  uint64_t peak_rss_bytes = 0;
};

/// Random-action stepping of two equal groups spawned uniformly on an empty
/// map; with `observe`, observations of every agent are extracted each step.
/// Throws Error(kCapacity) if the agents do not fit.
BenchResult run_bench(const BenchOptions& opts);
nlohmann::json bench_to_json(const BenchOptions& opts, const BenchResult& r);

/// Peak resident set size of this process in bytes.
uint64_t peak_rss_bytes();

}  // namespace swarmgrid
