// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fastdoc/errors.hpp"
#include "fastdoc/train/checkpoint.hpp"

namespace fastdoc {

struct DriftEntry {
  std::string group;
  /// Sum of |after - before| over the group divided by the sum of |before|.
  double relative_change = 0;
  /// Set when the group's base norm is zero; relative_change is then 0.
  bool zero_base = false;
  bool frozen = false;
};

struct DriftReport {
  std::int64_t step = 0;
  std::vector<DriftEntry> groups;

  const DriftEntry& at(const std::string& group) const {
    for (const auto& g : groups)
      if (g.group == group) return g;
    throw IndexError("drift report has no group '" + group + "'");
  }
};

/// Per-group relative L1 change between two parameter snapshots. Groups are
/// reported in first-appearance order of `before`.
inline DriftReport track_drift(const std::vector<TensorBlob>& before, const std::vector<TensorBlob>& after,
                               std::int64_t step = 0) {
  std::map<std::string, const TensorBlob*> by_name;
  for (const auto& t : after) by_name[t.name] = &t;
  auto groups_of = [](const std::vector<TensorBlob>& v) {
    std::map<std::string, std::size_t> g;
    for (const auto& t : v) ++g[t.group];
    return g;
  };
  if (groups_of(before) != groups_of(after) || by_name.size() != before.size()) {
    throw ValidationError("drift snapshots have different parameter groups");
  }
  struct Acc {
    double diff = 0, base = 0;
    bool frozen = true;
  };
  std::vector<std::string> order;
  std::map<std::string, Acc> acc;
  for (const auto& b : before) {
    auto it = by_name.find(b.name);
    if (it == by_name.end() || it->second->group != b.group || it->second->values.size() != b.values.size()) {
      throw ValidationError("drift snapshots disagree on tensor '" + b.name + "'");
    }
    if (!acc.count(b.group)) order.push_back(b.group);
    auto& a = acc[b.group];
    a.frozen = a.frozen && b.frozen && it->second->frozen;
    for (std::size_t k = 0; k < b.values.size(); ++k) {
      a.diff += std::fabs(static_cast<double>(it->second->values[k]) - static_cast<double>(b.values[k]));
      a.base += std::fabs(static_cast<double>(b.values[k]));
    }
  }
  DriftReport r;
  r.step = step;
  for (const auto& g : order) {
    const auto& a = acc[g];
    DriftEntry e{g, 0.0, a.base == 0, a.frozen};
    if (!e.zero_base) e.relative_change = a.diff / a.base;
    r.groups.push_back(e);
  }
  return r;
}

inline DriftReport track_drift(const Checkpoint& before, const Checkpoint& after) {
  if (before.config.at("model") != after.config.at("model")) {
    throw ValidationError("drift checkpoints have different model configurations");
  }
  return track_drift(before.tensors, after.tensors);
}

inline nlohmann::json drift_to_json(const DriftReport& r) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"group", g.group},
                      {"relative_change", g.relative_change},
                      {"zero_base", g.zero_base},
                      {"frozen", g.frozen}});
  }
  return {{"step", r.step}, {"groups", groups}};
}

/// One JSON object per line.
inline void write_drift_log(std::ostream& out, const std::vector<DriftReport>& reports) {
  for (const auto& r : reports) out << drift_to_json(r).dump() << '\n';
}

}  // namespace fastdoc
