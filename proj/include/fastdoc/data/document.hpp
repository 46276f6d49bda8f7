// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fastdoc {

/// The unit of document-level supervision.
struct Document {
  std::string id;
  std::vector<std::string> sentences;
  std::optional<std::string> category;
  std::optional<std::vector<std::string>> hierarchy;
  std::optional<std::set<std::string>> concepts;

  std::string text() const {
    std::string out;
    for (const auto& s : sentences) {
      if (!out.empty()) out += ' ';
      out += s;
    }
    return out;
  }

  bool operator==(const Document&) const = default;
};

}  // namespace fastdoc
