// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <functional>
#include <iostream>
#include <mutex>
#include <string>

namespace fastdoc {

/// Process-wide warning sink. Library code reports recoverable conditions
/// (truncation, empty inputs) here instead of failing.
class WarningLog {
 public:
  using Sink = std::function<void(const std::string&)>;

  static WarningLog& instance() {
    static WarningLog log;
    return log;
  }

  void warn(const std::string& msg) {
    count_.fetch_add(1);
    std::lock_guard<std::mutex> lock(mu_);
    if (sink_) {
      sink_(msg);
    } else {
      std::cerr << "warning: " << msg << '\n';
    }
  }

  /// Replace the sink; returns the previous one. Passing nullptr restores stderr.
  Sink set_sink(Sink sink) {
    std::lock_guard<std::mutex> lock(mu_);
    std::swap(sink, sink_);
    return sink;
  }

  long count() const { return count_.load(); }

 private:
  std::mutex mu_;
  Sink sink_;
  std::atomic<long> count_{0};
};

inline void warn(const std::string& msg) { WarningLog::instance().warn(msg); }

}  // namespace fastdoc
