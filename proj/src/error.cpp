// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/error.hpp"

#include <iostream>
#include <mutex>

namespace npbg {

void log_warning(const std::string& message) {
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  std::cerr << "[npbg] warning: " << message << '\n';
}

}  // namespace npbg
