#pragma once

#include <memory>

#include "coxam/task.hpp"

namespace coxam::bench {

/// One synthetic task shared by every benchmark in the process.
inline std::shared_ptr<const Task> task() {
  static const auto t = [] {
    TaskConfig tc;
    tc.seed = 3;
    return std::make_shared<const Task>(build_task(tc));
  }();
  return t;
}

}  // namespace coxam::bench
