#pragma once

#include <mutex>

namespace rigidity::detail {

/// FFTW planning is not thread safe; plan creation and destruction take this lock.
std::mutex& fftw_planner_mutex();

}  // namespace rigidity::detail
