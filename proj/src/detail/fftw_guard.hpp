#pragma once
// FFTW plan creation/destruction is not thread-safe; every translation unit
// that builds plans must hold this one mutex while doing so.
#include <mutex>

namespace irkwl::detail {

inline std::mutex fftw_plan_mutex;

}  // namespace irkwl::detail
