#pragma once

#include <cstddef>
#include <functional>

namespace pfdiff {

/// Runs `body(i)` for every i in [0, count) on up to `workers` threads.
/// Each index runs exactly once; callers write results into slot i so the
/// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace pfdiff
