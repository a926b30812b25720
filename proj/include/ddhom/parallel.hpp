#pragma once

#include <functional>

namespace ddhom {

/// Caps the worker pool used by parallel_for; n <= 0 selects the hardware
/// concurrency.
void set_thread_count(int n);
int thread_count();

/// Runs body(0..count-1) on the worker pool. Each index must write only to
/// its own output slot, so results never depend on the thread count. The
/// first exception thrown by any body is rethrown after all workers join.
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace ddhom
