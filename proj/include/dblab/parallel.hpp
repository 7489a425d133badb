#pragma once

#include <functional>

namespace dblab {

// Worker cap: DBLAB_THREADS when set, else hardware concurrency.
int thread_budget();

// Runs fn(0..count-1) across up to thread_budget() workers. Each index must be
// independent; callers store results by index so reduction order is fixed.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace dblab
