#pragma once

#include <functional>

namespace ssfit {

// Runs fn(i) for i in [0,n) on up to `threads` workers. Each index must write
// only its own output slots; the result is then independent of scheduling.
// threads <= 1 runs inline. Exceptions from tasks are rethrown on the caller.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// Thread cap: SSFIT_THREADS environment variable if set, else hardware count.
int default_threads();

}  // namespace ssfit
