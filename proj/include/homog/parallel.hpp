#pragma once

#include <functional>

namespace homog {

/// Worker count used by parallel loops (default 1).
void set_num_threads(int n);
int num_threads();

/// Runs body(chunk) for chunk = 0..n_chunks-1 on up to num_threads() workers.
/// Chunks are independent; callers combine per-chunk results in chunk order,
/// so results do not depend on the worker count.
void parallel_chunks(int n_chunks, const std::function<void(int)>& body);

}  // namespace homog
