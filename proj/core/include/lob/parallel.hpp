#pragma once

#include <cstddef>
#include <functional>

namespace lob {

/// Worker-thread budget: LOB_THREADS when set, hardware concurrency
/// otherwise, floored at 1.
size_t thread_budget();

/// Runs fn(i) for every i in [0, n). Work items are claimed from an
/// atomic counter by up to thread_budget() workers; exceptions propagate.
/// Callers get determinism by writing results into slot i and reducing
/// in index order afterwards.
void parallel_for_index(size_t n, const std::function<void(size_t)>& fn);

} // namespace lob
