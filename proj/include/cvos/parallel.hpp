#pragma once

#include <cstddef>
#include <functional>

namespace cvos {

// Thread cap: CURRICULA_VOS_THREADS when set (minimum 1), otherwise the
// number of logical processors. Read once per process.
int max_threads();

// Runs fn(i) for i in [0, n) on up to max_threads() workers with static
// index partitioning. Callers that reduce results must do so serially in
// index order afterwards; the partitioning itself never affects what each
// fn(i) computes, so results are identical to a serial loop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace cvos
