#pragma once

#include <cstddef>
#include <functional>

namespace lfpp {

/// Runs body(i) for i in [0, count) on `workers` threads. Item i goes to
/// worker assign(i) % workers; each worker handles its items in index order.
/// done(i) is called on the calling thread in index order as soon as items
/// 0..i have finished, so output written from it is ordering-independent.
void run_partitioned(std::size_t count, int workers, const std::function<std::size_t(std::size_t)>& assign,
                     const std::function<void(std::size_t)>& body, const std::function<void(std::size_t)>& done);

}  // namespace lfpp
