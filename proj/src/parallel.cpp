#include "lfpp/parallel.hpp"

#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "lfpp/error.hpp"

namespace lfpp {

void run_partitioned(std::size_t count, int workers, const std::function<std::size_t(std::size_t)>& assign,
                     const std::function<void(std::size_t)>& body, const std::function<void(std::size_t)>& done) {
  require(workers >= 1, ErrorKind::domain, "worker count must be >= 1");
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      body(i);
      done(i);
    }
    return;
  }

  std::mutex mu;
  std::condition_variable cv;
  std::vector<char> finished(count, 0);
  std::exception_ptr failure;

  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = 0; i < count; ++i) {
        if (assign(i) % static_cast<std::size_t>(workers) != static_cast<std::size_t>(w)) continue;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
        {
          std::lock_guard lock(mu);
          finished[i] = 1;
        }
        cv.notify_all();
      }
    });
  }

  std::exception_ptr done_failure;
  for (std::size_t i = 0; i < count; ++i) {
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return finished[i] != 0; });
    }
    if (done_failure) continue;
    try {
      done(i);
    } catch (...) {
      done_failure = std::current_exception();
    }
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  if (done_failure) std::rethrow_exception(done_failure);
}

}  // namespace lfpp
