#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace eiss {

// Runs fn(i) for i in [0, count) on up to `workers` threads. Tasks must write
// only to their own output slots; the index order of those slots makes results
// independent of scheduling. The lowest-index exception is rethrown.
inline void parallel_for(size_t count, int workers, const std::function<void(size_t)>& fn) {
  if (count == 0) return;
  if (workers <= 1 || count == 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  const size_t thread_count = std::min<size_t>(static_cast<size_t>(workers), count);
  std::atomic<size_t> next{0};
  std::mutex err_mutex;
  size_t err_index = count;
  std::exception_ptr err;

  auto body = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(thread_count);
  for (size_t t = 0; t < thread_count; ++t) threads.emplace_back(body);
  for (auto& t : threads) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace eiss
