#include "lightcone/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lightcone {
namespace {

std::atomic<unsigned> g_threads{0};
thread_local bool t_in_pool = false;

unsigned env_threads() {
  const char* s = std::getenv("LIGHTCONE_THREADS");
  if (!s || !*s) return 1;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 1) return 1;
  return static_cast<unsigned>(std::min(v, 256L));
}

}  // namespace

unsigned default_threads() {
  const unsigned t = g_threads.load();
  return t > 0 ? t : env_threads();
}

void set_default_threads(unsigned threads) { g_threads.store(threads); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads) {
  if (threads == 0) threads = default_threads();
  const std::size_t workers = t_in_pool ? 1 : std::min<std::size_t>(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    const bool outer = t_in_pool;
    t_in_pool = true;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
    t_in_pool = outer;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace lightcone
