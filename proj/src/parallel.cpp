#include "mtf/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

namespace mtf::parallel {

namespace {

int initial_thread_count() {
  if (const char* env = std::getenv("MANIFOLD_MTF_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (...) {
      return 1;
    }
  }
  return 1;
}

std::atomic<int>& threads() {
  static std::atomic<int> n{initial_thread_count()};
  return n;
}

}  // namespace

int thread_count() { return threads().load(std::memory_order_relaxed); }

void set_thread_count(int n) { threads().store(std::max(1, n), std::memory_order_relaxed); }

}  // namespace mtf::parallel
