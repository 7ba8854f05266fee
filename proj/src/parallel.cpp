#include "tensorrank/parallel.hpp"

#ifdef __linux__
#include <sched.h>
#endif

namespace tensorrank {

namespace {
std::atomic<unsigned> g_max_threads{0};
}

void set_max_threads(unsigned n) { g_max_threads.store(n); }

unsigned max_threads() {
  const unsigned n = g_max_threads.load();
  if (n != 0) return n;
  static const unsigned available = [] {
#ifdef __linux__
    cpu_set_t set;
    if (sched_getaffinity(0, sizeof set, &set) == 0) return static_cast<unsigned>(CPU_COUNT(&set));
#endif
    return std::thread::hardware_concurrency();
  }();
  return std::max(1u, available);
}

}  // namespace tensorrank
