#include "subgeo/parallel.hpp"

#include <cstdlib>
#include <string>

namespace subgeo {

namespace {
std::atomic<int> g_threads{0};
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SUBGEO_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return 1;
}

void set_default_threads(int n) { g_threads = std::max(1, n); }

int default_threads() {
  const int n = g_threads.load();
  return n > 0 ? n : resolve_threads(0);
}

}  // namespace subgeo
