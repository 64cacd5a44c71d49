#include "cscn/parallel.hpp"

#include <cstdlib>
#include <string>

namespace cscn {

unsigned default_thread_count() {
  if (const char* env = std::getenv("CSCN_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (...) {
      // fall through to hardware default
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace cscn
