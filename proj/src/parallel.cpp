#include "msabs/parallel.hpp"

namespace msabs {
namespace {
std::atomic<unsigned> g_jobs{0};
}  // namespace

void set_jobs(unsigned n) { g_jobs = n; }

unsigned jobs() {
  const unsigned n = g_jobs.load();
  if (n != 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace msabs
