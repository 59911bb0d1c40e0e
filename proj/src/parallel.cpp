#include "rou/parallel.hpp"

namespace rou {

namespace {
std::atomic<std::size_t> g_workers{1};
}

std::size_t worker_count() { return g_workers.load(); }

void set_worker_count(std::size_t n) { g_workers.store(n == 0 ? 1 : n); }

}  // namespace rou
