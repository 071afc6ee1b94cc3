#include "polarcov/common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace polarcov {

std::uint32_t Rng::sample_weights(std::span<const double> w) {
  double total = 0.0;
  for (double v : w) total += v;
  if (!(total > 0.0)) {
    throw ImpossiblePrefixError("sample_weights: all weights are zero");
  }
  const double u = uniform01() * total;
  double acc = 0.0;
  std::uint32_t last_positive = 0;
  bool seen_positive = false;
  for (std::uint32_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    acc += w[i];
    last_positive = i;
    seen_positive = true;
    if (u < acc) return i;
  }
  // u landed in the rounding slack past the last atom.
  (void)seen_positive;
  return last_positive;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("POLARCOV_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t total, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_count(), total == 0 ? 1 : total);
  if (workers <= 1) {
    for (std::size_t i = 0; i < total; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string fnv1a64_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace polarcov
