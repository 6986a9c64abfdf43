#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace sgda {

// All randomness in the project flows through these helpers so that runs are
// reproducible bit-for-bit from a single master seed, independent of the
// standard library's distribution implementations.

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

// Stable named sub-stream derivation: (base, "tag", index) -> seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t index = 0);

// Counter-based generation: a value is a pure function of (key, counter),
// so streams can be replayed without tracking generator state.
std::uint64_t hash_counter(std::uint64_t key, std::uint64_t counter);
double uniform_from_counter(std::uint64_t key, std::uint64_t counter);
// Standard normal deviate consuming counters (2c, 2c+1) under `key`.
double gaussian_from_counter(std::uint64_t key, std::uint64_t counter);

// Small sequential generator (splitmix64 stream).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double next_double();                      // [0, 1)
  double uniform(double lo, double hi);      // [lo, hi)
  double gaussian();                         // standard normal
  std::size_t next_index(std::size_t n);     // [0, n), n > 0

 private:
  std::uint64_t state_;
};

// Shortest round-trip decimal form of a double (to_chars), used everywhere a
// double is written to CSV/JSON-adjacent text so outputs are byte-stable.
std::string format_double(double v);

// Runs fn(0..n-1) on up to `jobs` threads. Each index must be independent;
// results keyed by index stay deterministic regardless of scheduling.
void parallel_for(std::size_t n, unsigned jobs,
                  const std::function<void(std::size_t)>& fn);

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };
LogLevel log_level();  // from SGDA_LOG (quiet|info|debug or 0|1|2)
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace sgda
