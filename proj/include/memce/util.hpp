#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace memce {

/// Raised when an input file or record violates the data contract
/// (as opposed to a programming error, which throws invalid_argument).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when stored artifacts disagree with each other (e.g. a checkpoint
/// whose tensors do not fit its own config). Maps to CLI exit code 3.
struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic random source. All randomness in the project flows through
/// this wrapper so that runs are reproducible from a single seed regardless
/// of platform (std:: distributions are implementation-defined; these are not).
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  /// Uniform in [0, 1) with 53 bits of entropy.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

/// Level parsed from the MEMCE_LOG environment variable (error|info|debug).
LogLevel log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace memce
