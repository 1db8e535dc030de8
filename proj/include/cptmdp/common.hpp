#pragma once

// Shared error types, deterministic RNG, and small utilities used across the
// library. All randomness flows through Rng (splitmix64) so results are
// reproducible bit-for-bit across platforms for a given seed.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cptmdp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define CPTMDP_DEFINE_ERROR(Name)                                         \
  struct Name : Error {                                                   \
    explicit Name(const std::string& msg) : Error(#Name ": " + msg) {}    \
  }

CPTMDP_DEFINE_ERROR(NonStochasticRow);
CPTMDP_DEFINE_ERROR(RewardOutOfBounds);
CPTMDP_DEFINE_ERROR(BadDiscount);
CPTMDP_DEFINE_ERROR(DimensionMismatch);
CPTMDP_DEFINE_ERROR(EnumerationTooLarge);
CPTMDP_DEFINE_ERROR(NonEvaluable);
CPTMDP_DEFINE_ERROR(InvalidParameter);
CPTMDP_DEFINE_ERROR(CertificateFailed);
CPTMDP_DEFINE_ERROR(FlatRegionTooLarge);
CPTMDP_DEFINE_ERROR(NonInjectiveReward);
CPTMDP_DEFINE_ERROR(EmptySample);
CPTMDP_DEFINE_ERROR(DuplicateState);
CPTMDP_DEFINE_ERROR(NoIntersection);
CPTMDP_DEFINE_ERROR(EventOutOfRange);
CPTMDP_DEFINE_ERROR(SearchBudgetExhausted);
CPTMDP_DEFINE_ERROR(AssumptionViolated);
CPTMDP_DEFINE_ERROR(EmptyBlackSwanSet);
CPTMDP_DEFINE_ERROR(InfeasibleDelta);
CPTMDP_DEFINE_ERROR(ReachabilityViolated);

#undef CPTMDP_DEFINE_ERROR

inline constexpr double kProbTol = 1e-9;  // tolerance for sums that must be 1

// Counter-based splitmix64. Passes PractRand at the sizes used here and is
// exactly reproducible everywhere, unlike std::uniform_real_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Lemire's multiply-shift; bias is < 2^-53 for
  // the small n used here.
  int uniform_int(int n) {
    return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                             static_cast<unsigned __int128>(n)) >> 64);
  }

  double exponential() {
    double u;
    do {
      u = uniform();
    } while (u >= 1.0);
    return -std::log1p(-u);
  }

  // Dirichlet(1,...,1) row: normalized iid exponentials.
  std::vector<double> dirichlet_row(int n) {
    std::vector<double> row(n);
    double sum = 0.0;
    for (double& v : row) {
      v = exponential();
      sum += v;
    }
    for (double& v : row) v /= sum;
    // Renormalize exactly against accumulated rounding.
    double s2 = 0.0;
    for (double v : row) s2 += v;
    for (double& v : row) v /= s2;
    return row;
  }

 private:
  std::uint64_t state_;
};

// Independent substream seed for instance `index` of a run seeded by `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  Rng mix(seed ^ (0x9e3779b97f4a7c15ULL + index * 0xbf58476d1ce4e5b9ULL));
  return mix.next_u64();
}

inline int max_threads() {
  if (const char* env = std::getenv("SBS_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(i) for i in [0, n). Work items must be independent; callers make
// aggregation order-independent (per-index output slots, sums, min/max).
inline void parallel_for(long n, const std::function<void(long)>& fn) {
  int threads = max_threads();
  if (threads <= 1 || n < 64) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  long chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    long lo = t * chunk;
    long hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, t, &fn, &errors] {
      try {
        for (long i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline void require(bool cond, const std::function<void()>& raise) {
  if (!cond) raise();
}

}  // namespace cptmdp
