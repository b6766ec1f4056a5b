#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace fedsim {

// Stateless 64-bit mixer (splitmix64 finalizer). Used to derive independent
// seeds from (experiment seed, round, client id) style tuples so that work
// can be scheduled in any order without changing results.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t a) { return mix64(base ^ mix64(a)); }

inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b) {
    return mix64(derive_seed(base, a) ^ mix64(b + 0x632be59bd9b4e019ULL));
}

// mt19937_64 with hand-rolled distributions. The standard distribution
// objects are implementation-defined; rolling our own keeps byte-level
// reproducibility under our control.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Rejection sampling, unbiased.
    size_t uniform_index(size_t n) {
        if (n <= 1) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<size_t>(x % n);
    }

    // Box-Muller (cosine branch only, no cached state).
    double normal(double mean = 0.0, double stddev = 1.0) {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * M_PI * u2);
    }

    // Beta(a, b). Closed-form inverse CDF when one shape is 1 (the generator
    // only ever needs Beta(1, 3)); Johnk's method otherwise.
    double beta(double a, double b) {
        if (a == 1.0) return 1.0 - std::pow(1.0 - uniform(), 1.0 / b);
        if (b == 1.0) return std::pow(uniform(), 1.0 / a);
        while (true) {
            const double x = std::pow(uniform(), 1.0 / a);
            const double y = std::pow(uniform(), 1.0 / b);
            if (x + y <= 1.0) {
                if (x + y > 0.0) return x / (x + y);
            }
        }
    }

    // Fisher-Yates; std::shuffle is implementation-defined.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_index(i)]);
        }
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace fedsim
