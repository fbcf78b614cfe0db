#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>

namespace pathnet {

/// Seeded random source used by every stochastic operation.
///
/// Distributions are implemented here rather than taken from <random>, whose
/// distribution algorithms are implementation-defined; only the engine
/// (mt19937_64, fully specified by the standard) comes from the library.
/// This keeps runs reproducible across standard library vendors.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Independent stream derived from (seed, stream) by splitmix64 mixing.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n);
    /// Uniform over the closed integer range [lo, hi].
    int uniform_int(int lo, int hi);
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform01();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    /// Standard normal via Box-Muller (one draw per call, no cached pair).
    double normal();
    bool bernoulli(double p) { return uniform01() < p; }

    template <class T>
    void shuffle(std::span<T> items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

    std::string save_state() const;
    void load_state(const std::string& state);

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace pathnet
