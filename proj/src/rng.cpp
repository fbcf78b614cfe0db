#include "pathnet/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "pathnet/error.hpp"

namespace pathnet {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream)
{
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

std::size_t Rng::uniform_index(std::size_t n)
{
    if (n == 0) {
        throw Error("uniform_index: empty range");
    }
    const std::uint64_t bound = n;
    // Rejection keeps the draw unbiased for bounds that do not divide 2^64.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

int Rng::uniform_int(int lo, int hi)
{
    if (hi < lo) {
        throw Error("uniform_int: empty range");
    }
    const auto span = static_cast<std::size_t>(static_cast<std::int64_t>(hi) - lo + 1);
    return static_cast<int>(lo + static_cast<std::int64_t>(uniform_index(span)));
}

double Rng::uniform01()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal()
{
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::save_state() const
{
    std::ostringstream out;
    out << engine_;
    return out.str();
}

void Rng::load_state(const std::string& state)
{
    std::istringstream in(state);
    in >> engine_;
    if (!in) {
        throw Error("Rng::load_state: malformed engine state");
    }
}

}  // namespace pathnet
