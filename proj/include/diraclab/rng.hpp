#pragma once

#include <cstdint>
#include <string_view>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

namespace diraclab {

/// Version tag of the random streams; bump whenever the mapping from
/// (seed, stream index) to numbers changes.
inline constexpr std::string_view rng_version = "mt19937_64+splitmix64/v1";

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream number `index` of run `seed`. Sample i of an ensemble
/// always reads stream i, so results do not depend on scheduling.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t index)
        : engine_(splitmix64(splitmix64(seed) ^ splitmix64(index ^ 0x5bd1e9955bd1e995ULL)))
    {
    }

    double normal() { return normal_(engine_); }
    double rademacher() { return (engine_() & 1) ? 1.0 : -1.0; }
    std::uint64_t bits() { return engine_(); }

private:
    boost::random::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_;
};

}  // namespace diraclab
