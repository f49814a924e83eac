#pragma once

#include <cstdint>
#include <random>

// Seeded random streams.
//
// Every random quantity is drawn from its own substream, keyed by (seed, stream kind, index,
// slot). A substream is an std::mt19937_64 seeded with a SplitMix64 hash of the key, and uniforms
// are built from the top 53 bits of each output, so draws are identical on every platform and
// adding devices, OSPs or restarts never changes existing draws.
namespace mecgame::rng {

enum class Stream : std::uint64_t { Device = 1, Osp = 2, Restart = 3, Experiment = 4 };

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t substream_seed(std::uint64_t seed, Stream kind, std::uint64_t index, std::uint64_t slot = 0) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(kind));
    h = splitmix64(h ^ index);
    return splitmix64(h ^ slot);
}

class Substream {
public:
    Substream(std::uint64_t seed, Stream kind, std::uint64_t index, std::uint64_t slot = 0)
        : engine_(substream_seed(seed, kind, index, slot)) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi]; returns lo exactly when lo == hi.
    double uniform(double lo, double hi) { return lo == hi ? lo : lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace mecgame::rng
