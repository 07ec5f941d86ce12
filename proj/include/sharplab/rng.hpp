#pragma once

#include <array>
#include <cstdint>

namespace sharplab {

// Deterministic random stream: xoshiro256++ seeded through a splitmix64
// chain. The generator is fixed by this file, never by the platform, so a
// seed produces the same draw sequence on every machine.
//
// Draw order contracts (tests and file formats depend on them):
//   uniform():  next_u64() >> 11, scaled by 2^-53  ->  [0, 1)
//   gaussian(): Box-Muller; draws u1 then u2, returns
//               sqrt(-2 ln(1-u1)) * cos(2 pi u2) and caches the sin twin
//               for the next call.
//
// A stream is single-owner. Parallel work never shares one; it derives
// children with split(i), which reseeds from splitmix64(seed ^ mix(i)) and
// is a pure function of (seed, i).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();
    double uniform();
    double gaussian();

    RngStream split(std::uint64_t child) const;

private:
    std::array<std::uint64_t, 4> state_;
    std::uint64_t seed_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace sharplab
