#pragma once

#include <cstdint>
#include <vector>

namespace dblab {

// Counter-based generator (splitmix64 core). Streams derived through split()
// are independent of draws taken from the parent, so every sampling op can be
// handed its own stream and experiments replay bit-identically from one seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Child stream keyed by `stream`; does not consume parent state.
    Rng split(std::uint64_t stream) const;

    std::uint64_t next_u64();
    // Uniform in [0, 1).
    double uniform();
    // Uniform in (a, b].
    double uniform_open_closed(double a, double b);
    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);
    // Standard normal (Box-Muller, cached spare).
    double normal();

    void shuffle(std::vector<int>& idx);

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace dblab
