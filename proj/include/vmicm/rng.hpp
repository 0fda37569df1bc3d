#pragma once

#include <array>
#include <cstdint>

namespace vmicm {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

inline constexpr const char* kRngName = "philox4x32-10/v1 (53-bit uniforms, Box-Muller normals)";

// Deterministic stream of variates for one (seed, stream id) pair. The
// key is the seed; the counter carries the stream id in its upper words
// and the block index in its lower words.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream);

    std::uint32_t next_u32();
    // Uniform on the open interval (0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();

private:
    PhiloxKey key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    PhiloxCounter buffer_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace vmicm
