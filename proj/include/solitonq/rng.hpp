#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace solitonq {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// One independent stream per chain. Variate generation is hand-rolled
// (53-bit uniforms, Box-Muller normals) because the standard library
// distributions are implementation-defined and would tie results to a
// particular libstdc++ version.
class ChainRng {
  public:
    ChainRng(std::uint64_t seed, std::uint64_t stream)
        : gen_(splitmix64(splitmix64(seed) ^ (stream + 1))) {}

    // uniform in (0, 1)
    double uniform() {
        std::uint64_t bits = gen_();
        return ((bits >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace solitonq
