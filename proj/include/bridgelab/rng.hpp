#ifndef BRIDGELAB_RNG_HPP
#define BRIDGELAB_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace bridgelab {

// Deterministic noise source. Uniform and normal draws are derived from the
// raw engine output directly (not through std::*_distribution, whose mapping
// is implementation-defined), so a serialized state replays the exact same
// stream after a checkpoint resume.
class RngStream {
   public:
    explicit RngStream(uint64_t seed = 0) : engine_(seed) {}

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller without caching; two engine words per draw keeps the state
    // trivially serializable.
    double normal() {
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    uint64_t integer(uint64_t n) {  // uniform in [0, n)
        return engine_() % n;
    }

    std::string serialize() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void deserialize(const std::string& s) {
        std::istringstream is(s);
        is >> engine_;
    }

   private:
    std::mt19937_64 engine_;
};

}  // namespace bridgelab

#endif
