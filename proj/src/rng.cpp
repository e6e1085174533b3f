#include "atomline/rng.hpp"

#include <cmath>
#include <numbers>

namespace atomline {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ splitmix64(a + 0x632be59bd9b4e019ULL));
    h = splitmix64(h ^ splitmix64(b + 0x8cb92ba72f3d8dd7ULL));
    h = splitmix64(h ^ splitmix64(c + 0xd1b54a32d192ed03ULL));
    return h;
}

std::uint64_t CounterRng::next_u64() {
    return splitmix64(key_ ^ splitmix64(counter_++));
}

double CounterRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

// Box-Muller, written out so streams are identical across standard libraries.
double CounterRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
}

std::complex<double> CounterRng::complex_normal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
}

}  // namespace atomline
