#pragma once

#include <cstdint>
#include <complex>

namespace atomline {

// Counter-based stream: draw i of stream (key) is splitmix64(key, i), so any
// trial can be regenerated without replaying earlier trials.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64();
    // uniform in [0, 1)
    double uniform();
    double normal();
    // circular complex Gaussian with E|z|^2 = variance
    std::complex<double> complex_normal(double variance);

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Combine a base seed with structured indices into a stream key.
std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace atomline
