#pragma once
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace ovtl {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// counter-based: value i of stream s is a pure function of (seed, s, i)
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : key_(splitmix64(seed) ^ splitmix64(~stream)) {}

    std::uint64_t at(std::uint64_t i) const { return splitmix64(key_ ^ splitmix64(i * 0xd1b54a32d192ed03ULL)); }
    std::uint64_t next() { return at(ctr_++); }

    // (0,1)
    double uniform() { return (double(next() >> 11) + 0.5) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal()
    {
        double u = uniform(), v = uniform();
        return std::sqrt(-2 * std::log(u)) * std::cos(2 * std::numbers::pi * v);
    }
    // E|z|^2 = 1
    std::complex<double> cnormal()
    {
        double u = uniform(), v = uniform();
        double r = std::sqrt(-std::log(u));
        return {r * std::cos(2 * std::numbers::pi * v), r * std::sin(2 * std::numbers::pi * v)};
    }
    std::uint64_t counter() const { return ctr_; }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

} // namespace ovtl
