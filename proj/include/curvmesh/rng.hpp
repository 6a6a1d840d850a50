#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace curvmesh {

/// xoshiro256** seeded through splitmix64.
///
/// The standard library distributions are implementation-defined, so the
/// uniform and normal draws below are spelled out explicitly: a 53-bit
/// mantissa fill for uniforms and the Box-Muller transform for normals.
/// Identical seeds give identical streams on every conforming platform
/// (modulo last-ulp differences in libm's log/cos).
class Xoshiro256
{
public:
    explicit Xoshiro256(std::uint64_t seed)
    {
        std::uint64_t x = seed;
        for (auto& s : m_state) s = splitmix64(x);
    }

    std::uint64_t next()
    {
        const std::uint64_t result = rotl(m_state[1] * 5, 7) * 9;
        const std::uint64_t t = m_state[1] << 17;
        m_state[2] ^= m_state[0];
        m_state[3] ^= m_state[1];
        m_state[1] ^= m_state[2];
        m_state[0] ^= m_state[3];
        m_state[2] ^= t;
        m_state[3] = rotl(m_state[3], 45);
        return result;
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal; pairs are generated together and the second is cached.
    double normal()
    {
        if (m_has_spare) {
            m_has_spare = false;
            return m_spare;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        m_spare = radius * std::sin(angle);
        m_has_spare = true;
        return radius * std::cos(angle);
    }

    /// Independent stream derived from a base seed and a stream index.
    static Xoshiro256 stream(std::uint64_t seed, std::uint64_t index)
    {
        std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ull * (index + 1));
        return Xoshiro256(splitmix64(x));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x)
    {
        std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::array<std::uint64_t, 4> m_state{};
    double m_spare = 0.0;
    bool m_has_spare = false;
};

} // namespace curvmesh
