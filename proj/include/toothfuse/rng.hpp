#pragma once

#include "toothfuse/core.hpp"

#include <random>

namespace toothfuse {

// Seeded generator with fixed output mapping. std::mt19937_64 is bit-exact
// across platforms; the distribution conversions below are spelled out so
// sequences do not depend on the standard library's distribution objects.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0,1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0.
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<__uint128_t>(eng_()) * static_cast<__uint128_t>(n)) >> 64);
    }

    // Standard normal via Box-Muller; caches the second value.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    Vec3 gaussian_vec3() {
        double x = gaussian(), y = gaussian(), z = gaussian();
        return {x, y, z};
    }

    Vec3 unit_vector() {
        while (true) {
            Vec3 v = gaussian_vec3();
            double n = v.norm();
            if (n > 1e-12) return v / n;
        }
    }

    // Uniform inside the unit ball (rejection from the cube).
    Vec3 in_unit_ball() {
        while (true) {
            double x = uniform(-1.0, 1.0);
            double y = uniform(-1.0, 1.0);
            double z = uniform(-1.0, 1.0);
            Vec3 v{x, y, z};
            if (v.squaredNorm() <= 1.0) return v;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[uniform_index(i)]);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace toothfuse
