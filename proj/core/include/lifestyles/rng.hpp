#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lifestyles {

// splitmix64; used both as a seed scrambler and for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Every stage/substream seed is derived from the master seed and a label,
// so stage-wise and end-to-end runs consume independent, reproducible streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    return splitmix64(master ^ fnv1a64(label));
}

// xoshiro256++ with self-contained distributions. The standard library's
// distributions are not bit-identical across implementations; these are.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : state_) w = x = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        // multiply-shift with rejection of the short tail
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t t = -n % n;
            while (lo < t) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    double normal(double mean = 0.0, double sd = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + sd * spare_;
        }
        // Box-Muller on (0,1] uniforms
        double u1 = 1.0 - next_double();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(6.283185307179586476925286766559 * u2);
        have_spare_ = true;
        return mean + sd * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Marsaglia-Tsang; shape > 0, unit scale.
    double gamma(double shape) {
        if (shape < 1.0) {
            double u = next_double();
            while (u <= 0.0) u = next_double();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = next_double();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // symmetric Dirichlet of dimension k
    std::vector<double> dirichlet(double alpha, std::size_t k) {
        std::vector<double> x(k);
        double sum = 0.0;
        for (auto& v : x) sum += (v = gamma(alpha));
        if (sum <= 0.0) {
            for (auto& v : x) v = 1.0 / static_cast<double>(k);
        } else {
            for (auto& v : x) v /= sum;
        }
        return x;
    }

    // Dirichlet with per-component concentrations
    std::vector<double> dirichlet(const std::vector<double>& alpha) {
        std::vector<double> x(alpha.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) sum += (x[i] = gamma(alpha[i]));
        if (sum <= 0.0) {
            for (auto& v : x) v = 1.0 / static_cast<double>(alpha.size());
        } else {
            for (auto& v : x) v /= sum;
        }
        return x;
    }

    // index draw from unnormalized non-negative weights
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double target = next_double() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (target < acc) return i;
        }
        return weights.size() - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace lifestyles
