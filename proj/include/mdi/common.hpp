#pragma once

#include <cstdint>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdi {

inline constexpr const char* kVersion = "mdi 0.1.0";

using Vec = std::vector<double>;

// Error taxonomy. InvalidInput and ConfigError map to CLI exit code 2,
// SolverError to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

// Missing Slater point, target outside the reachable set, and similar
// structural infeasibilities.
class Infeasible : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

inline bool all_finite(std::span<const double> a) {
    for (double x : a) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

// x += c * y
inline void axpy(double c, std::span<const double> y, Vec& x) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += c * y[i];
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// splitmix64 step; used to derive independent per-trial seeds from
// (master seed, stream index) without correlated low bits.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded generator with explicit transforms so that streams are identical
// across standard library implementations (std::*_distribution is not
// portable; mt19937_64 itself is).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform on [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw InvalidInput("uniform_int: n must be positive");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    double exponential() { return -std::log1p(-uniform()); }

    // geometric on {0,1,2,...} with success probability lambda
    std::uint64_t geometric(double lambda) {
        if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidInput("geometric: lambda must lie in (0,1)");
        double u = 1.0 - uniform();  // (0, 1]
        return static_cast<std::uint64_t>(std::floor(std::log(u) / std::log1p(-lambda)));
    }

    // index draw from an unnormalized nonnegative weight vector
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace mdi
