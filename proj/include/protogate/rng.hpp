#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace protogate {

// Deterministic random source. Every distribution is built on the raw
// mt19937_64 stream; std::*_distribution is avoided because its output is
// implementation-defined, which would break byte-identical artifacts.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1], safe under log
    double uniform_pos() { return 1.0 - uniform(); }

    // uniform integer in [0, n), rejection sampling to avoid modulo bias
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    // standard normal via Box-Muller, second value cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u = uniform_pos();
        const double v = uniform();
        const double r = std::sqrt(-2.0 * std::log(u));
        spare_ = r * std::sin(2.0 * kPi * v);
        has_spare_ = true;
        return r * std::cos(2.0 * kPi * v);
    }

    // Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 boosted through
    // Gamma(shape+1) * U^(1/shape).
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform_pos();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x;
            double v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

    // symmetric Dirichlet(alpha) over n categories
    std::vector<double> dirichlet(double alpha, std::size_t n) {
        std::vector<double> out(n);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = gamma(alpha);
            sum += out[i];
        }
        if (sum <= 0.0) {
            const double u = 1.0 / static_cast<double>(n);
            for (auto& v : out) v = u;
            return out;
        }
        for (auto& v : out) v /= sum;
        return out;
    }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace protogate
