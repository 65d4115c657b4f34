#include "structem/special.hpp"
#include "structem/common.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace structem {

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
    return seed ^ (value + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
}

namespace {

// Lanczos g=7, n=9 coefficients (Godfrey). Good to ~1e-15 relative in Gamma.
constexpr double kLanczos[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

double log_gamma_lanczos(double x) {
    // valid for x >= 0.5
    const double g = 7.0;
    double a = kLanczos[0];
    double t = x + g - 0.5;
    for (int i = 1; i < 9; ++i) a += kLanczos[i] / (x + i - 1.0);
    constexpr double half_log_two_pi = 0.91893853320467274178;  // log(2*pi)/2
    return half_log_two_pi + (x - 0.5) * std::log(t) - t + std::log(a);
}

}  // namespace

double log_gamma(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("log_gamma: argument must be positive");
    if (x < 0.5) {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        const double pi = std::acos(-1.0);
        return std::log(pi / std::sin(pi * x)) - log_gamma_lanczos(1.0 - x);
    }
    return log_gamma_lanczos(x);
}

double digamma(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("digamma: argument must be positive");
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    // asymptotic series with Bernoulli numbers through B14
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = std::log(x) - 0.5 * inv;
    double p = inv2;
    series -= p * (1.0 / 12.0);
    p *= inv2;
    series += p * (1.0 / 120.0);
    p *= inv2;
    series -= p * (1.0 / 252.0);
    p *= inv2;
    series += p * (1.0 / 240.0);
    p *= inv2;
    series -= p * (1.0 / 132.0);
    p *= inv2;
    series += p * (691.0 / 32760.0);
    p *= inv2;
    series -= p * (1.0 / 12.0);
    return acc + series;
}

double trigamma(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("trigamma: argument must be positive");
    double acc = 0.0;
    while (x < 10.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = inv + 0.5 * inv2;
    double p = inv * inv2;
    series += p * (1.0 / 6.0);
    p *= inv2;
    series -= p * (1.0 / 30.0);
    p *= inv2;
    series += p * (1.0 / 42.0);
    p *= inv2;
    series -= p * (1.0 / 30.0);
    p *= inv2;
    series += p * (5.0 / 66.0);
    p *= inv2;
    series -= p * (691.0 / 2730.0);
    p *= inv2;
    series += p * (7.0 / 6.0);
    return acc + series;
}

double std_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

namespace {

GaussHermiteRule compute_gauss_hermite(int n) {
    // Newton iteration on the orthonormal Hermite recurrence (weight e^{-x^2}).
    const double pi = std::acos(-1.0);
    GaussHermiteRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * rule.nodes[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * rule.nodes[1];
        } else {
            z = 2.0 * z - rule.nodes[i - 2];
        }
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = std::pow(pi, -0.25);
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        rule.nodes[i] = z;
        rule.nodes[n - 1 - i] = -z;
        rule.weights[i] = 2.0 / (pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    // ascending node order
    for (int i = 0; i < n / 2; ++i) std::swap(rule.nodes[i], rule.nodes[n - 1 - i]);
    return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite_rule(int n) {
    if (n < 2) throw std::invalid_argument("gauss_hermite_rule: need at least 2 points");
    static std::mutex mu;
    static std::map<int, GaussHermiteRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_hermite(n)).first;
    return it->second;
}

}  // namespace structem
