#include "absorbmc/special_functions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace absorbmc {

namespace {

constexpr int kMaxTerms = 10000;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// regularized lower gamma P(s, x) by series, valid for x < s + 1
double lower_regularized_series(double s, double x) {
    double term = 1.0 / s;
    double sum = term;
    for (int k = 1; k < kMaxTerms; ++k) {
        term *= x / (s + k);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

// Gamma(s, x) by modified Lentz continued fraction, valid for x >= s + 1
double upper_continued_fraction(double s, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxTerms; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return std::exp(-x + s * std::log(x)) * h;
}

}  // namespace

double upper_incomplete_gamma(double s, double x) {
    if (!(s > 0.0)) throw std::domain_error("upper_incomplete_gamma: s must be positive");
    if (x < 0.0) throw std::domain_error("upper_incomplete_gamma: x must be nonnegative");
    if (x == 0.0) return std::tgamma(s);
    if (x < s + 1.0) return std::tgamma(s) * (1.0 - lower_regularized_series(s, x));
    return upper_continued_fraction(s, x);
}

}  // namespace absorbmc
