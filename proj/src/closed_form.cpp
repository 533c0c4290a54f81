#include "absorbmc/closed_form.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace absorbmc::closed_form {

namespace {

// (1-q)^k with 0^0 == 1 so the zero-crossing term survives at q == 1.
double survival_pow(double one_minus_q, int k) {
    if (k == 0) return 1.0;
    return std::pow(one_minus_q, k);
}

void require_parityable(const char* who, int x, int n) {
    if (x < 1) throw std::invalid_argument(std::string(who) + ": x must be >= 1");
    if (n < 0) throw std::invalid_argument(std::string(who) + ": n must be >= 0");
}

}  // namespace

PathCountContext PathCountContext::make(int x, int n, int m) {
    require_parityable("PathCountContext", x, n);
    if (n < x || ((n - x) & 1))
        throw std::invalid_argument("PathCountContext: (x, n) not parity-reachable");
    PathCountContext ctx;
    ctx.x = x;
    ctx.n = n;
    ctx.half_gap = (n - x) / 2;
    ctx.eta = m > x ? m - x : (m < 0 ? -m : 0);
    return ctx;
}

BigInt b_coeff(int x, int half_gap, int i) {
    if (x < 1) throw std::invalid_argument("b_coeff: x must be >= 1");
    if (half_gap < 0) throw std::invalid_argument("b_coeff: half_gap must be >= 0");
    if (i < 0 || i > half_gap) throw std::invalid_argument("b_coeff: i out of [0, half_gap]");
    const long long a = static_cast<long long>(x) + half_gap;
    BigInt t = binomial(a + i, a) * (a - i);
    if (t % (a + i) != 0) throw std::logic_error("b_coeff: non-integer path count");
    t /= a + i;
    return t << static_cast<unsigned>(half_gap - i);
}

BigInt c_coeff(int x, int half_gap, int eta, int i) {
    if (x < 1) throw std::invalid_argument("c_coeff: x must be >= 1");
    if (eta < 1) throw std::invalid_argument("c_coeff: eta must be >= 1");
    if (i < 0 || i > half_gap - eta)
        throw std::invalid_argument("c_coeff: i out of [0, half_gap - eta]");
    const long long a = static_cast<long long>(x) + half_gap + eta;
    BigInt t = binomial(a + i, a) * (a - i);
    if (t % (a + i) != 0) throw std::logic_error("c_coeff: non-integer path count");
    t /= a + i;
    return t << static_cast<unsigned>(half_gap - eta - i);
}

BigInt h_coeff(int x, int n, int eta) {
    require_parityable("h_coeff", x, n);
    if (eta < 1) throw std::invalid_argument("h_coeff: eta must be >= 1");
    if (n < x || ((n - x) & 1))
        throw std::invalid_argument("h_coeff: (x, n) not parity-reachable");
    const int half_gap = (n - x) / 2;
    if (eta <= half_gap) return binomial(n, half_gap) - binomial(n, half_gap - eta);
    return binomial(n, half_gap);
}

CrossingCoefficients b_coefficients(int x, int half_gap) {
    CrossingCoefficients out{CoefficientKind::b, {}};
    out.values.reserve(half_gap + 1);
    for (int i = 0; i <= half_gap; ++i) out.values.push_back(b_coeff(x, half_gap, i));
    return out;
}

CrossingCoefficients c_coefficients(int x, int half_gap, int eta) {
    CrossingCoefficients out{CoefficientKind::c, {}};
    if (half_gap < eta) return out;  // absorber unreachable, no crossing classes
    out.values.reserve(half_gap - eta + 1);
    for (int i = 0; i <= half_gap - eta; ++i) out.values.push_back(c_coeff(x, half_gap, eta, i));
    return out;
}

double p_free(int x, int n, double p) {
    if (n < 0) throw std::invalid_argument("p_free: n must be >= 0");
    if (std::abs(x) > n || ((n + x) & 1)) return 0.0;
    const int n_right = (n + x) / 2;
    return binomial(n, n_right).convert_to<double>() * std::pow(p, n_right) *
           std::pow(1.0 - p, n - n_right);
}

double p_inside(int x, int n, double p, double q) {
    require_parityable("p_inside", x, n);
    if (n < x || ((n - x) & 1)) return 0.0;
    if (q == 0.0) return p_free(x, n, p);
    const int hg = (n - x) / 2;
    const double s = 1.0 - q;
    double sum = 0.0;
    for (int i = 0; i <= hg; ++i)
        sum += b_coeff(x, hg, i).convert_to<double>() * survival_pow(s, hg + 1 - i);
    return std::pow(p, x + hg) * std::pow(1.0 - p, hg) * sum;
}

double p_boundary(int x, int n, double p, double q) {
    require_parityable("p_boundary", x, n);
    if (n < x || ((n - x) & 1)) return 0.0;
    if (q == 0.0) return p_free(x, n, p);
    const int hg = (n - x) / 2;
    const double s = 1.0 - q;
    double sum = 0.0;
    for (int i = 0; i <= hg; ++i)
        sum += b_coeff(x, hg, i).convert_to<double>() * survival_pow(s, hg - i);
    return std::pow(p, x + hg) * std::pow(1.0 - p, hg) * sum;
}

double p_outside(int x, int n, double p, double q, int m) {
    require_parityable("p_outside", x, n);
    if (m >= 0 && m <= x)
        throw std::invalid_argument("p_outside: absorber must lie outside [0, x]");
    if (n < x || ((n - x) & 1)) return 0.0;
    const int eta = m > x ? m - x : -m;
    // Too few steps to touch the absorber and still come back.
    if (n < x + 2 * eta) return p_free(x, n, p);
    if (q == 0.0) return p_free(x, n, p);
    const int hg = (n - x) / 2;
    const double s = 1.0 - q;
    double sum = h_coeff(x, n, eta).convert_to<double>();
    for (int i = 0; i <= hg - eta; ++i)
        sum += c_coeff(x, hg, eta, i).convert_to<double>() * survival_pow(s, hg - eta + 1 - i);
    return std::pow(p, x + hg) * std::pow(1.0 - p, hg) * sum;
}

double p_any(int x, int n, double p, double q, int m) {
    if (x < 0) return p_any(-x, n, 1.0 - p, q, -m);
    if (x == 0) {
        if (n == 0) return 1.0;  // initial placement triggers no absorption
        throw std::domain_error("p_any: x == 0 with n > 0 is outside the closed forms");
    }
    if (n < x || ((n - x) & 1)) return 0.0;
    if (q == 0.0) return p_free(x, n, p);
    if (m == 0 || m == x) return p_boundary(x, n, p, q);
    if (m > 0 && m < x) return p_inside(x, n, p, q);
    return p_outside(x, n, p, q, m);
}

}  // namespace absorbmc::closed_form
