#include "absorbmc/concentration.hpp"

#include <cmath>
#include <numbers>

#include "absorbmc/special_functions.hpp"

namespace absorbmc {

namespace {

double require_valid_shape(const FitParams& params, int d) {
    const auto v = SteadyStateValidity::check(params.gamma, d);
    if (!v.valid) throw DivergentRegimeError(params.gamma, d, 0.5 * (2.0 - d));
    return v.shape;
}

double emission_prefactor(const FitParams& params, double Q, double r, double D, int d,
                          double shape) {
    return params.alpha * Q / (std::pow(4.0 * std::numbers::pi, 0.5 * d) * D) *
           std::pow(r, 2.0 - d) * std::pow(4.0 * params.beta, shape);
}

}  // namespace

double conc_instant(const FitParams& params, double N, double r, double t, double D, int d) {
    if (N < 0.0) throw std::domain_error("conc_instant: N must be nonnegative");
    return N * model_eval(params, r, t, D, d);
}

double conc_continuous(const FitParams& params, double Q, double r, double t, double D, int d) {
    if (Q < 0.0) throw std::domain_error("conc_continuous: Q must be nonnegative");
    if (!(t > 0.0)) throw std::domain_error("conc_continuous: t must be positive");
    if (!(r > 0.0)) throw std::domain_error("conc_continuous: r must be positive");
    const double shape = require_valid_shape(params, d);
    const double tail_start = r * r / (4.0 * D * params.beta * t);
    return emission_prefactor(params, Q, r, D, d, shape) *
           upper_incomplete_gamma(shape, tail_start);
}

double conc_steady(const FitParams& params, double Q, double r, double D, int d) {
    if (Q < 0.0) throw std::domain_error("conc_steady: Q must be nonnegative");
    if (!(r > 0.0)) throw std::domain_error("conc_steady: r must be positive");
    const double shape = require_valid_shape(params, d);
    return emission_prefactor(params, Q, r, D, d, shape) * std::tgamma(shape);
}

}  // namespace absorbmc
