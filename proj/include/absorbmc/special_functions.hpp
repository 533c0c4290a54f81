#pragma once

namespace absorbmc {

/// Upper incomplete gamma, the integral of t^(s-1) e^-t from x to infinity.
/// s > 0, x >= 0; reduces to the complete gamma at x == 0. Series below the
/// x = s + 1 crossover, continued fraction above it.
double upper_incomplete_gamma(double s, double x);

}  // namespace absorbmc
