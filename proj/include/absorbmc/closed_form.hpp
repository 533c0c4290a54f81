#pragma once

#include <vector>

#include "absorbmc/combinatorics.hpp"

namespace absorbmc::closed_form {

/// Path-counting inputs for one 1-D query: destination x > 0 reached in n
/// steps, half_gap = (n - x) / 2 wasted step pairs, and eta the absorber's
/// distance beyond the origin-destination interval (0 when it lies inside).
struct PathCountContext {
    int x = 0;
    int n = 0;
    int half_gap = 0;
    int eta = 0;

    static PathCountContext make(int x, int n, int m);
};

enum class CoefficientKind { b, c, h };

/// One family of crossing-count coefficients, exact integers. For kind b the
/// entry at index i counts paths with half_gap + 1 - i crossings of an
/// absorber site inside the interval; for kind c the crossings are of a site
/// eta beyond it.
struct CrossingCoefficients {
    CoefficientKind kind;
    std::vector<BigInt> values;
};

BigInt b_coeff(int x, int half_gap, int i);
BigInt c_coeff(int x, int half_gap, int eta, int i);
BigInt h_coeff(int x, int n, int eta);

CrossingCoefficients b_coefficients(int x, int half_gap);
CrossingCoefficients c_coefficients(int x, int half_gap, int eta);

/// Probability of sitting at x after n steps of a free +-1 walk with
/// right-step probability p. Zero off-parity or out of range.
double p_free(int x, int n, double p);

/// Absorber strictly between origin and destination (any such site; the
/// value does not depend on where inside the interval it sits).
double p_inside(int x, int n, double p, double q);

/// Absorber on the origin or the destination. The initial placement and the
/// final arrival are exempt from absorption (one thinning factor fewer per
/// visit trace than the interior case).
double p_boundary(int x, int n, double p, double q);

/// Absorber beyond the destination (m > x) or behind the origin (m < 0).
double p_outside(int x, int n, double p, double q, int m);

/// Dispatcher over the three placements. Negative x is mirrored
/// (x -> -x, p -> 1-p, m -> -m). x == 0 is only defined at n == 0.
double p_any(int x, int n, double p, double q, int m);

}  // namespace absorbmc::closed_form
