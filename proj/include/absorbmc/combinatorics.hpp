#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>

namespace absorbmc {

// Exact integer arithmetic for path counts. Binomials at the step counts we
// care about (hundreds) overflow 64 bits, so everything stays arbitrary
// precision until the final probability assembly.
using BigInt = boost::multiprecision::cpp_int;

// C(n, k), exact; 0 outside the triangle.
inline BigInt binomial(long long n, long long k) {
    if (n < 0) throw std::invalid_argument("binomial: n must be nonnegative");
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    BigInt r = 1;
    for (long long i = 1; i <= k; ++i) {
        r *= n - k + i;
        r /= i;  // divides exactly: r is C(n-k+i, i) after this step
    }
    return r;
}

inline BigInt pow2_exact(int e) {
    if (e < 0) throw std::invalid_argument("pow2_exact: negative exponent");
    return BigInt(1) << static_cast<unsigned>(e);
}

}  // namespace absorbmc
