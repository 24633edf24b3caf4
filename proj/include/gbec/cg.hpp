#pragma once

#include <algorithm>
#include <cmath>

namespace gbec {

namespace detail {
inline double lfact(int n) { return std::lgamma(n + 1.0); }
}

// Clebsch-Gordan coefficient C^{LM}_{l1 m1, l2 m2} for integer angular
// momenta, Condon-Shortley phase (Racah's closed form). Returns 0 outside
// the selection rules.
inline double clebsch_gordan(int l1, int m1, int l2, int m2, int L, int M) {
  if (std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(M) > L) return 0.0;
  if (l1 < 0 || l2 < 0 || L < 0) return 0.0;
  if (m1 + m2 != M) return 0.0;
  if (L < std::abs(l1 - l2) || L > l1 + l2) return 0.0;

  using detail::lfact;
  const double logpre =
      0.5 * (std::log(2.0 * L + 1.0) + lfact(L + l1 - l2) + lfact(L - l1 + l2) +
             lfact(l1 + l2 - L) - lfact(l1 + l2 + L + 1) + lfact(L + M) +
             lfact(L - M) + lfact(l1 - m1) + lfact(l1 + m1) + lfact(l2 - m2) +
             lfact(l2 + m2));

  const int kmin = std::max({0, l2 - m1 - L, l1 + m2 - L});
  const int kmax = std::min({l1 + l2 - L, l1 - m1, l2 + m2});
  double sum = 0.0;
  for (int k = kmin; k <= kmax; ++k) {
    const double logden = lfact(k) + lfact(l1 + l2 - L - k) + lfact(l1 - m1 - k) +
                          lfact(l2 + m2 - k) + lfact(L - l2 + m1 + k) +
                          lfact(L - l1 - m2 + k);
    const double term = std::exp(logpre - logden);
    sum += (k % 2 == 0) ? term : -term;
  }
  return sum;
}

}  // namespace gbec
