#pragma once

#include "mdi/common.hpp"

namespace mdi {

/// Closed-form concentration bound, reported in the log domain since
/// (N+1)^card overflows quickly.
struct BoundReport {
    double log_probability_bound = 0;  // nats, may be positive (vacuous)
    double probability_bound = 0;      // min(1, exp(log bound))
    double r = 0;
    long N = 0;
    long cardinality = 0;  // |Xi| or |S| + |A|
};

/// log bound = |Xi| log(N+1) - r N for the disappointment event on a
/// finite scenario space.
BoundReport finite_sample_bound(double r, long N, long card_xi);

/// log bound = (|S| + |A|) log(N+1) - r N for the event V > J*_N.
BoundReport ope_bound(double r, long N, long n_states, long n_actions);

/// exp(-2 N eps^2 / b^2); b is the largest cost-weighted importance ratio.
double hoeffding_ips_bound(double epsilon, long N, double b);

/// Smallest radius whose finite-sample bound is at most target:
/// r = (|Xi| log(N+1) + log(1/target)) / N.
double radius_for_confidence(long N, long card_xi, double target);

}  // namespace mdi
