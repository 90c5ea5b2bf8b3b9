#include "mdi/guarantees.hpp"

namespace mdi {

BoundReport finite_sample_bound(double r, long N, long card_xi) {
    if (!(r > 0.0) || N < 1 || card_xi < 1)
        throw InvalidInput("finite_sample_bound requires r > 0, N >= 1 and |Xi| >= 1");
    BoundReport b;
    b.r = r;
    b.N = N;
    b.cardinality = card_xi;
    b.log_probability_bound = card_xi * std::log(static_cast<double>(N) + 1.0) - r * N;
    b.probability_bound = std::min(1.0, std::exp(b.log_probability_bound));
    return b;
}

BoundReport ope_bound(double r, long N, long n_states, long n_actions) {
    if (!(r >= 0.0) || N < 1 || n_states < 1 || n_actions < 1)
        throw InvalidInput("ope_bound requires r >= 0, N >= 1 and positive state/action counts");
    BoundReport b;
    b.r = r;
    b.N = N;
    b.cardinality = n_states + n_actions;
    b.log_probability_bound = b.cardinality * std::log(static_cast<double>(N) + 1.0) - r * N;
    b.probability_bound = std::min(1.0, std::exp(b.log_probability_bound));
    return b;
}

double hoeffding_ips_bound(double epsilon, long N, double b) {
    if (!(epsilon > 0.0) || N < 1 || !(b > 0.0))
        throw InvalidInput("hoeffding_ips_bound requires epsilon > 0, N >= 1 and b > 0");
    return std::exp(-2.0 * N * epsilon * epsilon / (b * b));
}

double radius_for_confidence(long N, long card_xi, double target) {
    if (!(target > 0.0 && target < 1.0))
        throw InvalidInput("radius_for_confidence requires target in (0, 1)");
    if (N < 1 || card_xi < 1) throw InvalidInput("radius_for_confidence requires N >= 1 and |Xi| >= 1");
    return (card_xi * std::log(static_cast<double>(N) + 1.0) + std::log(1.0 / target)) / N;
}

}  // namespace mdi
