#pragma once

#include <string>

#include "mdi/distribution.hpp"

namespace mdi {

struct LabeledSample {
    Vec x;
    double y = 0;  // -1 or +1

    Vec atom() const {
        Vec a = x;
        a.push_back(y);
        return a;
    }
};

std::vector<Vec> atoms_of(const std::vector<LabeledSample>& samples);

/// Training distribution of the synthetic covariate-shift task: features
/// uniform on [0,1]^{m-1}, label +1 iff the coordinate mean exceeds 1/2
/// (ties labeled -1).
std::vector<LabeledSample> synth_train(std::size_t m, long N, std::uint64_t seed);

/// Test distribution with feature density (2/(m-1)) sum_j x_j, drawn via
/// its exact mixture decomposition (pick a coordinate, draw it as sqrt(U),
/// the rest uniform); same label rule.
std::vector<LabeledSample> synth_test(std::size_t m, long N, std::uint64_t seed);

/// Mean of coordinate j under the test feature density.
double synth_test_feature_mean(std::size_t m);

/// Density ratio p*(x) / p(x) = (2/(m-1)) sum_j x_j on the hypercube;
/// the known importance weight of the IWERM baseline.
double covshift_density_ratio(const Vec& x, std::size_t m);

struct CovshiftMomentSet {
    MomentSet set;
    double y_mean = 0;      // Monte Carlo estimate of E_{P*}[y]
    double y_std_error = 0;
};

/// Box in R^m around (mu*, y*): feature coordinates centered at the exact
/// test mean, the label coordinate at a seeded Monte Carlo estimate.
/// Errors out when the slack is so large that 0 lands in the box.
CovshiftMomentSet covshift_moment_set(std::size_t m, double slack, long mc_budget,
                                      std::uint64_t seed);

struct HeartRow {
    double age = 0;
    double sex = 0;  // 1 = male
    LabeledSample sample;
};

struct HeartDataset {
    std::vector<std::string> feature_names;
    std::vector<HeartRow> rows;

    std::vector<LabeledSample> samples() const;
};

/// CSV with header columns age, sex, target plus numeric feature columns.
/// Features are standardized to zero mean / unit variance over the full
/// file; the binary target maps to -1/+1.
HeartDataset load_heart_csv(const std::string& path);

/// N rows drawn uniformly without replacement from the 20% oldest male
/// rows (ceiling). Deterministic per seed.
std::vector<LabeledSample> biased_subsample(const HeartDataset& data, long N, std::uint64_t seed);

/// Box of half-width delta_m around the empirical mean of (x, y).
MomentSet empirical_mean_box(const std::vector<LabeledSample>& samples, double delta_m);

void write_samples_csv(const std::string& path, const std::vector<LabeledSample>& samples,
                       const std::string& header_comment = "");
std::vector<LabeledSample> read_samples_csv(const std::string& path);

}  // namespace mdi
