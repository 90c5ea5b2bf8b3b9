#include "mdi/datasets.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mdi {

namespace {

double threshold_label(const Vec& x) {
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    return mean > 0.5 ? 1.0 : -1.0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_number(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidInput("could not parse number '" + s + "' in " + context);
    }
}

}  // namespace

std::vector<Vec> atoms_of(const std::vector<LabeledSample>& samples) {
    std::vector<Vec> atoms;
    atoms.reserve(samples.size());
    for (const LabeledSample& s : samples) atoms.push_back(s.atom());
    return atoms;
}

std::vector<LabeledSample> synth_train(std::size_t m, long N, std::uint64_t seed) {
    if (m < 2) throw InvalidInput("synth_train: m must be at least 2");
    if (N < 1) throw InvalidInput("synth_train: N must be positive");
    Rng rng(seed);
    std::vector<LabeledSample> out(static_cast<std::size_t>(N));
    for (auto& s : out) {
        s.x.resize(m - 1);
        for (double& v : s.x) v = rng.uniform();
        s.y = threshold_label(s.x);
    }
    return out;
}

std::vector<LabeledSample> synth_test(std::size_t m, long N, std::uint64_t seed) {
    if (m < 2) throw InvalidInput("synth_test: m must be at least 2");
    if (N < 1) throw InvalidInput("synth_test: N must be positive");
    Rng rng(seed);
    std::vector<LabeledSample> out(static_cast<std::size_t>(N));
    for (auto& s : out) {
        s.x.resize(m - 1);
        const std::size_t tilted = static_cast<std::size_t>(rng.uniform_int(m - 1));
        for (std::size_t j = 0; j < m - 1; ++j) {
            const double u = rng.uniform();
            s.x[j] = j == tilted ? std::sqrt(u) : u;  // density 2x via inverse CDF
        }
        s.y = threshold_label(s.x);
    }
    return out;
}

double synth_test_feature_mean(std::size_t m) {
    if (m < 2) throw InvalidInput("synth_test_feature_mean: m must be at least 2");
    const double md = static_cast<double>(m);
    return (md - 2.0) / (2.0 * (md - 1.0)) + 2.0 / (3.0 * (md - 1.0));
}

double covshift_density_ratio(const Vec& x, std::size_t m) {
    if (x.size() != m - 1) throw InvalidInput("covshift_density_ratio: dimension mismatch");
    const double s = std::accumulate(x.begin(), x.end(), 0.0);
    return 2.0 * s / static_cast<double>(m - 1);
}

CovshiftMomentSet covshift_moment_set(std::size_t m, double slack, long mc_budget,
                                      std::uint64_t seed) {
    if (!(slack > 0.0)) throw InvalidInput("covshift_moment_set: slack must be positive");
    if (mc_budget < 1) throw InvalidInput("covshift_moment_set: Monte Carlo budget must be positive");

    const double mu_star = synth_test_feature_mean(m);
    const std::vector<LabeledSample> draws = synth_test(m, mc_budget, seed);
    double y_sum = 0.0;
    for (const LabeledSample& s : draws) y_sum += s.y;
    const double y_mean = y_sum / static_cast<double>(mc_budget);
    const double y_var = std::max(1.0 - y_mean * y_mean, 0.0);
    const double y_se = std::sqrt(y_var / static_cast<double>(mc_budget));
    if (!(y_mean > 0.0))
        throw SolverError("covshift_moment_set: the estimated label mean is not positive");

    Vec lower(m), upper(m);
    for (std::size_t j = 0; j + 1 < m; ++j) {
        lower[j] = mu_star - slack;
        upper[j] = mu_star + slack;
    }
    lower[m - 1] = y_mean - slack;
    upper[m - 1] = y_mean + slack;

    bool contains_origin = true;
    for (std::size_t j = 0; j < m; ++j)
        contains_origin = contains_origin && lower[j] <= 0.0 && 0.0 <= upper[j];
    if (contains_origin)
        throw ConfigError("covshift_moment_set: slack is so large that 0 lies in E; shrink it");

    return CovshiftMomentSet{MomentSet::box(std::move(lower), std::move(upper)), y_mean, y_se};
}

std::vector<LabeledSample> HeartDataset::samples() const {
    std::vector<LabeledSample> out;
    out.reserve(rows.size());
    for (const HeartRow& r : rows) out.push_back(r.sample);
    return out;
}

HeartDataset load_heart_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("could not open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("'" + path + "' is empty");
    const std::vector<std::string> header = split_csv_line(line);

    long age_col = -1, sex_col = -1, target_col = -1;
    std::vector<std::size_t> feature_cols;
    HeartDataset data;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "age") age_col = static_cast<long>(c);
        else if (header[c] == "sex") sex_col = static_cast<long>(c);
        else if (header[c] == "target") target_col = static_cast<long>(c);
        else {
            feature_cols.push_back(c);
            data.feature_names.push_back(header[c]);
        }
    }
    if (age_col < 0 || sex_col < 0 || target_col < 0)
        throw InvalidInput("'" + path + "' is missing one of the required columns age, sex, target");
    if (feature_cols.empty()) throw InvalidInput("'" + path + "' has no feature columns");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw InvalidInput("'" + path + "' line " + std::to_string(line_no) + ": wrong field count");
        const std::string ctx = path + " line " + std::to_string(line_no);
        HeartRow row;
        row.age = parse_number(fields[static_cast<std::size_t>(age_col)], ctx);
        row.sex = parse_number(fields[static_cast<std::size_t>(sex_col)], ctx);
        const double target = parse_number(fields[static_cast<std::size_t>(target_col)], ctx);
        if (target != 0.0 && target != 1.0 && target != -1.0)
            throw InvalidInput(ctx + ": target must be binary");
        row.sample.y = target > 0.0 ? 1.0 : -1.0;
        row.sample.x.reserve(feature_cols.size());
        for (std::size_t c : feature_cols) row.sample.x.push_back(parse_number(fields[c], ctx));
        data.rows.push_back(std::move(row));
    }
    if (data.rows.empty()) throw InvalidInput("'" + path + "' has no data rows");

    // standardize features over the full file
    const std::size_t d = feature_cols.size();
    const double n = static_cast<double>(data.rows.size());
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (const HeartRow& r : data.rows) mean += r.sample.x[j];
        mean /= n;
        double var = 0.0;
        for (const HeartRow& r : data.rows) {
            const double c = r.sample.x[j] - mean;
            var += c * c;
        }
        var /= n;
        if (!(var > 1e-24))
            throw InvalidInput("feature column '" + data.feature_names[j] + "' is constant");
        const double sd = std::sqrt(var);
        for (HeartRow& r : data.rows) r.sample.x[j] = (r.sample.x[j] - mean) / sd;
    }
    return data;
}

std::vector<LabeledSample> biased_subsample(const HeartDataset& data, long N, std::uint64_t seed) {
    if (N < 1) throw InvalidInput("biased_subsample: N must be positive");
    std::vector<std::size_t> males;
    for (std::size_t i = 0; i < data.rows.size(); ++i)
        if (data.rows[i].sex == 1.0) males.push_back(i);
    std::stable_sort(males.begin(), males.end(), [&](std::size_t a, std::size_t b) {
        return data.rows[a].age > data.rows[b].age;
    });
    const std::size_t keep =
        static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(males.size())));
    males.resize(keep);
    if (males.size() < static_cast<std::size_t>(N))
        throw InvalidInput("biased_subsample: only " + std::to_string(males.size()) +
                           " eligible rows for N = " + std::to_string(N));

    // partial Fisher-Yates for a uniform subset without replacement
    Rng rng(seed);
    for (std::size_t i = 0; i < static_cast<std::size_t>(N); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(males.size() - i));
        std::swap(males[i], males[j]);
    }
    std::vector<LabeledSample> out;
    out.reserve(static_cast<std::size_t>(N));
    for (std::size_t i = 0; i < static_cast<std::size_t>(N); ++i)
        out.push_back(data.rows[males[i]].sample);
    return out;
}

MomentSet empirical_mean_box(const std::vector<LabeledSample>& samples, double delta_m) {
    if (samples.empty()) throw InvalidInput("empirical_mean_box: empty sample list");
    if (!(delta_m > 0.0)) throw InvalidInput("empirical_mean_box: delta_m must be positive");
    const std::size_t m = samples.front().x.size() + 1;
    Vec mean(m, 0.0);
    for (const LabeledSample& s : samples) {
        const Vec a = s.atom();
        if (a.size() != m) throw InvalidInput("empirical_mean_box: inconsistent sample dimensions");
        axpy(1.0 / static_cast<double>(samples.size()), a, mean);
    }
    Vec lower(mean), upper(mean);
    for (std::size_t j = 0; j < m; ++j) {
        lower[j] -= delta_m;
        upper[j] += delta_m;
    }
    return MomentSet::box(std::move(lower), std::move(upper));
}

void write_samples_csv(const std::string& path, const std::vector<LabeledSample>& samples,
                       const std::string& header_comment) {
    if (samples.empty()) throw InvalidInput("write_samples_csv: empty sample list");
    std::ofstream out(path);
    if (!out) throw InvalidInput("could not open '" + path + "' for writing");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    const std::size_t d = samples.front().x.size();
    for (std::size_t j = 0; j < d; ++j) out << "x" << (j + 1) << ",";
    out << "y\n";
    char buf[64];
    for (const LabeledSample& s : samples) {
        for (std::size_t j = 0; j < d; ++j) {
            std::snprintf(buf, sizeof(buf), "%.12g", s.x[j]);
            out << buf << ",";
        }
        std::snprintf(buf, sizeof(buf), "%.12g", s.y);
        out << buf << "\n";
    }
}

std::vector<LabeledSample> read_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("could not open '" + path + "'");
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        header = split_csv_line(line);
        break;
    }
    if (header.empty() || header.back() != "y")
        throw InvalidInput("'" + path + "' must end with a y column");
    std::vector<LabeledSample> out;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw InvalidInput("'" + path + "': wrong field count in data row " + std::to_string(line_no));
        LabeledSample s;
        const std::string ctx = path + " row " + std::to_string(line_no);
        for (std::size_t j = 0; j + 1 < fields.size(); ++j)
            s.x.push_back(parse_number(fields[j], ctx));
        s.y = parse_number(fields.back(), ctx);
        if (s.y != 1.0 && s.y != -1.0) throw InvalidInput(ctx + ": label must be -1 or +1");
        out.push_back(std::move(s));
    }
    if (out.empty()) throw InvalidInput("'" + path + "' has no data rows");
    return out;
}

}  // namespace mdi
