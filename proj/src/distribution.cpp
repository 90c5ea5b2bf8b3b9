#include "mdi/distribution.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mdi {

namespace {

std::string format_atom(const Vec& atom) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < atom.size(); ++i) {
        if (i) os << ", ";
        os << atom[i];
    }
    os << ")";
    return os.str();
}

void check_rectangular(const std::vector<Vec>& atoms) {
    if (atoms.empty()) throw InvalidInput("distribution needs at least one atom");
    const std::size_t m = atoms.front().size();
    for (const Vec& a : atoms) {
        if (a.size() != m) throw InvalidInput("atoms must share a common dimension");
        if (!all_finite(a)) throw InvalidInput("atom coordinates must be finite");
    }
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<Vec> atoms, Vec weights) {
    check_rectangular(atoms);
    if (atoms.size() != weights.size())
        throw InvalidInput("atoms and weights must have equal length");
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw InvalidInput("weights must be nonnegative and finite");
    }

    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });

    for (std::size_t idx : order) {
        if (!atoms_.empty() && atoms_.back() == atoms[idx]) {
            weights_.back() += weights[idx];
        } else {
            atoms_.push_back(std::move(atoms[idx]));
            weights_.push_back(weights[idx]);
        }
    }

    double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    if (!(total > 0.0)) throw InvalidInput("weights must have positive total mass");
    for (double& w : weights_) w /= total;
}

DiscreteDistribution DiscreteDistribution::from_samples(const std::vector<Vec>& samples) {
    if (samples.empty()) throw InvalidInput("empirical distribution needs a nonempty sample list");
    Vec ones(samples.size(), 1.0);
    DiscreteDistribution d(samples, std::move(ones));
    d.sample_count_ = samples.size();
    return d;
}

DiscreteDistribution DiscreteDistribution::reweighted(Vec new_weights) const {
    if (new_weights.size() != atoms_.size())
        throw InvalidInput("reweighted: weight vector length must match atom count");
    DiscreteDistribution d(atoms_, std::move(new_weights));
    return d;
}

std::optional<std::size_t> DiscreteDistribution::find_atom(const Vec& atom) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), atom);
    if (it != atoms_.end() && *it == atom)
        return static_cast<std::size_t>(it - atoms_.begin());
    return std::nullopt;
}

nlohmann::json DiscreteDistribution::to_json() const {
    nlohmann::json j;
    j["atoms"] = atoms_;
    j["weights"] = weights_;
    if (sample_count_) j["sample_count"] = *sample_count_;
    return j;
}

DiscreteDistribution DiscreteDistribution::from_json(const nlohmann::json& j) {
    DiscreteDistribution d(j.at("atoms").get<std::vector<Vec>>(), j.at("weights").get<Vec>());
    if (j.contains("sample_count")) d.sample_count_ = j["sample_count"].get<std::size_t>();
    return d;
}

double relative_entropy(const DiscreteDistribution& q, const DiscreteDistribution& p) {
    double d = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double qi = q.weights()[i];
        if (qi == 0.0) continue;
        auto idx = p.find_atom(q.atoms()[i]);
        const double pi = idx ? p.weights()[*idx] : 0.0;
        if (pi == 0.0) return kInf;
        d += qi * std::log(qi / pi);
    }
    return std::max(d, 0.0);
}

double total_variation(const DiscreteDistribution& q, const DiscreteDistribution& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        auto idx = p.find_atom(q.atoms()[i]);
        s += std::abs(q.weights()[i] - (idx ? p.weights()[*idx] : 0.0));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!q.find_atom(p.atoms()[i])) s += p.weights()[i];
    }
    return 0.5 * s;
}

FeatureMap FeatureMap::identity() {
    FeatureMap f;
    f.impl_ = Identity{};
    return f;
}

FeatureMap FeatureMap::coordinate(std::vector<std::size_t> indices) {
    if (indices.empty()) throw InvalidInput("coordinate feature map needs at least one index");
    FeatureMap f;
    f.impl_ = Coordinate{std::move(indices)};
    return f;
}

FeatureMap FeatureMap::affine(std::vector<Vec> matrix, Vec offset) {
    if (matrix.empty() || matrix.size() != offset.size())
        throw InvalidInput("affine feature map: matrix rows must match offset length");
    const std::size_t m = matrix.front().size();
    for (const Vec& row : matrix) {
        if (row.size() != m) throw InvalidInput("affine feature map: ragged matrix");
    }
    FeatureMap f;
    f.impl_ = Affine{std::move(matrix), std::move(offset)};
    return f;
}

FeatureMap FeatureMap::tabular(std::vector<Vec> atoms, std::vector<Vec> values) {
    if (atoms.size() != values.size() || atoms.empty())
        throw InvalidInput("tabular feature map: atoms and values must match and be nonempty");
    check_rectangular(atoms);
    const std::size_t d = values.front().size();
    for (const Vec& v : values) {
        if (v.size() != d) throw InvalidInput("tabular feature map: ragged value rows");
    }
    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
    Table t;
    for (std::size_t idx : order) {
        if (!t.atoms.empty() && t.atoms.back() == atoms[idx])
            throw InvalidInput("tabular feature map: duplicate atom " + format_atom(atoms[idx]));
        t.atoms.push_back(std::move(atoms[idx]));
        t.values.push_back(std::move(values[idx]));
    }
    FeatureMap f;
    f.impl_ = std::move(t);
    return f;
}

FeatureMap FeatureMap::log_ratio(const std::vector<Vec>& atoms, const Vec& q, const Vec& p) {
    if (atoms.size() != q.size() || atoms.size() != p.size())
        throw InvalidInput("log_ratio: atoms, q and p must have equal length");
    std::vector<Vec> kept_atoms;
    std::vector<Vec> values;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (p[i] == 0.0) {
            if (q[i] != 0.0)
                throw InvalidInput("log_ratio: q is not absolutely continuous w.r.t. p at atom " +
                                   format_atom(atoms[i]));
            continue;  // undefined there; excluded from the table
        }
        kept_atoms.push_back(atoms[i]);
        values.push_back({std::log(q[i] / p[i])});
    }
    if (kept_atoms.empty()) throw InvalidInput("log_ratio: p vanishes at every atom");
    FeatureMap f = tabular(std::move(kept_atoms), std::move(values));
    std::get<Table>(f.impl_).log_ratio = true;
    return f;
}

FeatureMap FeatureMap::log_ratio(const DiscreteDistribution& q, const DiscreteDistribution& p) {
    if (q.atoms() != p.atoms())
        throw InvalidInput("log_ratio: distributions must share a common atom index");
    return log_ratio(q.atoms(), q.weights(), p.weights());
}

Vec FeatureMap::operator()(const Vec& atom) const {
    return std::visit(
        [&](const auto& impl) -> Vec {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Identity>) {
                return atom;
            } else if constexpr (std::is_same_v<T, Coordinate>) {
                Vec out;
                out.reserve(impl.indices.size());
                for (std::size_t idx : impl.indices) {
                    if (idx >= atom.size())
                        throw InvalidInput("coordinate feature map: index out of range for atom " +
                                           format_atom(atom));
                    out.push_back(atom[idx]);
                }
                return out;
            } else if constexpr (std::is_same_v<T, Affine>) {
                Vec out(impl.offset);
                for (std::size_t r = 0; r < impl.matrix.size(); ++r) {
                    if (impl.matrix[r].size() != atom.size())
                        throw InvalidInput("affine feature map: dimension mismatch at atom " +
                                           format_atom(atom));
                    out[r] += dot(impl.matrix[r], atom);
                }
                return out;
            } else {
                auto it = std::lower_bound(impl.atoms.begin(), impl.atoms.end(), atom);
                if (it == impl.atoms.end() || *it != atom)
                    throw InvalidInput("feature map undefined at atom " + format_atom(atom));
                return impl.values[static_cast<std::size_t>(it - impl.atoms.begin())];
            }
        },
        impl_);
}

std::size_t FeatureMap::output_dim(std::size_t input_dim) const {
    return std::visit(
        [&](const auto& impl) -> std::size_t {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Identity>) {
                return input_dim;
            } else if constexpr (std::is_same_v<T, Coordinate>) {
                return impl.indices.size();
            } else if constexpr (std::is_same_v<T, Affine>) {
                return impl.offset.size();
            } else {
                return impl.values.front().size();
            }
        },
        impl_);
}

nlohmann::json FeatureMap::to_json() const {
    nlohmann::json j;
    std::visit(
        [&](const auto& impl) {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Identity>) {
                j["variant"] = "identity";
            } else if constexpr (std::is_same_v<T, Coordinate>) {
                j["variant"] = "coordinate";
                j["indices"] = impl.indices;
            } else if constexpr (std::is_same_v<T, Affine>) {
                j["variant"] = "affine";
                j["matrix"] = impl.matrix;
                j["offset"] = impl.offset;
            } else {
                j["variant"] = impl.log_ratio ? "logratio_table" : "tabular";
                j["atoms"] = impl.atoms;
                j["values"] = impl.values;
            }
        },
        impl_);
    return j;
}

FeatureMap FeatureMap::from_json(const nlohmann::json& j) {
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "identity") return identity();
    if (variant == "coordinate") return coordinate(j.at("indices").get<std::vector<std::size_t>>());
    if (variant == "affine")
        return affine(j.at("matrix").get<std::vector<Vec>>(), j.at("offset").get<Vec>());
    if (variant == "tabular" || variant == "logratio_table") {
        FeatureMap f = tabular(j.at("atoms").get<std::vector<Vec>>(), j.at("values").get<std::vector<Vec>>());
        std::get<Table>(f.impl_).log_ratio = (variant == "logratio_table");
        return f;
    }
    if (variant == "logratio")
        return log_ratio(j.at("atoms").get<std::vector<Vec>>(), j.at("q").get<Vec>(), j.at("p").get<Vec>());
    throw InvalidInput("unknown feature map variant '" + variant + "'");
}

std::vector<Vec> featurize(const DiscreteDistribution& dist, const FeatureMap& psi) {
    std::vector<Vec> rows;
    rows.reserve(dist.size());
    for (const Vec& atom : dist.atoms()) rows.push_back(psi(atom));
    return rows;
}

Vec moment(const DiscreteDistribution& dist, const FeatureMap& psi) {
    Vec m;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        Vec f = psi(dist.atoms()[i]);
        if (m.empty()) m.assign(f.size(), 0.0);
        axpy(dist.weights()[i], f, m);
    }
    return m;
}

MomentSet MomentSet::box(Vec lower, Vec upper) {
    if (lower.empty() || lower.size() != upper.size())
        throw InvalidInput("box: lower and upper must be nonempty and of equal length");
    for (std::size_t j = 0; j < lower.size(); ++j) {
        if (!(lower[j] <= upper[j]))
            throw InvalidInput("box: lower bound exceeds upper bound");
    }
    MomentSet s;
    s.impl_ = Box{std::move(lower), std::move(upper)};
    return s;
}

MomentSet MomentSet::ball(Vec center, double radius) {
    if (center.empty()) throw InvalidInput("ball: center must be nonempty");
    if (!(radius >= 0.0)) throw InvalidInput("ball: radius must be nonnegative");
    MomentSet s;
    s.impl_ = Ball{std::move(center), radius};
    return s;
}

MomentSet MomentSet::singleton(Vec point) {
    if (point.empty()) throw InvalidInput("singleton: point must be nonempty");
    MomentSet s;
    s.impl_ = Singleton{std::move(point)};
    return s;
}

std::size_t MomentSet::dim() const {
    return std::visit(
        [](const auto& impl) -> std::size_t {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Box>) return impl.lower.size();
            else if constexpr (std::is_same_v<T, Ball>) return impl.center.size();
            else return impl.point.size();
        },
        impl_);
}

Vec MomentSet::project(const Vec& x) const {
    if (x.size() != dim()) throw InvalidInput("project: dimension mismatch");
    return std::visit(
        [&](const auto& impl) -> Vec {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Box>) {
                Vec y(x.size());
                for (std::size_t j = 0; j < x.size(); ++j)
                    y[j] = std::clamp(x[j], impl.lower[j], impl.upper[j]);
                return y;
            } else if constexpr (std::is_same_v<T, Ball>) {
                Vec diff(x.size());
                for (std::size_t j = 0; j < x.size(); ++j) diff[j] = x[j] - impl.center[j];
                const double n = norm2(diff);
                if (n <= impl.radius) return x;
                Vec y(impl.center);
                axpy(impl.radius / n, diff, y);
                return y;
            } else {
                return impl.point;
            }
        },
        impl_);
}

double MomentSet::support(const Vec& z) const {
    if (z.size() != dim()) throw InvalidInput("support: dimension mismatch");
    return std::visit(
        [&](const auto& impl) -> double {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Box>) {
                double s = 0.0;
                for (std::size_t j = 0; j < z.size(); ++j)
                    s += std::max(impl.lower[j] * z[j], impl.upper[j] * z[j]);
                return s;
            } else if constexpr (std::is_same_v<T, Ball>) {
                return dot(impl.center, z) + impl.radius * norm2(z);
            } else {
                return dot(impl.point, z);
            }
        },
        impl_);
}

double MomentSet::distance(const Vec& x) const {
    Vec y = project(x);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - y[j]) * (x[j] - y[j]);
    return std::sqrt(s);
}

bool MomentSet::contains(const Vec& x, double tol) const { return distance(x) <= tol; }

double MomentSet::interior_margin(const Vec& x) const {
    if (x.size() != dim()) throw InvalidInput("interior_margin: dimension mismatch");
    return std::visit(
        [&](const auto& impl) -> double {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Box>) {
                double m = kInf;
                for (std::size_t j = 0; j < x.size(); ++j)
                    m = std::min({m, x[j] - impl.lower[j], impl.upper[j] - x[j]});
                return std::max(m, 0.0);
            } else if constexpr (std::is_same_v<T, Ball>) {
                Vec diff(x.size());
                for (std::size_t j = 0; j < x.size(); ++j) diff[j] = x[j] - impl.center[j];
                return std::max(impl.radius - norm2(diff), 0.0);
            } else {
                return 0.0;
            }
        },
        impl_);
}

Vec MomentSet::center() const {
    return std::visit(
        [](const auto& impl) -> Vec {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Box>) {
                Vec c(impl.lower.size());
                for (std::size_t j = 0; j < c.size(); ++j)
                    c[j] = 0.5 * (impl.lower[j] + impl.upper[j]);
                return c;
            } else if constexpr (std::is_same_v<T, Ball>) {
                return impl.center;
            } else {
                return impl.point;
            }
        },
        impl_);
}

double MomentSet::max_norm() const {
    return std::visit(
        [](const auto& impl) -> double {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Box>) {
                double s = 0.0;
                for (std::size_t j = 0; j < impl.lower.size(); ++j) {
                    const double v = std::max(std::abs(impl.lower[j]), std::abs(impl.upper[j]));
                    s += v * v;
                }
                return std::sqrt(s);
            } else if constexpr (std::is_same_v<T, Ball>) {
                return norm2(impl.center) + impl.radius;
            } else {
                return norm2(impl.point);
            }
        },
        impl_);
}

bool MomentSet::is_singleton() const { return std::holds_alternative<Singleton>(impl_); }

bool MomentSet::has_empty_interior() const {
    return std::visit(
        [](const auto& impl) -> bool {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Box>) {
                for (std::size_t j = 0; j < impl.lower.size(); ++j)
                    if (impl.lower[j] == impl.upper[j]) return true;
                return false;
            } else if constexpr (std::is_same_v<T, Ball>) {
                return impl.radius == 0.0;
            } else {
                return true;
            }
        },
        impl_);
}

MomentSet MomentSet::inflated(double tau) const {
    if (!(tau > 0.0)) throw InvalidInput("inflated: tau must be positive");
    return std::visit(
        [&](const auto& impl) -> MomentSet {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Box>) {
                Vec lo = impl.lower, hi = impl.upper;
                for (std::size_t j = 0; j < lo.size(); ++j) {
                    if (lo[j] == hi[j]) {
                        lo[j] -= tau;
                        hi[j] += tau;
                    }
                }
                return box(std::move(lo), std::move(hi));
            } else if constexpr (std::is_same_v<T, Ball>) {
                return ball(impl.center, impl.radius == 0.0 ? tau : impl.radius);
            } else {
                Vec lo = impl.point, hi = impl.point;
                for (std::size_t j = 0; j < lo.size(); ++j) {
                    lo[j] -= tau;
                    hi[j] += tau;
                }
                return box(std::move(lo), std::move(hi));
            }
        },
        impl_);
}

nlohmann::json MomentSet::to_json() const {
    nlohmann::json j;
    std::visit(
        [&](const auto& impl) {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, Box>) {
                j["variant"] = "box";
                j["lower"] = impl.lower;
                j["upper"] = impl.upper;
            } else if constexpr (std::is_same_v<T, Ball>) {
                j["variant"] = "ball";
                j["center"] = impl.center;
                j["radius"] = impl.radius;
            } else {
                j["variant"] = "singleton";
                j["point"] = impl.point;
            }
        },
        impl_);
    return j;
}

MomentSet MomentSet::from_json(const nlohmann::json& j) {
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "box") return box(j.at("lower").get<Vec>(), j.at("upper").get<Vec>());
    if (variant == "ball") return ball(j.at("center").get<Vec>(), j.at("radius").get<double>());
    if (variant == "singleton") return singleton(j.at("point").get<Vec>());
    throw InvalidInput("unknown moment set variant '" + variant + "'");
}

}  // namespace mdi
