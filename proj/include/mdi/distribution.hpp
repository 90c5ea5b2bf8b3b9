#pragma once

#include <optional>
#include <variant>

#include <nlohmann/json_fwd.hpp>

#include "mdi/common.hpp"

namespace mdi {

/// Finitely supported probability distribution on points in R^m.
///
/// Atoms are kept in canonical (lexicographic) order and duplicates are
/// merged at construction by summing weights; weights are renormalized to
/// sum to one. Atom identity is exact floating-point equality. Immutable
/// after construction.
class DiscreteDistribution {
public:
    DiscreteDistribution(std::vector<Vec> atoms, Vec weights);

    /// Empirical distribution of a sample list; atom weights are
    /// multiplicity / N and the sample count N is retained.
    static DiscreteDistribution from_samples(const std::vector<Vec>& samples);

    const std::vector<Vec>& atoms() const { return atoms_; }
    const Vec& weights() const { return weights_; }
    std::size_t size() const { return atoms_.size(); }
    std::size_t dim() const { return atoms_.empty() ? 0 : atoms_.front().size(); }
    std::optional<std::size_t> sample_count() const { return sample_count_; }

    /// Same atoms, new weights (renormalized). Used for Gibbs reweighting
    /// and Slater points.
    DiscreteDistribution reweighted(Vec new_weights) const;

    /// Index of an atom by exact value, if present.
    std::optional<std::size_t> find_atom(const Vec& atom) const;

    nlohmann::json to_json() const;
    static DiscreteDistribution from_json(const nlohmann::json& j);

private:
    std::vector<Vec> atoms_;
    Vec weights_;
    std::optional<std::size_t> sample_count_;
};

/// D(Q || P) = sum_i q_i log(q_i / p_i), with 0 log(0/.) = 0. Atoms are
/// matched by exact value; returns +inf when Q is not absolutely
/// continuous with respect to P.
double relative_entropy(const DiscreteDistribution& q, const DiscreteDistribution& p);

/// (1/2) * sum_i |q_i - p_i| over the union of atoms.
double total_variation(const DiscreteDistribution& q, const DiscreteDistribution& p);

/// Feature map psi: R^m -> R^d. Tagged union over the supported forms.
/// LogRatio maps atom i of a shared index to log(q_i / p_i) and is
/// undefined at atoms with p_i = 0; it is stored as a lookup table.
class FeatureMap {
public:
    struct Identity {};
    struct Coordinate {
        std::vector<std::size_t> indices;  // 0-based
    };
    struct Affine {
        std::vector<Vec> matrix;  // d rows of length m
        Vec offset;               // length d
    };
    struct Table {
        std::vector<Vec> atoms;   // canonical order
        std::vector<Vec> values;  // rows in R^d
        bool log_ratio = false;   // only affects serialization tag
    };

    static FeatureMap identity();
    static FeatureMap coordinate(std::vector<std::size_t> indices);
    static FeatureMap affine(std::vector<Vec> matrix, Vec offset);
    static FeatureMap tabular(std::vector<Vec> atoms, std::vector<Vec> values);

    /// psi(xi_i) = log(q_i / p_i) over the atoms of a shared index.
    /// Requires q_i = 0 wherever p_i = 0; such atoms are excluded from the
    /// table and evaluating there raises an error naming the atom.
    static FeatureMap log_ratio(const std::vector<Vec>& atoms, const Vec& q, const Vec& p);
    static FeatureMap log_ratio(const DiscreteDistribution& q, const DiscreteDistribution& p);

    Vec operator()(const Vec& atom) const;

    /// Output dimension given the input dimension.
    std::size_t output_dim(std::size_t input_dim) const;

    nlohmann::json to_json() const;
    static FeatureMap from_json(const nlohmann::json& j);

private:
    FeatureMap() = default;
    std::variant<Identity, Coordinate, Affine, Table> impl_;
};

/// Featurize all atoms of a distribution; rows follow the atom order.
std::vector<Vec> featurize(const DiscreteDistribution& dist, const FeatureMap& psi);

/// E_dist[psi(xi)].
Vec moment(const DiscreteDistribution& dist, const FeatureMap& psi);

/// Nonempty compact convex set E in R^d: box, Euclidean ball or singleton.
/// project/support/distance are closed-form and mutually consistent.
class MomentSet {
public:
    static MomentSet box(Vec lower, Vec upper);
    static MomentSet ball(Vec center, double radius);
    static MomentSet singleton(Vec point);

    std::size_t dim() const;

    /// argmin_{y in E} ||y - x||_2
    Vec project(const Vec& x) const;
    /// sigma_E(z) = max_{y in E} y^T z
    double support(const Vec& z) const;
    /// ||x - project(x)||_2
    double distance(const Vec& x) const;
    bool contains(const Vec& x, double tol = 1e-12) const;

    /// Distance from x to the complement of E (0 when x is outside or on
    /// the boundary). This is the Slater margin delta when x is a feasible
    /// moment.
    double interior_margin(const Vec& x) const;

    /// Box midpoint, ball center, or the singleton point.
    Vec center() const;

    /// max_{y in E} ||y||_2
    double max_norm() const;

    bool is_singleton() const;
    /// True when the interior is empty (singleton, flat box, or zero-radius
    /// ball), in which case the I-projection solver inflates the set.
    bool has_empty_interior() const;

    /// Inflate degenerate directions by tau: a singleton becomes the box
    /// [m0 - tau, m0 + tau], flat box coordinates are widened by tau, and a
    /// zero-radius ball gets radius tau.
    MomentSet inflated(double tau) const;

    struct Box {
        Vec lower, upper;
    };
    struct Ball {
        Vec center;
        double radius;
    };
    struct Singleton {
        Vec point;
    };

    const std::variant<Box, Ball, Singleton>& variant() const { return impl_; }

    nlohmann::json to_json() const;
    static MomentSet from_json(const nlohmann::json& j);

private:
    MomentSet() = default;
    std::variant<Box, Ball, Singleton> impl_;
};

}  // namespace mdi
