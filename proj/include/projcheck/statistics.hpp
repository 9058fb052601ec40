#pragma once

#include "projcheck/statespace.hpp"

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace projcheck {

/// Exact integer statistic value t_A(x), one entry per model dimension.
class StatVector {
public:
    StatVector() = default;
    explicit StatVector(std::size_t dimension) : values_(dimension, 0) {}
    StatVector(std::initializer_list<std::int64_t> values) : values_(values) {}
    explicit StatVector(std::vector<std::int64_t> values) : values_(std::move(values)) {}

    std::size_t size() const noexcept { return values_.size(); }
    std::int64_t operator[](std::size_t i) const { return values_[i]; }
    std::int64_t& operator[](std::size_t i) { return values_[i]; }
    const std::vector<std::int64_t>& values() const noexcept { return values_; }

    StatVector& operator+=(const StatVector& other);
    StatVector& operator-=(const StatVector& other);
    friend StatVector operator+(StatVector a, const StatVector& b) { return a += b; }
    friend StatVector operator-(StatVector a, const StatVector& b) { return a -= b; }

    bool operator==(const StatVector&) const = default;
    auto operator<=>(const StatVector&) const = default;

private:
    std::vector<std::int64_t> values_;
};

std::string format_stat(const StatVector& t);

/// Positive rational multiplier applied to a component inside <theta, t>.
struct Rational {
    std::int64_t num = 1;
    std::int64_t den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational&) const = default;
};

struct EdgeCount {
    bool operator==(const EdgeCount&) const = default;
};
struct TriangleCount {
    bool operator==(const TriangleCount&) const = default;
};
struct KStarCount {
    std::uint32_t k = 2;
    bool operator==(const KStarCount&) const = default;
};
/// Sum of products of adjacent spins.
struct IsingNearestNeighbor {
    bool operator==(const IsingNearestNeighbor&) const = default;
};

enum class CovariateRelation { any, same, different };

/// Contributes `value` for every dyad in `state` whose endpoint covariates
/// match. Undirected state is 0/1; directed state for i < j packs the arc
/// i->j in bit 0 and j->i in bit 1. `pair` matches (Y_i, Y_j), unordered for
/// undirected graphs, ordered by node id for directed ones.
struct DyadicRule {
    std::uint32_t state = 1;
    CovariateRelation relation = CovariateRelation::any;
    std::optional<std::pair<std::int64_t, std::int64_t>> pair;
    std::int64_t value = 1;
    bool operator==(const DyadicRule&) const = default;
};

struct DyadicTerm {
    std::vector<DyadicRule> rules;
    bool uses_covariates() const;
    bool operator==(const DyadicTerm&) const = default;
};

/// Explicit values per index-set size, indexed by canonical configuration rank.
struct LookupTable {
    std::map<std::size_t, std::vector<std::optional<std::int64_t>>> by_size;
    bool operator==(const LookupTable&) const = default;
};

using StatisticTerm =
    std::variant<EdgeCount, TriangleCount, KStarCount, IsingNearestNeighbor, DyadicTerm, LookupTable>;

struct StatisticComponent {
    std::string name;
    StatisticTerm term;
    Rational scale;
    bool operator==(const StatisticComponent&) const = default;
};

std::string term_type_name(const StatisticTerm& term);

struct StatisticSpec {
    std::vector<StatisticComponent> components;

    std::size_t dimension() const noexcept { return components.size(); }
    std::vector<double> scales() const;
    bool uses_covariates() const;
    bool operator==(const StatisticSpec&) const = default;
};

/// Per-node covariates Y_i (categorical codes).
struct CovariateTable {
    std::vector<std::int64_t> values;
    bool operator==(const CovariateTable&) const = default;
};

/// Throws IncompatibleStatistic when a component cannot be evaluated on the family.
void validate_statistic(const StatisticSpec& stat, const SiteSpaceFamily& family);

StatVector eval_statistic(const StatisticSpec& stat, const SiteSpaceFamily& family,
                          const Configuration& x, const CovariateTable* cov = nullptr);

/// t_B(x, y) - t_A(x).
StatVector statistic_increment(const StatisticSpec& stat, const SiteSpaceFamily& family,
                               IndexSet sub, IndexSet super, const Configuration& x_A,
                               const Configuration& y, const CovariateTable* cov = nullptr);

/// Componentwise t * scale.
std::vector<double> scaled_statistic(const StatisticSpec& stat, const StatVector& t);
double scaled_inner(const std::vector<double>& theta, const std::vector<double>& scales,
                    const StatVector& t);

/// True when every component adds up over dyads (EdgeCount, DyadicTerm) on a graph family.
bool is_dyadic_independent(const StatisticSpec& stat, const SiteSpaceFamily& family);

/// Contribution of one dyad in a given state (dyadic-independent statistics only).
StatVector dyad_contribution(const StatisticSpec& stat, const SiteSpaceFamily& family,
                             std::uint32_t i, std::uint32_t j, std::uint32_t state,
                             const CovariateTable* cov);

/// Componentwise min and max of t_A over X_A, both attained; nullopt for
/// lookup tables.
std::vector<std::optional<std::pair<std::int64_t, std::int64_t>>> statistic_bounds(
    const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
    const CovariateTable* cov = nullptr);

/// Incrementally maintained t_A(x) for single-site updates.
class StatisticState {
public:
    StatisticState(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
                   const CovariateTable* cov, Configuration x);

    const StatVector& value() const noexcept { return value_; }
    const Configuration& configuration() const noexcept { return x_; }

    /// t(x with site := symbol) - t(x).
    StatVector change(std::size_t site, std::uint32_t symbol) const;
    void set(std::size_t site, std::uint32_t symbol);

private:
    std::int64_t component_change(std::size_t component, std::size_t site,
                                  std::uint32_t symbol) const;

    const StatisticSpec* stat_;
    const SiteSpaceFamily* family_;
    IndexSet set_;
    const CovariateTable* cov_;
    Configuration x_;
    StatVector value_;
    std::vector<std::uint64_t> adjacency_;  // symmetrized rows for graph kinds
    std::vector<Dyad> dyads_;
};

} // namespace projcheck
