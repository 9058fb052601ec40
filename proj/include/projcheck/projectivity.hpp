#pragma once

#include "projcheck/error.hpp"
#include "projcheck/expfam.hpp"
#include "projcheck/numeric.hpp"
#include "projcheck/statespace.hpp"
#include "projcheck/statistics.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace projcheck {

using CountRow = std::vector<std::pair<StatVector, std::uint64_t>>;

/// Counts of extensions y of one base configuration x, grouped by increment.
struct ConditionalRow {
    Configuration x;
    StatVector t;      // t_A(x)
    CountRow counts;   // delta -> v_{B\A|A}(delta, x), sorted by delta
};

/// Marginal, joint and conditional volume factors for a nested pair A < B.
struct VolumeTables {
    std::size_t sub_size = 0;
    std::size_t super_size = 0;
    std::uint64_t base_count = 0;       // |X_A|
    std::uint64_t extension_count = 0;  // |X_{B\A}|
    CountRow marginal;                                        // v_A(t)
    std::map<std::pair<StatVector, StatVector>, std::uint64_t> joint;  // v_{A,B\A}(t, delta)
    std::vector<ConditionalRow> conditional;                  // one row per x, canonical order

    /// Every increment value that occurs for some x, sorted.
    std::vector<StatVector> increment_support() const;
    /// SHA-256 over a canonical text rendering of the three tables.
    std::string checksum() const;
};

VolumeTables build_volume_tables(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                 IndexSet sub, IndexSet super, const CovariateTable* cov = nullptr,
                                 const EnumerationOptions& options = {});

/// Throws InternalInconsistency when a cardinality or summation rule fails.
void verify_volume_tables(const VolumeTables& tables);

enum class Criterion {
    separable_increments,
    joint_factorization,
    direct_marginalization,
    increment_independence,
    predictive_sufficiency,
};

std::string to_string(Criterion criterion);

struct CountMismatch {
    StatVector delta;
    std::uint64_t count = 0;        // at x
    std::uint64_t count_other = 0;  // at x'
};

/// Two base configurations whose conditional volume rows differ.
struct SeparableWitness {
    Configuration x;
    Configuration x_other;
    std::vector<CountMismatch> mismatches;  // sorted by delta
};

/// joint(t, delta) * N != R(t) * C(delta).
struct FactorizationWitness {
    StatVector t;
    StatVector delta;
    std::uint64_t joint = 0;
    std::uint64_t row_sum = 0;
    std::uint64_t column_sum = 0;
    std::uint64_t total = 0;
    uint128 lhs = 0;  // joint * total
    uint128 rhs = 0;  // row_sum * column_sum
};

/// A probability that differs between two routes at some theta.
struct DistributionWitness {
    std::vector<double> theta;
    std::optional<Configuration> x;
    std::optional<Configuration> x_other;
    std::optional<StatVector> t;
    std::optional<StatVector> delta;
    double probability = 0.0;
    double probability_other = 0.0;
    double discrepancy = 0.0;
};

using Witness = std::variant<SeparableWitness, FactorizationWitness, DistributionWitness>;

struct CheckResult {
    Criterion criterion;
    bool pass = true;
    std::optional<Witness> witness;
    /// Largest discrepancy seen (probability-valued checks only).
    double max_discrepancy = 0.0;
};

CheckResult check_separable_increments(const VolumeTables& tables);
CheckResult check_joint_factorization(const VolumeTables& tables);

/// Compares the projection of P_B with P_A by enumerating X_B directly.
CheckResult check_projective_direct(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                    IndexSet sub, IndexSet super,
                                    const std::vector<std::vector<double>>& theta_grid,
                                    const CovariateTable* cov = nullptr, double tolerance = 1e-9,
                                    const EnumerationOptions& options = {});

CheckResult check_increment_independence_of_x(const VolumeTables& tables,
                                              const std::vector<double>& scales,
                                              const std::vector<std::vector<double>>& theta_grid,
                                              double tolerance = 1e-9);

/// p(y | x) depends on (x, y) only through the increment.
CheckResult check_predictive_sufficiency(const VolumeTables& tables,
                                         const std::vector<double>& scales,
                                         const std::vector<std::vector<double>>& theta_grid,
                                         double tolerance = 1e-9);

/// Per-theta comparison of increment laws against the row/column marginals
/// of the joint table; cross-check for the exact factorization test.
CheckResult check_joint_factorization_by_theta(const VolumeTables& tables,
                                               const std::vector<double>& scales,
                                               const std::vector<std::vector<double>>& theta_grid,
                                               double tolerance = 1e-9);

/// {-2,-1,-0.5,0,0.5,1,2} for d = 1; otherwise the first 64 points of
/// {-1,0,1}^d plus 8 seeded random unit directions.
std::vector<std::vector<double>> default_theta_grid(std::size_t dimension, std::uint64_t seed = 0x5eedULL);

struct ProjectivityReport {
    std::size_t sub_size = 0;
    std::size_t super_size = 0;
    std::uint64_t base_count = 0;
    std::uint64_t extension_count = 0;
    std::vector<CheckResult> checks;  // ordered as the Criterion enum
    std::vector<std::vector<double>> theta_grid;
    double tolerance = 1e-9;
    std::string table_checksum;
    bool implications_consistent = true;
    std::vector<std::string> inconsistencies;

    const CheckResult& result(Criterion criterion) const;
    bool all_pass() const;
};

/// Lists violated implications among the verdicts (empty when consistent).
std::vector<std::string> implication_violations(const std::vector<CheckResult>& checks);

/// Runs every check. Throws InternalInconsistencyError (carrying the report)
/// when the verdicts contradict the implication structure.
ProjectivityReport projectivity_report(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                       IndexSet sub, IndexSet super,
                                       const std::vector<std::vector<double>>& theta_grid,
                                       const CovariateTable* cov = nullptr, double tolerance = 1e-9,
                                       const EnumerationOptions& options = {});

class InternalInconsistencyError : public Error {
public:
    explicit InternalInconsistencyError(ProjectivityReport report);
    const ProjectivityReport& report() const noexcept { return report_; }

private:
    ProjectivityReport report_;
};

} // namespace projcheck
