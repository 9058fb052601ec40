#pragma once

#include "projcheck/numeric.hpp"
#include "projcheck/statespace.hpp"
#include "projcheck/statistics.hpp"

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace projcheck {

/// Exponential family p(x) = exp(<theta, t(x) * scale>) / z(theta) under counting measure.
struct ExpFamModel {
    SiteSpaceFamily family;
    StatisticSpec stat;
    std::vector<double> theta;
    std::optional<CovariateTable> covariates;

    const CovariateTable* cov() const { return covariates ? &*covariates : nullptr; }
    /// Checks dimensions, finiteness and statistic compatibility.
    void validate() const;
    ExpFamModel with_theta(std::vector<double> new_theta) const;
};

/// v_A(t): configuration counts per exact statistic value, sorted by key.
struct MarginalVolume {
    std::vector<std::pair<StatVector, std::uint64_t>> entries;
    std::uint64_t total = 0;
};

MarginalVolume build_marginal_volume(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                     IndexSet set, const CovariateTable* cov,
                                     const EnumerationOptions& options = {});

struct Moments {
    double log_partition = 0.0;
    Eigen::VectorXd mean;        // E[t * scale]
    Eigen::MatrixXd covariance;  // Cov[t * scale]
};

/// Exact log-partition function and moments at one index set, either from an
/// enumerated volume table or, for dyadic-independent statistics, as a
/// product over dyads (usable far beyond the enumeration guard).
class ExactLaw {
public:
    static ExactLaw from_volume(MarginalVolume volume, std::vector<double> scales);
    static ExactLaw dyadic(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
                           const CovariateTable* cov);
    /// Enumerates when |X_A| is within the guard, otherwise falls back to the
    /// dyadic product when available; throws SpaceTooLarge if neither applies.
    static ExactLaw build(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
                          const CovariateTable* cov, const EnumerationOptions& options = {});

    std::size_t dimension() const noexcept { return scales_.size(); }
    const std::vector<double>& scales() const noexcept { return scales_; }

    double log_partition(const std::vector<double>& theta) const;
    Moments moments(const std::vector<double>& theta) const;

    /// Componentwise range of attainable raw statistic values.
    std::pair<StatVector, StatVector> bounds() const;

    /// Non-null when the law came from an enumerated volume table.
    const MarginalVolume* volume() const {
        return std::get_if<MarginalVolume>(&source_);
    }

private:
    struct DyadGroup {
        std::uint64_t multiplicity = 0;
        std::vector<StatVector> state_values;
    };
    struct DyadicProduct {
        std::vector<DyadGroup> groups;
    };

    std::variant<MarginalVolume, DyadicProduct> source_;
    std::vector<double> scales_;
};

struct StatDistributionEntry {
    StatVector t;
    std::uint64_t count = 0;
    double probability = 0.0;
};

/// P(T_A = t) = v_A(t) exp(<theta, t * scale>) / z_A(theta).
struct StatDistribution {
    std::vector<StatDistributionEntry> entries;
    std::uint64_t total_count = 0;
    double log_partition = 0.0;

    Eigen::VectorXd mean(const std::vector<double>& scales) const;
};

double log_partition(const ExpFamModel& model, IndexSet set, const EnumerationOptions& options = {});

double log_probability(const ExpFamModel& model, IndexSet set, const Configuration& x,
                       const EnumerationOptions& options = {});

StatDistribution statistic_distribution(const ExpFamModel& model, IndexSet set,
                                        const EnumerationOptions& options = {});

struct PredictiveEntry {
    Configuration y;
    StatVector increment;
    double probability = 0.0;
};

/// Law of X_{B\A} given X_A = x under the B-level model, in canonical order of y.
std::vector<PredictiveEntry> predictive_distribution(const ExpFamModel& model, IndexSet sub,
                                                     IndexSet super, const Configuration& x,
                                                     const EnumerationOptions& options = {});

/// z_B(theta+phi) z_A(theta) / (z_B(theta) z_A(theta+phi)).
double increment_mgf(const ExpFamModel& model, IndexSet sub, IndexSet super,
                     const std::vector<double>& phi, const EnumerationOptions& options = {});

/// E[exp(<phi, T_{B\A} * scale>) | X_A = x], from the predictive law.
double conditional_increment_mgf(const ExpFamModel& model, IndexSet sub, IndexSet super,
                                 const Configuration& x, const std::vector<double>& phi,
                                 const EnumerationOptions& options = {});

} // namespace projcheck
