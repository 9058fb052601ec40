#pragma once

#include "projcheck/error.hpp"
#include "projcheck/expfam.hpp"
#include "projcheck/statespace.hpp"
#include "projcheck/statistics.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace projcheck {

// ---------------------------------------------------------------------------
// Sampling

struct SamplerConfig {
    std::uint64_t seed = 1;
    std::uint64_t burn_in = 100;   // sweeps discarded before the first sample
    std::uint64_t thinning = 1;    // sweeps between recorded samples
    std::uint64_t samples = 1000;

    void validate() const;
};

/// Derives an independent stream seed for task `index` (seed xor index, mixed).
std::uint64_t task_seed(std::uint64_t seed, std::uint64_t index);

/// Systematic-scan single-site Gibbs sampler; every site is drawn from its
/// exact full conditional. Deterministic for a fixed seed.
class GibbsChain {
public:
    GibbsChain(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
               std::vector<double> theta, std::uint64_t seed, const CovariateTable* cov = nullptr);

    void sweep();
    void set_theta(std::vector<double> theta) { theta_ = std::move(theta); }

    const Configuration& configuration() const noexcept { return state_.configuration(); }
    const StatVector& statistic() const noexcept { return state_.value(); }

private:
    double uniform();

    const SiteSpaceFamily* family_;
    std::vector<double> theta_;
    std::vector<double> scales_;
    StatisticState state_;
    std::mt19937_64 rng_;
};

std::vector<Configuration> gibbs_sample(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                        IndexSet set, const std::vector<double>& theta,
                                        const SamplerConfig& config,
                                        const CovariateTable* cov = nullptr);

/// Same chain as gibbs_sample, recording only the statistic of each sample.
std::vector<StatVector> gibbs_statistics(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                         IndexSet set, const std::vector<double>& theta,
                                         const SamplerConfig& config,
                                         const CovariateTable* cov = nullptr);

// ---------------------------------------------------------------------------
// Maximum likelihood

enum class FitMethod { exact, mcmc };
std::string to_string(FitMethod method);

struct MLEResult {
    std::vector<double> theta_hat;
    std::vector<double> observed;      // raw statistic units
    std::vector<double> fitted_mean;   // E[t * scale] at theta_hat (mcmc: sample mean before the last step)
    std::size_t iterations = 0;
    bool converged = false;
    double gradient_norm = 0.0;        // max-norm of E[t * scale] - observed * scale
    FitMethod method = FitMethod::exact;
    std::vector<double> standard_error;  // Monte Carlo standard error (mcmc only)
};

/// Supporting hyperplane <normal, t> <= offset of the attainable statistic
/// hull that the observation fails to lie strictly inside.
struct HullFace {
    std::vector<double> normal;
    double offset = 0.0;
};

class BoundaryObservationError : public Error {
public:
    BoundaryObservationError(const std::string& message, HullFace face)
        : Error(ErrorCode::BoundaryObservation, message), face_(std::move(face)) {}
    const HullFace& face() const noexcept { return face_; }

private:
    HullFace face_;
};

/// Returns the violated face when `observed` is not in the interior of the
/// convex hull of the attainable statistic values, nullopt otherwise.
/// Exact for d <= 3; per-component bounds beyond that.
std::optional<HullFace> hull_violation(const ExactLaw& law, const std::vector<double>& observed);

struct NewtonSettings {
    std::size_t max_iterations = 200;
    double tolerance = 1e-9;   // on max |E[t * scale] - observed * scale|, times max(1, max scale)
    unsigned max_halvings = 50;
};

MLEResult fit_mle_exact(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
                        const std::vector<double>& observed, const CovariateTable* cov = nullptr,
                        const EnumerationOptions& options = {}, const NewtonSettings& settings = {});

/// Newton solve against a prepared law (reused across repeated fits).
MLEResult fit_mle_with_law(const ExactLaw& law, const std::vector<double>& observed,
                           const NewtonSettings& settings = {});

struct McmcSettings {
    std::size_t max_iterations = 100;
    double max_step = 1.0;             // cap on the Euclidean norm of one update
    std::size_t consecutive_required = 3;
    double noise_multiple = 3.0;
};

MLEResult fit_mle_mcmc(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
                       const std::vector<double>& observed, const SamplerConfig& config,
                       const std::vector<double>& theta0, const CovariateTable* cov = nullptr,
                       const McmcSettings& settings = {});

/// Exact fit when an exact law is available at this size, MCMC otherwise.
MLEResult fit_mle(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
                  const std::vector<double>& observed, const SamplerConfig& config,
                  const CovariateTable* cov = nullptr, const EnumerationOptions& options = {});

// ---------------------------------------------------------------------------
// Scaling and large deviations

using SizeMeasure = std::function<double(std::size_t)>;

/// Dyad count for graphs, n - 1 for chains, n for explicit products.
SizeMeasure default_size_measure(const SiteSpaceFamily& family);

struct ScalingEntry {
    std::size_t size = 0;
    double r = 0.0;
    double log_partition = 0.0;
    double ratio = 0.0;  // log_partition / r
};

struct ScalingProfile {
    std::vector<double> theta;
    std::vector<ScalingEntry> entries;
    std::vector<double> successive_differences;  // ratio[k+1] - ratio[k]
    bool exactly_constant = false;                // all ratios equal within 1e-12 relative
    double limit_estimate = 0.0;                  // last ratio
};

ScalingProfile scaling_profile(const StatisticSpec& stat, const SiteSpaceFamily& family,
                               const std::vector<std::size_t>& sizes,
                               const std::vector<double>& theta, const SizeMeasure& r,
                               const CovariateTable* cov = nullptr,
                               const EnumerationOptions& options = {});

/// A log-partition function per unit size, a(theta) = a_A(theta) / r, with
/// optional exact derivatives and the closed range of its gradient.
struct ScaledLogPartition {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;  // may be empty
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;   // may be empty
    std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> range;
    double r = 1.0;
    std::size_t dimension = 1;

    static ScaledLogPartition from_law(ExactLaw law, double r);
    static ScaledLogPartition closed_form(std::function<double(const Eigen::VectorXd&)> value,
                                          std::size_t dimension,
                                          std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> range = {});
};

struct RateFunctionEval {
    std::vector<double> t;
    double J = 0.0;
    std::vector<double> phi;  // maximiser
    std::vector<double> theta;
    double r = 1.0;
    bool unbounded = false;   // t outside the closed mean range, J = +inf
    bool converged = false;
    std::size_t iterations = 0;
};

/// J(t) = sup_phi <phi, t> - [a(theta + phi) - a(theta)], by damped Newton ascent.
RateFunctionEval rate_function(const ScaledLogPartition& a, const std::vector<double>& theta,
                               const std::vector<double>& t);

// ---------------------------------------------------------------------------
// Consistency experiments

struct ExperimentRow {
    std::string variant;  // "independent" or "projection"
    std::size_t size = 0;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    std::vector<double> theta_hat;  // empty when the fit failed
    double error = 0.0;             // Euclidean distance to theta_star, NaN on failure
    std::string status;             // "ok" or an ErrorCode name
    std::string method;
};

struct ExperimentTable {
    std::vector<double> theta_star;
    std::vector<std::size_t> sizes;
    std::size_t replicates = 0;
    std::vector<ExperimentRow> rows;

    /// Median error over successful rows of one variant and size.
    std::optional<double> median_error(const std::string& variant, std::size_t size) const;
};

struct ExperimentSettings {
    bool independent = true;  // simulate and fit afresh at each size
    bool projection = true;   // simulate once at the largest size, fit each prefix
};

ExperimentTable consistency_experiment(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                       const std::vector<double>& theta_star,
                                       const std::vector<std::size_t>& sizes,
                                       std::size_t replicates, const SamplerConfig& config,
                                       const CovariateTable* cov = nullptr,
                                       const EnumerationOptions& options = {},
                                       const ExperimentSettings& settings = {});

void write_experiment_csv(const ExperimentTable& table, std::ostream& out);
void write_scaling_csv(const ScalingProfile& profile, std::ostream& out);

} // namespace projcheck
