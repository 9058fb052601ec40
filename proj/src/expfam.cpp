#include "projcheck/expfam.hpp"

#include "projcheck/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

namespace projcheck {

namespace {

using VolumeMap = std::map<StatVector, std::uint64_t>;

void accumulate_chunk(const StatisticSpec& stat, const SiteSpaceFamily& family,
                      const CovariateTable* cov, const ConfigurationStream& chunk, VolumeMap& out) {
    for (const Configuration& x : chunk) {
        ++out[eval_statistic(stat, family, x, cov)];
    }
}

Eigen::VectorXd scaled_vector(const StatVector& t, const std::vector<double>& scales) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i) v[static_cast<Eigen::Index>(i)] = static_cast<double>(t[i]) * scales[i];
    return v;
}

/// Moments of a finite weighted set of statistic values {(log weight, value)}.
Moments weighted_moments(const std::vector<double>& log_weights,
                         const std::vector<Eigen::VectorXd>& values, std::size_t dimension) {
    Moments m;
    const auto d = static_cast<Eigen::Index>(dimension);
    m.log_partition = log_sum_exp(log_weights);
    m.mean = Eigen::VectorXd::Zero(d);
    m.covariance = Eigen::MatrixXd::Zero(d, d);
    std::vector<double> probs(log_weights.size());
    for (std::size_t k = 0; k < log_weights.size(); ++k) {
        probs[k] = std::exp(log_weights[k] - m.log_partition);
        m.mean += probs[k] * values[k];
    }
    for (std::size_t k = 0; k < log_weights.size(); ++k) {
        const Eigen::VectorXd centred = values[k] - m.mean;
        m.covariance += probs[k] * centred * centred.transpose();
    }
    return m;
}

void check_theta(const std::vector<double>& theta, std::size_t dimension) {
    if (theta.size() != dimension) {
        fail(ErrorCode::InvalidArgument, "theta has dimension " + std::to_string(theta.size()) +
                                             ", statistic has " + std::to_string(dimension));
    }
    for (double v : theta) {
        if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "theta components must be finite");
    }
}

std::vector<double> add(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

} // namespace

void ExpFamModel::validate() const {
    validate_statistic(stat, family);
    check_theta(theta, stat.dimension());
    if (stat.uses_covariates() && !covariates) {
        fail(ErrorCode::MissingCovariates, "statistic uses node covariates but the model has none");
    }
}

ExpFamModel ExpFamModel::with_theta(std::vector<double> new_theta) const {
    ExpFamModel copy = *this;
    copy.theta = std::move(new_theta);
    return copy;
}

MarginalVolume build_marginal_volume(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                     IndexSet set, const CovariateTable* cov,
                                     const EnumerationOptions& options) {
    const ConfigurationStream stream(family, set, options.guard);
    const unsigned workers = std::max(1u, std::min<unsigned>(options.threads,
                                                             static_cast<unsigned>(std::min<std::uint64_t>(stream.size(), 64))));
    std::vector<VolumeMap> partial(workers);
    if (workers == 1) {
        accumulate_chunk(stat, family, cov, stream, partial[0]);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (unsigned k = 0; k < workers; ++k) {
            pool.emplace_back([&, k] {
                try {
                    accumulate_chunk(stat, family, cov, stream.chunk(k, workers), partial[k]);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    VolumeMap merged = std::move(partial[0]);
    for (unsigned k = 1; k < workers; ++k) {
        for (const auto& [t, count] : partial[k]) merged[t] += count;
    }
    MarginalVolume volume;
    volume.total = stream.size();
    volume.entries.assign(merged.begin(), merged.end());
    return volume;
}

ExactLaw ExactLaw::from_volume(MarginalVolume volume, std::vector<double> scales) {
    ExactLaw law;
    law.source_ = std::move(volume);
    law.scales_ = std::move(scales);
    return law;
}

ExactLaw ExactLaw::dyadic(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
                          const CovariateTable* cov) {
    if (!is_dyadic_independent(stat, family)) {
        fail(ErrorCode::IncompatibleStatistic, "statistic does not add up over dyads");
    }
    family.site_count(set);
    const std::uint32_t states = family.kind() == FamilyKind::directed_graph ? 4u : 2u;
    const auto n = static_cast<std::uint32_t>(set.size());
    std::map<std::vector<StatVector>, std::uint64_t> grouped;
    for (std::uint32_t j = 1; j < n; ++j) {
        for (std::uint32_t i = 0; i < j; ++i) {
            std::vector<StatVector> values;
            values.reserve(states);
            for (std::uint32_t s = 0; s < states; ++s) {
                values.push_back(dyad_contribution(stat, family, i, j, s, cov));
            }
            ++grouped[values];
        }
    }
    DyadicProduct product;
    for (auto& [values, count] : grouped) product.groups.push_back({count, values});
    ExactLaw law;
    law.source_ = std::move(product);
    law.scales_ = stat.scales();
    return law;
}

ExactLaw ExactLaw::build(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
                         const CovariateTable* cov, const EnumerationOptions& options) {
    const auto count = family.configuration_count(set);
    if (count && *count <= options.guard) {
        return from_volume(build_marginal_volume(stat, family, set, cov, options), stat.scales());
    }
    if (is_dyadic_independent(stat, family)) return dyadic(stat, family, set, cov);
    checked_configuration_count(family, set, options.guard);
    fail(ErrorCode::SpaceTooLarge, "configuration space too large");
}

double ExactLaw::log_partition(const std::vector<double>& theta) const {
    check_theta(theta, dimension());
    if (const auto* volume = std::get_if<MarginalVolume>(&source_)) {
        LogSumExp acc;
        for (const auto& [t, count] : volume->entries) {
            acc.add(std::log(static_cast<double>(count)) + scaled_inner(theta, scales_, t));
        }
        return acc.value();
    }
    const auto& product = std::get<DyadicProduct>(source_);
    double total = 0.0;
    for (const auto& group : product.groups) {
        LogSumExp acc;
        for (const auto& v : group.state_values) acc.add(scaled_inner(theta, scales_, v));
        total += static_cast<double>(group.multiplicity) * acc.value();
    }
    return total;
}

Moments ExactLaw::moments(const std::vector<double>& theta) const {
    check_theta(theta, dimension());
    if (const auto* volume = std::get_if<MarginalVolume>(&source_)) {
        std::vector<double> log_weights;
        std::vector<Eigen::VectorXd> values;
        log_weights.reserve(volume->entries.size());
        values.reserve(volume->entries.size());
        for (const auto& [t, count] : volume->entries) {
            log_weights.push_back(std::log(static_cast<double>(count)) + scaled_inner(theta, scales_, t));
            values.push_back(scaled_vector(t, scales_));
        }
        return weighted_moments(log_weights, values, dimension());
    }
    const auto& product = std::get<DyadicProduct>(source_);
    const auto d = static_cast<Eigen::Index>(dimension());
    Moments total;
    total.mean = Eigen::VectorXd::Zero(d);
    total.covariance = Eigen::MatrixXd::Zero(d, d);
    for (const auto& group : product.groups) {
        std::vector<double> log_weights;
        std::vector<Eigen::VectorXd> values;
        for (const auto& v : group.state_values) {
            log_weights.push_back(scaled_inner(theta, scales_, v));
            values.push_back(scaled_vector(v, scales_));
        }
        const Moments local = weighted_moments(log_weights, values, dimension());
        const auto m = static_cast<double>(group.multiplicity);
        total.log_partition += m * local.log_partition;
        total.mean += m * local.mean;
        total.covariance += m * local.covariance;
    }
    return total;
}

std::pair<StatVector, StatVector> ExactLaw::bounds() const {
    StatVector lo(dimension());
    StatVector hi(dimension());
    if (const auto* volume = std::get_if<MarginalVolume>(&source_)) {
        bool first = true;
        for (const auto& [t, count] : volume->entries) {
            for (std::size_t i = 0; i < t.size(); ++i) {
                lo[i] = first ? t[i] : std::min(lo[i], t[i]);
                hi[i] = first ? t[i] : std::max(hi[i], t[i]);
            }
            first = false;
        }
        return {lo, hi};
    }
    for (const auto& group : std::get<DyadicProduct>(source_).groups) {
        for (std::size_t i = 0; i < dimension(); ++i) {
            std::int64_t gmin = group.state_values[0][i];
            std::int64_t gmax = gmin;
            for (const auto& v : group.state_values) {
                gmin = std::min(gmin, v[i]);
                gmax = std::max(gmax, v[i]);
            }
            const auto m = static_cast<std::int64_t>(group.multiplicity);
            lo[i] += m * gmin;
            hi[i] += m * gmax;
        }
    }
    return {lo, hi};
}

Eigen::VectorXd StatDistribution::mean(const std::vector<double>& scales) const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scales.size()));
    for (const auto& e : entries) m += e.probability * scaled_vector(e.t, scales);
    return m;
}

double log_partition(const ExpFamModel& model, IndexSet set, const EnumerationOptions& options) {
    model.validate();
    return ExactLaw::build(model.stat, model.family, set, model.cov(), options).log_partition(model.theta);
}

double log_probability(const ExpFamModel& model, IndexSet set, const Configuration& x,
                       const EnumerationOptions& options) {
    model.validate();
    if (x.index_size() != set.size()) {
        fail(ErrorCode::InvalidArgument, "configuration does not live on the given index set");
    }
    const StatVector t = eval_statistic(model.stat, model.family, x, model.cov());
    return scaled_inner(model.theta, model.stat.scales(), t) - log_partition(model, set, options);
}

StatDistribution statistic_distribution(const ExpFamModel& model, IndexSet set,
                                        const EnumerationOptions& options) {
    model.validate();
    const MarginalVolume volume =
        build_marginal_volume(model.stat, model.family, set, model.cov(), options);
    const std::vector<double> scales = model.stat.scales();
    StatDistribution dist;
    dist.total_count = volume.total;
    LogSumExp acc;
    std::vector<double> log_weights;
    for (const auto& [t, count] : volume.entries) {
        log_weights.push_back(std::log(static_cast<double>(count)) + scaled_inner(model.theta, scales, t));
        acc.add(log_weights.back());
    }
    dist.log_partition = acc.value();
    for (std::size_t k = 0; k < volume.entries.size(); ++k) {
        dist.entries.push_back({volume.entries[k].first, volume.entries[k].second,
                                std::exp(log_weights[k] - dist.log_partition)});
    }
    return dist;
}

std::vector<PredictiveEntry> predictive_distribution(const ExpFamModel& model, IndexSet sub,
                                                     IndexSet super, const Configuration& x,
                                                     const EnumerationOptions& options) {
    model.validate();
    if (!sub.is_subset_of(super)) fail(ErrorCode::NotNested, "sub index set is not nested in super");
    if (x.index_size() != sub.size()) {
        fail(ErrorCode::InvalidArgument, "history does not live on the sub index set");
    }
    const ConfigurationStream extensions(model.family, sub, super, options.guard);
    const std::vector<double> scales = model.stat.scales();
    const StatVector base = eval_statistic(model.stat, model.family, x, model.cov());
    std::vector<PredictiveEntry> out;
    out.reserve(extensions.size());
    std::vector<double> log_weights;
    LogSumExp acc;
    for (const Configuration& y : extensions) {
        const Configuration x_B = extend_configuration(model.family, x, super, y);
        StatVector delta = eval_statistic(model.stat, model.family, x_B, model.cov()) - base;
        log_weights.push_back(scaled_inner(model.theta, scales, delta));
        acc.add(log_weights.back());
        out.push_back({y, std::move(delta), 0.0});
    }
    const double log_norm = acc.value();
    for (std::size_t k = 0; k < out.size(); ++k) out[k].probability = std::exp(log_weights[k] - log_norm);
    return out;
}

double increment_mgf(const ExpFamModel& model, IndexSet sub, IndexSet super,
                     const std::vector<double>& phi, const EnumerationOptions& options) {
    model.validate();
    if (!sub.is_subset_of(super)) fail(ErrorCode::NotNested, "sub index set is not nested in super");
    check_theta(phi, model.stat.dimension());
    const ExactLaw law_A = ExactLaw::build(model.stat, model.family, sub, model.cov(), options);
    const ExactLaw law_B = ExactLaw::build(model.stat, model.family, super, model.cov(), options);
    const std::vector<double> shifted = add(model.theta, phi);
    return std::exp(law_B.log_partition(shifted) + law_A.log_partition(model.theta) -
                    law_B.log_partition(model.theta) - law_A.log_partition(shifted));
}

double conditional_increment_mgf(const ExpFamModel& model, IndexSet sub, IndexSet super,
                                 const Configuration& x, const std::vector<double>& phi,
                                 const EnumerationOptions& options) {
    check_theta(phi, model.stat.dimension());
    const std::vector<double> scales = model.stat.scales();
    double total = 0.0;
    for (const auto& entry : predictive_distribution(model, sub, super, x, options)) {
        total += entry.probability * std::exp(scaled_inner(phi, scales, entry.increment));
    }
    return total;
}

} // namespace projcheck
