#include "projcheck/inference.hpp"

#include "projcheck/numeric.hpp"

#include <cmath>

namespace projcheck {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

template <class Record>
void run_chain(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
               const std::vector<double>& theta, const SamplerConfig& config,
               const CovariateTable* cov, Record&& record) {
    config.validate();
    GibbsChain chain(stat, family, set, theta, config.seed, cov);
    for (std::uint64_t s = 0; s < config.burn_in; ++s) chain.sweep();
    for (std::uint64_t k = 0; k < config.samples; ++k) {
        for (std::uint64_t s = 0; s < config.thinning; ++s) chain.sweep();
        record(chain);
    }
}

} // namespace

void SamplerConfig::validate() const {
    if (burn_in == 0 || thinning == 0 || samples == 0) {
        fail(ErrorCode::InvalidArgument, "sampler burn-in, thinning and sample count must be positive");
    }
}

std::uint64_t task_seed(std::uint64_t seed, std::uint64_t index) {
    return seed ^ index;
}

GibbsChain::GibbsChain(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
                       std::vector<double> theta, std::uint64_t seed, const CovariateTable* cov)
    : family_(&family), theta_(std::move(theta)), scales_(stat.scales()),
      state_(stat, family, set, cov, Configuration::zeros(family, set)),
      rng_(splitmix64(seed)) {
    if (theta_.size() != stat.dimension()) {
        fail(ErrorCode::InvalidArgument, "theta dimension does not match the statistic");
    }
}

double GibbsChain::uniform() {
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

void GibbsChain::sweep() {
    const std::size_t sites = state_.configuration().site_count();
    for (std::size_t site = 0; site < sites; ++site) {
        const std::uint32_t alphabet = family_->alphabet_size(site);
        const std::uint32_t current = state_.configuration().get(site);
        if (alphabet == 2) {
            const StatVector flip = state_.change(site, 1 - current);
            const double toward_flip = scaled_inner(theta_, scales_, flip);
            const double log_odds_one = current == 0 ? toward_flip : -toward_flip;
            state_.set(site, uniform() < logistic(log_odds_one) ? 1 : 0);
            continue;
        }
        std::vector<double> log_weights(alphabet);
        for (std::uint32_t s = 0; s < alphabet; ++s) {
            log_weights[s] = scaled_inner(theta_, scales_, state_.change(site, s));
        }
        const double norm = log_sum_exp(log_weights);
        double u = uniform();
        std::uint32_t chosen = alphabet - 1;
        for (std::uint32_t s = 0; s < alphabet; ++s) {
            u -= std::exp(log_weights[s] - norm);
            if (u < 0) {
                chosen = s;
                break;
            }
        }
        state_.set(site, chosen);
    }
}

std::vector<Configuration> gibbs_sample(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                        IndexSet set, const std::vector<double>& theta,
                                        const SamplerConfig& config, const CovariateTable* cov) {
    std::vector<Configuration> out;
    out.reserve(config.samples);
    run_chain(stat, family, set, theta, config, cov,
              [&](const GibbsChain& chain) { out.push_back(chain.configuration()); });
    return out;
}

std::vector<StatVector> gibbs_statistics(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                         IndexSet set, const std::vector<double>& theta,
                                         const SamplerConfig& config, const CovariateTable* cov) {
    std::vector<StatVector> out;
    out.reserve(config.samples);
    run_chain(stat, family, set, theta, config, cov,
              [&](const GibbsChain& chain) { out.push_back(chain.statistic()); });
    return out;
}

} // namespace projcheck
