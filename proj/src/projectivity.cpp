#include "projcheck/projectivity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace projcheck {

namespace {

std::uint64_t count_for(const CountRow& row, const StatVector& key) {
    auto it = std::lower_bound(row.begin(), row.end(), key,
                               [](const auto& entry, const StatVector& k) { return entry.first < k; });
    return (it != row.end() && it->first == key) ? it->second : 0;
}

void build_rows(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet super,
                const CovariateTable* cov, const ConfigurationStream& bases,
                const ConfigurationStream& extensions, std::vector<ConditionalRow>& out) {
    for (const Configuration& x : bases) {
        ConditionalRow row;
        row.x = x;
        row.t = eval_statistic(stat, family, x, cov);
        Configuration x_B = extend_configuration(family, x, super, extensions.at(0));
        const std::size_t first = x.site_count();
        std::map<StatVector, std::uint64_t> counts;
        for (const Configuration& y : extensions) {
            for (std::size_t s = 0; s < y.site_count(); ++s) x_B.set(first + s, y.get(s));
            ++counts[eval_statistic(stat, family, x_B, cov) - row.t];
        }
        row.counts.assign(counts.begin(), counts.end());
        out.push_back(std::move(row));
    }
}

double inner_scaled(const std::vector<double>& theta, const std::vector<double>& scales,
                    const StatVector& t) {
    return scaled_inner(theta, scales, t);
}

/// log sum_delta count * exp(<theta, delta * scale>) for one conditional row.
double row_log_norm(const CountRow& row, const std::vector<double>& theta,
                    const std::vector<double>& scales) {
    LogSumExp acc;
    for (const auto& [delta, count] : row) {
        acc.add(std::log(static_cast<double>(count)) + inner_scaled(theta, scales, delta));
    }
    return acc.value();
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double unit_uniform(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace

std::string to_string(Criterion criterion) {
    switch (criterion) {
    case Criterion::separable_increments: return "separable-increments";
    case Criterion::joint_factorization: return "joint-factorization";
    case Criterion::direct_marginalization: return "direct-marginalization";
    case Criterion::increment_independence: return "increment-independence";
    case Criterion::predictive_sufficiency: return "predictive-sufficiency";
    }
    return "unknown";
}

std::vector<StatVector> VolumeTables::increment_support() const {
    std::set<StatVector> support;
    for (const auto& row : conditional) {
        for (const auto& [delta, count] : row.counts) support.insert(delta);
    }
    return {support.begin(), support.end()};
}

std::string VolumeTables::checksum() const {
    std::ostringstream out;
    out << sub_size << ' ' << super_size << ' ' << base_count << ' ' << extension_count << '\n';
    for (const auto& [t, count] : marginal) out << "m " << format_stat(t) << ' ' << count << '\n';
    for (const auto& [key, count] : joint) {
        out << "j " << format_stat(key.first) << ' ' << format_stat(key.second) << ' ' << count << '\n';
    }
    for (std::size_t r = 0; r < conditional.size(); ++r) {
        for (const auto& [delta, count] : conditional[r].counts) {
            out << "c " << r << ' ' << format_stat(delta) << ' ' << count << '\n';
        }
    }
    return sha256_hex(out.str());
}

VolumeTables build_volume_tables(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                 IndexSet sub, IndexSet super, const CovariateTable* cov,
                                 const EnumerationOptions& options) {
    if (!sub.is_subset_of(super)) fail(ErrorCode::NotNested, "sub index set is not nested in super");
    validate_statistic(stat, family);
    checked_configuration_count(family, super, options.guard);
    const ConfigurationStream bases(family, sub, options.guard);
    const ConfigurationStream extensions(family, sub, super, options.guard);

    VolumeTables tables;
    tables.sub_size = sub.size();
    tables.super_size = super.size();
    tables.base_count = bases.size();
    tables.extension_count = extensions.size();

    const unsigned workers = std::max(
        1u, std::min<unsigned>(options.threads, static_cast<unsigned>(std::min<std::uint64_t>(bases.size(), 64))));
    std::vector<std::vector<ConditionalRow>> partial(workers);
    if (workers == 1) {
        build_rows(stat, family, super, cov, bases, extensions, partial[0]);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (unsigned k = 0; k < workers; ++k) {
            pool.emplace_back([&, k] {
                try {
                    build_rows(stat, family, super, cov, bases.chunk(k, workers), extensions, partial[k]);
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
    tables.conditional.reserve(bases.size());
    for (auto& chunk : partial) {
        for (auto& row : chunk) tables.conditional.push_back(std::move(row));
    }

    std::map<StatVector, std::uint64_t> marginal;
    for (const auto& row : tables.conditional) {
        ++marginal[row.t];
        for (const auto& [delta, count] : row.counts) tables.joint[{row.t, delta}] += count;
    }
    tables.marginal.assign(marginal.begin(), marginal.end());
    verify_volume_tables(tables);
    return tables;
}

void verify_volume_tables(const VolumeTables& tables) {
    auto broken = [](const std::string& what) {
        fail(ErrorCode::InternalInconsistency, "volume tables violate " + what);
    };
    std::uint64_t marginal_sum = 0;
    for (const auto& [t, count] : tables.marginal) marginal_sum += count;
    if (marginal_sum != tables.base_count) broken("sum_t v_A(t) = |X_A|");
    if (tables.conditional.size() != tables.base_count) broken("one conditional row per x");

    std::map<std::pair<StatVector, StatVector>, std::uint64_t> regrouped;
    for (const auto& row : tables.conditional) {
        std::uint64_t row_sum = 0;
        for (const auto& [delta, count] : row.counts) {
            row_sum += count;
            regrouped[{row.t, delta}] += count;
        }
        if (row_sum != tables.extension_count) broken("sum_delta v(delta, x) = |X_{B\\A}|");
    }
    uint128 joint_sum = 0;
    for (const auto& [key, count] : tables.joint) joint_sum += count;
    if (joint_sum != static_cast<uint128>(tables.base_count) * tables.extension_count) {
        broken("sum joint = |X_A| |X_{B\\A}|");
    }
    if (regrouped != tables.joint) broken("joint(t, delta) = sum over {x : t_A(x) = t} of conditional");
}

CheckResult check_separable_increments(const VolumeTables& tables) {
    CheckResult result{Criterion::separable_increments, true, std::nullopt, 0.0};
    if (tables.conditional.empty()) return result;
    const ConditionalRow& reference = tables.conditional.front();
    for (const auto& row : tables.conditional) {
        if (row.counts == reference.counts) continue;
        SeparableWitness witness{reference.x, row.x, {}};
        std::set<StatVector> keys;
        for (const auto& [delta, count] : reference.counts) keys.insert(delta);
        for (const auto& [delta, count] : row.counts) keys.insert(delta);
        for (const auto& delta : keys) {
            const std::uint64_t a = count_for(reference.counts, delta);
            const std::uint64_t b = count_for(row.counts, delta);
            if (a != b) witness.mismatches.push_back({delta, a, b});
        }
        result.pass = false;
        result.witness = std::move(witness);
        return result;
    }
    return result;
}

CheckResult check_joint_factorization(const VolumeTables& tables) {
    CheckResult result{Criterion::joint_factorization, true, std::nullopt, 0.0};
    std::map<StatVector, std::uint64_t> rows;
    std::map<StatVector, std::uint64_t> columns;
    for (const auto& [key, count] : tables.joint) {
        rows[key.first] += count;
        columns[key.second] += count;
    }
    const std::uint64_t total = tables.base_count * tables.extension_count;
    for (const auto& [t, row_sum] : rows) {
        for (const auto& [delta, column_sum] : columns) {
            auto it = tables.joint.find({t, delta});
            const std::uint64_t joint = it == tables.joint.end() ? 0 : it->second;
            const uint128 lhs = static_cast<uint128>(joint) * total;
            const uint128 rhs = static_cast<uint128>(row_sum) * column_sum;
            if (lhs != rhs) {
                result.pass = false;
                result.witness = FactorizationWitness{t, delta, joint, row_sum, column_sum, total, lhs, rhs};
                return result;
            }
        }
    }
    return result;
}

CheckResult check_projective_direct(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                    IndexSet sub, IndexSet super,
                                    const std::vector<std::vector<double>>& theta_grid,
                                    const CovariateTable* cov, double tolerance,
                                    const EnumerationOptions& options) {
    if (!sub.is_subset_of(super)) fail(ErrorCode::NotNested, "sub index set is not nested in super");
    if (theta_grid.empty()) fail(ErrorCode::InvalidArgument, "theta grid is empty");
    validate_statistic(stat, family);
    const ConfigurationStream small(family, sub, options.guard);
    const ConfigurationStream large(family, super, options.guard);
    const std::vector<double> scales = stat.scales();

    std::vector<StatVector> base_stats;
    base_stats.reserve(small.size());
    for (const Configuration& x : small) base_stats.push_back(eval_statistic(stat, family, x, cov));

    // Fibre of each x_A: rank_B mod |X_A| is the rank of the projection.
    std::vector<std::map<StatVector, std::uint64_t>> fibres(small.size());
    for (auto it = large.begin(); it != large.end(); ++it) {
        ++fibres[it.rank() % small.size()][eval_statistic(stat, family, *it, cov)];
    }

    CheckResult result{Criterion::direct_marginalization, true, std::nullopt, 0.0};
    for (const auto& theta : theta_grid) {
        if (theta.size() != stat.dimension()) fail(ErrorCode::InvalidArgument, "theta grid dimension mismatch");
        LogSumExp z_small;
        for (const auto& t : base_stats) z_small.add(inner_scaled(theta, scales, t));
        std::vector<double> fibre_log_mass(fibres.size());
        LogSumExp z_large;
        for (std::size_t r = 0; r < fibres.size(); ++r) {
            LogSumExp acc;
            for (const auto& [t, count] : fibres[r]) {
                acc.add(std::log(static_cast<double>(count)) + inner_scaled(theta, scales, t));
            }
            fibre_log_mass[r] = acc.value();
            z_large.add(fibre_log_mass[r]);
        }
        for (std::size_t r = 0; r < fibres.size(); ++r) {
            const double p_small = std::exp(inner_scaled(theta, scales, base_stats[r]) - z_small.value());
            const double p_marginal = std::exp(fibre_log_mass[r] - z_large.value());
            const double gap = std::abs(p_small - p_marginal);
            if (gap > result.max_discrepancy) {
                result.max_discrepancy = gap;
                if (gap > tolerance) {
                    DistributionWitness w;
                    w.theta = theta;
                    w.x = small.at(r);
                    w.probability = p_small;
                    w.probability_other = p_marginal;
                    w.discrepancy = gap;
                    result.witness = std::move(w);
                }
            }
        }
    }
    result.pass = result.max_discrepancy <= tolerance;
    if (result.pass) result.witness.reset();
    return result;
}

CheckResult check_increment_independence_of_x(const VolumeTables& tables,
                                              const std::vector<double>& scales,
                                              const std::vector<std::vector<double>>& theta_grid,
                                              double tolerance) {
    CheckResult result{Criterion::increment_independence, true, std::nullopt, 0.0};
    if (tables.conditional.empty()) return result;
    const std::vector<StatVector> support = tables.increment_support();
    const ConditionalRow& reference = tables.conditional.front();
    for (const auto& theta : theta_grid) {
        const double ref_norm = row_log_norm(reference.counts, theta, scales);
        for (const auto& row : tables.conditional) {
            const double norm = row_log_norm(row.counts, theta, scales);
            for (const auto& delta : support) {
                const double weight = inner_scaled(theta, scales, delta);
                const std::uint64_t a = count_for(reference.counts, delta);
                const std::uint64_t b = count_for(row.counts, delta);
                const double pa = a ? std::exp(std::log(static_cast<double>(a)) + weight - ref_norm) : 0.0;
                const double pb = b ? std::exp(std::log(static_cast<double>(b)) + weight - norm) : 0.0;
                const double gap = std::abs(pa - pb);
                if (gap > result.max_discrepancy) {
                    result.max_discrepancy = gap;
                    if (gap > tolerance) {
                        result.witness = DistributionWitness{theta, reference.x, row.x, std::nullopt, delta, pa, pb, gap};
                    }
                }
            }
        }
    }
    result.pass = result.max_discrepancy <= tolerance;
    if (result.pass) result.witness.reset();
    return result;
}

CheckResult check_predictive_sufficiency(const VolumeTables& tables,
                                         const std::vector<double>& scales,
                                         const std::vector<std::vector<double>>& theta_grid,
                                         double tolerance) {
    CheckResult result{Criterion::predictive_sufficiency, true, std::nullopt, 0.0};
    for (const auto& theta : theta_grid) {
        // First row in which each increment was seen, with p(y | x) for such y.
        std::map<StatVector, std::pair<const ConditionalRow*, double>> seen;
        for (const auto& row : tables.conditional) {
            const double norm = row_log_norm(row.counts, theta, scales);
            for (const auto& [delta, count] : row.counts) {
                const double p = std::exp(inner_scaled(theta, scales, delta) - norm);
                auto [it, inserted] = seen.try_emplace(delta, &row, p);
                if (inserted) continue;
                const double gap = std::abs(it->second.second - p);
                if (gap > result.max_discrepancy) {
                    result.max_discrepancy = gap;
                    if (gap > tolerance) {
                        result.witness = DistributionWitness{theta, it->second.first->x, row.x, std::nullopt,
                                                             delta, it->second.second, p, gap};
                    }
                }
            }
        }
    }
    result.pass = result.max_discrepancy <= tolerance;
    if (result.pass) result.witness.reset();
    return result;
}

CheckResult check_joint_factorization_by_theta(const VolumeTables& tables,
                                               const std::vector<double>& scales,
                                               const std::vector<std::vector<double>>& theta_grid,
                                               double tolerance) {
    CheckResult result{Criterion::joint_factorization, true, std::nullopt, 0.0};
    for (const auto& theta : theta_grid) {
        LogSumExp total;
        std::map<StatVector, LogSumExp> by_t;
        std::map<StatVector, LogSumExp> by_delta;
        std::map<std::pair<StatVector, StatVector>, double> log_joint;
        for (const auto& [key, count] : tables.joint) {
            const double w = std::log(static_cast<double>(count)) +
                             inner_scaled(theta, scales, key.first) + inner_scaled(theta, scales, key.second);
            log_joint[key] = w;
            total.add(w);
            by_t[key.first].add(w);
            by_delta[key.second].add(w);
        }
        const double z = total.value();
        for (const auto& [t, t_mass] : by_t) {
            for (const auto& [delta, d_mass] : by_delta) {
                auto it = log_joint.find({t, delta});
                const double p_joint = it == log_joint.end() ? 0.0 : std::exp(it->second - z);
                const double p_product = std::exp(t_mass.value() - z + d_mass.value() - z);
                const double gap = std::abs(p_joint - p_product);
                if (gap > result.max_discrepancy) {
                    result.max_discrepancy = gap;
                    if (gap > tolerance) {
                        DistributionWitness w;
                        w.theta = theta;
                        w.t = t;
                        w.delta = delta;
                        w.probability = p_joint;
                        w.probability_other = p_product;
                        w.discrepancy = gap;
                        result.witness = std::move(w);
                    }
                }
            }
        }
    }
    result.pass = result.max_discrepancy <= tolerance;
    if (result.pass) result.witness.reset();
    return result;
}

std::vector<std::vector<double>> default_theta_grid(std::size_t dimension, std::uint64_t seed) {
    if (dimension == 0) fail(ErrorCode::InvalidArgument, "dimension must be positive");
    if (dimension == 1) {
        return {{-2.0}, {-1.0}, {-0.5}, {0.0}, {0.5}, {1.0}, {2.0}};
    }
    std::vector<std::vector<double>> grid;
    std::vector<int> digits(dimension, 0);
    while (grid.size() < 64) {
        std::vector<double> point(dimension);
        for (std::size_t i = 0; i < dimension; ++i) point[i] = static_cast<double>(digits[i] - 1);
        grid.push_back(std::move(point));
        std::size_t i = dimension;
        while (i-- > 0) {
            if (++digits[i] < 3) break;
            digits[i] = 0;
        }
        if (i == static_cast<std::size_t>(-1)) break;
    }
    std::uint64_t state = seed;
    std::mt19937_64 rng(splitmix64(state));
    for (int k = 0; k < 8; ++k) {
        std::vector<double> direction(dimension);
        double norm = 0.0;
        for (auto& v : direction) {
            const double u1 = unit_uniform(rng);
            const double u2 = unit_uniform(rng);
            v = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : direction) v /= norm;
        grid.push_back(std::move(direction));
    }
    return grid;
}

const CheckResult& ProjectivityReport::result(Criterion criterion) const {
    for (const auto& c : checks) {
        if (c.criterion == criterion) return c;
    }
    fail(ErrorCode::InvalidArgument, "report has no result for " + to_string(criterion));
}

bool ProjectivityReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::vector<std::string> implication_violations(const std::vector<CheckResult>& checks) {
    auto verdict = [&](Criterion c) -> std::optional<bool> {
        for (const auto& r : checks) {
            if (r.criterion == c) return r.pass;
        }
        return std::nullopt;
    };
    const auto separable = verdict(Criterion::separable_increments);
    const auto joint = verdict(Criterion::joint_factorization);
    const auto direct = verdict(Criterion::direct_marginalization);
    const auto independent = verdict(Criterion::increment_independence);
    const auto predictive = verdict(Criterion::predictive_sufficiency);

    std::vector<std::string> out;
    if (separable && joint && *separable && !*joint) {
        out.push_back("separable-increments => joint-factorization");
    }
    if (separable && direct && *separable != *direct) {
        out.push_back("separable-increments <=> direct-marginalization");
    }
    if (direct && joint && *direct && !*joint) {
        out.push_back("direct-marginalization => joint-factorization");
    }
    if (direct && independent && *direct && !*independent) {
        out.push_back("direct-marginalization => increment-independence");
    }
    if (direct && predictive && *direct && !*predictive) {
        out.push_back("direct-marginalization => predictive-sufficiency");
    }
    return out;
}

ProjectivityReport projectivity_report(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                       IndexSet sub, IndexSet super,
                                       const std::vector<std::vector<double>>& theta_grid,
                                       const CovariateTable* cov, double tolerance,
                                       const EnumerationOptions& options) {
    const VolumeTables tables = build_volume_tables(stat, family, sub, super, cov, options);
    const std::vector<double> scales = stat.scales();

    ProjectivityReport report;
    report.sub_size = sub.size();
    report.super_size = super.size();
    report.base_count = tables.base_count;
    report.extension_count = tables.extension_count;
    report.theta_grid = theta_grid;
    report.tolerance = tolerance;
    report.table_checksum = tables.checksum();
    report.checks.push_back(check_separable_increments(tables));
    report.checks.push_back(check_joint_factorization(tables));
    report.checks.push_back(
        check_projective_direct(stat, family, sub, super, theta_grid, cov, tolerance, options));
    report.checks.push_back(check_increment_independence_of_x(tables, scales, theta_grid, tolerance));
    report.checks.push_back(check_predictive_sufficiency(tables, scales, theta_grid, tolerance));
    report.inconsistencies = implication_violations(report.checks);
    report.implications_consistent = report.inconsistencies.empty();
    if (!report.implications_consistent) throw InternalInconsistencyError(std::move(report));
    return report;
}

namespace {
std::string inconsistency_message(const ProjectivityReport& report) {
    std::string message = "verdicts contradict the implication structure:";
    for (const auto& v : report.inconsistencies) message += " [" + v + "]";
    return message;
}
} // namespace

InternalInconsistencyError::InternalInconsistencyError(ProjectivityReport report)
    : Error(ErrorCode::InternalInconsistency, inconsistency_message(report)),
      report_(std::move(report)) {}

} // namespace projcheck
