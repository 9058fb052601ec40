#include "projcheck/inference.hpp"

#include "projcheck/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

namespace projcheck {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

Vec to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

std::vector<Vec> support_points(const MarginalVolume& volume) {
    std::vector<Vec> points;
    points.reserve(volume.entries.size());
    for (const auto& [t, count] : volume.entries) {
        Vec p(static_cast<Eigen::Index>(t.size()));
        for (std::size_t i = 0; i < t.size(); ++i) p[static_cast<Eigen::Index>(i)] = static_cast<double>(t[i]);
        points.push_back(std::move(p));
    }
    return points;
}

std::optional<HullFace> box_violation(const StatVector& lo, const StatVector& hi, const Vec& p) {
    const double eps = 1e-12;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        HullFace face;
        face.normal.assign(lo.size(), 0.0);
        if (p[k] <= static_cast<double>(lo[i]) + eps * std::max(1.0, std::abs(p[k]))) {
            face.normal[i] = -1.0;
            face.offset = -static_cast<double>(lo[i]);
            return face;
        }
        if (p[k] >= static_cast<double>(hi[i]) - eps * std::max(1.0, std::abs(p[k]))) {
            face.normal[i] = 1.0;
            face.offset = static_cast<double>(hi[i]);
            return face;
        }
    }
    return std::nullopt;
}

double cross2(const Vec& o, const Vec& a, const Vec& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

/// Monotone-chain hull (counter-clockwise) followed by a strict-inside test.
std::optional<HullFace> planar_violation(std::vector<Vec> points, const Vec& p) {
    std::sort(points.begin(), points.end(), [](const Vec& a, const Vec& b) {
        return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
    });
    std::vector<Vec> hull(2 * points.size());
    std::size_t k = 0;
    for (const auto& q : points) {
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], q) <= 0) --k;
        hull[k++] = q;
    }
    for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross2(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
        hull[k++] = points[i];
    }
    hull.resize(k > 0 ? k - 1 : 0);
    if (hull.size() < 3) {
        // Degenerate hull: no interior at all.
        HullFace face;
        face.normal = {0.0, 0.0};
        if (hull.size() == 2) {
            const Vec d = hull[1] - hull[0];
            face.normal = {-d[1], d[0]};
            face.offset = face.normal[0] * hull[0][0] + face.normal[1] * hull[0][1];
        }
        return face;
    }
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Vec& a = hull[i];
        const Vec& b = hull[(i + 1) % hull.size()];
        const double edge = (b - a).norm();
        if (cross2(a, b, p) <= 1e-12 * edge * std::max(1.0, p.norm())) {
            // Outward normal of a counter-clockwise edge.
            HullFace face;
            face.normal = {b[1] - a[1], a[0] - b[0]};
            face.offset = face.normal[0] * a[0] + face.normal[1] * a[1];
            return face;
        }
    }
    return std::nullopt;
}

/// Brute-force facet search in three dimensions.
std::optional<HullFace> spatial_violation(const std::vector<Vec>& points, const Vec& p) {
    const std::size_t n = points.size();
    bool found_facet = false;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            for (std::size_t c = b + 1; c < n; ++c) {
                const Eigen::Vector3d u = (points[b] - points[a]).head<3>();
                const Eigen::Vector3d v = (points[c] - points[a]).head<3>();
                Eigen::Vector3d normal = u.cross(v);
                if (normal.squaredNorm() == 0.0) continue;
                bool any_pos = false;
                bool any_neg = false;
                for (const auto& s : points) {
                    const double side = normal.dot((s - points[a]).head<3>());
                    any_pos |= side > 0;
                    any_neg |= side < 0;
                    if (any_pos && any_neg) break;
                }
                if (any_pos && any_neg) continue;
                found_facet = true;
                if (any_pos) normal = -normal;  // orient outward: hull on the <= side
                const double offset = normal.dot(points[a].head<3>());
                const double slack = offset - normal.dot(p.head<3>());
                if (slack <= 1e-12 * normal.norm() * std::max(1.0, p.norm())) {
                    return HullFace{{normal[0], normal[1], normal[2]}, offset};
                }
            }
        }
    }
    if (!found_facet) return HullFace{{0.0, 0.0, 0.0}, 0.0};
    return std::nullopt;
}

/// Points beyond which the 3-d facet search falls back to per-component bounds.
constexpr std::size_t kSpatialHullLimit = 150;

Moments law_moments(const ExactLaw& law, const Vec& theta) { return law.moments(to_std(theta)); }

Vec scaled_observation(const ExactLaw& law, const std::vector<double>& observed) {
    Vec out(static_cast<Eigen::Index>(observed.size()));
    for (std::size_t i = 0; i < observed.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = observed[i] * law.scales()[i];
    }
    return out;
}

Vec solve_spd(const Mat& h, const Vec& g) {
    Eigen::LDLT<Mat> ldlt(h);
    Vec step = ldlt.solve(g);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
        step = h.completeOrthogonalDecomposition().solve(g);
    }
    return step;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace

std::string to_string(FitMethod method) { return method == FitMethod::exact ? "exact" : "mcmc"; }

std::optional<HullFace> hull_violation(const ExactLaw& law, const std::vector<double>& observed) {
    if (observed.size() != law.dimension()) {
        fail(ErrorCode::InvalidArgument, "observed statistic has the wrong dimension");
    }
    const Vec p = to_vec(observed);
    const auto [lo, hi] = law.bounds();
    const MarginalVolume* volume = law.volume();
    const std::size_t d = law.dimension();
    if (d == 1 || volume == nullptr) return box_violation(lo, hi, p);
    if (auto face = box_violation(lo, hi, p)) return face;
    const std::vector<Vec> points = support_points(*volume);
    if (d == 2) return planar_violation(points, p);
    if (d == 3 && points.size() <= kSpatialHullLimit) return spatial_violation(points, p);
    return std::nullopt;
}

MLEResult fit_mle_with_law(const ExactLaw& law, const std::vector<double>& observed,
                           const NewtonSettings& settings) {
    if (auto face = hull_violation(law, observed)) {
        std::ostringstream msg;
        msg << "observed statistic lies on or outside the boundary of the attainable hull; face normal (";
        for (std::size_t i = 0; i < face->normal.size(); ++i) msg << (i ? "," : "") << face->normal[i];
        msg << "), offset " << face->offset;
        throw BoundaryObservationError(msg.str(), *face);
    }
    const Vec target = scaled_observation(law, observed);
    double max_scale = 1.0;
    for (double s : law.scales()) max_scale = std::max(max_scale, s);
    const double tolerance = settings.tolerance * max_scale;

    MLEResult result;
    result.observed = observed;
    result.method = FitMethod::exact;
    Vec theta = Vec::Zero(static_cast<Eigen::Index>(law.dimension()));
    Moments m = law_moments(law, theta);
    Vec gradient = m.mean - target;

    for (result.iterations = 0; result.iterations < settings.max_iterations; ++result.iterations) {
        if (max_abs(gradient) <= tolerance) {
            result.converged = true;
            break;
        }
        const Vec step = solve_spd(m.covariance, gradient);
        double scale = 1.0;
        bool improved = false;
        for (unsigned h = 0; h <= settings.max_halvings; ++h, scale *= 0.5) {
            const Vec candidate = theta - scale * step;
            Moments cm = law_moments(law, candidate);
            const Vec cg = cm.mean - target;
            if (cg.allFinite() && cg.norm() < gradient.norm()) {
                theta = candidate;
                m = std::move(cm);
                gradient = cg;
                improved = true;
                break;
            }
        }
        if (!improved) {
            result.converged = max_abs(gradient) <= 10.0 * tolerance;
            break;
        }
    }
    if (!result.converged && max_abs(gradient) <= tolerance) result.converged = true;
    result.theta_hat = to_std(theta);
    result.fitted_mean = to_std(m.mean);
    result.gradient_norm = max_abs(gradient);
    if (!result.converged) {
        fail(ErrorCode::MaxIterations, "Newton iteration did not converge; gradient norm " +
                                           std::to_string(result.gradient_norm));
    }
    return result;
}

MLEResult fit_mle_exact(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
                        const std::vector<double>& observed, const CovariateTable* cov,
                        const EnumerationOptions& options, const NewtonSettings& settings) {
    validate_statistic(stat, family);
    const ExactLaw law = ExactLaw::build(stat, family, set, cov, options);
    return fit_mle_with_law(law, observed, settings);
}

MLEResult fit_mle_mcmc(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
                       const std::vector<double>& observed, const SamplerConfig& config,
                       const std::vector<double>& theta0, const CovariateTable* cov,
                       const McmcSettings& settings) {
    validate_statistic(stat, family);
    config.validate();
    const std::size_t d = stat.dimension();
    if (observed.size() != d || theta0.size() != d) {
        fail(ErrorCode::InvalidArgument, "observed statistic and theta0 must match the model dimension");
    }
    const std::vector<double> scales = stat.scales();
    Vec target(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) target[static_cast<Eigen::Index>(i)] = observed[i] * scales[i];

    const auto bounds = statistic_bounds(stat, family, set, cov);
    for (std::size_t i = 0; i < d; ++i) {
        if (!bounds[i]) continue;
        const auto [lo, hi] = *bounds[i];
        HullFace face;
        face.normal.assign(d, 0.0);
        if (observed[i] >= static_cast<double>(hi)) {
            face.normal[i] = 1.0;
            face.offset = static_cast<double>(hi);
        } else if (observed[i] <= static_cast<double>(lo)) {
            face.normal[i] = -1.0;
            face.offset = -static_cast<double>(lo);
        } else {
            continue;
        }
        throw BoundaryObservationError("observed statistic lies on the boundary of the attainable range of component '" +
                                           stat.components[i].name + "'",
                                       std::move(face));
    }

    MLEResult result;
    result.observed = observed;
    result.method = FitMethod::mcmc;
    Vec theta = to_vec(theta0);
    GibbsChain chain(stat, family, set, theta0, config.seed, cov);
    for (std::uint64_t s = 0; s < config.burn_in; ++s) chain.sweep();

    std::size_t quiet = 0;
    Mat covariance;
    Vec mean;
    Vec gradient;
    for (result.iterations = 1; result.iterations <= settings.max_iterations; ++result.iterations) {
        chain.set_theta(to_std(theta));
        for (std::uint64_t s = 0; s < config.burn_in; ++s) chain.sweep();
        const auto n = static_cast<double>(config.samples);
        mean = Vec::Zero(static_cast<Eigen::Index>(d));
        std::vector<Vec> draws;
        draws.reserve(config.samples);
        for (std::uint64_t k = 0; k < config.samples; ++k) {
            for (std::uint64_t s = 0; s < config.thinning; ++s) chain.sweep();
            Vec v(static_cast<Eigen::Index>(d));
            for (std::size_t i = 0; i < d; ++i) {
                v[static_cast<Eigen::Index>(i)] = static_cast<double>(chain.statistic()[i]) * scales[i];
            }
            mean += v;
            draws.push_back(std::move(v));
        }
        mean /= n;
        covariance = Mat::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (const auto& v : draws) covariance += (v - mean) * (v - mean).transpose();
        covariance /= std::max(1.0, n - 1.0);
        if (covariance.diagonal().minCoeff() <= 1e-12) {
            fail(ErrorCode::Degenerate, "sampled statistics collapsed to a near-constant value at theta = " +
                                            [&] {
                                                std::ostringstream s;
                                                s << theta.transpose();
                                                return s.str();
                                            }());
        }
        gradient = mean - target;
        const Vec standard_error = (covariance.diagonal() / n).cwiseSqrt();
        const bool within_noise =
            (gradient.cwiseAbs().array() < settings.noise_multiple * standard_error.array()).all();
        quiet = within_noise ? quiet + 1 : 0;
        Vec step = solve_spd(covariance, gradient);
        if (step.norm() > settings.max_step) step *= settings.max_step / step.norm();
        theta -= step;
        if (quiet >= settings.consecutive_required) {
            result.converged = true;
            break;
        }
    }
    if (!result.converged) {
        fail(ErrorCode::MaxIterations, "MCMC maximum likelihood did not settle within " +
                                           std::to_string(settings.max_iterations) + " iterations");
    }
    result.theta_hat = to_std(theta);
    result.fitted_mean = to_std(mean);
    result.gradient_norm = max_abs(gradient);
    const Mat inverse = covariance.inverse();
    result.standard_error.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        result.standard_error[i] = std::sqrt(std::max(0.0, inverse(k, k)) / static_cast<double>(config.samples));
    }
    return result;
}

MLEResult fit_mle(const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set,
                  const std::vector<double>& observed, const SamplerConfig& config,
                  const CovariateTable* cov, const EnumerationOptions& options) {
    const auto count = family.configuration_count(set);
    const bool exact = (count && *count <= options.guard) || is_dyadic_independent(stat, family);
    if (exact) return fit_mle_exact(stat, family, set, observed, cov, options);
    return fit_mle_mcmc(stat, family, set, observed, config,
                        std::vector<double>(stat.dimension(), 0.0), cov);
}

SizeMeasure default_size_measure(const SiteSpaceFamily& family) {
    switch (family.kind()) {
    case FamilyKind::undirected_graph:
        return [](std::size_t n) { return static_cast<double>(n * (n - 1) / 2); };
    case FamilyKind::directed_graph:
        return [](std::size_t n) { return static_cast<double>(n * (n - 1)); };
    case FamilyKind::binary_sequence:
    case FamilyKind::spin_sequence:
        return [](std::size_t n) { return static_cast<double>(n - 1); };
    case FamilyKind::explicit_product:
        break;
    }
    return [](std::size_t n) { return static_cast<double>(n); };
}

ScalingProfile scaling_profile(const StatisticSpec& stat, const SiteSpaceFamily& family,
                               const std::vector<std::size_t>& sizes,
                               const std::vector<double>& theta, const SizeMeasure& r,
                               const CovariateTable* cov, const EnumerationOptions& options) {
    validate_statistic(stat, family);
    if (sizes.empty()) fail(ErrorCode::InvalidArgument, "scaling profile needs at least one size");
    ScalingProfile profile;
    profile.theta = theta;
    double previous_r = -std::numeric_limits<double>::infinity();
    for (std::size_t n : sizes) {
        const double rn = r(n);
        if (!(rn > 0.0) || !(rn > previous_r)) {
            fail(ErrorCode::InvalidArgument, "size measure must be positive and strictly increasing");
        }
        previous_r = rn;
        const ExactLaw law = ExactLaw::build(stat, family, IndexSet(n), cov, options);
        const double a = law.log_partition(theta);
        profile.entries.push_back({n, rn, a, a / rn});
    }
    profile.exactly_constant = true;
    for (std::size_t k = 1; k < profile.entries.size(); ++k) {
        const double prev = profile.entries[k - 1].ratio;
        const double cur = profile.entries[k].ratio;
        profile.successive_differences.push_back(cur - prev);
        if (std::abs(cur - prev) > 1e-12 * std::max({1.0, std::abs(prev), std::abs(cur)})) {
            profile.exactly_constant = false;
        }
    }
    profile.limit_estimate = profile.entries.back().ratio;
    return profile;
}

ScaledLogPartition ScaledLogPartition::from_law(ExactLaw law, double r) {
    if (!(r > 0.0)) fail(ErrorCode::InvalidArgument, "size measure must be positive");
    auto shared = std::make_shared<ExactLaw>(std::move(law));
    ScaledLogPartition a;
    a.r = r;
    a.dimension = shared->dimension();
    a.value = [shared, r](const Vec& theta) { return shared->log_partition(to_std(theta)) / r; };
    a.gradient = [shared, r](const Vec& theta) -> Vec { return shared->moments(to_std(theta)).mean / r; };
    a.hessian = [shared, r](const Vec& theta) -> Mat { return shared->moments(to_std(theta)).covariance / r; };
    const auto [lo, hi] = shared->bounds();
    Vec lower(static_cast<Eigen::Index>(lo.size()));
    Vec upper(static_cast<Eigen::Index>(hi.size()));
    for (std::size_t i = 0; i < lo.size(); ++i) {
        lower[static_cast<Eigen::Index>(i)] = static_cast<double>(lo[i]) * shared->scales()[i] / r;
        upper[static_cast<Eigen::Index>(i)] = static_cast<double>(hi[i]) * shared->scales()[i] / r;
    }
    a.range = std::make_pair(lower, upper);
    return a;
}

ScaledLogPartition ScaledLogPartition::closed_form(std::function<double(const Eigen::VectorXd&)> value,
                                                   std::size_t dimension,
                                                   std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> range) {
    ScaledLogPartition a;
    a.value = std::move(value);
    a.dimension = dimension;
    a.range = std::move(range);
    return a;
}

RateFunctionEval rate_function(const ScaledLogPartition& a, const std::vector<double>& theta,
                               const std::vector<double>& t) {
    if (theta.size() != a.dimension || t.size() != a.dimension) {
        fail(ErrorCode::InvalidArgument, "theta and t must match the log-partition dimension");
    }
    const Vec base = to_vec(theta);
    const Vec target = to_vec(t);
    const auto d = static_cast<Eigen::Index>(a.dimension);

    auto gradient = [&](const Vec& x) -> Vec {
        if (a.gradient) return a.gradient(x);
        const double h = 1e-5;
        Vec g(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            Vec up = x, down = x;
            up[i] += h;
            down[i] -= h;
            g[i] = (a.value(up) - a.value(down)) / (2 * h);
        }
        return g;
    };
    auto hessian = [&](const Vec& x) -> Mat {
        if (a.hessian) return a.hessian(x);
        const double h = 1e-4;
        Mat m(d, d);
        for (Eigen::Index i = 0; i < d; ++i) {
            Vec up = x, down = x;
            up[i] += h;
            down[i] -= h;
            m.col(i) = (gradient(up) - gradient(down)) / (2 * h);
        }
        return 0.5 * (m + m.transpose());
    };

    RateFunctionEval eval;
    eval.t = t;
    eval.theta = theta;
    eval.r = a.r;
    eval.phi.assign(a.dimension, 0.0);
    if (a.range) {
        const auto& [lo, hi] = *a.range;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double slack = 1e-12 * std::max(1.0, std::abs(target[i]));
            if (target[i] < lo[i] - slack || target[i] > hi[i] + slack) {
                eval.unbounded = true;
                eval.J = std::numeric_limits<double>::infinity();
                return eval;
            }
        }
    }

    const double a_base = a.value(base);
    auto objective = [&](const Vec& phi) { return phi.dot(target) - (a.value(base + phi) - a_base); };
    Vec phi = Vec::Zero(d);
    double current = 0.0;
    for (eval.iterations = 0; eval.iterations < 200; ++eval.iterations) {
        const Vec g = target - gradient(base + phi);
        if (max_abs(g) <= 1e-13 * std::max(1.0, max_abs(target))) {
            eval.converged = true;
            break;
        }
        Mat h = hessian(base + phi);
        h.diagonal().array() += 1e-14;
        const Vec step = solve_spd(h, g);
        double scale = 1.0;
        bool improved = false;
        for (int k = 0; k < 60; ++k, scale *= 0.5) {
            const Vec candidate = phi + scale * step;
            const double value = objective(candidate);
            if (std::isfinite(value) && value >= current) {
                improved = value > current || scale * step.norm() < 1e-15;
                phi = candidate;
                current = value;
                break;
            }
        }
        if (!improved) {
            eval.converged = max_abs(g) <= 1e-8 * std::max(1.0, max_abs(target));
            break;
        }
        if (phi.norm() > 1e3) {
            // The supremum is approached only as phi diverges: t sits on the
            // boundary of the mean range.
            break;
        }
    }
    eval.phi = to_std(phi);
    eval.J = std::max(0.0, current);
    return eval;
}

std::optional<double> ExperimentTable::median_error(const std::string& variant, std::size_t size) const {
    std::vector<double> errors;
    for (const auto& row : rows) {
        if (row.variant == variant && row.size == size && row.status == "ok") errors.push_back(row.error);
    }
    if (errors.empty()) return std::nullopt;
    return median(errors);
}

ExperimentTable consistency_experiment(const StatisticSpec& stat, const SiteSpaceFamily& family,
                                       const std::vector<double>& theta_star,
                                       const std::vector<std::size_t>& sizes,
                                       std::size_t replicates, const SamplerConfig& config,
                                       const CovariateTable* cov, const EnumerationOptions& options,
                                       const ExperimentSettings& settings) {
    validate_statistic(stat, family);
    config.validate();
    if (sizes.empty() || replicates == 0) {
        fail(ErrorCode::InvalidArgument, "experiment needs at least one size and one replicate");
    }
    if (theta_star.size() != stat.dimension()) {
        fail(ErrorCode::InvalidArgument, "theta_star dimension does not match the statistic");
    }
    ExperimentTable table;
    table.theta_star = theta_star;
    table.sizes = sizes;
    table.replicates = replicates;
    const std::size_t largest = *std::max_element(sizes.begin(), sizes.end());

    auto fit_row = [&](ExperimentRow& row, const Configuration& x) {
        const StatVector t = eval_statistic(stat, family, x, cov);
        std::vector<double> observed(t.values().begin(), t.values().end());
        SamplerConfig fit_config = config;
        fit_config.seed = task_seed(row.seed, 0x6669740aULL);
        try {
            const MLEResult fit = fit_mle(stat, family, IndexSet(row.size), observed, fit_config, cov, options);
            row.theta_hat = fit.theta_hat;
            row.method = to_string(fit.method);
            double err = 0.0;
            for (std::size_t i = 0; i < theta_star.size(); ++i) {
                err += (fit.theta_hat[i] - theta_star[i]) * (fit.theta_hat[i] - theta_star[i]);
            }
            row.error = std::sqrt(err);
            row.status = "ok";
        } catch (const Error& e) {
            row.error = std::numeric_limits<double>::quiet_NaN();
            row.status = std::string(to_string(e.code()));
        }
    };

    // Independent variant occupies task indices [0, sizes * replicates);
    // projection variant follows with one task per replicate.
    struct Task {
        bool projection;
        std::size_t size_index;
        std::size_t replicate;
        std::uint64_t index;
    };
    std::vector<Task> tasks;
    if (settings.independent) {
        for (std::size_t s = 0; s < sizes.size(); ++s) {
            for (std::size_t r = 0; r < replicates; ++r) tasks.push_back({false, s, r, s * replicates + r});
        }
    }
    if (settings.projection) {
        for (std::size_t r = 0; r < replicates; ++r) {
            tasks.push_back({true, 0, r, sizes.size() * replicates + r});
        }
    }

    std::vector<std::vector<ExperimentRow>> results(tasks.size());
    auto run_task = [&](std::size_t k) {
        const Task& task = tasks[k];
        const std::uint64_t seed = task_seed(config.seed, task.index);
        SamplerConfig draw = config;
        draw.seed = seed;
        draw.samples = 1;
        draw.thinning = 1;
        if (!task.projection) {
            ExperimentRow row{"independent", sizes[task.size_index], task.replicate, seed, {}, 0.0, "", ""};
            const auto x = gibbs_sample(stat, family, IndexSet(row.size), theta_star, draw, cov);
            fit_row(row, x.front());
            results[k].push_back(std::move(row));
            return;
        }
        const auto x = gibbs_sample(stat, family, IndexSet(largest), theta_star, draw, cov);
        for (std::size_t n : sizes) {
            ExperimentRow row{"projection", n, task.replicate, seed, {}, 0.0, "", ""};
            fit_row(row, project_configuration(family, x.front(), IndexSet(n)));
            results[k].push_back(std::move(row));
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(tasks.size())));
    if (workers == 1) {
        for (std::size_t k = 0; k < tasks.size(); ++k) run_task(k);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t k = w; k < tasks.size(); k += workers) run_task(k);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    for (auto& rows : results) {
        for (auto& row : rows) table.rows.push_back(std::move(row));
    }
    return table;
}

void write_experiment_csv(const ExperimentTable& table, std::ostream& out) {
    const std::size_t d = table.theta_star.size();
    out << "variant,size,replicate,seed";
    for (std::size_t i = 0; i < d; ++i) out << ",theta_hat_" << i;
    out << ",error,status,method\n";
    out << std::setprecision(17);
    for (const auto& row : table.rows) {
        out << row.variant << ',' << row.size << ',' << row.replicate << ',' << row.seed;
        for (std::size_t i = 0; i < d; ++i) {
            out << ',';
            if (i < row.theta_hat.size()) out << row.theta_hat[i];
        }
        out << ',';
        if (row.status == "ok") out << row.error;
        out << ',' << row.status << ',' << row.method << '\n';
    }
}

void write_scaling_csv(const ScalingProfile& profile, std::ostream& out) {
    out << "size,r,log_partition,ratio\n" << std::setprecision(17);
    for (const auto& e : profile.entries) {
        out << e.size << ',' << e.r << ',' << e.log_partition << ',' << e.ratio << '\n';
    }
}

} // namespace projcheck
