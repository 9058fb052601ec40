#include "projcheck/statistics.hpp"

#include "projcheck/error.hpp"

#include <bit>
#include <sstream>

namespace projcheck {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::int64_t binomial(std::int64_t n, std::int64_t k) {
    if (k < 0 || n < k) return 0;
    k = std::min(k, n - k);
    std::int64_t result = 1;
    for (std::int64_t i = 1; i <= k; ++i) {
        result = result * (n - k + i) / i;
    }
    return result;
}

std::size_t node_count(const SiteSpaceFamily& family, const Configuration& x) {
    (void)family;
    return x.index_size();
}

/// Symmetrized adjacency rows of a graph configuration.
std::vector<std::uint64_t> adjacency_rows(const SiteSpaceFamily& family, const Configuration& x) {
    const std::size_t n = node_count(family, x);
    std::vector<std::uint64_t> rows(n, 0);
    auto words = x.words();
    for (std::size_t w = 0; w < words.size(); ++w) {
        std::uint64_t bits = words[w];
        while (bits) {
            const std::size_t site = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
            bits &= bits - 1;
            const Dyad d = family.site_dyad(site);
            rows[d.tail] |= std::uint64_t{1} << d.head;
            rows[d.head] |= std::uint64_t{1} << d.tail;
        }
    }
    return rows;
}

std::int64_t count_triangles(const std::vector<std::uint64_t>& rows) {
    std::int64_t total = 0;
    const std::size_t n = rows.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t higher = rows[i] & (i + 1 < 64 ? ~((std::uint64_t{2} << i) - 1) : 0);
        while (higher) {
            const auto j = static_cast<std::size_t>(std::countr_zero(higher));
            higher &= higher - 1;
            const std::uint64_t above_j = j + 1 < 64 ? ~((std::uint64_t{2} << j) - 1) : 0;
            total += std::popcount(rows[i] & rows[j] & above_j);
        }
    }
    return total;
}

std::int64_t count_kstars(const std::vector<std::uint64_t>& rows, std::uint32_t k) {
    std::int64_t total = 0;
    for (std::uint64_t row : rows) total += binomial(std::popcount(row), k);
    return total;
}

std::int64_t ising_sum(const Configuration& x) {
    std::int64_t total = 0;
    for (std::size_t s = 0; s + 1 < x.site_count(); ++s) {
        total += (x.get(s) == x.get(s + 1)) ? 1 : -1;
    }
    return total;
}

bool rule_matches(const DyadicRule& rule, std::uint32_t state, std::int64_t ci, std::int64_t cj,
                  bool directed) {
    if (rule.state != state) return false;
    if (rule.relation == CovariateRelation::same && ci != cj) return false;
    if (rule.relation == CovariateRelation::different && ci == cj) return false;
    if (rule.pair) {
        const auto [a, b] = *rule.pair;
        const bool forward = a == ci && b == cj;
        const bool backward = a == cj && b == ci;
        if (!(forward || (!directed && backward))) return false;
    }
    return true;
}

void require_covariates(const CovariateTable* cov, std::size_t nodes) {
    if (cov == nullptr) {
        fail(ErrorCode::MissingCovariates, "statistic needs node covariates but none were given");
    }
    if (cov->values.size() < nodes) {
        fail(ErrorCode::MissingCovariates, "covariate table covers " +
                                               std::to_string(cov->values.size()) +
                                               " nodes, configuration has " +
                                               std::to_string(nodes));
    }
}

std::int64_t dyad_value(const DyadicTerm& term, std::uint32_t i, std::uint32_t j,
                        std::uint32_t state, const CovariateTable* cov, bool directed) {
    const std::int64_t ci = cov ? cov->values[i] : 0;
    const std::int64_t cj = cov ? cov->values[j] : 0;
    std::int64_t total = 0;
    for (const auto& rule : term.rules) {
        if (rule_matches(rule, state, ci, cj, directed)) total += rule.value;
    }
    return total;
}

std::uint32_t dyad_state(const SiteSpaceFamily& family, const Configuration& x, std::uint32_t i,
                         std::uint32_t j) {
    if (family.kind() == FamilyKind::undirected_graph) return x.get(undirected_dyad_site(i, j));
    return x.get(directed_arc_site(i, j)) | (x.get(directed_arc_site(j, i)) << 1);
}

std::int64_t dyadic_sum(const DyadicTerm& term, const SiteSpaceFamily& family,
                        const Configuration& x, const CovariateTable* cov) {
    const auto n = static_cast<std::uint32_t>(node_count(family, x));
    if (term.uses_covariates()) require_covariates(cov, n);
    const bool directed = family.kind() == FamilyKind::directed_graph;
    std::int64_t total = 0;
    for (std::uint32_t j = 1; j < n; ++j) {
        for (std::uint32_t i = 0; i < j; ++i) {
            total += dyad_value(term, i, j, dyad_state(family, x, i, j), cov, directed);
        }
    }
    return total;
}

std::int64_t lookup_value(const LookupTable& table, const SiteSpaceFamily& family,
                          const Configuration& x) {
    auto it = table.by_size.find(x.index_size());
    if (it == table.by_size.end()) {
        fail(ErrorCode::IncompleteTable, "lookup table has no entries for index sets of size " +
                                             std::to_string(x.index_size()));
    }
    const std::uint64_t rank = configuration_rank(family, x);
    if (rank >= it->second.size() || !it->second[rank]) {
        fail(ErrorCode::IncompleteTable, "lookup table is missing configuration (" +
                                             format_configuration(family, x) + ")");
    }
    return *it->second[rank];
}

std::int64_t eval_component(const StatisticComponent& component, const SiteSpaceFamily& family,
                            const Configuration& x, const std::vector<std::uint64_t>& rows,
                            const CovariateTable* cov) {
    return std::visit(
        overloaded{
            [&](const EdgeCount&) -> std::int64_t {
                std::int64_t total = 0;
                for (std::uint64_t w : x.words()) total += std::popcount(w);
                return total;
            },
            [&](const TriangleCount&) -> std::int64_t { return count_triangles(rows); },
            [&](const KStarCount& s) -> std::int64_t { return count_kstars(rows, s.k); },
            [&](const IsingNearestNeighbor&) -> std::int64_t { return ising_sum(x); },
            [&](const DyadicTerm& term) -> std::int64_t { return dyadic_sum(term, family, x, cov); },
            [&](const LookupTable& table) -> std::int64_t { return lookup_value(table, family, x); },
        },
        component.term);
}

bool needs_rows(const StatisticSpec& stat) {
    for (const auto& c : stat.components) {
        if (std::holds_alternative<TriangleCount>(c.term) ||
            std::holds_alternative<KStarCount>(c.term)) {
            return true;
        }
    }
    return false;
}

} // namespace

StatVector& StatVector::operator+=(const StatVector& other) {
    if (other.size() != size()) fail(ErrorCode::InvalidArgument, "statistic dimension mismatch");
    for (std::size_t i = 0; i < size(); ++i) values_[i] += other.values_[i];
    return *this;
}

StatVector& StatVector::operator-=(const StatVector& other) {
    if (other.size() != size()) fail(ErrorCode::InvalidArgument, "statistic dimension mismatch");
    for (std::size_t i = 0; i < size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

std::string format_stat(const StatVector& t) {
    std::ostringstream out;
    out << '(';
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) out << ',';
        out << t[i];
    }
    out << ')';
    return out.str();
}

bool DyadicTerm::uses_covariates() const {
    for (const auto& rule : rules) {
        if (rule.relation != CovariateRelation::any || rule.pair) return true;
    }
    return false;
}

std::string term_type_name(const StatisticTerm& term) {
    return std::visit(overloaded{
                          [](const EdgeCount&) { return std::string("edges"); },
                          [](const TriangleCount&) { return std::string("triangles"); },
                          [](const KStarCount&) { return std::string("kstar"); },
                          [](const IsingNearestNeighbor&) { return std::string("ising"); },
                          [](const DyadicTerm&) { return std::string("dyadic"); },
                          [](const LookupTable&) { return std::string("lookup"); },
                      },
                      term);
}

std::vector<double> StatisticSpec::scales() const {
    std::vector<double> out;
    out.reserve(components.size());
    for (const auto& c : components) out.push_back(c.scale.value());
    return out;
}

bool StatisticSpec::uses_covariates() const {
    for (const auto& c : components) {
        if (const auto* term = std::get_if<DyadicTerm>(&c.term); term && term->uses_covariates()) {
            return true;
        }
    }
    return false;
}

void validate_statistic(const StatisticSpec& stat, const SiteSpaceFamily& family) {
    if (stat.components.empty()) {
        fail(ErrorCode::IncompatibleStatistic, "statistic has no components");
    }
    for (const auto& c : stat.components) {
        if (c.scale.num <= 0 || c.scale.den <= 0) {
            fail(ErrorCode::IncompatibleStatistic, "component '" + c.name + "' needs a positive scale");
        }
        const bool graph = family.is_graph();
        const bool ok = std::visit(
            overloaded{
                [&](const EdgeCount&) { return graph; },
                [&](const TriangleCount&) { return graph; },
                [&](const KStarCount& s) { return graph && s.k >= 2; },
                [&](const IsingNearestNeighbor&) {
                    return family.kind() == FamilyKind::spin_sequence;
                },
                [&](const DyadicTerm& term) {
                    if (!graph) return false;
                    const std::uint32_t states =
                        family.kind() == FamilyKind::directed_graph ? 4u : 2u;
                    for (const auto& rule : term.rules) {
                        if (rule.state >= states) return false;
                    }
                    return true;
                },
                [&](const LookupTable&) { return true; },
            },
            c.term);
        if (!ok) {
            fail(ErrorCode::IncompatibleStatistic, "component '" + c.name + "' (" +
                                                       term_type_name(c.term) +
                                                       ") is not defined on " +
                                                       to_string(family.kind()) + " families");
        }
    }
}

StatVector eval_statistic(const StatisticSpec& stat, const SiteSpaceFamily& family,
                          const Configuration& x, const CovariateTable* cov) {
    if (x.is_fragment()) {
        fail(ErrorCode::InvalidArgument, "cannot evaluate a statistic on a new-site fragment");
    }
    std::vector<std::uint64_t> rows;
    if (family.is_graph() && needs_rows(stat)) rows = adjacency_rows(family, x);
    StatVector out(stat.dimension());
    for (std::size_t i = 0; i < stat.dimension(); ++i) {
        out[i] = eval_component(stat.components[i], family, x, rows, cov);
    }
    return out;
}

StatVector statistic_increment(const StatisticSpec& stat, const SiteSpaceFamily& family,
                               IndexSet sub, IndexSet super, const Configuration& x_A,
                               const Configuration& y, const CovariateTable* cov) {
    if (!sub.is_subset_of(super)) fail(ErrorCode::NotNested, "sub index set is not nested in super");
    if (x_A.index_size() != sub.size()) {
        fail(ErrorCode::InvalidArgument, "base configuration does not live on the sub index set");
    }
    const Configuration x_B = extend_configuration(family, x_A, super, y);
    return eval_statistic(stat, family, x_B, cov) - eval_statistic(stat, family, x_A, cov);
}

std::vector<double> scaled_statistic(const StatisticSpec& stat, const StatVector& t) {
    std::vector<double> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        out[i] = static_cast<double>(t[i]) * stat.components[i].scale.value();
    }
    return out;
}

double scaled_inner(const std::vector<double>& theta, const std::vector<double>& scales,
                    const StatVector& t) {
    double total = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        total += theta[i] * scales[i] * static_cast<double>(t[i]);
    }
    return total;
}

bool is_dyadic_independent(const StatisticSpec& stat, const SiteSpaceFamily& family) {
    if (!family.is_graph()) return false;
    for (const auto& c : stat.components) {
        if (!std::holds_alternative<EdgeCount>(c.term) && !std::holds_alternative<DyadicTerm>(c.term)) {
            return false;
        }
    }
    return true;
}

StatVector dyad_contribution(const StatisticSpec& stat, const SiteSpaceFamily& family,
                             std::uint32_t i, std::uint32_t j, std::uint32_t state,
                             const CovariateTable* cov) {
    const bool directed = family.kind() == FamilyKind::directed_graph;
    StatVector out(stat.dimension());
    for (std::size_t c = 0; c < stat.dimension(); ++c) {
        const auto& term = stat.components[c].term;
        if (std::holds_alternative<EdgeCount>(term)) {
            out[c] = std::popcount(state);
        } else if (const auto* dyadic = std::get_if<DyadicTerm>(&term)) {
            if (dyadic->uses_covariates()) require_covariates(cov, std::max(i, j) + std::size_t{1});
            out[c] = dyad_value(*dyadic, i, j, state, cov, directed);
        } else {
            fail(ErrorCode::IncompatibleStatistic, "component is not dyadic");
        }
    }
    return out;
}

StatisticState::StatisticState(const StatisticSpec& stat, const SiteSpaceFamily& family,
                               IndexSet set, const CovariateTable* cov, Configuration x)
    : stat_(&stat), family_(&family), set_(set), cov_(cov), x_(std::move(x)) {
    if (x_.index_size() != set.size()) {
        fail(ErrorCode::InvalidArgument, "configuration does not live on the given index set");
    }
    value_ = eval_statistic(stat, family, x_, cov);
    if (family.is_graph()) {
        adjacency_ = adjacency_rows(family, x_);
        dyads_.reserve(x_.site_count());
        for (std::size_t s = 0; s < x_.site_count(); ++s) dyads_.push_back(family.site_dyad(s));
    }
}

std::int64_t StatisticState::component_change(std::size_t component, std::size_t site,
                                              std::uint32_t symbol) const {
    const StatisticComponent& c = stat_->components[component];
    const std::uint32_t current = x_.get(site);
    const bool directed = family_->kind() == FamilyKind::directed_graph;

    // Underlying undirected edge toggles only when no reverse arc is present.
    auto underlying_toggle = [&](Dyad d) -> int {
        if (!directed) return symbol > current ? 1 : -1;
        const std::uint32_t reverse = x_.get(directed_arc_site(d.head, d.tail));
        if (reverse) return 0;
        return symbol > current ? 1 : -1;
    };

    if (std::holds_alternative<EdgeCount>(c.term)) {
        return static_cast<std::int64_t>(symbol) - static_cast<std::int64_t>(current);
    }
    if (std::holds_alternative<TriangleCount>(c.term)) {
        const Dyad d = dyads_[site];
        const int toggle = underlying_toggle(d);
        if (toggle == 0) return 0;
        return toggle * std::popcount(adjacency_[d.tail] & adjacency_[d.head]);
    }
    if (const auto* star = std::get_if<KStarCount>(&c.term)) {
        const Dyad d = dyads_[site];
        const int toggle = underlying_toggle(d);
        if (toggle == 0) return 0;
        const std::int64_t di = std::popcount(adjacency_[d.tail]);
        const std::int64_t dj = std::popcount(adjacency_[d.head]);
        if (toggle > 0) return binomial(di, star->k - 1) + binomial(dj, star->k - 1);
        return -(binomial(di - 1, star->k - 1) + binomial(dj - 1, star->k - 1));
    }
    if (std::holds_alternative<IsingNearestNeighbor>(c.term)) {
        auto spin = [](std::uint32_t v) -> std::int64_t { return v ? 1 : -1; };
        std::int64_t neighbours = 0;
        if (site > 0) neighbours += spin(x_.get(site - 1));
        if (site + 1 < x_.site_count()) neighbours += spin(x_.get(site + 1));
        return (spin(symbol) - spin(current)) * neighbours;
    }
    if (const auto* dyadic = std::get_if<DyadicTerm>(&c.term)) {
        const Dyad d = dyads_[site];
        const std::uint32_t i = std::min(d.tail, d.head);
        const std::uint32_t j = std::max(d.tail, d.head);
        if (dyadic->uses_covariates()) require_covariates(cov_, set_.size());
        const std::uint32_t before = dyad_state(*family_, x_, i, j);
        std::uint32_t after = symbol;
        if (directed) {
            const std::uint32_t bit = d.tail == i ? 1u : 2u;
            after = symbol ? (before | bit) : (before & ~bit);
        }
        return dyad_value(*dyadic, i, j, after, cov_, directed) -
               dyad_value(*dyadic, i, j, before, cov_, directed);
    }
    const auto& table = std::get<LookupTable>(c.term);
    Configuration moved = x_;
    moved.set(site, symbol);
    return lookup_value(table, *family_, moved) - lookup_value(table, *family_, x_);
}

StatVector StatisticState::change(std::size_t site, std::uint32_t symbol) const {
    StatVector out(stat_->dimension());
    if (symbol == x_.get(site)) return out;
    for (std::size_t c = 0; c < stat_->dimension(); ++c) out[c] = component_change(c, site, symbol);
    return out;
}

void StatisticState::set(std::size_t site, std::uint32_t symbol) {
    const std::uint32_t current = x_.get(site);
    if (symbol == current) return;
    value_ += change(site, symbol);
    x_.set(site, symbol);
    if (family_->is_graph()) {
        const Dyad d = dyads_[site];
        bool present = symbol != 0;
        if (family_->kind() == FamilyKind::directed_graph) {
            present = present || x_.get(directed_arc_site(d.head, d.tail)) != 0;
        }
        const std::uint64_t tail_bit = std::uint64_t{1} << d.tail;
        const std::uint64_t head_bit = std::uint64_t{1} << d.head;
        if (present) {
            adjacency_[d.tail] |= head_bit;
            adjacency_[d.head] |= tail_bit;
        } else {
            adjacency_[d.tail] &= ~head_bit;
            adjacency_[d.head] &= ~tail_bit;
        }
    }
}

std::vector<std::optional<std::pair<std::int64_t, std::int64_t>>> statistic_bounds(
    const StatisticSpec& stat, const SiteSpaceFamily& family, IndexSet set, const CovariateTable* cov) {
    validate_statistic(stat, family);
    const auto n = static_cast<std::int64_t>(set.size());
    const auto sites = static_cast<std::int64_t>(family.site_count(set));
    const bool directed = family.kind() == FamilyKind::directed_graph;
    std::vector<std::optional<std::pair<std::int64_t, std::int64_t>>> out;
    for (const auto& c : stat.components) {
        out.push_back(std::visit(
            overloaded{
                [&](const EdgeCount&) -> std::optional<std::pair<std::int64_t, std::int64_t>> {
                    return std::make_pair(std::int64_t{0}, sites);
                },
                [&](const TriangleCount&) -> std::optional<std::pair<std::int64_t, std::int64_t>> {
                    return std::make_pair(std::int64_t{0}, binomial(n, 3));
                },
                [&](const KStarCount& s) -> std::optional<std::pair<std::int64_t, std::int64_t>> {
                    return std::make_pair(std::int64_t{0}, n * binomial(std::max<std::int64_t>(n - 1, 0), s.k));
                },
                [&](const IsingNearestNeighbor&) -> std::optional<std::pair<std::int64_t, std::int64_t>> {
                    const std::int64_t pairs = std::max<std::int64_t>(n - 1, 0);
                    return std::make_pair(-pairs, pairs);
                },
                [&](const DyadicTerm& term) -> std::optional<std::pair<std::int64_t, std::int64_t>> {
                    if (term.uses_covariates()) require_covariates(cov, set.size());
                    const std::uint32_t states = directed ? 4u : 2u;
                    std::int64_t lo = 0, hi = 0;
                    for (std::uint32_t j = 1; j < static_cast<std::uint32_t>(n); ++j) {
                        for (std::uint32_t i = 0; i < j; ++i) {
                            std::int64_t a = dyad_value(term, i, j, 0, cov, directed), b = a;
                            for (std::uint32_t s = 1; s < states; ++s) {
                                const std::int64_t v = dyad_value(term, i, j, s, cov, directed);
                                a = std::min(a, v);
                                b = std::max(b, v);
                            }
                            lo += a;
                            hi += b;
                        }
                    }
                    return std::make_pair(lo, hi);
                },
                [&](const LookupTable&) -> std::optional<std::pair<std::int64_t, std::int64_t>> {
                    return std::nullopt;
                },
            },
            c.term));
    }
    return out;
}

} // namespace projcheck
