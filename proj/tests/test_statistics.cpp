#include "projcheck/statistics.hpp"
#include "projcheck/error.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"

#include <doctest.h>

#include <random>

using namespace projcheck;

namespace {

StatisticSpec spec_of(std::initializer_list<StatisticTerm> terms) {
    StatisticSpec s;
    for (const auto& t : terms) s.components.push_back({term_type_name(t), t, {}});
    return s;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

Configuration graph(std::size_t n, std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> edges) {
    auto x = Configuration::zeros(SiteSpaceFamily::undirected_graph(), IndexSet(n));
    for (auto [i, j] : edges) x.set(undirected_dyad_site(std::min(i, j), std::max(i, j)), 1);
    return x;
}

Configuration spins(std::initializer_list<int> values) {
    const auto f = SiteSpaceFamily::spin_sequence();
    auto x = Configuration::zeros(f, IndexSet(values.size()));
    std::size_t s = 0;
    for (int v : values) x.set(s++, v > 0 ? 1 : 0);
    return x;
}

struct Case {
    std::string label;
    oracle::Model model;
    std::size_t sub, super;
};

std::vector<Case> model_cases() {
    const auto ug = SiteSpaceFamily::undirected_graph();
    const auto dg = SiteSpaceFamily::directed_graph();
    std::vector<Case> cases;
    cases.push_back({"edges+triangles", {ug, spec_of({EdgeCount{}, TriangleCount{}}), {}}, 3, 5});
    cases.push_back({"2-star, 3-star", {ug, spec_of({KStarCount{2}, KStarCount{3}}), {}}, 3, 5});
    cases.push_back({"directed motifs", {dg, spec_of({EdgeCount{}, TriangleCount{}, KStarCount{2}}), {}}, 2, 4});
    DyadicTerm mutual{{{3, CovariateRelation::any, std::nullopt, 1}}};
    DyadicTerm crossing{{{1, CovariateRelation::different, std::nullopt, 2},
                         {2, CovariateRelation::any, std::make_pair<std::int64_t, std::int64_t>(0, 1), 1}}};
    cases.push_back({"directed dyadic", {dg, spec_of({mutual, crossing}), CovariateTable{{0, 1, 1, 0}}}, 2, 4});
    DyadicTerm within{{{1, CovariateRelation::same, std::nullopt, 1}}};
    DyadicTerm pair{{{1, CovariateRelation::any, std::make_pair<std::int64_t, std::int64_t>(1, 0), 3}}};
    cases.push_back({"undirected dyadic", {ug, spec_of({within, pair}), CovariateTable{{0, 1, 0, 1, 1}}}, 2, 5});
    cases.push_back({"ising", {SiteSpaceFamily::spin_sequence(), spec_of({IsingNearestNeighbor{}}), {}}, 3, 9});
    auto fixture = gen::load_fixture("counterexample-s3.1.json");
    cases.push_back({"lookup", oracle::Model::from(fixture.model), 1, 2});
    return cases;
}

} // namespace

TEST_CASE("statistic examples") {
    const auto ug = SiteSpaceFamily::undirected_graph();
    CHECK(eval_statistic(spec_of({TriangleCount{}}), ug, graph(3, {{0, 1}, {0, 2}, {1, 2}})) == StatVector{1});
    CHECK(eval_statistic(spec_of({IsingNearestNeighbor{}}), SiteSpaceFamily::spin_sequence(), spins({1, 1, -1})) ==
          StatVector{0});
    CHECK(eval_statistic(spec_of({KStarCount{2}}), ug, graph(3, {{0, 1}, {0, 2}})) == StatVector{1});
    CHECK(eval_statistic(spec_of({KStarCount{2}}), ug, graph(3, {{0, 1}, {0, 2}, {1, 2}})) == StatVector{3});

    const auto fixture = gen::load_fixture("counterexample-s3.1.json");
    const auto& f = fixture.model.family;
    auto x = Configuration::zeros(f, IndexSet(1));
    CHECK(eval_statistic(fixture.model.stat, f, x) == StatVector{1});
    x.set(0, *f.symbol_index(0, "c"));
    CHECK(eval_statistic(fixture.model.stat, f, x) == StatVector{-1});
}

TEST_CASE("increment examples") {
    const auto s = SiteSpaceFamily::spin_sequence();
    const auto ising = spec_of({IsingNearestNeighbor{}});
    auto y = Configuration::zeros(s, IndexSet(2));
    ConfigurationStream ys(s, IndexSet(2), IndexSet(3), kDefaultGuard);
    CHECK(statistic_increment(ising, s, IndexSet(2), IndexSet(3), spins({1, 1}), ys.at(1)) == StatVector{1});

    const auto ug = SiteSpaceFamily::undirected_graph();
    ConfigurationStream new_dyads(ug, IndexSet(3), IndexSet(4), kDefaultGuard);
    CHECK(statistic_increment(spec_of({TriangleCount{}}), ug, IndexSet(3), IndexSet(4), graph(3, {}),
                              new_dyads.at(0)) == StatVector{0});

    const auto fixture = gen::load_fixture("counterexample-s3.1.json");
    const auto& f = fixture.model.family;
    const auto a = Configuration::zeros(f, IndexSet(1));
    const auto i = ConfigurationStream(f, IndexSet(1), IndexSet(2), kDefaultGuard).at(0);
    CHECK(statistic_increment(fixture.model.stat, f, IndexSet(1), IndexSet(2), a, i) == StatVector{1});
}

TEST_CASE("statistics agree with the subgraph census oracle") {
    for (const auto& c : model_cases()) {
        CAPTURE(c.label);
        for (std::size_t n = 1; n <= c.super; ++n) {
            if (c.model.family.kind() == FamilyKind::explicit_product && n > 2) break;
            for (const auto& x : oracle::all(c.model, n)) {
                const auto lib = eval_statistic(c.model.stat, c.model.family, oracle::to_library(c.model, n, x),
                                                c.model.cov ? &*c.model.cov : nullptr);
                CHECK(lib.values() == oracle::statistic(c.model, n, x));
            }
        }
    }
}

TEST_CASE("additivity: t_B = t_A + increment for every (x, y)") {
    for (const auto& c : model_cases()) {
        CAPTURE(c.label);
        const auto* cov = c.model.cov ? &*c.model.cov : nullptr;
        const auto& f = c.model.family;
        for (std::size_t sub = 1; sub < c.super; ++sub) {
            const std::size_t super = std::min(c.super, sub + 2);
            ConfigurationStream ys(f, IndexSet(sub), IndexSet(super), kDefaultGuard);
            for (const auto& x : ConfigurationStream(f, IndexSet(sub), kDefaultGuard)) {
                for (const auto& y : ys) {
                    const auto joined = extend_configuration(f, x, IndexSet(super), y);
                    const auto delta = statistic_increment(c.model.stat, f, IndexSet(sub), IndexSet(super), x, y, cov);
                    CHECK(eval_statistic(c.model.stat, f, joined, cov) == eval_statistic(c.model.stat, f, x, cov) + delta);
                }
            }
        }
    }
}

TEST_CASE("dyadic increments ignore the base configuration") {
    const auto ug = SiteSpaceFamily::undirected_graph();
    DyadicTerm within{{{1, CovariateRelation::same, std::nullopt, 1}, {0, CovariateRelation::different, std::nullopt, -2}}};
    const auto stat = spec_of({EdgeCount{}, within});
    const CovariateTable cov{{1, 0, 1, 1, 0}};
    ConfigurationStream ys(ug, IndexSet(3), IndexSet(5), kDefaultGuard);
    ConfigurationStream xs(ug, IndexSet(3), kDefaultGuard);
    for (const auto& y : ys) {
        const auto reference = statistic_increment(stat, ug, IndexSet(3), IndexSet(5), xs.at(0), y, &cov);
        for (const auto& x : xs) CHECK(statistic_increment(stat, ug, IndexSet(3), IndexSet(5), x, y, &cov) == reference);
    }
}

TEST_CASE("motif ranges") {
    const auto ug = SiteSpaceFamily::undirected_graph();
    const auto stat = spec_of({EdgeCount{}, TriangleCount{}});
    for (std::size_t n = 2; n <= 6; ++n) {
        std::int64_t max_edges = 0, max_triangles = 0, min_edges = 1 << 20;
        for (const auto& x : ConfigurationStream(ug, IndexSet(n), kDefaultGuard)) {
            const auto t = eval_statistic(stat, ug, x);
            max_edges = std::max(max_edges, t[0]);
            min_edges = std::min(min_edges, t[0]);
            max_triangles = std::max(max_triangles, t[1]);
        }
        const auto nn = static_cast<std::int64_t>(n);
        CHECK(min_edges == 0);
        CHECK(max_edges == nn * (nn - 1) / 2);
        CHECK(max_triangles == nn * (nn - 1) * (nn - 2) / 6);
    }
}

TEST_CASE("incremental state tracks full evaluation under random single-site moves") {
    std::mt19937_64 rng(99);
    for (const auto& c : model_cases()) {
        CAPTURE(c.label);
        const auto* cov = c.model.cov ? &*c.model.cov : nullptr;
        const auto& f = c.model.family;
        const std::size_t n = c.super;
        StatisticState state(c.model.stat, f, IndexSet(n), cov, Configuration::zeros(f, IndexSet(n)));
        const std::size_t sites = f.site_count(IndexSet(n));
        for (int step = 0; step < 400; ++step) {
            const std::size_t site = rng() % sites;
            const auto symbol = static_cast<std::uint32_t>(rng() % f.alphabet_size(site));
            auto moved = state.configuration();
            moved.set(site, symbol);
            const auto expected = eval_statistic(c.model.stat, f, moved, cov);
            CHECK(state.change(site, symbol) == expected - state.value());
            state.set(site, symbol);
            CHECK(state.value() == expected);
        }
    }
}

TEST_CASE("statistic errors") {
    const auto ug = SiteSpaceFamily::undirected_graph();
    DyadicTerm homophily{{{1, CovariateRelation::same, std::nullopt, 1}}};
    CHECK(code_of([&] { eval_statistic(spec_of({homophily}), ug, graph(3, {{0, 1}})); }) == ErrorCode::MissingCovariates);
    const CovariateTable short_table{{0, 1}};
    CHECK(code_of([&] { eval_statistic(spec_of({homophily}), ug, graph(3, {{0, 1}}), &short_table); }) ==
          ErrorCode::MissingCovariates);

    const auto f = SiteSpaceFamily::explicit_product({{"a", "b"}, {"c", "d"}});
    LookupTable partial;
    partial.by_size[1] = {1, std::nullopt};
    auto x = Configuration::zeros(f, IndexSet(1));
    CHECK(eval_statistic(spec_of({partial}), f, x) == StatVector{1});
    x.set(0, 1);
    CHECK(code_of([&] { eval_statistic(spec_of({partial}), f, x); }) == ErrorCode::IncompleteTable);
    CHECK(code_of([&] { eval_statistic(spec_of({partial}), f, Configuration::zeros(f, IndexSet(2))); }) ==
          ErrorCode::IncompleteTable);

    CHECK(code_of([&] { validate_statistic(spec_of({TriangleCount{}}), SiteSpaceFamily::binary_sequence()); }) ==
          ErrorCode::IncompatibleStatistic);
    CHECK(code_of([&] { validate_statistic(spec_of({IsingNearestNeighbor{}}), ug); }) ==
          ErrorCode::IncompatibleStatistic);
    CHECK(code_of([&] { validate_statistic(spec_of({KStarCount{1}}), ug); }) == ErrorCode::IncompatibleStatistic);
}

TEST_CASE("scaled inner product") {
    StatisticSpec s = spec_of({EdgeCount{}, TriangleCount{}});
    s.components[1].scale = {1, 4};
    CHECK(scaled_inner({2.0, 8.0}, s.scales(), StatVector{3, 2}) == doctest::Approx(10.0));
    CHECK(is_dyadic_independent(spec_of({EdgeCount{}}), SiteSpaceFamily::undirected_graph()));
    CHECK_FALSE(is_dyadic_independent(s, SiteSpaceFamily::undirected_graph()));
}

TEST_CASE("statistic bounds are the attained extremes") {
    std::vector<std::pair<std::string, ExpFamModel>> models;
    for (const auto& name : gen::fixture_names()) models.emplace_back(name, gen::load_fixture(name).model);
    ExpFamModel directed{SiteSpaceFamily::directed_graph(), spec_of({EdgeCount{}, TriangleCount{}, KStarCount{2}}), {}, {}};
    DyadicTerm mutual;
    mutual.rules = {{3, CovariateRelation::any, std::nullopt, 2}, {1, CovariateRelation::any, std::nullopt, -1}};
    directed.stat.components.push_back({"mutual", mutual, {}});
    models.emplace_back("directed", directed);
    for (const auto& [name, m] : models) {
        CAPTURE(name);
        const std::size_t n = m.family.kind() == FamilyKind::explicit_product ? 2 : (m.family.is_graph() ? 4 : 6);
        const auto bounds = statistic_bounds(m.stat, m.family, IndexSet(n), m.cov());
        const auto om = oracle::Model::from(m);
        const auto volume = oracle::volume(om, n);
        for (std::size_t c = 0; c < m.stat.dimension(); ++c) {
            if (std::holds_alternative<LookupTable>(m.stat.components[c].term)) {
                CHECK_FALSE(bounds[c].has_value());
                continue;
            }
            REQUIRE(bounds[c].has_value());
            std::int64_t lo = volume.begin()->first[c], hi = lo;
            for (const auto& [t, count] : volume) {
                lo = std::min(lo, t[c]);
                hi = std::max(hi, t[c]);
            }
            CHECK(bounds[c]->first == lo);
            CHECK(bounds[c]->second == hi);
        }
    }
}
