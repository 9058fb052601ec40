#include "projcheck/statespace.hpp"
#include "projcheck/error.hpp"

#include <doctest.h>

#include <map>
#include <random>
#include <set>

using namespace projcheck;

namespace {

SiteSpaceFamily paper_product() {
    return SiteSpaceFamily::explicit_product({{"a", "b", "c", "d"}, {"i", "ii", "iii", "iv", "v"}});
}

std::vector<SiteSpaceFamily> all_kinds() {
    return {SiteSpaceFamily::binary_sequence(), SiteSpaceFamily::spin_sequence(),
            SiteSpaceFamily::undirected_graph(), SiteSpaceFamily::directed_graph(),
            SiteSpaceFamily::explicit_product({{"p", "q", "r"}, {"s", "t"}, {"u", "v", "w", "z", "zz"}})};
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

} // namespace

TEST_CASE("site counts") {
    CHECK(SiteSpaceFamily::undirected_graph().site_count(IndexSet(3)) == 3);
    CHECK(SiteSpaceFamily::directed_graph().site_count(IndexSet(3)) == 6);
    CHECK(SiteSpaceFamily::spin_sequence().site_count(IndexSet(5)) == 5);
    CHECK(paper_product().site_count(IndexSet(2)) == 2);
    CHECK(code_of([] { paper_product().site_count(IndexSet(3)); }) == ErrorCode::IndexOutOfRange);
    CHECK(code_of([] { IndexSet(0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("enumeration sizes") {
    auto count = [](const SiteSpaceFamily& f, std::size_t n) {
        std::size_t k = 0;
        for ([[maybe_unused]] const auto& x : ConfigurationStream(f, IndexSet(n), kDefaultGuard)) ++k;
        return k;
    };
    CHECK(count(SiteSpaceFamily::binary_sequence(), 2) == 4);
    CHECK(count(SiteSpaceFamily::undirected_graph(), 3) == 8);
    CHECK(count(paper_product(), 2) == 20);
    CHECK(count(SiteSpaceFamily::directed_graph(), 3) == 64);
}

TEST_CASE("guard") {
    const auto code = code_of([] { ConfigurationStream(SiteSpaceFamily::undirected_graph(), IndexSet(8), 1u << 20); });
    CHECK(code == ErrorCode::SpaceTooLarge);
    try {
        checked_configuration_count(SiteSpaceFamily::undirected_graph(), IndexSet(7), 1000);
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2097152") != std::string::npos);
        CHECK(msg.find("1000") != std::string::npos);
    }
    CHECK_FALSE(SiteSpaceFamily::undirected_graph().configuration_count(IndexSet(20)).has_value());
}

TEST_CASE("enumeration is canonical and rank-consistent") {
    for (const auto& f : all_kinds()) {
        const std::size_t n = f.kind() == FamilyKind::explicit_product ? 3 : 4;
        ConfigurationStream stream(f, IndexSet(n), kDefaultGuard);
        std::set<Configuration> seen;
        std::uint64_t expected_rank = 0;
        for (auto it = stream.begin(); it != stream.end(); ++it) {
            CHECK(it.rank() == expected_rank);
            CHECK(configuration_rank(f, *it) == expected_rank);
            CHECK(stream.at(expected_rank) == *it);
            seen.insert(*it);
            ++expected_rank;
        }
        CHECK(seen.size() == stream.size());
        CHECK(stream.size() == *f.configuration_count(IndexSet(n)));
    }
}

TEST_CASE("first site varies fastest") {
    const auto f = paper_product();
    ConfigurationStream stream(f, IndexSet(2), kDefaultGuard);
    std::vector<std::string> order;
    for (const auto& x : stream) order.push_back(format_configuration(f, x));
    CHECK(order[0] == "a,i");
    CHECK(order[1] == "b,i");
    CHECK(order[4] == "a,ii");
    CHECK(order[19] == "d,v");
}

TEST_CASE("chunks tile the canonical order") {
    const auto f = SiteSpaceFamily::undirected_graph();
    ConfigurationStream whole(f, IndexSet(5), kDefaultGuard);
    for (unsigned parts : {1u, 3u, 7u, 16u}) {
        std::vector<Configuration> joined;
        for (unsigned k = 0; k < parts; ++k) {
            for (const auto& x : whole.chunk(k, parts)) joined.push_back(x);
        }
        REQUIRE(joined.size() == whole.size());
        std::uint64_t r = 0;
        for (const auto& x : whole) CHECK(joined[r++] == x);
    }
}

TEST_CASE("projection examples") {
    const auto g = SiteSpaceFamily::undirected_graph();
    auto x = Configuration::zeros(g, IndexSet(4));
    x.set(undirected_dyad_site(0, 1), 1);
    x.set(undirected_dyad_site(0, 2), 1);
    x.set(undirected_dyad_site(2, 3), 1);
    const auto p = project_configuration(g, x, IndexSet(3));
    CHECK(p.site_count() == 3);
    CHECK(p.get(undirected_dyad_site(0, 1)) == 1);
    CHECK(p.get(undirected_dyad_site(0, 2)) == 1);
    CHECK(p.get(undirected_dyad_site(1, 2)) == 0);

    const auto s = SiteSpaceFamily::spin_sequence();
    auto spins = Configuration::zeros(s, IndexSet(3));
    spins.set(0, *s.symbol_index(0, "+1"));
    spins.set(1, *s.symbol_index(1, "-1"));
    spins.set(2, *s.symbol_index(2, "+1"));
    CHECK(format_configuration(s, project_configuration(s, spins, IndexSet(2))) == "+1,-1");
    CHECK(project_configuration(s, spins, IndexSet(3)) == spins);
    CHECK(code_of([&] { project_configuration(s, spins, IndexSet(4)); }) == ErrorCode::NotNested);
}

TEST_CASE("projection partitions X_B into equal fibres") {
    for (const auto& f : all_kinds()) {
        const bool product = f.kind() == FamilyKind::explicit_product;
        const std::size_t super = product ? 3 : (f.is_graph() ? 5 : 9);
        for (std::size_t sub = 1; sub <= super; ++sub) {
            std::map<Configuration, std::uint64_t> fibres;
            for (const auto& x : ConfigurationStream(f, IndexSet(super), kDefaultGuard)) {
                ++fibres[project_configuration(f, x, IndexSet(sub))];
            }
            CHECK(fibres.size() == *f.configuration_count(IndexSet(sub)));
            for (const auto& [x, k] : fibres) CHECK(k == *f.extension_count(IndexSet(sub), IndexSet(super)));
            CHECK(*f.configuration_count(IndexSet(super)) ==
                  *f.configuration_count(IndexSet(sub)) * *f.extension_count(IndexSet(sub), IndexSet(super)));
        }
    }
}

TEST_CASE("extension round trip") {
    std::mt19937_64 rng(17);
    for (const auto& f : all_kinds()) {
        const bool product = f.kind() == FamilyKind::explicit_product;
        const std::size_t sub = product ? 1 : 3;
        const std::size_t super = product ? 3 : 5;
        ConfigurationStream xs(f, IndexSet(sub), kDefaultGuard);
        ConfigurationStream ys(f, IndexSet(sub), IndexSet(super), kDefaultGuard);
        for (int trial = 0; trial < 50; ++trial) {
            const auto x = xs.at(rng() % xs.size());
            const auto y = ys.at(rng() % ys.size());
            const auto joined = extend_configuration(f, x, IndexSet(super), y);
            CHECK(project_configuration(f, joined, IndexSet(sub)) == x);
            CHECK(extension_part(f, joined, IndexSet(sub)) == y);
            // Rank of the joined configuration: x is the low digit block.
            CHECK(configuration_rank(f, joined) % xs.size() == configuration_rank(f, x));
        }
    }
}

TEST_CASE("graph site order nests by prefix") {
    for (std::uint32_t j = 1; j < 10; ++j) {
        for (std::uint32_t i = 0; i < j; ++i) {
            CHECK(undirected_dyad_site(i, j) < j * (j + 1) / 2);
            CHECK(undirected_dyad_site(i, j) >= j * (j - 1) / 2);
            CHECK(directed_arc_site(i, j) >= j * (j - 1));
            CHECK(directed_arc_site(j, i) < j * (j + 1));
        }
    }
    const auto d = SiteSpaceFamily::directed_graph();
    CHECK(d.site_dyad(directed_arc_site(2, 4)) == Dyad{2, 4});
    CHECK(d.site_dyad(directed_arc_site(4, 2)) == Dyad{4, 2});
}

TEST_CASE("enumeration is stable across runs") {
    const auto f = SiteSpaceFamily::directed_graph();
    std::vector<std::uint64_t> first, second;
    for (const auto& x : ConfigurationStream(f, IndexSet(3), kDefaultGuard)) first.push_back(x.words()[0]);
    for (const auto& x : ConfigurationStream(f, IndexSet(3), kDefaultGuard)) second.push_back(x.words()[0]);
    CHECK(first == second);
}

TEST_CASE("symbols") {
    const auto s = SiteSpaceFamily::spin_sequence();
    CHECK(s.symbol_name(0, 0) == "-1");
    CHECK(s.symbol_name(0, 1) == "+1");
    CHECK(s.symbol_index(0, "1") == 1u);
    CHECK_FALSE(s.symbol_index(0, "0").has_value());
    CHECK(paper_product().symbol_index(1, "iv") == 3u);
    CHECK(code_of([] { SiteSpaceFamily::explicit_product({{"a", "a"}}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { SiteSpaceFamily::explicit_product({{}}); }) == ErrorCode::InvalidArgument);
}
