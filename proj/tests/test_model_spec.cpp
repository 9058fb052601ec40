#include "projcheck/model_spec.hpp"
#include "projcheck/report.hpp"
#include "support/generators.hpp"

#include <doctest.h>

#include <json.hpp>

using namespace projcheck;
using nlohmann::json;

namespace {

std::vector<SchemaIssue> issues_of(const std::string& text, ErrorCode expected = ErrorCode::SchemaError) {
    try {
        parse_model_spec(text);
    } catch (const SchemaValidationError& e) {
        CHECK(e.code() == expected);
        return e.issues();
    }
    FAIL("expected a schema error");
    return {};
}

bool has_path(const std::vector<SchemaIssue>& issues, const std::string& path) {
    for (const auto& i : issues) {
        if (i.path == path) return true;
    }
    return false;
}

json edge_doc() {
    return json::parse(R"({"schema_version": 1, "family": {"kind": "undirected-graph"},
                           "statistic": [{"type": "edges"}], "theta": [0.5]})");
}

} // namespace

TEST_CASE("bundled fixtures parse") {
    for (const auto& name : gen::fixture_names()) {
        CAPTURE(name);
        const auto doc = gen::load_fixture(name);
        CHECK(doc.schema_version == 1);
        CHECK_NOTHROW(doc.model.validate());
        REQUIRE(doc.experiment.has_value());
        CHECK(doc.experiment->sub.has_value());
        CHECK(doc.experiment->super.has_value());
    }
}

TEST_CASE("counterexample fixture contents") {
    const auto doc = gen::load_fixture("counterexample-s3.1.json");
    const auto& family = doc.model.family;
    CHECK(family.kind() == FamilyKind::explicit_product);
    REQUIRE(family.alphabets().size() == 2);
    CHECK(family.alphabets()[0].size() == 4);
    CHECK(family.alphabets()[1].size() == 5);
    const auto& table = std::get<LookupTable>(doc.model.stat.components[0].term);
    REQUIRE(table.by_size.at(2).size() == 20);
    for (const auto& v : table.by_size.at(2)) CHECK(v.has_value());
    CHECK(table.by_size.at(1) == std::vector<std::optional<std::int64_t>>{1, 1, -1, -1});
    // First site varies fastest: rank 1 is (b, i), rank 4 is (a, ii).
    CHECK(*table.by_size.at(2)[1] == 0);
    CHECK(*table.by_size.at(2)[4] == 2);
}

TEST_CASE("ising fixture uses half-unit scale") {
    const auto doc = gen::load_fixture("ising-chain.json");
    CHECK(doc.model.stat.components[0].scale == Rational{1, 2});
    CHECK(doc.model.stat.scales() == std::vector<double>{0.5});
}

TEST_CASE("serialization round trip") {
    for (const auto& name : gen::fixture_names()) {
        CAPTURE(name);
        const auto doc = gen::load_fixture(name);
        const auto text = serialize_model_spec(doc);
        const auto again = parse_model_spec(text);
        CHECK(again.model.stat == doc.model.stat);
        CHECK(again.model.theta == doc.model.theta);
        CHECK(again.model.covariates == doc.model.covariates);
        CHECK(again.experiment == doc.experiment);
        CHECK(again.description == doc.description);
        CHECK(serialize_model_spec(again) == text);
    }
}

TEST_CASE("unknown statistic type") {
    auto doc = edge_doc();
    doc["statistic"][0]["type"] = "quadrangle";
    const auto issues = issues_of(doc.dump(), ErrorCode::UnknownStatistic);
    CHECK(has_path(issues, "/statistic/0/type"));
}

TEST_CASE("every issue is reported") {
    auto doc = edge_doc();
    doc["theta"] = json::array({0.5, 1.0});
    doc["colour"] = "blue";
    doc["statistic"].push_back({{"type", "kstar"}, {"k", 1}});
    doc["family"]["kind"] = "hypergraph";
    const auto issues = issues_of(doc.dump());
    CHECK(issues.size() >= 3);
    CHECK(has_path(issues, "/colour"));
    CHECK(has_path(issues, "/family/kind"));
    CHECK(has_path(issues, "/statistic/1/k"));
}

TEST_CASE("schema errors") {
    CHECK_FALSE(issues_of("{not json").empty());
    CHECK(has_path(issues_of(R"({"family": {"kind": "undirected-graph"}, "statistic": [{"type": "edges"}]})"),
                   "/schema_version"));
    auto doc = edge_doc();
    doc["schema_version"] = 2;
    CHECK(has_path(issues_of(doc.dump()), "/schema_version"));

    doc = edge_doc();
    doc["statistic"][0]["scale"] = 0;
    CHECK(has_path(issues_of(doc.dump()), "/statistic/0/scale"));

    doc = edge_doc();
    doc["statistic"][0]["extra"] = true;
    CHECK(has_path(issues_of(doc.dump()), "/statistic/0/extra"));

    doc = edge_doc();
    doc["statistic"] = json::array({{{"type", "ising"}}});
    CHECK_FALSE(issues_of(doc.dump()).empty());

    doc = edge_doc();
    doc["family"] = {{"kind", "explicit-product"}, {"alphabets", {{"a", "a"}}}};
    doc["statistic"] = json::array({{{"type", "lookup"}, {"tables", json::object()}}});
    CHECK_FALSE(issues_of(doc.dump()).empty());
}

TEST_CASE("scale forms") {
    auto doc = edge_doc();
    doc["statistic"][0]["scale"] = json::array({3, 4});
    CHECK(parse_model_spec(doc.dump()).model.stat.components[0].scale == Rational{3, 4});
    doc["statistic"][0]["scale"] = 2;
    CHECK(parse_model_spec(doc.dump()).model.stat.components[0].scale == Rational{2, 1});
}

TEST_CASE("dyadic rules need covariates when they refer to them") {
    auto doc = edge_doc();
    doc["statistic"] = json::array({{{"type", "dyadic"}, {"rules", {{{"state", 1}, {"relation", "same"}, {"value", 1}}}}}});
    CHECK_FALSE(issues_of(doc.dump()).empty());
    doc["covariates"] = json::array({0, 1, 0});
    CHECK_NOTHROW(parse_model_spec(doc.dump()));
}

TEST_CASE("projectivity report JSON") {
    const auto doc = gen::load_fixture("counterexample-s3.1.json");
    const auto report = projectivity_report(doc.model.stat, doc.model.family, IndexSet(1), IndexSet(2), {{1.0}});
    const auto j = to_json(doc.model.family, report);
    CHECK(j["all_pass"] == false);
    CHECK(j["implications_consistent"] == true);
    REQUIRE(j["checks"].size() == 5);
    CHECK(j["checks"][0]["criterion"] == "separable-increments");
    CHECK(j["checks"][0]["verdict"] == "fail");
    CHECK(j["checks"][0]["witness"]["kind"] == "conditional-volume-mismatch");
    CHECK(j["checks"][1]["verdict"] == "pass");
    CHECK(j["checks"][1]["witness"].is_null());
    CHECK(j["checks"][2]["witness"]["kind"] == "probability-mismatch");
    CHECK(j["table_checksum"].get<std::string>().size() == 64);

    StatisticSpec tri;
    tri.components.push_back({"triangles", TriangleCount{}, {}});
    const auto g = SiteSpaceFamily::undirected_graph();
    const auto t = to_json(g, projectivity_report(tri, g, IndexSet(3), IndexSet(4), {{0.5}}));
    const auto& w = t["checks"][1]["witness"];
    CHECK(w["kind"] == "joint-table-not-rank-one");
    CHECK(w["joint_times_total"].is_string());
    CHECK(w["joint_times_total"] != w["row_times_column"]);
}

TEST_CASE("run report and error JSON") {
    RunReport run{"check", sha256_hex("abc"), 0.25, json{{"answer", 1}}};
    const auto j = run.to_json();
    CHECK(j["command"] == "check");
    CHECK(j["tool_version"] == kToolVersion);
    CHECK(j["inputs_digest"] == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(j["payload"]["answer"] == 1);

    try {
        auto doc = edge_doc();
        doc["oops"] = 1;
        parse_model_spec(doc.dump());
    } catch (const SchemaValidationError& e) {
        const auto err = error_json(e);
        CHECK(err["code"] == "SchemaError");
        CHECK(err["issues"][0]["path"] == "/oops");
    }

    try {
        StatisticSpec edges;
        edges.components.push_back({"edges", EdgeCount{}, {}});
        fit_mle_exact(edges, SiteSpaceFamily::undirected_graph(), IndexSet(3), {3.0});
    } catch (const BoundaryObservationError& e) {
        const auto err = error_json(e);
        CHECK(err["code"] == "BoundaryObservation");
        CHECK(err["face"]["offset"] == 3.0);
    }

    RateFunctionEval eval;
    eval.unbounded = true;
    eval.J = std::numeric_limits<double>::infinity();
    CHECK(to_json(eval)["J"].is_null());
}
