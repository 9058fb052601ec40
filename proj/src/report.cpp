#include "projcheck/report.hpp"

#include <cmath>
#include <map>

namespace projcheck {

using nlohmann::json;

namespace {

json stat_json(const StatVector& t) { return t.values(); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(number_or_null(x));
    return out;
}

} // namespace

json to_json(const SiteSpaceFamily& family, const Witness& witness) {
    return std::visit(
        [&](const auto& w) -> json {
            using W = std::decay_t<decltype(w)>;
            json j;
            if constexpr (std::is_same_v<W, SeparableWitness>) {
                j["kind"] = "conditional-volume-mismatch";
                j["x"] = format_configuration(family, w.x);
                j["x_other"] = format_configuration(family, w.x_other);
                json rows = json::array();
                for (const auto& m : w.mismatches) {
                    rows.push_back({{"delta", stat_json(m.delta)}, {"count", m.count}, {"count_other", m.count_other}});
                }
                j["mismatches"] = rows;
            } else if constexpr (std::is_same_v<W, FactorizationWitness>) {
                j["kind"] = "joint-table-not-rank-one";
                j["t"] = stat_json(w.t);
                j["delta"] = stat_json(w.delta);
                j["joint"] = w.joint;
                j["row_sum"] = w.row_sum;
                j["column_sum"] = w.column_sum;
                j["total"] = w.total;
                j["joint_times_total"] = to_decimal(w.lhs);
                j["row_times_column"] = to_decimal(w.rhs);
            } else {
                j["kind"] = "probability-mismatch";
                j["theta"] = w.theta;
                if (w.x) j["x"] = format_configuration(family, *w.x);
                if (w.x_other) j["x_other"] = format_configuration(family, *w.x_other);
                if (w.t) j["t"] = stat_json(*w.t);
                if (w.delta) j["delta"] = stat_json(*w.delta);
                j["probability"] = w.probability;
                j["probability_other"] = w.probability_other;
                j["discrepancy"] = w.discrepancy;
            }
            return j;
        },
        witness);
}

json to_json(const SiteSpaceFamily& family, const ProjectivityReport& report) {
    json j;
    j["sub_size"] = report.sub_size;
    j["super_size"] = report.super_size;
    j["base_count"] = report.base_count;
    j["extension_count"] = report.extension_count;
    j["tolerance"] = report.tolerance;
    j["theta_grid"] = report.theta_grid;
    j["table_checksum"] = report.table_checksum;
    j["implications_consistent"] = report.implications_consistent;
    j["inconsistencies"] = report.inconsistencies;
    j["all_pass"] = report.all_pass();
    json checks = json::array();
    for (const auto& c : report.checks) {
        json jc;
        jc["criterion"] = to_string(c.criterion);
        jc["verdict"] = c.pass ? "pass" : "fail";
        jc["max_discrepancy"] = c.max_discrepancy;
        jc["witness"] = c.witness ? to_json(family, *c.witness) : json(nullptr);
        checks.push_back(jc);
    }
    j["checks"] = checks;
    return j;
}

json to_json(const MLEResult& r) {
    json j;
    j["theta_hat"] = numbers(r.theta_hat);
    j["observed"] = r.observed;
    j["fitted_mean"] = numbers(r.fitted_mean);
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["gradient_norm"] = number_or_null(r.gradient_norm);
    j["method"] = to_string(r.method);
    if (!r.standard_error.empty()) j["standard_error"] = numbers(r.standard_error);
    return j;
}

json to_json(const ScalingProfile& p) {
    json j;
    j["theta"] = p.theta;
    json entries = json::array();
    for (const auto& e : p.entries) {
        entries.push_back({{"size", e.size}, {"r", e.r}, {"log_partition", e.log_partition}, {"ratio", e.ratio}});
    }
    j["entries"] = entries;
    j["successive_differences"] = p.successive_differences;
    j["exactly_constant"] = p.exactly_constant;
    j["limit_estimate"] = p.limit_estimate;
    return j;
}

json to_json(const RateFunctionEval& e) {
    json j;
    j["t"] = e.t;
    j["J"] = number_or_null(e.J);
    j["phi"] = numbers(e.phi);
    j["theta"] = e.theta;
    j["r"] = e.r;
    j["unbounded"] = e.unbounded;
    j["converged"] = e.converged;
    j["iterations"] = e.iterations;
    return j;
}

json to_json(const StatDistribution& dist) {
    json j;
    j["total_count"] = dist.total_count;
    j["log_partition"] = dist.log_partition;
    json entries = json::array();
    for (const auto& e : dist.entries) {
        entries.push_back({{"t", stat_json(e.t)}, {"count", e.count}, {"probability", e.probability}});
    }
    j["entries"] = entries;
    return j;
}

json experiment_summary(const ExperimentTable& table) {
    json j;
    j["theta_star"] = table.theta_star;
    j["sizes"] = table.sizes;
    j["replicates"] = table.replicates;
    json rows = json::array();
    for (const std::string variant : {"independent", "projection"}) {
        for (std::size_t n : table.sizes) {
            std::size_t total = 0;
            std::map<std::string, std::size_t> failures;
            for (const auto& row : table.rows) {
                if (row.variant != variant || row.size != n) continue;
                ++total;
                if (row.status != "ok") ++failures[row.status];
            }
            if (total == 0) continue;
            json r;
            r["variant"] = variant;
            r["size"] = n;
            r["fits"] = total;
            const auto median = table.median_error(variant, n);
            r["median_error"] = median ? json(*median) : json(nullptr);
            r["failures"] = failures;
            rows.push_back(r);
        }
    }
    j["summary"] = rows;
    return j;
}

json error_json(const Error& error) {
    json j;
    j["code"] = std::string(to_string(error.code()));
    j["message"] = error.what();
    if (const auto* schema = dynamic_cast<const SchemaValidationError*>(&error)) {
        json issues = json::array();
        for (const auto& issue : schema->issues()) issues.push_back({{"path", issue.path}, {"message", issue.message}});
        j["issues"] = issues;
    }
    if (const auto* boundary = dynamic_cast<const BoundaryObservationError*>(&error)) {
        j["face"] = {{"normal", boundary->face().normal}, {"offset", boundary->face().offset}};
    }
    return j;
}

json RunReport::to_json() const {
    json j;
    j["command"] = command;
    j["inputs_digest"] = inputs_digest;
    j["tool_version"] = std::string(kToolVersion);
    j["wall_seconds"] = wall_seconds;
    j["payload"] = payload;
    return j;
}

} // namespace projcheck
