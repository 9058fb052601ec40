// projcheck: projectivity diagnostics and inference for discrete exponential families.

#include "projcheck/inference.hpp"
#include "projcheck/model_spec.hpp"
#include "projcheck/projectivity.hpp"
#include "projcheck/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace projcheck;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kUsage = 2, kInconsistent = 3 };

struct Flags {
    std::string spec;
    std::optional<std::size_t> sub;
    std::optional<std::size_t> super;
    std::optional<std::size_t> size;
    std::string theta_grid;
    std::string observed;
    std::string theta;
    std::string t;
    std::string sizes;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> samples;
    std::optional<std::uint64_t> burn_in;
    std::string out;
    std::string csv;
    unsigned threads = 1;
    std::optional<double> tol;
    bool force_large = false;
};

std::vector<double> parse_reals(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            fail(ErrorCode::InvalidArgument, std::string("bad number '") + item + "' in " + flag);
        }
    }
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    for (double v : parse_reals(text, "--sizes")) {
        if (v < 1 || v != std::floor(v)) fail(ErrorCode::InvalidArgument, "--sizes entries must be positive integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

/// Points separated by ';', components by ','.
std::vector<std::vector<double>> parse_grid(const std::string& text, std::size_t d) {
    std::vector<std::vector<double>> grid;
    std::stringstream in(text);
    std::string point;
    while (std::getline(in, point, ';')) {
        auto v = parse_reals(point, "--theta-grid");
        if (d == 1 && v.size() > 1) {
            for (double x : v) grid.push_back({x});
            continue;
        }
        if (v.size() != d) fail(ErrorCode::InvalidArgument, "--theta-grid point has the wrong dimension");
        grid.push_back(std::move(v));
    }
    if (grid.empty()) fail(ErrorCode::InvalidArgument, "--theta-grid is empty");
    return grid;
}

fs::path resolve_spec(const std::string& name) {
    fs::path path(name);
    if (fs::exists(path)) return path;
    fs::path bundled = fs::path(PROJCHECK_FIXTURE_DIR) / path;
    if (path.is_relative() && fs::exists(bundled)) return bundled;
    fail(ErrorCode::InvalidArgument, "spec file not found: " + name);
}

class Session {
public:
    Session(std::string command, const Flags& flags) : command_(std::move(command)), flags_(flags) {
        const fs::path path = resolve_spec(flags.spec);
        bytes_ = read_file(path);
        digest_ = sha256_hex(bytes_);
        spec_ = parse_model_spec(bytes_);
        if (spec_.experiment) exp_ = *spec_.experiment;
        if (const char* guard = std::getenv("PROJCHECK_GUARD")) {
            try {
                options_.guard = std::stoull(guard);
            } catch (const std::exception&) {
                fail(ErrorCode::InvalidArgument, "PROJCHECK_GUARD must be an unsigned integer");
            }
        }
        if (flags.force_large) options_.guard = std::numeric_limits<std::uint64_t>::max();
        options_.threads = std::max(1u, flags.threads);
    }

    int run() {
        if (command_ == "check") return check();
        if (command_ == "fit") return fit();
        if (command_ == "sample") return sample();
        if (command_ == "scale") return scale();
        if (command_ == "rate") return rate();
        return experiment();
    }

    const std::string& digest() const { return digest_; }
    const SiteSpaceFamily& family() const { return spec_.model.family; }

private:
    const ExpFamModel& model() const { return spec_.model; }
    std::size_t dimension() const { return model().stat.dimension(); }

    std::size_t require(std::optional<std::size_t> flag, std::optional<std::size_t> fallback, const char* name) const {
        if (flag) return *flag;
        if (fallback) return *fallback;
        fail(ErrorCode::InvalidArgument, std::string("missing --") + name + " (not set in the spec either)");
    }

    std::size_t size() const { return require(flags_.size, exp_.size ? exp_.size : exp_.super, "size"); }

    std::vector<double> theta() const {
        if (flags_.theta.empty()) return model().theta;
        auto v = parse_reals(flags_.theta, "--theta");
        if (v.size() != dimension()) fail(ErrorCode::InvalidArgument, "--theta has the wrong dimension");
        return v;
    }

    std::vector<std::size_t> sizes() const {
        auto v = flags_.sizes.empty() ? exp_.sizes : parse_sizes(flags_.sizes);
        if (v.empty()) fail(ErrorCode::InvalidArgument, "missing --sizes (not set in the spec either)");
        return v;
    }

    SamplerConfig sampler() const {
        SamplerConfig c;
        c.seed = flags_.seed ? *flags_.seed : exp_.seed.value_or(c.seed);
        c.burn_in = flags_.burn_in ? *flags_.burn_in : exp_.burn_in.value_or(c.burn_in);
        c.thinning = exp_.thinning.value_or(c.thinning);
        c.samples = flags_.samples ? *flags_.samples : exp_.samples.value_or(c.samples);
        return c;
    }

    int check() {
        const std::size_t sub = require(flags_.sub, exp_.sub, "sub");
        const std::size_t super = require(flags_.super, exp_.super, "super");
        std::vector<std::vector<double>> grid;
        if (!flags_.theta_grid.empty()) grid = parse_grid(flags_.theta_grid, dimension());
        else if (!exp_.theta_grid.empty()) grid = exp_.theta_grid;
        else grid = default_theta_grid(dimension());
        const double tol = flags_.tol ? *flags_.tol : exp_.tolerance.value_or(1e-9);
        const auto report = projectivity_report(model().stat, family(), IndexSet(sub), IndexSet(super), grid,
                                                model().cov(), tol, options_);
        payload_ = to_json(family(), report);
        return report.all_pass() ? kOk : kCheckFailed;
    }

    int fit() {
        std::vector<double> observed;
        if (!flags_.observed.empty()) observed = parse_reals(flags_.observed, "--observed");
        else if (exp_.observed) observed = *exp_.observed;
        else fail(ErrorCode::InvalidArgument, "missing --observed (not set in the spec either)");
        if (observed.size() != dimension()) fail(ErrorCode::InvalidArgument, "--observed has the wrong dimension");
        const std::size_t n = size();
        const MLEResult result = fit_mle(model().stat, family(), IndexSet(n), observed, sampler(), model().cov(), options_);
        payload_ = to_json(result);
        payload_["size"] = n;
        return kOk;
    }

    int sample() {
        const std::size_t n = size();
        const SamplerConfig config = sampler();
        const auto th = theta();
        const auto draws = gibbs_sample(model().stat, family(), IndexSet(n), th, config, model().cov());
        std::map<StatVector, std::uint64_t> counts;
        for (const auto& x : draws) ++counts[eval_statistic(model().stat, family(), x, model().cov())];
        json empirical = json::array();
        for (const auto& [t, c] : counts) {
            empirical.push_back({{"t", t.values()}, {"frequency", static_cast<double>(c) / draws.size()}});
        }
        payload_ = {{"size", n}, {"theta", th}, {"seed", config.seed}, {"burn_in", config.burn_in},
                    {"thinning", config.thinning}, {"samples", config.samples}, {"empirical", empirical}};
        const auto total = family().configuration_count(IndexSet(n));
        if (total && *total <= options_.guard) {
            const auto dist = statistic_distribution(model().with_theta(th), IndexSet(n), options_);
            double tv = 0.0;
            for (const auto& e : dist.entries) {
                const auto it = counts.find(e.t);
                const double f = it == counts.end() ? 0.0 : static_cast<double>(it->second) / draws.size();
                tv += std::abs(f - e.probability);
            }
            payload_["exact"] = to_json(dist);
            payload_["total_variation"] = 0.5 * tv;
        }
        if (!flags_.csv.empty()) {
            std::ofstream out(flags_.csv);
            out << "sample,configuration";
            for (const auto& c : model().stat.components) out << ',' << c.name;
            out << '\n';
            for (std::size_t k = 0; k < draws.size(); ++k) {
                out << k << ",\"" << format_configuration(family(), draws[k]) << '"';
                const auto t = eval_statistic(model().stat, family(), draws[k], model().cov());
                for (auto v : t.values()) out << ',' << v;
                out << '\n';
            }
        }
        return kOk;
    }

    int scale() {
        const auto profile = scaling_profile(model().stat, family(), sizes(), theta(), default_size_measure(family()),
                                             model().cov(), options_);
        payload_ = to_json(profile);
        if (!flags_.csv.empty()) {
            std::ofstream out(flags_.csv);
            write_scaling_csv(profile, out);
        }
        return kOk;
    }

    int rate() {
        std::vector<double> t;
        if (!flags_.t.empty()) t = parse_reals(flags_.t, "--t");
        else if (exp_.rate_points) t = *exp_.rate_points;
        else fail(ErrorCode::InvalidArgument, "missing --t (not set in the spec either)");
        const std::size_t n = size();
        const double r = default_size_measure(family())(n);
        const auto a = ScaledLogPartition::from_law(
            ExactLaw::build(model().stat, family(), IndexSet(n), model().cov(), options_), r);
        payload_ = to_json(rate_function(a, theta(), t));
        payload_["size"] = n;
        return kOk;
    }

    int experiment() {
        std::vector<double> theta_star = exp_.theta_star ? *exp_.theta_star : model().theta;
        if (!flags_.theta.empty()) theta_star = theta();
        const std::size_t reps = flags_.reps ? *flags_.reps : exp_.replicates.value_or(10);
        const auto table = consistency_experiment(model().stat, family(), theta_star, sizes(), reps, sampler(),
                                                  model().cov(), options_);
        payload_ = experiment_summary(table);
        payload_["seed"] = sampler().seed;
        if (!flags_.csv.empty()) {
            std::ofstream out(flags_.csv);
            write_experiment_csv(table, out);
            payload_["table"] = flags_.csv;
        }
        return kOk;
    }

public:
    json payload_;

private:
    std::string command_;
    Flags flags_;
    std::string bytes_;
    std::string digest_;
    ModelSpecDocument spec_;
    ExperimentBlock exp_;
    EnumerationOptions options_;
};

void emit(const RunReport& report, const std::string& out_path) {
    const std::string text = report.to_json().dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Projectivity diagnostics for discrete exponential families"};
    app.require_subcommand(1);
    Flags flags;
    const std::map<std::string, std::string> commands = {
        {"check", "Run the projectivity criteria for a nested pair of index sets"},
        {"fit", "Maximum likelihood estimate from an observed statistic"},
        {"sample", "Gibbs sampling at fixed theta"},
        {"scale", "Log-partition per unit size across index-set sizes"},
        {"rate", "Large-deviation rate function at given mean values"},
        {"experiment", "Consistency experiment over sizes and replicates"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--spec", flags.spec, "Model spec (JSON); bundled fixtures resolve by name")->required();
        sub->add_option("--sub", flags.sub, "Smaller index-set size");
        sub->add_option("--super", flags.super, "Larger index-set size");
        sub->add_option("--size", flags.size, "Index-set size for fit, sample and rate");
        sub->add_option("--theta-grid", flags.theta_grid, "Grid points, ';' between points, ',' within");
        sub->add_option("--theta", flags.theta, "Parameter vector (CSV), overrides the spec");
        sub->add_option("--observed", flags.observed, "Observed statistic (CSV)");
        sub->add_option("--t", flags.t, "Mean value per unit size for the rate function (CSV)");
        sub->add_option("--sizes", flags.sizes, "Index-set sizes (CSV)");
        sub->add_option("--seed", flags.seed, "Random seed");
        sub->add_option("--reps", flags.reps, "Replicates per size")->check(CLI::PositiveNumber);
        sub->add_option("--samples", flags.samples, "Number of Gibbs samples")->check(CLI::PositiveNumber);
        sub->add_option("--burn-in", flags.burn_in, "Gibbs burn-in sweeps")->check(CLI::PositiveNumber);
        sub->add_option("--out", flags.out, "Write the JSON report here instead of stdout");
        sub->add_option("--csv", flags.csv, "Write bulk rows (samples, scaling, experiment) as CSV");
        sub->add_option("--threads", flags.threads, "Worker thread cap")->check(CLI::PositiveNumber);
        sub->add_option("--tol", flags.tol, "Probability tolerance for the distributional checks")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--force-large", flags.force_large, "Disable the enumeration guard");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    const auto start = std::chrono::steady_clock::now();
    RunReport report;
    report.command = command;
    int status = kOk;
    try {
        Session session(command, flags);
        report.inputs_digest = session.digest();
        try {
            status = session.run();
            report.payload = std::move(session.payload_);
        } catch (const InternalInconsistencyError& e) {
            report.payload = {{"error", error_json(e)}, {"report", to_json(session.family(), e.report())}};
            status = kInconsistent;
        }
    } catch (const Error& e) {
        report.payload = {{"error", error_json(e)}};
        status = e.code() == ErrorCode::InternalInconsistency ? kInconsistent : kUsage;
        std::cerr << "projcheck: " << to_string(e.code()) << ": " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "projcheck: " << e.what() << "\n";
        return kUsage;
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
        emit(report, flags.out);
    } catch (const std::exception& e) {
        std::cerr << "projcheck: " << e.what() << "\n";
        return kUsage;
    }
    return status;
}
