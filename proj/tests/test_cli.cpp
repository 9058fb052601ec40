#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

using nlohmann::json;

namespace {

struct Run {
    int status = -1;
    std::string out;
    json report() const { return json::parse(out); }
};

Run run(const std::string& args, const std::string& env = "") {
    const std::string command = env + (env.empty() ? "" : " ") + PROJCHECK_BIN + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buffer{};
    std::size_t n;
    while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) r.out.append(buffer.data(), n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "projcheck-cli-test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("check exit codes on the bundled fixtures") {
    const std::pair<const char*, int> expected[] = {
        {"counterexample-s3.1.json", 1}, {"ising-chain.json", 0},   {"edge-ergm.json", 0},
        {"edge-n3.json", 0},             {"edge-triangle-ergm.json", 1}, {"two-star-ergm.json", 1},
        {"two-block-dyadic.json", 0},
    };
    for (const auto& [name, code] : expected) {
        CAPTURE(name);
        const auto r = run(std::string("check --spec ") + name);
        CHECK(r.status == code);
        const auto j = r.report();
        CHECK(j["command"] == "check");
        CHECK(j["payload"]["all_pass"] == (code == 0));
        CHECK(j["inputs_digest"].get<std::string>().size() == 64);
    }
}

TEST_CASE("check on the counterexample with an explicit grid") {
    const auto r = run("check --spec counterexample-s3.1.json --sub 1 --super 2 --theta-grid 1");
    CHECK(r.status == 1);
    const auto checks = r.report()["payload"]["checks"];
    CHECK(checks[0]["verdict"] == "fail");
    CHECK(checks[1]["verdict"] == "pass");
    CHECK(checks[2]["verdict"] == "fail");
    CHECK(checks[2]["witness"]["theta"] == json::array({1.0}));
    CHECK(r.report()["payload"]["theta_grid"] == json::array({json::array({1.0})}));
}

TEST_CASE("fit") {
    const auto r = run("fit --spec edge-n3.json");
    CHECK(r.status == 0);
    CHECK(std::abs(r.report()["payload"]["theta_hat"][0].get<double>() - std::log(2.0)) < 1e-9);
    const auto boundary = run("fit --spec edge-n3.json --observed 3");
    CHECK(boundary.status == 2);
    CHECK(boundary.report()["payload"]["error"]["code"] == "BoundaryObservation");
}

TEST_CASE("sample, scale, rate and experiment") {
    const auto csv = scratch("samples.csv");
    const auto s = run("sample --spec edge-n3.json --theta 1 --samples 500 --seed 4 --csv " + csv.string());
    CHECK(s.status == 0);
    CHECK(s.report()["payload"]["samples"] == 500);
    CHECK(s.report()["payload"]["total_variation"].get<double>() < 0.1);
    std::ifstream lines(csv);
    std::size_t count = 0;
    for (std::string line; std::getline(lines, line);) ++count;
    CHECK(count == 501);
    CHECK(run("sample --spec edge-n3.json --theta 1 --samples 500 --seed 4").report()["payload"] ==
          s.report()["payload"]);

    const auto scale = run("scale --spec edge-ergm.json --sizes 3,4,5,6");
    CHECK(scale.status == 0);
    CHECK(scale.report()["payload"]["exactly_constant"] == true);

    const auto rate = run("rate --spec edge-ergm.json --theta 0 --t 0.7");
    CHECK(rate.status == 0);
    const double kl = 0.7 * std::log(1.4) + 0.3 * std::log(0.6);
    CHECK(std::abs(rate.report()["payload"]["J"].get<double>() - kl) < 1e-8);
    CHECK(run("rate --spec edge-ergm.json --t 1.5").report()["payload"]["unbounded"] == true);

    const auto table = scratch("experiment.csv");
    const auto e = run("experiment --spec edge-ergm.json --sizes 4,6 --reps 3 --threads 2 --csv " + table.string());
    CHECK(e.status == 0);
    CHECK(e.report()["payload"]["sizes"] == json::array({4, 6}));
    CHECK(std::filesystem::file_size(table) > 0);
}

TEST_CASE("usage and spec errors exit with 2") {
    CHECK(run("").status == 2);
    CHECK(run("check").status == 2);
    CHECK(run("frobnicate --spec edge-n3.json").status == 2);
    CHECK(run("check --spec no-such-file.json").status == 2);

    const auto bad = scratch("bad.json");
    std::ofstream(bad) << R"({"schema_version": 1, "family": {"kind": "undirected-graph"},
                             "statistic": [{"type": "quadrangle"}], "theta": [1]})";
    const auto r = run("check --spec " + bad.string() + " --sub 2 --super 3");
    CHECK(r.status == 2);
    CHECK(r.report()["payload"]["error"]["code"] == "UnknownStatistic");

    const auto big = run("check --spec edge-triangle-ergm.json --sub 8 --super 9");
    CHECK(big.status == 2);
    CHECK(big.report()["payload"]["error"]["code"] == "SpaceTooLarge");
}

TEST_CASE("report goes to --out") {
    const auto path = scratch("report.json");
    std::filesystem::remove(path);
    const auto r = run("check --spec edge-n3.json --out " + path.string());
    CHECK(r.status == 0);
    CHECK(r.out.empty());
    std::ifstream in(path);
    CHECK(json::parse(in)["payload"]["all_pass"] == true);
}

TEST_CASE("documented invocations") {
    const auto counter = run("check --spec counterexample-s3.1.json --sub 1 --super 2");
    CHECK(counter.status == 1);
    const auto checks = counter.report()["payload"]["checks"];
    CHECK(checks[0]["verdict"] == "fail");
    CHECK(checks[1]["verdict"] == "pass");

    const auto fit = run("fit --spec edge-n3.json --observed 2");
    CHECK(fit.status == 0);
    CHECK(std::abs(fit.report()["payload"]["theta_hat"][0].get<double>() - 0.6931) < 1e-4);

    const auto edge = run("check --spec edge-ergm.json --sub 3 --super 5");
    CHECK(edge.status == 0);
    CHECK(edge.report()["payload"]["all_pass"] == true);
}

TEST_CASE("sample CSV carries the statistic of each draw") {
    const auto csv = scratch("edges.csv");
    CHECK(run("sample --spec edge-ergm.json --size 4 --samples 200 --csv " + csv.string()).status == 0);
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "sample,configuration,edges");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        const auto open = line.find('"'), close = line.rfind('"');
        const std::string config = line.substr(open + 1, close - open - 1);
        const long ones = std::count(config.begin(), config.end(), '1');
        CHECK(std::stol(line.substr(close + 2)) == ones);
        ++rows;
    }
    CHECK(rows == 200);
}

TEST_CASE("enumeration guard from the environment") {
    const auto r = run("check --spec edge-ergm.json", "PROJCHECK_GUARD=10");
    CHECK(r.status == 2);
    CHECK(r.report()["payload"]["error"]["code"] == "SpaceTooLarge");
    CHECK(run("check --spec edge-ergm.json --force-large", "PROJCHECK_GUARD=10").status == 0);
    CHECK(run("check --spec edge-ergm.json", "PROJCHECK_GUARD=many").status == 2);
}
