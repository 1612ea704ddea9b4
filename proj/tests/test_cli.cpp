#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace {

std::string fixture(const std::string& name) {
    return std::string(LIPCERT_FIXTURE_DIR) + "/" + name;
}

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    const char* bin = std::getenv("LIPCERT_BIN");
    REQUIRE(bin != nullptr);
    const std::string cmd = std::string(bin) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    std::array<char, 4096> buffer{};
    size_t n = 0;
    while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0)
        result.out.append(buffer.data(), n);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

}  // namespace

TEST_CASE("certify reports the bare maxmin bound of one") {
    const CliResult r = run_cli("certify --norm l2 --model " + fixture("bare_maxmin.json"));
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.out);
    CHECK(report.at("command") == "certify");
    const double bound = report.at("results").at(0).at("lipschitz_bound").get<double>();
    CHECK(std::abs(bound - 1.0) <= 1e-6);
}

TEST_CASE("certify reports are byte-identical across runs") {
    const std::string args = "certify --norm l2 --model " + fixture("bare_maxmin.json");
    const CliResult a = run_cli(args);
    const CliResult b = run_cli(args);
    CHECK(a.out == b.out);  // SOURCE_DATE_EPOCH pins time and runtimes
    CHECK(!a.out.empty());
}

TEST_CASE("bound rr reproduces the conservative sqrt(2)") {
    const CliResult r =
        run_cli("bound --method rr --model " + fixture("bare_maxmin.json"));
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.out);
    const double value = report.at("results").at(0).at("value").get<double>();
    CHECK(std::abs(value - std::sqrt(2.0)) <= 1e-6);
}

TEST_CASE("compare emits the fixed csv column order") {
    const CliResult r = run_cli("compare --methods mp,sample,nsr-l2 --samples 500 --format csv --model " +
                                fixture("ff_maxmin_2layer.json"));
    REQUIRE(r.exit_code == 0);
    std::istringstream lines(r.out);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "model,method,norm,value,runtime_seconds");
    double mp = 0, sample = 0, nsr = 0;
    std::string row;
    while (std::getline(lines, row)) {
        std::istringstream cells(row);
        std::string model, method, norm, value;
        std::getline(cells, model, ',');
        std::getline(cells, method, ',');
        std::getline(cells, norm, ',');
        std::getline(cells, value, ',');
        if (method == "mp") mp = std::stod(value);
        if (method == "sample") sample = std::stod(value);
        if (method == "nsr-l2") nsr = std::stod(value);
    }
    CHECK(sample <= nsr + 1e-9);
    CHECK(nsr <= mp + 1e-6);
}

TEST_CASE("qc-check passes for maxmin and flags the relu control") {
    const CliResult good = run_cli("qc-check --activation maxmin --trials 2000 --seed 7");
    CHECK(good.exit_code == 0);
    const json report = json::parse(good.out);
    CHECK(report.at("results").at(0).at("min_value").get<double>() >= -1e-9);

    const CliResult control =
        run_cli("qc-check --activation relu-control --trials 2000 --seed 7");
    CHECK(control.exit_code == 0);
    const json creport = json::parse(control.out);
    CHECK(creport.at("results").at(0).at("min_value").get<double>() < -0.1);
}

TEST_CASE("usage errors exit with code 1 and missing certificates with 2") {
    CHECK(run_cli("certify --model does_not_exist.json").exit_code == 1);
    CHECK(run_cli("nonsense-subcommand").exit_code == 1);

    // an expansive deq cannot be certified well-posed: certification failure
    const CliResult infeasible =
        run_cli("deq --check wellposed --model " + fixture("deq_expansive.json"));
    CHECK(infeasible.exit_code == 2);
    const json report = json::parse(infeasible.out);
    CHECK(report.at("results").at(0).at("wellposed") == false);
}

TEST_CASE("every subcommand offers help") {
    for (const std::string sub :
         {"certify", "bound", "compare", "qc-check", "deq", "node"}) {
        const CliResult r = run_cli(sub + " --help");
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("--") != std::string::npos);
    }
}

TEST_CASE("sdpa export writes the problem file") {
    const std::string out = "cli_export_test.dat-s";
    const CliResult r = run_cli("certify --solver sdpa-export --sdpa-out " + out +
                                " --model " + fixture("bare_maxmin.json"));
    REQUIRE(r.exit_code == 0);
    std::ifstream check(out);
    CHECK(check.good());
    std::remove(out.c_str());
}
