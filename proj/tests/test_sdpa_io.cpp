#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lipcert/errors.hpp"
#include "lipcert/sdpa_io.hpp"

using namespace lipcert;

namespace {

std::string fixture(const std::string& name) {
    return std::string(LIPCERT_FIXTURE_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SdpProblem lambda_max_problem() {
    SdpProblem p;
    p.num_vars = 1;
    p.objective = Vector::Ones(1);
    p.var_names = {"rho"};
    AffineLmiBlock blk;
    blk.size = 2;
    Matrix f0 = Matrix::Zero(2, 2);
    f0(0, 0) = 1.0;
    f0(1, 1) = 3.0;
    blk.F0 = f0;
    blk.terms.emplace_back(0, Matrix(-Matrix::Identity(2, 2)));
    p.blocks.push_back(blk);
    return p;
}

}  // namespace

TEST_CASE("export matches the frozen golden file byte for byte") {
    const std::string path = "lambda_max_test.dat-s";
    export_sdpa(lambda_max_problem(), path);
    CHECK(slurp(path) == slurp(fixture("lambda_max.dat-s")));
    std::remove(path.c_str());
}

TEST_CASE("export rejects empty problems") {
    SdpProblem empty;
    empty.num_vars = 1;
    empty.objective = Vector::Ones(1);
    CHECK_THROWS_AS(export_sdpa(empty, "unused.dat-s"), ValueError);
}

TEST_CASE("structure round-trip preserves sizes and counts") {
    const std::string path = "roundtrip_test.dat-s";
    const SdpProblem p = lambda_max_problem();
    export_sdpa(p, path);
    const SdpaStructure st = parse_sdpa_structure(path);
    CHECK(st.num_vars == p.num_vars);
    REQUIRE(st.block_sizes.size() == p.blocks.size());
    CHECK(st.block_sizes[0] == 2);
    CHECK(st.objective(0) == doctest::Approx(1.0));
    std::remove(path.c_str());
}

TEST_CASE("solution import recomputes residuals locally") {
    const SdpProblem p = lambda_max_problem();
    const SolveResult r = import_sdpa_solution(fixture("lambda_max_solution.txt"), p);
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(r.z(0) == doctest::Approx(3.0));
    CHECK(r.rho == doctest::Approx(3.0));

    // a truncated file fails to parse
    CHECK_THROWS_AS(import_sdpa_solution(fixture("lambda_max_truncated.txt"), p), ParseError);

    // a solution whose recomputed gap is far above tolerance is downgraded
    const SolveResult bad = import_sdpa_solution(fixture("lambda_max_badgap.txt"), p);
    CHECK(bad.status == SolveStatus::NumericalError);
}
