// Acceptance suite: runs every criterion end to end and prints one PASS/FAIL
// line per criterion. Exits nonzero if any criterion fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "lipcert/assembly.hpp"
#include "lipcert/baselines.hpp"
#include "lipcert/model.hpp"
#include "lipcert/qc.hpp"
#include "lipcert/rng.hpp"
#include "lipcert/sdpa_io.hpp"
#include "lipcert/solver.hpp"

using namespace lipcert;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& label, const std::string& detail) {
    std::printf("%s criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
                label.c_str(), detail.c_str());
    if (!pass) ++g_failures;
}

std::string fixture(const std::string& name) {
    return std::string(LIPCERT_FIXTURE_DIR) + "/" + name;
}

std::string run_cli(const std::string& bin, const std::string& args, int* exit_code) {
    const std::string cmd = bin + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        *exit_code = -1;
        return "";
    }
    std::string out;
    std::array<char, 4096> buffer{};
    size_t n = 0;
    while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0)
        out.append(buffer.data(), n);
    const int status = pclose(pipe);
    *exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

Model random_maxmin_ff(Rng& rng, int depth, int width) {
    Model m;
    m.arch = Arch::Feedforward;
    m.activation.kind = ActivationKind::MaxMin;
    int prev = width;
    for (int i = 0; i < depth; ++i) {
        Layer layer;
        layer.W = random_normal_matrix(rng, width, prev);
        layer.b = random_normal_vector(rng, width);
        m.layers.push_back(layer);
        prev = width;
    }
    validate_model(m);
    return m;
}

double certified_l2(const Model& m, MultiplierClass mclass = MultiplierClass::Neuron2,
                    bool dense = false, SolveStatus* status = nullptr) {
    const SolveResult r = solve(assemble_l2_feedforward(m, mclass, !dense));
    if (status) *status = r.status;
    return r.lipschitz_bound;
}

// ---------------------------------------------------------------- criterion 1
void criterion_1(const std::string& cli) {
    bool pass = true;
    std::ostringstream detail;
    int code = 0;
    const std::string certify =
        run_cli(cli, "certify --norm l2 --model " + fixture("bare_maxmin.json"), &code);
    double nsr = std::nan("");
    try {
        nsr = json::parse(certify).at("results").at(0).at("lipschitz_bound").get<double>();
    } catch (...) {
        pass = false;
    }
    pass = pass && code == 0 && std::abs(nsr - 1.0) <= 1e-6;

    const std::string rr =
        run_cli(cli, "bound --method rr --model " + fixture("bare_maxmin.json"), &code);
    double rr_value = std::nan("");
    try {
        rr_value = json::parse(rr).at("results").at(0).at("value").get<double>();
    } catch (...) {
        pass = false;
    }
    pass = pass && code == 0 && std::abs(rr_value - std::sqrt(2.0)) <= 1e-6;
    detail << "nsr=" << nsr << " rr=" << rr_value;
    report(1, pass, "motivating example: nsr 1 vs relu-rewrite sqrt(2)", detail.str());
}

// ---------------------------------------------------------------- criterion 2
void criterion_2() {
    Rng rng(1002);
    bool pass = true;
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const int depth = 2 + static_cast<int>(rng.next_u64() % 3);
        const int width = 2 * (1 + static_cast<int>(rng.next_u64() % 8));
        const Model m = random_maxmin_ff(rng, depth, width);
        SolveStatus status = SolveStatus::NumericalError;
        const double layer1 = certified_l2(m, MultiplierClass::Layer1, false, &status);
        const double product = mp_bound(m).value;
        const double rel = std::abs(layer1 - product) / std::max(1.0, product);
        worst = std::max(worst, rel);
        pass = pass && status == SolveStatus::Optimal && rel <= 1e-6;
    }
    std::ostringstream detail;
    detail << "worst relative deviation " << worst;
    report(2, pass, "layer1 class equals the spectral-norm product", detail.str());
}

// ---------------------------------------------------------------- criterion 3
void criterion_3() {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(1003);
    bool pass = true;
    for (int trial = 0; trial < 20; ++trial) {
        const int depth = 2 + static_cast<int>(rng.next_u64() % 4);
        const int width = 2 * (1 + static_cast<int>(rng.next_u64() % 8));
        const Model m = random_maxmin_ff(rng, depth, width);

        SolveStatus status = SolveStatus::NumericalError;
        const double nsr_l2 = certified_l2(m, MultiplierClass::Neuron2, false, &status);
        if (status != SolveStatus::Optimal) {
            pass = false;
            continue;
        }
        const double mp = mp_bound(m).value;
        const double sample_l2 =
            sample_lower_bound(m, NormKind::L2, 5000, 7000 + trial).value;
        pass = pass && sample_l2 <= nsr_l2 + 1e-9 && nsr_l2 <= mp + 1e-6;

        const SolveResult linf = solve(assemble_linf(m, 0, MultiplierClass::Neuron2));
        if (linf.status != SolveStatus::Optimal) {
            pass = false;
            continue;
        }
        const double sample_linf =
            sample_lower_bound(m, NormKind::LinfL1, 5000, 8000 + trial, 0).value;
        const double norm_eq = std::sqrt(m.input_width()) * nsr_l2;
        pass = pass && sample_linf <= linf.lipschitz_bound + 1e-9 &&
               linf.lipschitz_bound <= norm_eq + 1e-6;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream detail;
    detail << "20 nets in " << seconds << "s";
    report(3, pass && seconds < 300.0, "ordering suites over random maxmin nets",
           detail.str());
}

// ---------------------------------------------------------------- criterion 4
void criterion_4() {
    bool pass = true;
    double worst = 0.0;
    for (const int n_g : {2, 4}) {
        for (const int groups : {1, 3}) {
            ActivationSpec spec;
            spec.kind = ActivationKind::GroupSort;
            spec.group_size = n_g;
            const auto res = run_qc_suite(spec, groups, 100000, 4000 + 10 * n_g + groups);
            worst = std::min(worst, res.min_value);
            pass = pass && res.min_value >= -1e-9;
        }
    }
    Rng vrng(4040);
    for (int trial = 0; trial < 10; ++trial) {
        Vector v = random_normal_vector(vrng, 3);
        v /= v.norm();
        ActivationSpec spec;
        spec.kind = ActivationKind::Householder;
        spec.group_size = 3;
        spec.householder_v = v;
        const auto res = run_qc_suite(spec, 2, 100000, 4100 + trial);
        worst = std::min(worst, res.min_value);
        pass = pass && res.min_value >= -1e-9;
    }
    // negative control: relu violates the sorting constraint
    ActivationSpec relu_spec;
    relu_spec.kind = ActivationKind::ReLU;
    relu_spec.group_size = 1;
    MultiplierParams params;
    params.group_size = 2;
    params.kind = QcKind::GroupSort;
    params.lambda = Vector::Zero(1);
    params.gamma = Vector::Ones(1);
    params.nu = Vector::Zero(1);
    params.tau = Vector::Zero(1);
    const auto control = verify_qc_sample(relu_spec, params, 10000, 4242);
    pass = pass && control.min_value < -0.1;
    std::ostringstream detail;
    detail << "worst qc value " << worst << ", relu control " << control.min_value;
    report(4, pass, "lemma quadratic-constraint suites", detail.str());
}

// ---------------------------------------------------------------- criterion 5
void criterion_5() {
    Rng rng(1005);
    bool pass = true;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = symmetrize(random_normal_matrix(rng, 6, 6));
        SdpProblem p;
        p.num_vars = 1;
        p.objective = Vector::Ones(1);
        p.var_names = {"rho"};
        AffineLmiBlock blk;
        blk.size = 6;
        blk.F0 = a;
        blk.terms.emplace_back(0, Matrix(-Matrix::Identity(6, 6)));
        p.blocks.push_back(blk);
        const SolveResult r = solve(p);
        Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
        const double err = std::abs(r.z(0) - es.eigenvalues().maxCoeff());
        worst = std::max(worst, err);
        pass = pass && r.status == SolveStatus::Optimal && err <= 1e-7;
        if (r.status == SolveStatus::Optimal)
            pass = pass && psd_check(Matrix(-p.block_value(0, r.z)), 1e-8);
    }

    // golden-file round trip
    SdpProblem gold;
    gold.num_vars = 1;
    gold.objective = Vector::Ones(1);
    gold.var_names = {"rho"};
    AffineLmiBlock blk;
    blk.size = 2;
    Matrix f0 = Matrix::Zero(2, 2);
    f0(0, 0) = 1.0;
    f0(1, 1) = 3.0;
    blk.F0 = f0;
    blk.terms.emplace_back(0, Matrix(-Matrix::Identity(2, 2)));
    gold.blocks.push_back(blk);
    const std::string tmp = "acceptance_lambda_max.dat-s";
    export_sdpa(gold, tmp);
    const auto slurp = [](const std::string& path) {
        std::ifstream in(path);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const bool golden = slurp(tmp) == slurp(fixture("lambda_max.dat-s"));
    std::remove(tmp.c_str());
    pass = pass && golden;

    std::ostringstream detail;
    detail << "worst eigenvalue error " << worst << ", golden "
           << (golden ? "byte-exact" : "MISMATCH");
    report(5, pass, "solver oracle and sdpa golden file", detail.str());
}

// ---------------------------------------------------------------- criterion 6
void criterion_6() {
    Rng rng(1006);
    bool pass = true;
    double worst = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
        const int depth = 2 + static_cast<int>(rng.next_u64() % 2);
        const int width = 2 * (1 + static_cast<int>(rng.next_u64() % 4));
        const Model m = random_maxmin_ff(rng, depth, width);
        SolveStatus s1 = SolveStatus::NumericalError, s2 = SolveStatus::NumericalError;
        const double dec = certified_l2(m, MultiplierClass::Neuron2, false, &s1);
        const double dense = certified_l2(m, MultiplierClass::Neuron2, true, &s2);
        const double rel = std::abs(dec - dense) / std::max(1.0, std::abs(dense));
        worst = std::max(worst, rel);
        pass = pass && s1 == SolveStatus::Optimal && s2 == SolveStatus::Optimal &&
               rel <= 1e-5;
    }
    std::ostringstream detail;
    detail << "worst relative gap " << worst;
    report(6, pass, "decomposed matches the dense end-to-end inequality", detail.str());
}

// ---------------------------------------------------------------- criterion 7
void criterion_7() {
    bool pass = true;
    // all G_i = 0: the identity map certifies rho = 1
    Model idres;
    idres.arch = Arch::Residual;
    idres.activation.kind = ActivationKind::MaxMin;
    idres.layers.resize(3);
    for (auto& layer : idres.layers) {
        layer.W = Matrix::Identity(4, 4);
        layer.b = Vector::Zero(4);
        layer.G = Matrix::Zero(4, 4);
    }
    validate_model(idres);
    const SolveResult id = solve(assemble_l2_residual(idres));
    pass = pass && id.status == SolveStatus::Optimal && std::abs(id.rho - 1.0) <= 1e-6;

    Rng rng(1007);
    double worst_excess = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Model m;
        m.arch = Arch::SingleLayerResidual;
        m.activation.kind = ActivationKind::MaxMin;
        m.single_res.H1 = random_normal_matrix(rng, 4, 4);
        m.single_res.G1 = random_normal_matrix(rng, 4, 4);
        m.single_res.W1 = random_normal_matrix(rng, 4, 4);
        m.single_res.b1 = Vector::Zero(4);
        validate_model(m);
        const SolveResult r = solve(assemble_l2_residual(m));
        const double triangle = mp_bound(m).value;
        if (r.status != SolveStatus::Optimal) {
            pass = false;
            continue;
        }
        worst_excess = std::max(worst_excess, r.lipschitz_bound - triangle);
        pass = pass && r.lipschitz_bound <= triangle + 1e-6;
    }
    std::ostringstream detail;
    detail << "identity rho " << id.rho << ", worst bound minus triangle " << worst_excess;
    report(7, pass, "residual sanity", detail.str());
}

// ---------------------------------------------------------------- criterion 8
void criterion_8() {
    bool pass = true;
    std::ostringstream detail;
    Rng rng(1008);

    // contractive deq
    Model deq;
    deq.arch = Arch::Deq;
    deq.activation.kind = ActivationKind::MaxMin;
    Matrix w = random_normal_matrix(rng, 4, 4);
    w *= 0.5 / spectral_norm(w);
    deq.deq.W = w;
    deq.deq.U = random_normal_matrix(rng, 4, 2);
    deq.deq.Wo = random_normal_matrix(rng, 2, 4);
    deq.deq.bz = random_normal_vector(rng, 4);
    deq.deq.by = random_normal_vector(rng, 2);
    validate_model(deq);
    const SolveResult wellposed = solve(assemble_deq_wellposed(deq));
    pass = pass && wellposed.status == SolveStatus::Optimal;

    const SolveResult lip = solve(assemble_deq_lipschitz(deq, true));
    pass = pass && lip.status == SolveStatus::Optimal;
    double worst_ratio = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Vector x = random_normal_vector(rng, 2);
        const Vector xp = x + 1e-2 * random_normal_vector(rng, 2);
        const double den = (x - xp).norm();
        if (den == 0.0) continue;
        worst_ratio = std::max(worst_ratio, (forward(deq, x) - forward(deq, xp)).norm() / den);
    }
    pass = pass && lip.status == SolveStatus::Optimal &&
           lip.lipschitz_bound >= worst_ratio - 1e-9;
    detail << "deq bound " << lip.lipschitz_bound << " >= ratio " << worst_ratio;

    // expansive deq is rejected
    Model expansive = deq;
    expansive.deq.W = 2.0 * Matrix::Identity(4, 4);
    expansive.deq.U = random_normal_matrix(rng, 4, 2);
    const SolveResult rejected = solve(assemble_deq_wellposed(expansive));
    pass = pass && rejected.status == SolveStatus::Infeasible;
    detail << ", expansive " << to_string(rejected.status);

    // neural ode
    Model node;
    node.arch = Arch::NeuralOde;
    node.activation.kind = ActivationKind::MaxMin;
    node.node.G = 0.5 * random_normal_matrix(rng, 4, 4);
    node.node.W0 = random_normal_matrix(rng, 4, 4);
    node.node.W1 = random_normal_vector(rng, 4);
    node.node.b0 = random_normal_vector(rng, 4);
    node.node.b1 = random_normal_vector(rng, 4);
    validate_model(node);
    const SolveResult ode = solve(assemble_node_lipschitz(node));
    pass = pass && ode.status == SolveStatus::Optimal;
    double node_ratio = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Vector x = random_normal_vector(rng, 4);
        const Vector xp = x + 1e-2 * random_normal_vector(rng, 4);
        const double den = (x - xp).norm();
        if (den == 0.0) continue;
        node_ratio = std::max(node_ratio, (forward(node, x) - forward(node, xp)).norm() / den);
    }
    pass = pass && ode.lipschitz_bound >= node_ratio - 1e-9;
    detail << ", node bound " << ode.lipschitz_bound << " >= ratio " << node_ratio;
    report(8, pass, "implicit models", detail.str());
}

// ---------------------------------------------------------------- criterion 9
void criterion_9() {
    Rng rng(1009);
    bool pass = true;
    for (int trial = 0; trial < 5; ++trial) {
        Model m;
        m.arch = Arch::Feedforward;
        m.activation.kind = ActivationKind::MaxMin;
        m.layers.resize(2);
        m.layers[0].W = random_normal_matrix(rng, 4, 4);
        m.layers[0].b = random_normal_vector(rng, 4);
        m.layers[1].W = random_normal_matrix(rng, 2, 4);
        m.layers[1].b = random_normal_vector(rng, 2);
        validate_model(m);
        const double fgl = fgl_bound(m, NormKind::L2).value;
        const double sampled = sample_lower_bound(m, NormKind::L2, 5000, 9000 + trial).value;
        SolveStatus status = SolveStatus::NumericalError;
        const double nsr = certified_l2(m, MultiplierClass::Neuron2, false, &status);
        pass = pass && status == SolveStatus::Optimal && sampled <= fgl + 1e-9 &&
               fgl <= nsr + 1e-6;
    }

    // width-2 exactness against a dense direction sweep
    double worst_rel = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        Model m;
        m.arch = Arch::Feedforward;
        m.activation.kind = ActivationKind::MaxMin;
        m.layers.resize(2);
        m.layers[0].W = random_normal_matrix(rng, 2, 2);
        m.layers[0].b = Vector::Zero(2);
        m.layers[1].W = random_normal_matrix(rng, 2, 2);
        m.layers[1].b = Vector::Zero(2);
        validate_model(m);
        const double fgl = fgl_bound(m, NormKind::L2).value;
        double grid = 0.0;
        for (int a = 0; a < 720; ++a) {
            const double angle = a * M_PI / 360.0;
            Vector x(2);
            x << std::cos(angle), std::sin(angle);
            grid = std::max(grid,
                            Eigen::JacobiSVD<Matrix>(jacobian(m, x).matrix)
                                .singularValues()(0));
        }
        worst_rel = std::max(worst_rel, std::abs(fgl - grid) / fgl);
        pass = pass && std::abs(fgl - grid) <= 0.01 * fgl;
    }
    std::ostringstream detail;
    detail << "worst grid deviation " << worst_rel * 100.0 << "%";
    report(9, pass, "fgl cross-checks", detail.str());
}

// --------------------------------------------------------------- criterion 10
void criterion_10() {
    bool pass = true;
    // f(x) = [1, 1] maxmin(x): the sign-pattern oracle gives exactly 2
    Model m;
    m.arch = Arch::Feedforward;
    m.activation.kind = ActivationKind::MaxMin;
    m.layers.resize(2);
    m.layers[0].W = Matrix::Identity(2, 2);
    m.layers[0].b = Vector::Zero(2);
    m.layers[1].W = Matrix::Ones(1, 2);
    m.layers[1].b = Vector::Zero(1);
    validate_model(m);
    double oracle = 0.0;
    for (const bool swapped : {false, true}) {
        Matrix perm = Matrix::Identity(2, 2);
        if (swapped) {
            perm.setZero();
            perm(0, 1) = 1.0;
            perm(1, 0) = 1.0;
        }
        oracle = std::max(oracle,
                          (Matrix::Ones(1, 2) * perm * Matrix::Identity(2, 2))
                              .cwiseAbs()
                              .sum());
    }
    const SolveResult r = solve(assemble_linf(m, 0, MultiplierClass::Neuron2));
    pass = pass && r.status == SolveStatus::Optimal && std::abs(oracle - 2.0) <= 1e-12 &&
           std::abs(r.lipschitz_bound - oracle) <= 1e-6;

    // linear functional: l1 norm
    Model lin;
    lin.arch = Arch::Feedforward;
    lin.activation.kind = ActivationKind::MaxMin;
    lin.layers.resize(1);
    Matrix w(1, 2);
    w << 3, -4;
    lin.layers[0].W = w;
    lin.layers[0].b = Vector::Zero(1);
    const SolveResult rl = solve(assemble_linf(lin, 0, MultiplierClass::Neuron2));
    pass = pass && rl.status == SolveStatus::Optimal &&
           std::abs(rl.lipschitz_bound - 7.0) <= 1e-6;

    std::ostringstream detail;
    detail << "maxmin rho " << r.lipschitz_bound << ", linear rho " << rl.lipschitz_bound;
    report(10, pass, "linf analytic cases", detail.str());
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--cli") cli = argv[i + 1];
    if (cli.empty()) {
        std::fprintf(stderr, "usage: lipcert_acceptance --cli <path-to-lipcert>\n");
        return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    criterion_1(cli);
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s: %d criterion(s) failed, total %.1fs\n",
                g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL", g_failures, seconds);
    return g_failures == 0 ? 0 : 1;
}
