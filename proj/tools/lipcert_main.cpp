#include <chrono>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lipcert/assembly.hpp"
#include "lipcert/baselines.hpp"
#include "lipcert/errors.hpp"
#include "lipcert/model.hpp"
#include "lipcert/qc.hpp"
#include "lipcert/report.hpp"
#include "lipcert/sdpa_io.hpp"
#include "lipcert/solver.hpp"

namespace {

using lipcert::BoundReport;
using lipcert::Method;
using lipcert::Model;
using lipcert::NormKind;
using lipcert::SolveResult;
using lipcert::SolveStatus;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCertFailure = 2;

double elapsed_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int thread_cap() {
    if (const char* env = std::getenv("LIPCERT_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

void emit(const json& report, const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << (text.empty() ? report.dump(2) + "\n" : text);
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw lipcert::IoError("cannot open output path " + out_path);
    out << (text.empty() ? report.dump(2) + "\n" : text);
}

json base_report(const std::string& command, const std::string& model_path,
                 const json& options) {
    json j;
    j["command"] = command;
    j["model"] = model_path;
    j["options"] = options;
    j["timestamp"] = lipcert::report_timestamp();
    j["version"] = lipcert::kToolVersion;
    return j;
}

lipcert::SolverConfig config_with_tol(double tol) {
    lipcert::SolverConfig config;
    if (tol > 0.0) {
        config.tol_gap = tol;
        config.tol_feas = tol;
    }
    return config;
}

// Feedforward sub-model over the layer range [first, last].
Model slice_model(const Model& model, int first, int last) {
    Model sub;
    sub.arch = lipcert::Arch::Feedforward;
    sub.activation = model.activation;
    for (int i = first; i <= last; ++i) sub.layers.push_back(model.layers[i]);
    return sub;
}

struct CertifyOutcome {
    double bound = 0.0;
    SolveStatus status = SolveStatus::Optimal;
    std::vector<json> pieces;
};

CertifyOutcome certify_l2_feedforward(const Model& model, lipcert::MultiplierClass mclass,
                                      bool dense, int split,
                                      const lipcert::SolverConfig& config) {
    CertifyOutcome outcome;
    const int l = model.depth();
    const int segments = std::max(1, std::min(split, l));
    double bound = 1.0;
    for (int s = 0; s < segments; ++s) {
        const int first = static_cast<int>(s * static_cast<long>(l) / segments);
        const int last = static_cast<int>((s + 1) * static_cast<long>(l) / segments) - 1;
        const Model sub = slice_model(model, first, last);
        if (sub.depth() == 1) {
            // A lone affine layer: the bound is its spectral norm.
            const double piece = lipcert::spectral_norm(sub.layers[0].W);
            bound *= piece;
            json pj;
            pj["layers"] = {first + 1, last + 1};
            pj["bound"] = piece;
            pj["method"] = "spectral-norm";
            outcome.pieces.push_back(pj);
            continue;
        }
        const auto problem = lipcert::assemble_l2_feedforward(sub, mclass, !dense);
        const SolveResult result = lipcert::solve(problem, config);
        json pj = lipcert::to_json(result);
        pj["layers"] = {first + 1, last + 1};
        outcome.pieces.push_back(pj);
        if (result.status != SolveStatus::Optimal) {
            outcome.status = result.status;
            return outcome;
        }
        bound *= result.lipschitz_bound;
    }
    outcome.bound = bound;
    return outcome;
}

BoundReport run_method(Method method, const Model& model, const std::string& model_path,
                       NormKind norm, int label, int samples, std::uint64_t seed,
                       const lipcert::SolverConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    BoundReport report;
    switch (method) {
        case Method::Mp:
            report = lipcert::mp_bound(model);
            break;
        case Method::Sample: {
            const bool implicit =
                model.arch == lipcert::Arch::Deq || model.arch == lipcert::Arch::NeuralOde;
            report = lipcert::sample_lower_bound(model, norm, samples, seed, label, implicit);
            break;
        }
        case Method::Fgl:
            report = lipcert::fgl_bound(model, norm, label);
            break;
        case Method::NormEq: {
            const auto problem = lipcert::assemble_l2_feedforward(
                model, lipcert::MultiplierClass::Neuron2, true);
            const SolveResult result = lipcert::solve(problem, config);
            if (result.status != SolveStatus::Optimal)
                throw lipcert::ConvergenceError("norm-eq: inner l2 solve is not optimal");
            report = lipcert::norm_eq_bound(result.lipschitz_bound, model.input_width());
            break;
        }
        case Method::NsrL2: {
            SolveResult result;
            if (model.arch == lipcert::Arch::Feedforward) {
                if (model.depth() == 1) {
                    report.value = lipcert::spectral_norm(model.layers[0].W);
                    report.method = Method::NsrL2;
                    report.norm = NormKind::L2;
                    break;
                }
                result = lipcert::solve(
                    lipcert::assemble_l2_feedforward(model, lipcert::MultiplierClass::Neuron2,
                                                     true),
                    config);
            } else {
                result = lipcert::solve(lipcert::assemble_l2_residual(model), config);
            }
            if (result.status != SolveStatus::Optimal)
                throw lipcert::ConvergenceError("nsr-l2 solve is not optimal");
            report.value = result.lipschitz_bound;
            report.method = Method::NsrL2;
            report.norm = NormKind::L2;
            break;
        }
        case Method::NsrLinf: {
            const SolveResult result = lipcert::solve(
                lipcert::assemble_linf(model, std::max(label, 0),
                                       lipcert::MultiplierClass::Neuron2),
                config);
            if (result.status != SolveStatus::Optimal)
                throw lipcert::ConvergenceError("nsr-linf solve is not optimal");
            report.value = result.lipschitz_bound;
            report.method = Method::NsrLinf;
            report.norm = NormKind::LinfL1;
            break;
        }
        case Method::Rr: {
            const SolveResult result = lipcert::solve(lipcert::assemble_rr(model), config);
            if (result.status != SolveStatus::Optimal)
                throw lipcert::ConvergenceError("rr solve is not optimal");
            report.value = result.lipschitz_bound;
            report.method = Method::Rr;
            report.norm = NormKind::L2;
            break;
        }
    }
    (void)model_path;
    report.runtime_seconds = elapsed_since(start);
    return report;
}

Method method_from_string(const std::string& s) {
    if (s == "mp") return Method::Mp;
    if (s == "sample") return Method::Sample;
    if (s == "fgl") return Method::Fgl;
    if (s == "norm-eq") return Method::NormEq;
    if (s == "nsr-l2") return Method::NsrL2;
    if (s == "nsr-linf") return Method::NsrLinf;
    if (s == "rr") return Method::Rr;
    throw lipcert::ValueError("unknown method '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lipcert: certified Lipschitz bounds for sorting-activation networks"};
    app.require_subcommand(1);

    std::string model_path, out_path, format = "json";

    // certify
    auto* certify = app.add_subcommand("certify", "Certify a Lipschitz bound via the SDP");
    std::string norm = "l2", mclass_str = "neuron2", solver_str = "internal",
                sdpa_path = "problem.dat-s";
    int label = 0, split = 1;
    bool dense = false;
    double tol = 0.0;
    certify->add_option("--model", model_path, "model JSON path")->required();
    certify->add_option("--norm", norm, "l2 or linf")
        ->check(CLI::IsMember({"l2", "linf"}));
    certify->add_option("--label", label, "output row for linf certification");
    certify->add_option("--mclass", mclass_str, "multiplier class")
        ->check(CLI::IsMember({"neuron2", "neuron1", "layer2", "layer1"}));
    certify->add_flag("--dense", dense, "use the dense end-to-end inequality");
    certify->add_option("--split", split, "split into k segments, multiply bounds");
    certify->add_option("--solver", solver_str, "internal or sdpa-export")
        ->check(CLI::IsMember({"internal", "sdpa-export"}));
    certify->add_option("--sdpa-out", sdpa_path, "path for --solver sdpa-export");
    certify->add_option("--tol", tol, "solver gap/feasibility tolerance");
    certify->add_option("--out", out_path, "write the report here instead of stdout");
    certify->add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));

    // bound
    auto* bound = app.add_subcommand("bound", "Baseline bounds (mp, sample, fgl, norm-eq, rr)");
    std::string method_str = "mp", bound_norm = "l2";
    int samples = 200000;
    std::uint64_t seed = 1;
    bound->add_option("--model", model_path, "model JSON path")->required();
    bound->add_option("--method", method_str, "mp, sample, fgl, norm-eq, or rr")
        ->check(CLI::IsMember({"mp", "sample", "fgl", "norm-eq", "rr"}));
    bound->add_option("--norm", bound_norm, "l2 or linf")
        ->check(CLI::IsMember({"l2", "linf"}));
    bound->add_option("--label", label, "output row for linf norms");
    bound->add_option("--samples", samples, "sample count for --method sample");
    bound->add_option("--seed", seed, "sampling seed");
    bound->add_option("--out", out_path, "write the report here instead of stdout");
    bound->add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));

    // compare
    auto* compare = app.add_subcommand("compare", "Run several methods side by side");
    std::string methods_csv = "mp,sample,nsr-l2";
    compare->add_option("--model", model_path, "model JSON path")->required();
    compare->add_option("--methods", methods_csv, "comma-separated method list");
    compare->add_option("--label", label, "output row for linf methods");
    compare->add_option("--samples", samples, "sample count for the sample method");
    compare->add_option("--seed", seed, "sampling seed");
    compare->add_option("--out", out_path, "write the report here instead of stdout");
    compare->add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));

    // qc-check
    auto* qc = app.add_subcommand("qc-check", "Sample-verify the activation quadratic constraints");
    std::string qc_activation = "maxmin";
    int group_size = 2, groups = 2, trials = 100000;
    qc->add_option("--activation", qc_activation,
                   "maxmin, groupsort, householder, or relu-control")
        ->check(CLI::IsMember({"maxmin", "groupsort", "householder", "relu-control"}));
    qc->add_option("--group-size", group_size, "group size n_g");
    qc->add_option("--groups", groups, "number of groups N");
    qc->add_option("--trials", trials, "number of sampled pairs");
    qc->add_option("--seed", seed, "sampling seed");
    qc->add_option("--out", out_path, "write the report here instead of stdout");

    // deq
    auto* deq = app.add_subcommand("deq", "Deep equilibrium model certification");
    std::string deq_check = "lipschitz";
    bool waive = false;
    deq->add_option("--model", model_path, "model JSON path")->required();
    deq->add_option("--check", deq_check, "wellposed or lipschitz")
        ->check(CLI::IsMember({"wellposed", "lipschitz"}));
    deq->add_flag("--waive-wellposed", waive, "skip the well-posedness certificate");
    deq->add_option("--tol", tol, "solver tolerance");
    deq->add_option("--out", out_path, "write the report here instead of stdout");

    // node
    auto* node = app.add_subcommand("node", "Neural ODE flow-map certification");
    node->add_option("--model", model_path, "model JSON path")->required();
    node->add_option("--tol", tol, "solver tolerance");
    node->add_option("--out", out_path, "write the report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        const lipcert::SolverConfig config = config_with_tol(tol);

        if (certify->parsed()) {
            const Model model = lipcert::load_model(model_path);
            const auto mclass = lipcert::multiplier_class_from_string(mclass_str);
            json options = {{"norm", norm},     {"mclass", mclass_str}, {"dense", dense},
                            {"split", split},   {"solver", solver_str}, {"label", label}};
            json report = base_report("certify", model_path, options);
            const auto start = std::chrono::steady_clock::now();

            if (solver_str == "sdpa-export") {
                lipcert::SdpProblem problem;
                if (norm == "linf")
                    problem = lipcert::assemble_linf(model, label, mclass);
                else if (model.arch == lipcert::Arch::Feedforward)
                    problem = lipcert::assemble_l2_feedforward(model, mclass, !dense);
                else
                    problem = lipcert::assemble_l2_residual(model);
                lipcert::export_sdpa(problem, sdpa_path);
                report["results"] = {{{"exported", sdpa_path},
                                      {"num_vars", problem.num_vars},
                                      {"blocks", problem.blocks.size()}}};
                emit(report, out_path, "");
                return kExitOk;
            }

            double bound_value = 0.0;
            SolveStatus status = SolveStatus::Optimal;
            json results = json::array();
            if (norm == "linf") {
                const auto problem = lipcert::assemble_linf(model, label, mclass);
                const SolveResult result = lipcert::solve(problem, config);
                status = result.status;
                bound_value = result.lipschitz_bound;
                json rj = lipcert::to_json(result);
                rj["method"] = "nsr-linf";
                rj["norm"] = "linf-l1";
                results.push_back(rj);
            } else if (model.arch == lipcert::Arch::Feedforward) {
                const auto outcome =
                    certify_l2_feedforward(model, mclass, dense, split, config);
                status = outcome.status;
                bound_value = outcome.bound;
                json rj;
                rj["method"] = "nsr-l2";
                rj["norm"] = "l2";
                rj["status"] = to_string(status);
                if (status == SolveStatus::Optimal) rj["lipschitz_bound"] = bound_value;
                rj["segments"] = outcome.pieces;
                results.push_back(rj);
            } else {
                const auto problem = lipcert::assemble_l2_residual(model);
                const SolveResult result = lipcert::solve(problem, config);
                status = result.status;
                bound_value = result.lipschitz_bound;
                json rj = lipcert::to_json(result);
                rj["method"] = "nsr-l2";
                rj["norm"] = "l2";
                results.push_back(rj);
            }
            report["results"] = results;

            if (format == "csv") {
                BoundReport br;
                br.method = norm == "linf" ? Method::NsrLinf : Method::NsrL2;
                br.norm = norm == "linf" ? NormKind::LinfL1 : NormKind::L2;
                br.value = bound_value;
                br.runtime_seconds = elapsed_since(start);
                emit(report, out_path,
                     lipcert::csv_header() + "\n" + lipcert::csv_row(model_path, br) + "\n");
            } else {
                emit(report, out_path, "");
            }
            return status == SolveStatus::Optimal ? kExitOk : kExitCertFailure;
        }

        if (bound->parsed()) {
            const Model model = lipcert::load_model(model_path);
            const Method method = method_from_string(method_str);
            const NormKind nk = bound_norm == "linf" ? NormKind::LinfL1 : NormKind::L2;
            const BoundReport br =
                run_method(method, model, model_path, nk, label, samples, seed, config);
            json report = base_report("bound", model_path,
                                      {{"method", method_str},
                                       {"norm", bound_norm},
                                       {"samples", samples},
                                       {"seed", seed}});
            report["results"] = {lipcert::to_json(br)};
            if (format == "csv")
                emit(report, out_path,
                     lipcert::csv_header() + "\n" + lipcert::csv_row(model_path, br) + "\n");
            else
                emit(report, out_path, "");
            return kExitOk;
        }

        if (compare->parsed()) {
            const Model model = lipcert::load_model(model_path);
            std::vector<Method> methods;
            std::stringstream ss(methods_csv);
            std::string token;
            while (std::getline(ss, token, ','))
                if (!token.empty()) methods.push_back(method_from_string(token));
            if (methods.empty()) throw lipcert::ValueError("compare: empty method list");

            std::vector<BoundReport> reports(methods.size());
            const int cap = thread_cap();
            size_t next = 0;
            while (next < methods.size()) {
                const size_t batch = std::min<size_t>(cap, methods.size() - next);
                std::vector<std::future<BoundReport>> futures;
                for (size_t i = 0; i < batch; ++i) {
                    const Method m = methods[next + i];
                    futures.push_back(std::async(
                        batch > 1 ? std::launch::async : std::launch::deferred, [&, m] {
                            const NormKind nk =
                                (m == Method::NsrLinf || m == Method::NormEq)
                                    ? NormKind::LinfL1
                                    : NormKind::L2;
                            return run_method(m, model, model_path, nk, label, samples, seed,
                                              config);
                        }));
                }
                for (size_t i = 0; i < batch; ++i) reports[next + i] = futures[i].get();
                next += batch;
            }

            json report =
                base_report("compare", model_path, {{"methods", methods_csv}, {"seed", seed}});
            json results = json::array();
            std::string csv = lipcert::csv_header() + "\n";
            for (const auto& br : reports) {
                results.push_back(lipcert::to_json(br));
                csv += lipcert::csv_row(model_path, br) + "\n";
            }
            report["results"] = results;
            emit(report, out_path, format == "csv" ? csv : "");
            return kExitOk;
        }

        if (qc->parsed()) {
            json report = base_report("qc-check", "",
                                      {{"activation", qc_activation},
                                       {"group_size", group_size},
                                       {"groups", groups},
                                       {"trials", trials},
                                       {"seed", seed}});
            bool pass = false;
            double min_value = 0.0;
            if (qc_activation == "relu-control") {
                // Negative control: ReLU pushed through the sorting constraint
                // with gamma = 1 must be caught violating it.
                lipcert::ActivationSpec relu_spec;
                relu_spec.kind = lipcert::ActivationKind::ReLU;
                relu_spec.group_size = 1;
                lipcert::MultiplierParams params;
                params.group_size = group_size;
                params.kind = lipcert::QcKind::GroupSort;
                params.lambda = lipcert::Vector::Zero(groups);
                params.gamma = lipcert::Vector::Ones(groups);
                params.nu = lipcert::Vector::Zero(groups);
                params.tau = lipcert::Vector::Zero(groups);
                const auto res = lipcert::verify_qc_sample(relu_spec, params, trials, seed);
                min_value = res.min_value;
                pass = min_value < -0.1;
            } else {
                lipcert::ActivationSpec spec;
                if (qc_activation == "maxmin") {
                    spec.kind = lipcert::ActivationKind::MaxMin;
                    spec.group_size = 2;
                } else if (qc_activation == "groupsort") {
                    spec.kind = lipcert::ActivationKind::GroupSort;
                    spec.group_size = group_size;
                } else {
                    spec.kind = lipcert::ActivationKind::Householder;
                    spec.group_size = group_size;
                    lipcert::Rng vrng(seed ^ 0x9e3779b97f4a7c15ULL);
                    lipcert::Vector v = lipcert::random_normal_vector(vrng, group_size);
                    spec.householder_v = v / v.norm();
                }
                const auto res = lipcert::run_qc_suite(spec, groups, trials, seed);
                min_value = res.min_value;
                pass = min_value >= -1e-9;
            }
            report["results"] = {{{"min_value", min_value}, {"pass", pass}}};
            emit(report, out_path, "");
            return pass ? kExitOk : kExitCertFailure;
        }

        if (deq->parsed()) {
            const Model model = lipcert::load_model(model_path);
            json report =
                base_report("deq", model_path, {{"check", deq_check}, {"waive", waive}});
            json results = json::array();
            SolveStatus status = SolveStatus::Optimal;
            if (deq_check == "wellposed") {
                const SolveResult result =
                    lipcert::solve(lipcert::assemble_deq_wellposed(model), config);
                status = result.status;
                json rj = lipcert::to_json(result);
                rj["check"] = "wellposed";
                rj["wellposed"] = result.status == SolveStatus::Optimal;
                results.push_back(rj);
            } else {
                bool established = waive;
                if (!established) {
                    const SolveResult wp =
                        lipcert::solve(lipcert::assemble_deq_wellposed(model), config);
                    json rj = lipcert::to_json(wp);
                    rj["check"] = "wellposed";
                    rj["wellposed"] = wp.status == SolveStatus::Optimal;
                    results.push_back(rj);
                    established = wp.status == SolveStatus::Optimal;
                    if (!established) status = wp.status;
                }
                if (established) {
                    const SolveResult result = lipcert::solve(
                        lipcert::assemble_deq_lipschitz(model, true), config);
                    status = result.status;
                    json rj = lipcert::to_json(result);
                    rj["check"] = "lipschitz";
                    results.push_back(rj);
                }
            }
            report["results"] = results;
            emit(report, out_path, "");
            return status == SolveStatus::Optimal ? kExitOk : kExitCertFailure;
        }

        if (node->parsed()) {
            const Model model = lipcert::load_model(model_path);
            const SolveResult result =
                lipcert::solve(lipcert::assemble_node_lipschitz(model), config);
            json report = base_report("node", model_path, json::object());
            json rj = lipcert::to_json(result);
            report["results"] = {rj};
            emit(report, out_path, "");
            return result.status == SolveStatus::Optimal ? kExitOk : kExitCertFailure;
        }
    } catch (const lipcert::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
