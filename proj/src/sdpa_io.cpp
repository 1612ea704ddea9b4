#include "lipcert/sdpa_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lipcert/errors.hpp"

namespace lipcert {

namespace {

void write_entries(std::ostream& out, int mat_no, int blk_no, const Matrix& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = i; j < m.cols(); ++j)
            if (m(i, j) != 0.0)
                out << mat_no << " " << blk_no << " " << (i + 1) << " " << (j + 1) << " "
                    << m(i, j) << "\n";
}

}  // namespace

void export_sdpa(const SdpProblem& problem, const std::string& path) {
    if (problem.blocks.empty()) throw ValueError("export_sdpa: problem has no blocks");
    std::ofstream out(path);
    if (!out) throw IoError("export_sdpa: cannot open " + path);
    out << std::setprecision(17);
    out << "* lipcert SDPA sparse export\n";
    out << "* convention: each block encodes F0 - sum_k z_k F_k >= 0; F0 here is the\n";
    out << "* negation of the internal F0 of the <= 0 form, the F_k are unchanged.\n";
    out << problem.num_vars << "\n";
    out << problem.blocks.size() << "\n";
    for (size_t j = 0; j < problem.blocks.size(); ++j) {
        const int size = problem.blocks[j].size;
        out << (size == 1 ? -1 : size) << (j + 1 < problem.blocks.size() ? " " : "\n");
    }
    for (int k = 0; k < problem.num_vars; ++k)
        out << problem.objective(k) << (k + 1 < problem.num_vars ? " " : "");
    out << "\n";
    for (size_t j = 0; j < problem.blocks.size(); ++j) {
        const Matrix f0_file = -problem.blocks[j].F0;
        write_entries(out, 0, static_cast<int>(j + 1), f0_file);
    }
    for (int k = 0; k < problem.num_vars; ++k)
        for (size_t j = 0; j < problem.blocks.size(); ++j)
            for (const auto& [var, coeff] : problem.blocks[j].terms)
                if (var == k) write_entries(out, k + 1, static_cast<int>(j + 1), coeff);
    if (!out) throw IoError("export_sdpa: write failed for " + path);
}

SdpaStructure parse_sdpa_structure(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("parse_sdpa_structure: cannot open " + path);
    SdpaStructure st;
    std::string line;
    int stage = 0;  // 0: mdim, 1: nblock, 2: sizes, 3: objective
    int nblock = 0;
    while (stage < 4 && std::getline(in, line)) {
        if (line.empty() || line[0] == '*' || line[0] == '"') continue;
        std::istringstream ss(line);
        switch (stage) {
            case 0:
                if (!(ss >> st.num_vars)) throw ParseError("sdpa: bad mDIM line");
                break;
            case 1:
                if (!(ss >> nblock)) throw ParseError("sdpa: bad nBLOCK line");
                break;
            case 2: {
                int v = 0;
                while (ss >> v) st.block_sizes.push_back(v);
                if (static_cast<int>(st.block_sizes.size()) != nblock)
                    throw ParseError("sdpa: block size count mismatch");
                break;
            }
            case 3: {
                st.objective.resize(st.num_vars);
                for (int k = 0; k < st.num_vars; ++k)
                    if (!(ss >> st.objective(k))) throw ParseError("sdpa: bad objective line");
                break;
            }
        }
        ++stage;
    }
    if (stage < 4) throw ParseError("sdpa: truncated file");
    return st;
}

SolveResult import_sdpa_solution(const std::string& path, const SdpProblem& problem,
                                 const SolverConfig& config) {
    std::ifstream in(path);
    if (!in) throw IoError("import_sdpa_solution: cannot open " + path);

    std::vector<double> values;
    bool have_dual = false;
    double dual_value = 0.0;
    bool in_xvec = false;
    std::string line;
    const auto collect_numbers = [&](const std::string& text) {
        std::string cleaned = text;
        for (char& c : cleaned)
            if (c == '{' || c == '}' || c == ',' || c == '=') c = ' ';
        std::istringstream ss(cleaned);
        double v = 0.0;
        while (static_cast<int>(values.size()) < problem.num_vars && ss >> v)
            values.push_back(v);
    };
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '*') continue;
        if (line.find("objValDual") != std::string::npos) {
            std::string cleaned = line.substr(line.find("objValDual") + 10);
            for (char& c : cleaned)
                if (c == '=' || c == ',') c = ' ';
            std::istringstream ss(cleaned);
            if (!(ss >> dual_value)) throw ParseError("import_sdpa_solution: bad objValDual");
            have_dual = true;
            continue;
        }
        const size_t xpos = line.find("xVec");
        if (xpos != std::string::npos) {
            in_xvec = true;
            collect_numbers(line.substr(xpos + 4));
            continue;
        }
        if (in_xvec && static_cast<int>(values.size()) < problem.num_vars)
            collect_numbers(line);
    }
    if (!in_xvec) throw ParseError("import_sdpa_solution: no xVec line found");
    if (static_cast<int>(values.size()) < problem.num_vars)
        throw ParseError("import_sdpa_solution: xVec holds " + std::to_string(values.size()) +
                         " of " + std::to_string(problem.num_vars) + " values");

    SolveResult result;
    result.z = Eigen::Map<const Vector>(values.data(), problem.num_vars);
    result.primal_obj = problem.objective.dot(result.z);

    double worst = 0.0;
    for (size_t j = 0; j < problem.blocks.size(); ++j) {
        const Matrix m = problem.block_value(static_cast<int>(j), result.z);
        Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
        worst = std::max(worst, es.eigenvalues().maxCoeff());
    }
    result.kkt.primal_feas = std::max(0.0, worst);
    result.kkt.dual_feas = 0.0;
    bool ok = result.kkt.primal_feas <= config.tol_feas;
    if (have_dual) {
        result.dual_obj = dual_value;
        result.kkt.gap =
            std::abs(result.primal_obj - dual_value) / (1.0 + std::abs(result.primal_obj));
        ok = ok && result.kkt.gap <= config.tol_gap;
    }
    result.status = ok ? SolveStatus::Optimal : SolveStatus::NumericalError;
    const int rho_idx = problem.var_index("rho");
    result.rho =
        rho_idx >= 0 ? result.z(rho_idx) : std::numeric_limits<double>::quiet_NaN();
    result.lipschitz_bound = bound_from_rho(problem.bound_semantics, result.rho);
    return result;
}

}  // namespace lipcert
