#pragma once

#include "lipcert/sdp.hpp"

namespace lipcert {

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIterations, NumericalError };

enum class SolverBackend { Internal, SdpaExport };

struct SolverConfig {
    double tol_gap = 1e-8;
    double tol_feas = 1e-8;
    int max_iters = 200;
    SolverBackend backend = SolverBackend::Internal;
};

struct KktResiduals {
    double primal_feas = 0.0;  // max over blocks of lambda_max(F0 + sum z F)
    double dual_feas = 0.0;    // certificate-side equality residual
    double gap = 0.0;          // relative duality gap
};

struct SolveResult {
    SolveStatus status = SolveStatus::NumericalError;
    Vector z;
    double rho = std::numeric_limits<double>::quiet_NaN();
    double lipschitz_bound = std::numeric_limits<double>::quiet_NaN();
    double primal_obj = std::numeric_limits<double>::quiet_NaN();
    double dual_obj = std::numeric_limits<double>::quiet_NaN();
    KktResiduals kkt;
    int iterations = 0;
};

const char* to_string(SolveStatus status);

// Minimizes objective . z subject to the problem's affine LMI blocks with a
// primal-dual path-following interior-point method (Nesterov-Todd scaling,
// homogeneous self-dual embedding for infeasibility detection). Deterministic:
// identical problem and config give an identical iterate path.
SolveResult solve(const SdpProblem& problem, const SolverConfig& config = {});

// True iff lambda_min(M) >= -tol. Throws ValueError when M is asymmetric
// beyond 1e-12.
bool psd_check(const Matrix& m, double tol);

}  // namespace lipcert
