#include "lipcert/solver.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lipcert/errors.hpp"

// Homogeneous self-dual interior-point method for block-diagonal SDPs.
//
// The problem  min c'z  s.t.  F0_j + sum_k z_k F_kj <= 0  is treated as the
// conic dual pair with b = -c, A_kj = F_kj, C_j = -F0_j:
//   (P) min <C,X>  s.t. <A_k,X> = b_k, X >= 0
//   (D) max b'y    s.t. C - A*(y) = S >= 0          (y = z)
// The embedding carries (X, y, S, tau, kappa); tau -> positive recovers the
// optimum, kappa -> positive yields an infeasibility or unboundedness
// certificate. Search directions use Nesterov-Todd scaling with a Mehrotra
// predictor-corrector; every operation is deterministic.

namespace lipcert {

namespace {

constexpr double kStepFraction = 0.99;
constexpr double kMinStep = 1e-13;

struct BlockScaling {
    Matrix R;      // W = R R'
    Matrix Rinv;
    Vector sigma;  // common scaled spectrum of X and S
};

struct Direction {
    std::vector<Matrix> dX, dS, dXhat, dShat;
    Vector dy;
    double dtau = 0.0, dkappa = 0.0;
};

struct Workspace {
    const SdpProblem& problem;
    Vector b;                       // -c
    std::vector<Matrix> C;          // -F0 per block
    int m;                          // number of variables
    double norm_b, norm_c, norm_a;

    explicit Workspace(const SdpProblem& p) : problem(p), m(p.num_vars) {
        b = -p.objective;
        C.reserve(p.blocks.size());
        double c2 = 0.0, a2 = 0.0;
        for (const auto& blk : p.blocks) {
            C.push_back(-blk.F0);
            c2 += blk.F0.squaredNorm();
            for (const auto& [k, a] : blk.terms) a2 += a.squaredNorm();
        }
        norm_b = b.norm();
        norm_c = std::sqrt(c2);
        norm_a = std::sqrt(a2);
    }

    Vector apply_a(const std::vector<Matrix>& x) const {
        Vector out = Vector::Zero(m);
        for (size_t j = 0; j < problem.blocks.size(); ++j)
            for (const auto& [k, a] : problem.blocks[j].terms)
                out(k) += a.cwiseProduct(x[j]).sum();
        return out;
    }

    Matrix apply_at(int j, const Vector& y) const {
        Matrix out = Matrix::Zero(problem.blocks[j].size, problem.blocks[j].size);
        for (const auto& [k, a] : problem.blocks[j].terms) out += y(k) * a;
        return out;
    }

    double inner_c(const std::vector<Matrix>& x) const {
        double out = 0.0;
        for (size_t j = 0; j < C.size(); ++j) out += C[j].cwiseProduct(x[j]).sum();
        return out;
    }
};

double min_eig(const Matrix& m) {
    if (m.rows() == 1) return m(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double max_eig(const Matrix& m) { return -min_eig(-m); }

// Largest step keeping Sigma + alpha * Dhat >= 0 given the scaled direction.
double step_to_boundary(const Matrix& dhat, const Vector& sigma) {
    const int n = static_cast<int>(sigma.size());
    Matrix scaled(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            scaled(i, j) = dhat(i, j) / std::sqrt(sigma(i) * sigma(j));
    const double lmin = min_eig(symmetrize(scaled));
    if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
    return -1.0 / lmin;
}

bool compute_scaling(const Matrix& x, const Matrix& s, BlockScaling& out) {
    const int n = static_cast<int>(x.rows());
    Eigen::LLT<Matrix> lx(x), ls(s);
    if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
    const Matrix Lx = lx.matrixL();
    const Matrix Ls = ls.matrixL();
    Eigen::JacobiSVD<Matrix> svd(Ls.transpose() * Lx,
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.sigma = svd.singularValues();
    if (out.sigma.minCoeff() <= 0.0) return false;
    const Vector inv_sqrt = out.sigma.cwiseSqrt().cwiseInverse();
    out.R = Lx * svd.matrixV() * inv_sqrt.asDiagonal();
    // R^{-1} = sqrt(Sigma) V' Lx^{-1}
    Matrix lx_inv = Matrix::Identity(n, n);
    Lx.triangularView<Eigen::Lower>().solveInPlace(lx_inv);
    out.Rinv = out.sigma.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * lx_inv;
    return true;
}

}  // namespace

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::MaxIterations: return "max_iterations";
        case SolveStatus::NumericalError: return "numerical_error";
    }
    return "unknown";
}

bool psd_check(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) throw ValueError("psd_check: matrix must be square");
    if (sym_error(m) > 1e-12) throw ValueError("psd_check: matrix is not symmetric");
    return min_eig(symmetrize(m)) >= -tol;
}

SolveResult solve(const SdpProblem& problem, const SolverConfig& config) {
    if (config.backend != SolverBackend::Internal)
        throw ValueError("solve: only the internal backend solves; use export_sdpa");
    if (config.tol_gap <= 0.0 || config.tol_feas <= 0.0)
        throw ValueError("solve: tolerances must be positive");
    if (problem.blocks.empty()) throw ValueError("solve: problem has no blocks");
    for (const auto& blk : problem.blocks) {
        if (blk.size < 1 || blk.F0.rows() != blk.size || blk.F0.cols() != blk.size)
            throw DimensionError("solve: malformed block");
        for (const auto& [k, a] : blk.terms) {
            if (k < 0 || k >= problem.num_vars) throw DimensionError("solve: bad var index");
            if (a.rows() != blk.size || a.cols() != blk.size)
                throw DimensionError("solve: term size mismatch");
        }
    }

    const Workspace ws(problem);
    const int m = ws.m;
    const size_t nblocks = problem.blocks.size();
    double nu_total = 0.0;
    for (const auto& blk : problem.blocks) nu_total += blk.size;

    // Identity interior start.
    std::vector<Matrix> X, S;
    for (const auto& blk : problem.blocks) {
        X.push_back(Matrix::Identity(blk.size, blk.size));
        S.push_back(Matrix::Identity(blk.size, blk.size));
    }
    Vector y = Vector::Zero(m);
    double tau = 1.0, kappa = 1.0;

    SolveResult result;
    result.z = Vector::Zero(m);

    // Once an iterate has met the requested tolerances its result is kept;
    // later numerical trouble during polishing falls back to it.
    const auto finish = [&](SolveStatus status) {
        if (result.status != SolveStatus::Optimal) result.status = status;
        return result;
    };

    const auto z_feas = [&](const Vector& z) {
        double worst = 0.0;
        for (size_t j = 0; j < nblocks; ++j)
            worst = std::max(worst, max_eig(problem.block_value(static_cast<int>(j), z)));
        return worst;
    };

    std::vector<BlockScaling> scal(nblocks);
    std::vector<std::vector<Matrix>> Ahat(nblocks);
    std::vector<Matrix> Chat(nblocks), rd(nblocks), rdhat(nblocks);

    const bool trace = std::getenv("LIPCERT_SOLVER_TRACE") != nullptr;
    double last_mu = std::numeric_limits<double>::infinity();
    int polish_iters = 0;

    for (int iter = 0; iter < config.max_iters; ++iter) {
        result.iterations = iter;

        // Residuals of the embedding.
        const Vector rp = ws.apply_a(X) - ws.b * tau;
        double gap_inner = 0.0;
        for (size_t j = 0; j < nblocks; ++j) {
            rd[j] = -ws.apply_at(static_cast<int>(j), y) - S[j] + ws.C[j] * tau;
            gap_inner += X[j].cwiseProduct(S[j]).sum();
        }
        const double cx = ws.inner_c(X);
        const double by = ws.b.dot(y);
        const double rg = cx - by + kappa;
        const double mu = (gap_inner + tau * kappa) / (nu_total + 1.0);

        if (!std::isfinite(mu) || !std::isfinite(rg)) return finish(SolveStatus::NumericalError);

        // Optimality test on the scaled-back point z = y / tau. Residuals are
        // normalized backward-error style (relative to data and iterate
        // magnitudes). Past the requested tolerances the loop keeps polishing
        // toward machine precision while mu still shrinks, so the reported
        // optimum is usually far tighter than asked; a stalled-but-converged
        // point is accepted as is.
        {
            const Vector z = y / tau;
            const double pobj = problem.objective.dot(z);
            double xnorm2 = 0.0;
            for (const auto& x : X) xnorm2 += x.squaredNorm();
            const double xnorm = std::sqrt(xnorm2);
            const double pres =
                rp.norm() / (tau * (1.0 + ws.norm_b) + ws.norm_a * xnorm);
            double rd2 = 0.0;
            for (const auto& r : rd) rd2 += r.squaredNorm();
            const double dres = std::sqrt(rd2) /
                                (tau * (1.0 + ws.norm_c) + ws.norm_a * y.norm());
            const double gap_abs = gap_inner / (tau * tau);
            const double zf = z_feas(z);
            const double gap_tol = config.tol_gap * (1.0 + std::abs(pobj));
            const bool converged = pres <= config.tol_feas && dres <= config.tol_feas &&
                                   zf <= config.tol_feas && gap_abs <= gap_tol;
            if (trace)
                std::fprintf(stderr,
                             "iter %3d mu=%9.2e pres=%9.2e dres=%9.2e zfeas=%9.2e "
                             "gap=%9.2e tau=%9.2e kappa=%9.2e |X|/tau=%9.2e |z|=%9.2e\n",
                             iter, mu, pres, dres, zf, gap_abs, tau, kappa, xnorm / tau,
                             z.norm());
            if (converged) {
                result.z = z;
                result.primal_obj = pobj;
                result.dual_obj = -cx / tau;
                result.kkt.primal_feas = zf;
                result.kkt.dual_feas = pres;
                result.kkt.gap = gap_abs / (1.0 + std::abs(pobj));
                const int rho_idx = problem.var_index("rho");
                result.rho = rho_idx >= 0 ? z(rho_idx) : std::numeric_limits<double>::quiet_NaN();
                result.lipschitz_bound = bound_from_rho(problem.bound_semantics, result.rho);
                result.status = SolveStatus::Optimal;
                ++polish_iters;
                const bool tight = gap_abs <= 1e-4 * gap_tol && zf <= 0.01 * config.tol_feas;
                const bool stalled = mu > 0.5 * last_mu || polish_iters >= 20;
                if (tight || stalled) return finish(SolveStatus::Optimal);
            }
            last_mu = mu;
        }

        // Infeasibility certificates. A ray X with A(X) = 0, <C,X> < 0 proves
        // the LMI system empty; a ray y with A*(y) <= 0, b'y > 0 proves the
        // objective unbounded below.
        if (result.status != SolveStatus::Optimal &&
            cx < -1e-12 * (1.0 + ws.norm_c)) {
            const double scale = -cx;
            const Vector ar = ws.apply_a(X) / scale;
            double xnorm = 0.0;
            for (const auto& x : X) xnorm += x.squaredNorm();
            xnorm = std::sqrt(xnorm) / scale;
            if (ar.lpNorm<Eigen::Infinity>() <= config.tol_feas * (1.0 + xnorm)) {
                result.kkt.dual_feas = ar.lpNorm<Eigen::Infinity>();
                result.primal_obj = std::numeric_limits<double>::infinity();
                return finish(SolveStatus::Infeasible);
            }
        }
        if (result.status != SolveStatus::Optimal && by > 1e-12 * (1.0 + ws.norm_b)) {
            double res2 = 0.0;
            double snorm = 0.0;
            for (size_t j = 0; j < nblocks; ++j) {
                res2 += (ws.apply_at(static_cast<int>(j), y) + S[j]).squaredNorm();
                snorm += S[j].squaredNorm();
            }
            const double ynorm = (y.norm() + std::sqrt(snorm)) / by;
            if (std::sqrt(res2) / by <= config.tol_feas * (1.0 + ynorm)) {
                result.kkt.dual_feas = std::sqrt(res2) / by;
                result.primal_obj = -std::numeric_limits<double>::infinity();
                return finish(SolveStatus::Unbounded);
            }
        }

        // Nesterov-Todd scaling and scaled data.
        for (size_t j = 0; j < nblocks; ++j) {
            if (!compute_scaling(X[j], S[j], scal[j])) return finish(SolveStatus::NumericalError);
            const Matrix& R = scal[j].R;
            Ahat[j].clear();
            Ahat[j].reserve(problem.blocks[j].terms.size());
            for (const auto& [k, a] : problem.blocks[j].terms)
                Ahat[j].push_back(symmetrize(R.transpose() * a * R));
            Chat[j] = symmetrize(R.transpose() * ws.C[j] * R);
            rdhat[j] = symmetrize(R.transpose() * rd[j] * R);
        }

        // Schur complement M = A(W A*(.) W), u = A(WCW), cWc = <C, WCW>.
        Matrix M = Matrix::Zero(m, m);
        Vector u = Vector::Zero(m);
        double cWc = 0.0;
        for (size_t j = 0; j < nblocks; ++j) {
            const auto& terms = problem.blocks[j].terms;
            for (size_t a = 0; a < terms.size(); ++a) {
                const int ka = terms[a].first;
                u(ka) += Ahat[j][a].cwiseProduct(Chat[j]).sum();
                for (size_t bb = 0; bb <= a; ++bb) {
                    const int kb = terms[bb].first;
                    const double v = Ahat[j][a].cwiseProduct(Ahat[j][bb]).sum();
                    M(ka, kb) += v;
                    if (ka != kb) M(kb, ka) += v;
                }
            }
            cWc += Chat[j].squaredNorm();
        }
        Eigen::LDLT<Matrix> mldlt;
        if (m > 0) {
            mldlt.compute(M);
            Vector probe = mldlt.solve(ws.b);
            if (mldlt.info() != Eigen::Success || !probe.allFinite()) {
                const double ridge = 1e-12 * (1.0 + M.diagonal().maxCoeff());
                mldlt.compute(M + ridge * Matrix::Identity(m, m));
                if (mldlt.info() != Eigen::Success) return finish(SolveStatus::NumericalError);
            }
        }

        // Schur solves lose digits once M is ill-conditioned near the optimum;
        // two rounds of iterative refinement keep the directions usable.
        const auto refined_solve = [&](const Vector& rhs) -> Vector {
            Vector v = mldlt.solve(rhs);
            for (int round = 0; round < 2; ++round) {
                const Vector residual = rhs - M * v;
                if (!residual.allFinite()) break;
                v += mldlt.solve(residual);
            }
            return v;
        };

        const Vector v2 = m > 0 ? refined_solve(u + ws.b) : Vector();

        // One Newton solve; `corr` carries the Mehrotra second-order terms.
        const auto newton = [&](double sigma_mu, const std::vector<Matrix>* corr_x,
                                double corr_tk) -> Direction {
            Direction dir;
            dir.dX.resize(nblocks);
            dir.dS.resize(nblocks);
            dir.dXhat.resize(nblocks);
            dir.dShat.resize(nblocks);
            std::vector<Matrix> K(nblocks);
            Vector r1 = -rp;
            double r2 = -rg - (sigma_mu - tau * kappa - corr_tk) / tau;
            for (size_t j = 0; j < nblocks; ++j) {
                const Vector& sg = scal[j].sigma;
                const int n = static_cast<int>(sg.size());
                Matrix rhs = -Matrix(sg.cwiseProduct(sg).asDiagonal());
                rhs.diagonal().array() += sigma_mu;
                if (corr_x) rhs -= (*corr_x)[j];
                K[j].resize(n, n);
                for (int i = 0; i < n; ++i)
                    for (int i2 = 0; i2 < n; ++i2)
                        K[j](i, i2) = rhs(i, i2) * 2.0 / (sg(i) + sg(i2));
                for (size_t a = 0; a < Ahat[j].size(); ++a) {
                    const int k = problem.blocks[j].terms[a].first;
                    r1(k) -= Ahat[j][a].cwiseProduct(K[j] - rdhat[j]).sum();
                }
                r2 -= Chat[j].cwiseProduct(K[j] - rdhat[j]).sum();
            }
            const Vector v1 = m > 0 ? refined_solve(r1) : Vector();
            const double denom =
                (m > 0 ? (u - ws.b).dot(v2) : 0.0) - cWc - kappa / tau;
            dir.dtau = (r2 - (m > 0 ? (u - ws.b).dot(v1) : 0.0)) / denom;
            dir.dy = m > 0 ? Vector(v1 + v2 * dir.dtau) : Vector();
            dir.dkappa = (sigma_mu - tau * kappa - corr_tk) / tau - (kappa / tau) * dir.dtau;
            for (size_t j = 0; j < nblocks; ++j) {
                dir.dS[j] = -ws.apply_at(static_cast<int>(j), dir.dy) + ws.C[j] * dir.dtau +
                            rd[j];
                dir.dShat[j] = symmetrize(scal[j].R.transpose() * dir.dS[j] * scal[j].R);
                dir.dXhat[j] = K[j] - dir.dShat[j];
                dir.dX[j] = symmetrize(scal[j].R * dir.dXhat[j] * scal[j].R.transpose());
            }
            return dir;
        };

        const auto max_step = [&](const Direction& dir) {
            double alpha = std::numeric_limits<double>::infinity();
            for (size_t j = 0; j < nblocks; ++j) {
                alpha = std::min(alpha, step_to_boundary(dir.dXhat[j], scal[j].sigma));
                alpha = std::min(alpha, step_to_boundary(dir.dShat[j], scal[j].sigma));
            }
            if (dir.dtau < 0.0) alpha = std::min(alpha, -tau / dir.dtau);
            if (dir.dkappa < 0.0) alpha = std::min(alpha, -kappa / dir.dkappa);
            return alpha;
        };

        // Predictor.
        const Direction aff = newton(0.0, nullptr, 0.0);
        const double alpha_aff = std::min(1.0, max_step(aff));

        double gap_aff = (tau + alpha_aff * aff.dtau) * (kappa + alpha_aff * aff.dkappa);
        for (size_t j = 0; j < nblocks; ++j)
            gap_aff += (X[j] + alpha_aff * aff.dX[j])
                           .cwiseProduct(S[j] + alpha_aff * aff.dS[j])
                           .sum();
        const double mu_aff = gap_aff / (nu_total + 1.0);
        double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3);
        sigma = std::min(1.0, std::max(sigma, 0.0));

        // Corrector.
        std::vector<Matrix> corr(nblocks);
        for (size_t j = 0; j < nblocks; ++j)
            corr[j] = symmetrize(aff.dXhat[j] * aff.dShat[j]);
        const Direction dir = newton(sigma * mu, &corr, aff.dtau * aff.dkappa);

        double alpha = kStepFraction * max_step(dir);
        alpha = std::min(alpha, 1.0);
        if (!(alpha > kMinStep)) return finish(SolveStatus::NumericalError);

        for (size_t j = 0; j < nblocks; ++j) {
            X[j] += alpha * dir.dX[j];
            S[j] += alpha * dir.dS[j];
        }
        if (m > 0) y += alpha * dir.dy;
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;
        if (tau <= 0.0 || kappa <= 0.0) return finish(SolveStatus::NumericalError);
    }

    // Report the best-effort point so callers can inspect it.
    if (result.status != SolveStatus::Optimal) {
        result.z = y / tau;
        result.primal_obj = problem.objective.dot(result.z);
        result.kkt.primal_feas = z_feas(result.z);
    }
    return finish(SolveStatus::MaxIterations);
}

}  // namespace lipcert
