#include "lipcert/qc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lipcert/errors.hpp"

namespace lipcert {

namespace {

Matrix group_basis(const MultiplierParams& params) {
    const int n_g = params.group_size;
    if (params.kind == QcKind::Householder) {
        if (params.householder_v.size() != n_g)
            throw DimensionError("build_tsp: householder v length must equal group size");
        return Matrix::Identity(n_g, n_g) -
               params.householder_v * params.householder_v.transpose();
    }
    return Matrix::Ones(n_g, n_g);
}

Matrix kron_diag(const Vector& coeffs, const Matrix& block) {
    const int n_g = static_cast<int>(block.rows());
    const int n = static_cast<int>(coeffs.size()) * n_g;
    Matrix out = Matrix::Zero(n, n);
    for (int g = 0; g < coeffs.size(); ++g)
        out.block(g * n_g, g * n_g, n_g, n_g) = coeffs(g) * block;
    return out;
}

}  // namespace

TspMatrices build_tsp(const MultiplierParams& params) {
    const int N = params.num_groups();
    if (params.gamma.size() != N || params.nu.size() != N || params.tau.size() != N)
        throw DimensionError("build_tsp: multiplier vectors must share length N");
    for (int i = 0; i < N; ++i)
        if (params.lambda(i) < 0.0)
            throw ValueError("build_tsp: lambda must be entrywise nonnegative");
    const Matrix basis = group_basis(params);
    TspMatrices tsp;
    tsp.T = kron_diag(params.lambda, Matrix::Identity(params.group_size, params.group_size)) +
            kron_diag(params.gamma, basis);
    tsp.P = kron_diag(params.nu, basis);
    tsp.S = kron_diag(params.tau, basis);
    return tsp;
}

QcBlock qc_block(const TspMatrices& tsp) {
    const int n = static_cast<int>(tsp.T.rows());
    if (tsp.S.rows() != n || tsp.P.rows() != n || tsp.T.cols() != n || tsp.S.cols() != n ||
        tsp.P.cols() != n)
        throw DimensionError("qc_block: T, S, P must be square with equal sizes");
    QcBlock block;
    block.X.resize(2 * n, 2 * n);
    block.X.topLeftCorner(n, n) = tsp.T - 2.0 * tsp.S;
    block.X.topRightCorner(n, n) = tsp.P + tsp.S;
    block.X.bottomLeftCorner(n, n) = tsp.P + tsp.S;
    block.X.bottomRightCorner(n, n) = -tsp.T - 2.0 * tsp.P;
    return block;
}

QcBlock qc_slope_restricted(const Matrix& T) {
    const int n = static_cast<int>(T.rows());
    if (T.cols() != n) throw DimensionError("qc_slope_restricted: T must be square");
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            if (i != j && T(i, j) != 0.0)
                throw ValueError("qc_slope_restricted: T must be diagonal");
        if (T(i, i) < 0.0)
            throw ValueError("qc_slope_restricted: T must have a nonnegative diagonal");
    }
    QcBlock block;
    block.X = Matrix::Zero(2 * n, 2 * n);
    block.X.topRightCorner(n, n) = T;
    block.X.bottomLeftCorner(n, n) = T;
    block.X.bottomRightCorner(n, n) = -2.0 * T;
    return block;
}

double qc_value(const ActivationSpec& activation, const QcBlock& block, const Vector& x,
                const Vector& y) {
    const Vector dx = x - y;
    const Vector dphi = activation.apply(x) - activation.apply(y);
    Vector q(dx.size() + dphi.size());
    q << dx, dphi;
    const double norm2 = q.squaredNorm();
    if (norm2 == 0.0) return 0.0;
    return q.dot(block.X * q) / norm2;
}

QcSampleResult verify_qc_sample(const ActivationSpec& activation, const MultiplierParams& params,
                                int trials, std::uint64_t seed) {
    if (trials < 1) throw ValueError("verify_qc_sample: trials must be >= 1");
    const QcBlock block = qc_block(build_tsp(params));
    const int n = params.dimension();
    Rng rng(seed);
    QcSampleResult result;
    result.min_value = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        const double radius = rng.log_uniform(1e-2, 1e2);
        const Vector x = radius * random_normal_vector(rng, n);
        const Vector y = radius * random_normal_vector(rng, n);
        const double value = qc_value(activation, block, x, y);
        if (value < result.min_value) {
            result.min_value = value;
            result.witness_x = x;
            result.witness_y = y;
        }
    }
    return result;
}

MultiplierParams random_multipliers(Rng& rng, int num_groups, int group_size, QcKind kind,
                                    const Vector& householder_v) {
    MultiplierParams params;
    params.group_size = group_size;
    params.kind = kind;
    params.householder_v = householder_v;
    params.lambda.resize(num_groups);
    params.gamma.resize(num_groups);
    params.nu.resize(num_groups);
    params.tau.resize(num_groups);
    for (int i = 0; i < num_groups; ++i) {
        params.lambda(i) = std::abs(rng.normal());
        params.gamma(i) = rng.normal();
        params.nu(i) = rng.normal();
        params.tau(i) = rng.normal();
    }
    return params;
}

QcSampleResult run_qc_suite(const ActivationSpec& activation, int num_groups, int trials,
                            std::uint64_t seed) {
    if (trials < 1) throw ValueError("run_qc_suite: trials must be >= 1");
    const bool is_householder = activation.kind == ActivationKind::Householder;
    const QcKind kind = is_householder ? QcKind::Householder : QcKind::GroupSort;
    const int n_g = activation.group_size;
    Rng master(seed);
    QcSampleResult result;
    result.min_value = std::numeric_limits<double>::infinity();
    constexpr int kChunk = 256;
    const int chunks = (trials + kChunk - 1) / kChunk;
    for (int c = 0; c < chunks; ++c) {
        Rng rng = master.split(static_cast<std::uint64_t>(c));
        const int todo = std::min(kChunk, trials - c * kChunk);
        for (int t = 0; t < todo; ++t) {
            const MultiplierParams params = random_multipliers(
                rng, num_groups, n_g, kind, activation.householder_v);
            const QcBlock block = qc_block(build_tsp(params));
            const double radius = rng.log_uniform(1e-2, 1e2);
            const int n = num_groups * n_g;
            const Vector x = radius * random_normal_vector(rng, n);
            const Vector y = radius * random_normal_vector(rng, n);
            const double value = qc_value(activation, block, x, y);
            if (value < result.min_value) {
                result.min_value = value;
                result.witness_x = x;
                result.witness_y = y;
            }
        }
    }
    return result;
}

}  // namespace lipcert
