#pragma once

#include <cstdint>

#include "lipcert/linalg.hpp"
#include "lipcert/model.hpp"

namespace lipcert {

enum class QcKind { GroupSort, Householder };

// Decision-variable vectors of the activation quadratic constraints. lambda
// must be entrywise nonnegative; gamma, nu, tau are free in sign.
struct MultiplierParams {
    Vector lambda, gamma, nu, tau;  // each of length N (number of groups)
    int group_size = 2;
    QcKind kind = QcKind::GroupSort;
    Vector householder_v;  // Householder only

    int num_groups() const { return static_cast<int>(lambda.size()); }
    int dimension() const { return num_groups() * group_size; }
};

struct TspMatrices {
    Matrix T, S, P;
};

struct QcBlock {
    Matrix X;  // size 2*N*n_g, [[T-2S, P+S], [P+S, -T-2P]]
};

// T = diag(lambda) (x) I + diag(gamma) (x) B, P = diag(nu) (x) B,
// S = diag(tau) (x) B with B = 11' (GroupSort) or I - vv' (Householder).
TspMatrices build_tsp(const MultiplierParams& params);

QcBlock qc_block(const TspMatrices& tsp);

// Slope-restricted [0,1] constraint block [[0, T], [T, -2T]], T diagonal >= 0.
QcBlock qc_slope_restricted(const Matrix& T);

// Quadratic form [x-y; phi(x)-phi(y)]' X [x-y; phi(x)-phi(y)] normalized by
// the squared norm of the stacked difference (0 when the difference is 0).
double qc_value(const ActivationSpec& activation, const QcBlock& block, const Vector& x,
                const Vector& y);

struct QcSampleResult {
    double min_value = 0.0;
    Vector witness_x, witness_y;
};

// Minimum normalized QC value over `trials` sampled pairs with the given
// fixed multipliers. Deterministic for a fixed seed.
QcSampleResult verify_qc_sample(const ActivationSpec& activation, const MultiplierParams& params,
                                int trials, std::uint64_t seed);

// Lemma-style suite: every trial draws fresh multipliers (lambda >= 0) and a
// fresh pair, returning the worst normalized QC value seen.
QcSampleResult run_qc_suite(const ActivationSpec& activation, int num_groups, int trials,
                            std::uint64_t seed);

// Draws random multipliers (lambda ~ |normal|, others ~ normal).
MultiplierParams random_multipliers(Rng& rng, int num_groups, int group_size, QcKind kind,
                                    const Vector& householder_v = Vector());

}  // namespace lipcert
