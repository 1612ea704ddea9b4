#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "lipcert/model.hpp"

namespace lipcert {

enum class Method { Mp, Sample, Fgl, NormEq, NsrL2, NsrLinf, Rr };
enum class NormKind { L2, LinfL1 };

const char* to_string(Method method);
const char* to_string(NormKind norm);

struct BoundReport {
    Method method = Method::Mp;
    double value = 0.0;
    NormKind norm = NormKind::L2;
    double runtime_seconds = 0.0;
    bool lower_bound = false;  // Sample entries are lower bounds, the rest upper
    std::map<std::string, double> metadata;
};

// Largest singular value. Power iteration on W'W with a deterministic start
// for larger matrices, full SVD below the crossover; zero matrices
// short-circuit to 0. Throws ConvergenceError past 1e4 iterations.
double spectral_norm(const Matrix& w, double tol = 1e-10);

// Product of per-layer spectral norms (feedforward), the residual variant
// prod(1 + |G_i| |W_i|), or |H1| + |G1| |W1| for the single-layer residual.
BoundReport mp_bound(const Model& model);

// Max Jacobian norm over sampled inputs: sigma_max for L2, l1 row norm of the
// selected output for LinfL1. Implicit models need allow_pairs = true and use
// forward-difference pair ratios (L2 only).
BoundReport sample_lower_bound(const Model& model, NormKind norm, int n_samples,
                               std::uint64_t seed, int label = -1, bool allow_pairs = false);

// Exact maximum of |W_l P_{l-1} ... P_1 W_1| over all per-layer block
// activation patterns (permutations for sorting activations, {I, I-2vv'} per
// group for Householder). Throws TooLargeError past the enumeration guard.
BoundReport fgl_bound(const Model& model, NormKind norm, int label = -1,
                      std::int64_t guard = 10000000);

BoundReport norm_eq_bound(double l2_bound, int n0);

}  // namespace lipcert
