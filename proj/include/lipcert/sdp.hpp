#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lipcert/linalg.hpp"

namespace lipcert {

// How the optimal rho converts into the reported Lipschitz bound.
enum class BoundSemantics {
    SqrtRhoL2,          // feedforward l2, sqrt(rho)
    RhoLinfL1,          // scalar-output linf -> l1, rho itself
    SqrtRhoL2Residual,  // residual l2, sqrt(rho)
    SqrtRhoL2Deq,       // deq l2, sqrt(rho)
    ExpHalfRhoL2Node,   // neural ode, exp(rho / 2); rho may be negative
    Feasibility,        // no bound; solver status carries the answer
};

// One affine matrix inequality F0 + sum_k z_k F_k <= 0 over the shared
// decision vector z. All matrices are symmetric.
struct AffineLmiBlock {
    int size = 0;
    Matrix F0;
    std::vector<std::pair<int, Matrix>> terms;
};

struct SdpProblem {
    int num_vars = 0;
    Vector objective;  // minimize objective . z
    std::vector<AffineLmiBlock> blocks;
    std::vector<std::string> var_names;
    BoundSemantics bound_semantics = BoundSemantics::SqrtRhoL2;

    int var_index(const std::string& name) const;  // -1 when absent

    // Appends the 1x1 block  -z_k <= 0  encoding a sign constraint.
    void add_nonnegativity(int var);

    // F0 + sum_k z_k F_k for one block.
    Matrix block_value(int block_index, const Vector& z) const;
};

double bound_from_rho(BoundSemantics semantics, double rho);

}  // namespace lipcert
