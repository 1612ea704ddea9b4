#include "lipcert/sdp.hpp"

#include <cmath>
#include <limits>

#include "lipcert/errors.hpp"

namespace lipcert {

int SdpProblem::var_index(const std::string& name) const {
    for (size_t i = 0; i < var_names.size(); ++i)
        if (var_names[i] == name) return static_cast<int>(i);
    return -1;
}

void SdpProblem::add_nonnegativity(int var) {
    AffineLmiBlock block;
    block.size = 1;
    block.F0 = Matrix::Zero(1, 1);
    Matrix coeff(1, 1);
    coeff(0, 0) = -1.0;
    block.terms.emplace_back(var, coeff);
    blocks.push_back(std::move(block));
}

Matrix SdpProblem::block_value(int block_index, const Vector& z) const {
    const AffineLmiBlock& block = blocks.at(block_index);
    Matrix m = block.F0;
    for (const auto& [var, coeff] : block.terms) m += z(var) * coeff;
    return m;
}

double bound_from_rho(BoundSemantics semantics, double rho) {
    switch (semantics) {
        case BoundSemantics::SqrtRhoL2:
        case BoundSemantics::SqrtRhoL2Residual:
        case BoundSemantics::SqrtRhoL2Deq:
            return std::sqrt(std::max(rho, 0.0));
        case BoundSemantics::RhoLinfL1:
            return rho;
        case BoundSemantics::ExpHalfRhoL2Node:
            return std::exp(0.5 * rho);
        case BoundSemantics::Feasibility:
            return std::numeric_limits<double>::quiet_NaN();
    }
    throw ValueError("bad bound semantics");
}

}  // namespace lipcert
