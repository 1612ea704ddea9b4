#pragma once

#include <string>
#include <vector>

#include "lipcert/sdp.hpp"
#include "lipcert/solver.hpp"

namespace lipcert {

// Writes the problem in SDPA sparse format (.dat-s). The file encodes the
// constraint system as  F0_file - sum_k z_k F_k_file >= 0  per block, obtained
// from our  F0 + sum_k z_k F_k <= 0  by negating F0 only; the header comment
// in the file restates this convention.
void export_sdpa(const SdpProblem& problem, const std::string& path);

struct SdpaStructure {
    int num_vars = 0;
    std::vector<int> block_sizes;  // negative = diagonal block
    Vector objective;
};

// Reads back the structural metadata of a .dat-s file (round-trip checks).
SdpaStructure parse_sdpa_structure(const std::string& path);

// Reads an external solver's solution file. Expected layout (documented in
// the README, with a golden example under tests/fixtures):
//   * comment lines start with '*'
//   xVec = {v1, v2, ..., vm}
//   objValDual = <value>          (optional)
// KKT residuals are recomputed locally from the problem data; the file's
// claims are never trusted. A feasibility violation above tol downgrades the
// status to NumericalError, as does a recomputed duality gap above tol when
// objValDual is present.
SolveResult import_sdpa_solution(const std::string& path, const SdpProblem& problem,
                                 const SolverConfig& config = {});

}  // namespace lipcert
