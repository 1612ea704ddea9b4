#pragma once

#include "lipcert/model.hpp"
#include "lipcert/sdp.hpp"

namespace lipcert {

// Decision-variable budget per activation layer. Neuron2 carries (lambda,
// gamma) per group, Neuron1 drops gamma, Layer2 shares one (lambda, gamma)
// pair across a layer's groups, Layer1 keeps a single lambda per layer
// (certifying exactly the product of spectral norms).
enum class MultiplierClass { Neuron2, Neuron1, Layer2, Layer1 };

MultiplierClass multiplier_class_from_string(const std::string& s);
const char* to_string(MultiplierClass mclass);

// l2 -> l2 feedforward certification. decomposed = true emits the layer-wise
// chain W1'T1W1 <= rho I, Wi'TiWi <= T_{i-1}, Wl'Wl <= T_{l-1} (S = P = 0);
// decomposed = false emits the single dense inequality with free (S, P).
SdpProblem assemble_l2_feedforward(const Model& model, MultiplierClass mclass,
                                   bool decomposed);

// linf -> l1 certification of the scalar output selected by `label` (a row of
// the final weight matrix), in the decoupled form with T0 = diag(mu).
SdpProblem assemble_linf(const Model& model, int label, MultiplierClass mclass);

// l2 residual certification. zero_s / zero_p drop the S / P multipliers; the
// multi-layer form forbids dropping both.
SdpProblem assemble_l2_residual(const Model& model, bool zero_s = true, bool zero_p = false);

// MaxMin layers rewritten as residual ReLU blocks and certified with the
// slope-restricted constraint (the conservative comparison baseline).
SdpProblem assemble_rr(const Model& model);

// Deq well-posedness: feasibility of the contraction inequality with weight
// Pi (strictness enforced by fixed margins).
SdpProblem assemble_deq_wellposed(const Model& model);

// Deq Lipschitz bound; requires well-posedness to be certified beforehand or
// explicitly waived.
SdpProblem assemble_deq_lipschitz(const Model& model, bool wellposed_established);

// Neural ODE flow-map bound exp(rho / 2); rho may be negative.
SdpProblem assemble_node_lipschitz(const Model& model);

}  // namespace lipcert
