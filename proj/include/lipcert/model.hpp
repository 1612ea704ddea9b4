#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lipcert/linalg.hpp"

namespace lipcert {

enum class ActivationKind { ReLU, GroupSort, MaxMin, FullSort, Householder };

struct ActivationSpec {
    ActivationKind kind = ActivationKind::MaxMin;
    int group_size = 2;
    Vector householder_v;  // Householder only, unit norm

    bool is_groupsort_family() const {
        return kind == ActivationKind::GroupSort || kind == ActivationKind::MaxMin ||
               kind == ActivationKind::FullSort;
    }
    // Effective group size when applied to a vector of the given width.
    int group_size_for(int width) const {
        return kind == ActivationKind::FullSort ? width : group_size;
    }
    Vector apply(const Vector& x) const;
    Matrix jacobian_at(const Vector& x) const;
};

struct Layer {
    Matrix W;
    Vector b;
    std::optional<Matrix> G;  // residual architectures only
};

enum class Arch { Feedforward, Residual, SingleLayerResidual, Deq, NeuralOde };

struct DeqParams {
    Matrix W, U, Wo;
    Vector bz, by;
};

struct NodeParams {
    Matrix G, W0;
    Vector W1, b0, b1;
    double t_final = 1.0;
};

struct SingleResParams {
    Matrix H1, G1, W1;
    Vector b1;
};

struct Model {
    Arch arch = Arch::Feedforward;
    ActivationSpec activation;
    std::vector<Layer> layers;     // Feedforward / Residual
    DeqParams deq;                 // Deq
    NodeParams node;               // NeuralOde
    SingleResParams single_res;    // SingleLayerResidual

    int input_width() const;
    int output_width() const;
    // Number of affine layers l for explicit archs (activations sit between).
    int depth() const { return static_cast<int>(layers.size()); }
};

struct Jacobian {
    Matrix matrix;
};

// Parses and validates the JSON model format; throws ParseError /
// DimensionError / ValueError on contract violations.
Model load_model(const std::string& path);
Model model_from_json_text(const std::string& text);

// Validates an in-memory model (dimension chaining, group sizes, unit v).
void validate_model(const Model& model);

Vector forward(const Model& model, const Vector& x);

// Exact Jacobian at x for explicit models; throws UnsupportedError for
// Deq / NeuralOde (use jacobian_fd for those, at the caller's risk).
Jacobian jacobian(const Model& model, const Vector& x);

// Central finite differences; works for every architecture.
Jacobian jacobian_fd(const Model& model, const Vector& x, double step = 1e-5);

// Deq fixed point via damped Picard iteration (alpha = 0.5, tol 1e-10).
Vector deq_fixed_point(const Model& model, const Vector& x);

}  // namespace lipcert
