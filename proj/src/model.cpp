#include "lipcert/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lipcert/activations.hpp"
#include "lipcert/errors.hpp"

namespace lipcert {

using nlohmann::json;

namespace {

constexpr double kDeqTol = 1e-10;
constexpr double kDeqDamping = 0.5;
constexpr int kDeqMaxIters = 100000;
constexpr double kNodeStep = 0.01;

void check_finite(const Matrix& m, const std::string& name) {
    if (!m.allFinite()) throw ValueError("non-finite entries in " + name);
}

Matrix parse_matrix(const json& j, const std::string& name) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw ParseError(name + " must be a non-empty array of rows");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j.front().size());
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const auto& row = j.at(i);
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw ParseError(name + " has ragged rows");
        for (int k = 0; k < cols; ++k) {
            if (!row.at(k).is_number()) throw ParseError(name + " has a non-numeric entry");
            m(i, k) = row.at(k).get<double>();
        }
    }
    check_finite(m, name);
    return m;
}

Vector parse_vector(const json& j, const std::string& name) {
    if (!j.is_array()) throw ParseError(name + " must be an array");
    Vector v(static_cast<int>(j.size()));
    for (int i = 0; i < v.size(); ++i) {
        if (!j.at(i).is_number()) throw ParseError(name + " has a non-numeric entry");
        v(i) = j.at(i).get<double>();
    }
    if (!v.allFinite()) throw ValueError("non-finite entries in " + name);
    return v;
}

ActivationKind parse_kind(const std::string& s) {
    if (s == "relu") return ActivationKind::ReLU;
    if (s == "groupsort") return ActivationKind::GroupSort;
    if (s == "maxmin") return ActivationKind::MaxMin;
    if (s == "fullsort") return ActivationKind::FullSort;
    if (s == "householder") return ActivationKind::Householder;
    throw ParseError("unknown activation kind '" + s + "'");
}

ActivationSpec parse_activation(const json& j) {
    ActivationSpec spec;
    if (!j.is_object() || !j.contains("kind"))
        throw ParseError("activation must be an object with a 'kind' field");
    spec.kind = parse_kind(j.at("kind").get<std::string>());
    if (j.contains("group_size")) {
        spec.group_size = j.at("group_size").get<int>();
        if (spec.group_size < 1) throw ValueError("group_size must be positive");
    } else {
        switch (spec.kind) {
            case ActivationKind::MaxMin: spec.group_size = 2; break;
            case ActivationKind::ReLU: spec.group_size = 1; break;
            case ActivationKind::FullSort: spec.group_size = 0; break;  // inferred per layer
            default: throw ParseError("group_size required for this activation kind");
        }
    }
    if (spec.kind == ActivationKind::MaxMin && spec.group_size != 2)
        throw DimensionError("maxmin requires group_size = 2");
    if (spec.kind == ActivationKind::ReLU) spec.group_size = 1;
    if (spec.kind == ActivationKind::Householder) {
        if (!j.contains("v")) throw ParseError("householder activation requires 'v'");
        spec.householder_v = parse_vector(j.at("v"), "activation.v");
        if (spec.householder_v.size() != spec.group_size)
            throw DimensionError("householder v length must equal group_size");
        if (std::abs(spec.householder_v.norm() - 1.0) > 1e-12)
            throw ValueError("householder v must be a unit vector");
    }
    return spec;
}

void validate_activated_width(const ActivationSpec& spec, int width, const std::string& where) {
    if (spec.kind == ActivationKind::FullSort) {
        if (spec.group_size > 0 && spec.group_size != width)
            throw DimensionError("fullsort group_size must equal width at " + where);
        return;
    }
    if (width % spec.group_size != 0)
        throw DimensionError("group_size " + std::to_string(spec.group_size) +
                             " does not divide width " + std::to_string(width) + " at " + where);
}

}  // namespace

Vector ActivationSpec::apply(const Vector& x) const {
    switch (kind) {
        case ActivationKind::ReLU: return relu(x);
        case ActivationKind::Householder:
            return householder(x, group_size, householder_v);
        default:
            return groupsort(x, group_size_for(static_cast<int>(x.size())));
    }
}

Matrix ActivationSpec::jacobian_at(const Vector& x) const {
    switch (kind) {
        case ActivationKind::ReLU: return relu_jacobian(x);
        case ActivationKind::Householder:
            return householder_jacobian(x, group_size, householder_v);
        default:
            return groupsort_jacobian(x, group_size_for(static_cast<int>(x.size())));
    }
}

int Model::input_width() const {
    switch (arch) {
        case Arch::Feedforward:
        case Arch::Residual: return static_cast<int>(layers.front().W.cols());
        case Arch::SingleLayerResidual: return static_cast<int>(single_res.W1.cols());
        case Arch::Deq: return static_cast<int>(deq.U.cols());
        case Arch::NeuralOde: return static_cast<int>(node.W0.cols());
    }
    throw ValueError("bad arch");
}

int Model::output_width() const {
    switch (arch) {
        case Arch::Feedforward: return static_cast<int>(layers.back().W.rows());
        case Arch::Residual: return input_width();
        case Arch::SingleLayerResidual: return static_cast<int>(single_res.H1.rows());
        case Arch::Deq: return static_cast<int>(deq.Wo.rows());
        case Arch::NeuralOde: return static_cast<int>(node.W0.cols());
    }
    throw ValueError("bad arch");
}

void validate_model(const Model& model) {
    const ActivationSpec& act = model.activation;
    switch (model.arch) {
        case Arch::Feedforward: {
            if (model.layers.empty()) throw DimensionError("feedforward model needs layers");
            for (size_t i = 0; i < model.layers.size(); ++i) {
                const Layer& layer = model.layers[i];
                if (layer.b.size() != layer.W.rows())
                    throw DimensionError("layer " + std::to_string(i) + ": b length mismatch");
                if (i > 0 && model.layers[i - 1].W.rows() != layer.W.cols())
                    throw DimensionError("dimension chain break between layers " +
                                         std::to_string(i - 1) + " and " + std::to_string(i));
                if (i + 1 < model.layers.size())
                    validate_activated_width(act, static_cast<int>(layer.W.rows()),
                                             "layer " + std::to_string(i));
            }
            break;
        }
        case Arch::Residual: {
            if (model.layers.empty()) throw DimensionError("residual model needs layers");
            const int n0 = static_cast<int>(model.layers.front().W.cols());
            for (size_t i = 0; i < model.layers.size(); ++i) {
                const Layer& layer = model.layers[i];
                if (layer.W.cols() != n0)
                    throw DimensionError("residual layer " + std::to_string(i) +
                                         ": W must act on the state width");
                if (layer.b.size() != layer.W.rows())
                    throw DimensionError("residual layer " + std::to_string(i) +
                                         ": b length mismatch");
                if (!layer.G)
                    throw DimensionError("residual layer " + std::to_string(i) + " needs G");
                if (layer.G->rows() != n0 || layer.G->cols() != layer.W.rows())
                    throw DimensionError("residual layer " + std::to_string(i) +
                                         ": G must be n0 x n_i");
                validate_activated_width(act, static_cast<int>(layer.W.rows()),
                                         "residual layer " + std::to_string(i));
            }
            break;
        }
        case Arch::SingleLayerResidual: {
            const auto& p = model.single_res;
            if (p.b1.size() != p.W1.rows()) throw DimensionError("single_res: b1 length mismatch");
            if (p.H1.cols() != p.W1.cols())
                throw DimensionError("single_res: H1 and W1 must share the input width");
            if (p.G1.cols() != p.W1.rows())
                throw DimensionError("single_res: G1 cols must match W1 rows");
            if (p.G1.rows() != p.H1.rows())
                throw DimensionError("single_res: G1 and H1 must share the output width");
            validate_activated_width(act, static_cast<int>(p.W1.rows()), "single_res");
            break;
        }
        case Arch::Deq: {
            const auto& p = model.deq;
            if (p.W.rows() != p.W.cols()) throw DimensionError("deq: W must be square");
            if (p.U.rows() != p.W.rows()) throw DimensionError("deq: U rows must match W");
            if (p.Wo.cols() != p.W.rows()) throw DimensionError("deq: Wo cols must match W");
            if (p.bz.size() != p.W.rows()) throw DimensionError("deq: bz length mismatch");
            if (p.by.size() != p.Wo.rows()) throw DimensionError("deq: by length mismatch");
            validate_activated_width(act, static_cast<int>(p.W.rows()), "deq");
            break;
        }
        case Arch::NeuralOde: {
            const auto& p = model.node;
            if (p.W0.rows() != p.W0.cols()) throw DimensionError("node: W0 must be square");
            if (p.G.rows() != p.W0.rows() || p.G.cols() != p.W0.rows())
                throw DimensionError("node: G must be n x n");
            if (p.W1.size() != p.W0.rows()) throw DimensionError("node: W1 length mismatch");
            if (p.b0.size() != p.W0.rows()) throw DimensionError("node: b0 length mismatch");
            if (p.b1.size() != p.W0.rows()) throw DimensionError("node: b1 length mismatch");
            if (p.t_final <= 0.0) throw ValueError("node: t_final must be positive");
            validate_activated_width(act, static_cast<int>(p.W0.rows()), "node");
            break;
        }
    }
    if (act.kind == ActivationKind::Householder &&
        std::abs(act.householder_v.norm() - 1.0) > 1e-12)
        throw ValueError("householder v must be a unit vector");
}

Model model_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed model JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("arch")) throw ParseError("model needs an 'arch' field");

    Model model;
    const std::string arch = j.at("arch").get<std::string>();
    if (arch == "feedforward") model.arch = Arch::Feedforward;
    else if (arch == "residual") model.arch = Arch::Residual;
    else if (arch == "single_residual") model.arch = Arch::SingleLayerResidual;
    else if (arch == "deq") model.arch = Arch::Deq;
    else if (arch == "node") model.arch = Arch::NeuralOde;
    else throw ParseError("unknown arch '" + arch + "'");

    if (j.contains("activation")) model.activation = parse_activation(j.at("activation"));
    else if (model.arch != Arch::Feedforward || j.value("layers", json::array()).size() > 1)
        throw ParseError("model needs an 'activation' field");

    if (model.arch == Arch::Feedforward || model.arch == Arch::Residual) {
        if (!j.contains("layers")) throw ParseError("model needs 'layers'");
        for (size_t i = 0; i < j.at("layers").size(); ++i) {
            const auto& lj = j.at("layers").at(i);
            Layer layer;
            layer.W = parse_matrix(lj.at("W"), "layers[" + std::to_string(i) + "].W");
            if (lj.contains("b"))
                layer.b = parse_vector(lj.at("b"), "layers[" + std::to_string(i) + "].b");
            else
                layer.b = Vector::Zero(layer.W.rows());
            if (lj.contains("G"))
                layer.G = parse_matrix(lj.at("G"), "layers[" + std::to_string(i) + "].G");
            model.layers.push_back(std::move(layer));
        }
    } else if (model.arch == Arch::Deq) {
        if (!j.contains("deq")) throw ParseError("deq model needs a 'deq' object");
        const auto& d = j.at("deq");
        model.deq.W = parse_matrix(d.at("W"), "deq.W");
        model.deq.U = parse_matrix(d.at("U"), "deq.U");
        model.deq.Wo = parse_matrix(d.at("Wo"), "deq.Wo");
        model.deq.bz = d.contains("bz") ? parse_vector(d.at("bz"), "deq.bz")
                                        : Vector::Zero(model.deq.W.rows());
        model.deq.by = d.contains("by") ? parse_vector(d.at("by"), "deq.by")
                                        : Vector::Zero(model.deq.Wo.rows());
    } else if (model.arch == Arch::NeuralOde) {
        if (!j.contains("node")) throw ParseError("node model needs a 'node' object");
        const auto& d = j.at("node");
        model.node.G = parse_matrix(d.at("G"), "node.G");
        model.node.W0 = parse_matrix(d.at("W0"), "node.W0");
        model.node.W1 = parse_vector(d.at("W1"), "node.W1");
        model.node.b0 = d.contains("b0") ? parse_vector(d.at("b0"), "node.b0")
                                         : Vector::Zero(model.node.W0.rows());
        model.node.b1 = d.contains("b1") ? parse_vector(d.at("b1"), "node.b1")
                                         : Vector::Zero(model.node.W0.rows());
        model.node.t_final = d.value("t_final", 1.0);
    } else if (model.arch == Arch::SingleLayerResidual) {
        if (!j.contains("single_res")) throw ParseError("single_residual model needs 'single_res'");
        const auto& d = j.at("single_res");
        model.single_res.H1 = parse_matrix(d.at("H1"), "single_res.H1");
        model.single_res.G1 = parse_matrix(d.at("G1"), "single_res.G1");
        model.single_res.W1 = parse_matrix(d.at("W1"), "single_res.W1");
        model.single_res.b1 = d.contains("b1") ? parse_vector(d.at("b1"), "single_res.b1")
                                               : Vector::Zero(model.single_res.W1.rows());
    }

    validate_model(model);
    return model;
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json_text(ss.str());
}

Vector deq_fixed_point(const Model& model, const Vector& x) {
    const auto& p = model.deq;
    Vector z = Vector::Zero(p.W.rows());
    for (int iter = 0; iter < kDeqMaxIters; ++iter) {
        const Vector phi = model.activation.apply(p.W * z + p.U * x + p.bz);
        const double residual = (z - phi).norm();
        if (residual <= kDeqTol) return z;
        z = (1.0 - kDeqDamping) * z + kDeqDamping * phi;
    }
    throw ConvergenceError("deq fixed-point iteration did not converge");
}

Vector forward(const Model& model, const Vector& x) {
    if (x.size() != model.input_width())
        throw DimensionError("forward: input width mismatch");
    switch (model.arch) {
        case Arch::Feedforward: {
            Vector h = x;
            for (size_t i = 0; i + 1 < model.layers.size(); ++i)
                h = model.activation.apply(model.layers[i].W * h + model.layers[i].b);
            return model.layers.back().W * h + model.layers.back().b;
        }
        case Arch::Residual: {
            Vector h = x;
            for (const Layer& layer : model.layers)
                h = h + (*layer.G) * model.activation.apply(layer.W * h + layer.b);
            return h;
        }
        case Arch::SingleLayerResidual: {
            const auto& p = model.single_res;
            return p.H1 * x + p.G1 * model.activation.apply(p.W1 * x + p.b1);
        }
        case Arch::Deq: {
            const Vector z = deq_fixed_point(model, x);
            return model.deq.Wo * z + model.deq.by;
        }
        case Arch::NeuralOde: {
            const auto& p = model.node;
            const auto f = [&](const Vector& z, double t) -> Vector {
                return p.G * model.activation.apply(p.W0 * z + p.W1 * t + p.b0) + p.b1;
            };
            Vector z = x;
            const int steps = static_cast<int>(std::round(p.t_final / kNodeStep));
            const double h = p.t_final / steps;
            double t = 0.0;
            for (int s = 0; s < steps; ++s) {
                const Vector k1 = f(z, t);
                const Vector k2 = f(z + 0.5 * h * k1, t + 0.5 * h);
                const Vector k3 = f(z + 0.5 * h * k2, t + 0.5 * h);
                const Vector k4 = f(z + h * k3, t + h);
                z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                t += h;
            }
            return z;
        }
    }
    throw ValueError("bad arch");
}

Jacobian jacobian(const Model& model, const Vector& x) {
    if (x.size() != model.input_width())
        throw DimensionError("jacobian: input width mismatch");
    switch (model.arch) {
        case Arch::Feedforward: {
            Vector h = x;
            Matrix jac = model.layers.front().W;
            for (size_t i = 0; i + 1 < model.layers.size(); ++i) {
                const Vector pre = model.layers[i].W * h + model.layers[i].b;
                jac = model.activation.jacobian_at(pre) * jac;
                h = model.activation.apply(pre);
                jac = model.layers[i + 1].W * jac;
            }
            return {jac};
        }
        case Arch::Residual: {
            Vector h = x;
            const int n0 = model.input_width();
            Matrix jac = Matrix::Identity(n0, n0);
            for (const Layer& layer : model.layers) {
                const Vector pre = layer.W * h + layer.b;
                jac = (Matrix::Identity(n0, n0) +
                       (*layer.G) * model.activation.jacobian_at(pre) * layer.W) *
                      jac;
                h = h + (*layer.G) * model.activation.apply(pre);
            }
            return {jac};
        }
        case Arch::SingleLayerResidual: {
            const auto& p = model.single_res;
            const Vector pre = p.W1 * x + p.b1;
            return {p.H1 + p.G1 * model.activation.jacobian_at(pre) * p.W1};
        }
        default:
            throw UnsupportedError(
                "exact jacobian is unavailable for implicit models; use jacobian_fd");
    }
}

Jacobian jacobian_fd(const Model& model, const Vector& x, double step) {
    const int n = model.input_width();
    const int m = model.output_width();
    Matrix jac(m, n);
    for (int j = 0; j < n; ++j) {
        Vector xp = x, xm = x;
        xp(j) += step;
        xm(j) -= step;
        jac.col(j) = (forward(model, xp) - forward(model, xm)) / (2.0 * step);
    }
    return {jac};
}

}  // namespace lipcert
