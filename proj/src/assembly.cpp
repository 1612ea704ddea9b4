#include "lipcert/assembly.hpp"

#include <cmath>

#include "lipcert/activations.hpp"
#include "lipcert/errors.hpp"

namespace lipcert {

namespace {

constexpr double kStrictMargin = 1e-8;   // delta for strict LMIs
constexpr double kPiFloor = 1e-6;        // epsilon in Pi >= eps I

// Multiplier families; the letters match the (T, S, P) construction.
enum class Family { LambdaT, GammaT, NuP, TauS };

struct QcVar {
    int var;
    Family family;
    Matrix delta;  // basis contribution to T, P, or S (n_phi x n_phi)
};

// X contribution of one family basis: lambda/gamma feed T, nu feeds P,
// tau feeds S in X = [[T-2S, P+S], [P+S, -T-2P]].
Matrix family_x(Family family, const Matrix& delta) {
    const int n = static_cast<int>(delta.rows());
    Matrix x = Matrix::Zero(2 * n, 2 * n);
    switch (family) {
        case Family::LambdaT:
        case Family::GammaT:
            x.topLeftCorner(n, n) = delta;
            x.bottomRightCorner(n, n) = -delta;
            break;
        case Family::NuP:
            x.topRightCorner(n, n) = delta;
            x.bottomLeftCorner(n, n) = delta;
            x.bottomRightCorner(n, n) = -2.0 * delta;
            break;
        case Family::TauS:
            x.topLeftCorner(n, n) = -2.0 * delta;
            x.topRightCorner(n, n) = delta;
            x.bottomLeftCorner(n, n) = delta;
            break;
    }
    return x;
}

void require_groupsort_or_householder(const Model& model, const char* who) {
    if (model.activation.kind == ActivationKind::ReLU)
        throw UnsupportedError(std::string(who) +
                               ": ReLU networks are outside this certification path");
}

// n_g x n_g basis shared by every group: 11' for the sorting family,
// I - vv' for Householder.
Matrix group_basis(const ActivationSpec& act, int n_g) {
    if (act.kind == ActivationKind::Householder)
        return Matrix::Identity(n_g, n_g) -
               act.householder_v * act.householder_v.transpose();
    return Matrix::Ones(n_g, n_g);
}

struct ActStack {
    std::vector<int> widths;   // widths of the activation layers, in order
    int n_g = 0;
    Matrix basis;              // group basis (n_g x n_g)
    int total = 0;             // sum of widths
    std::vector<int> offsets;  // start of each layer inside the stack
};

ActStack make_stack(const Model& model, const std::vector<int>& widths, const char* who) {
    ActStack st;
    st.widths = widths;
    int n_g = -1;
    for (int w : widths) {
        const int g = model.activation.group_size_for(w);
        if (n_g == -1) n_g = g;
        if (g != n_g)
            throw DimensionError(std::string(who) +
                                 ": all activation layers must share one group size");
        if (w % g != 0)
            throw DimensionError(std::string(who) + ": group size does not divide width");
        st.offsets.push_back(st.total);
        st.total += w;
    }
    st.n_g = n_g;
    st.basis = group_basis(model.activation, n_g);
    return st;
}

// Creates the multiplier decision variables over the activation stack and
// registers lambda sign blocks. Returned deltas live in the stacked space.
//
// Two degeneracies of the (gamma, nu, tau) parameterization are handled here.
// First, 2 X_gamma - X_nu + X_tau = 0 for a shared group basis, so any
// (gamma, nu, tau) equals (gamma - 2 tau, nu + tau, 0); emitting nu and tau
// together would make the constraint data rank-deficient, so only nu is
// materialized when both are requested. Second, the pairs (gamma, nu) and
// (gamma, tau) admit a feasibility-preserving ray (the image of the ray is a
// negative semidefinite matrix that vanishes on sum-preserving pairs), which
// leaves the optimal face unbounded. A tiny objective tax on the ray
// coordinate selects its bounded end; the reported rho is unaffected beyond
// O(1e-9) and remains an upper bound on the true optimum.
constexpr double kRecessionTax = 1e-9;

std::vector<QcVar> make_multiplier_vars(SdpProblem& p, const ActStack& st,
                                        MultiplierClass mclass, bool with_nu, bool with_tau) {
    if (with_nu && with_tau) with_tau = false;
    std::vector<QcVar> vars;
    const Matrix eye = Matrix::Identity(st.n_g, st.n_g);
    const bool per_group =
        mclass == MultiplierClass::Neuron2 || mclass == MultiplierClass::Neuron1;
    const bool with_gamma =
        mclass == MultiplierClass::Neuron2 || mclass == MultiplierClass::Layer2;

    const auto add_var = [&](const std::string& name, Family family, const Matrix& delta,
                             bool sign_constrained) {
        const int id = p.num_vars++;
        p.var_names.push_back(name);
        p.objective.conservativeResize(p.num_vars);
        p.objective(p.num_vars - 1) = 0.0;
        vars.push_back({id, family, delta});
        if (sign_constrained) p.add_nonnegativity(id);
        return id;
    };

    // Recession coordinates: (nu - gamma) for the (gamma, nu) pair and
    // (gamma + tau) for the (gamma, tau) pair.
    const auto tax_pair = [&](int gamma_id, int other_id, bool other_is_nu) {
        if (gamma_id < 0 || other_id < 0) return;
        p.objective(gamma_id) += other_is_nu ? -kRecessionTax : kRecessionTax;
        p.objective(other_id) += kRecessionTax;
    };

    for (size_t i = 0; i < st.widths.size(); ++i) {
        const int groups = st.widths[i] / st.n_g;
        const std::string li = std::to_string(i + 1);
        if (per_group) {
            for (int g = 0; g < groups; ++g) {
                const int off = st.offsets[i] + g * st.n_g;
                Matrix dl = Matrix::Zero(st.total, st.total);
                dl.block(off, off, st.n_g, st.n_g) = eye;
                add_var("lambda_" + li + "_" + std::to_string(g + 1), Family::LambdaT, dl,
                        true);
                Matrix db = Matrix::Zero(st.total, st.total);
                db.block(off, off, st.n_g, st.n_g) = st.basis;
                int gamma_id = -1, nu_id = -1, tau_id = -1;
                if (with_gamma)
                    gamma_id = add_var("gamma_" + li + "_" + std::to_string(g + 1),
                                       Family::GammaT, db, false);
                if (with_nu)
                    nu_id = add_var("nu_" + li + "_" + std::to_string(g + 1), Family::NuP, db,
                                    false);
                if (with_tau)
                    tau_id = add_var("tau_" + li + "_" + std::to_string(g + 1), Family::TauS,
                                     db, false);
                tax_pair(gamma_id, nu_id >= 0 ? nu_id : tau_id, nu_id >= 0);
            }
        } else {
            Matrix dl = Matrix::Zero(st.total, st.total);
            Matrix db = Matrix::Zero(st.total, st.total);
            for (int g = 0; g < groups; ++g) {
                const int off = st.offsets[i] + g * st.n_g;
                dl.block(off, off, st.n_g, st.n_g) = eye;
                db.block(off, off, st.n_g, st.n_g) = st.basis;
            }
            add_var("lambda_" + li, Family::LambdaT, dl, true);
            int gamma_id = -1, nu_id = -1, tau_id = -1;
            if (with_gamma) gamma_id = add_var("gamma_" + li, Family::GammaT, db, false);
            if (with_nu) nu_id = add_var("nu_" + li, Family::NuP, db, false);
            if (with_tau) tau_id = add_var("tau_" + li, Family::TauS, db, false);
            tax_pair(gamma_id, nu_id >= 0 ? nu_id : tau_id, nu_id >= 0);
        }
    }
    return vars;
}

int add_rho(SdpProblem& p) {
    p.num_vars = 1;
    p.var_names = {"rho"};
    p.objective = Vector::Ones(1);
    return 0;
}

// Appends the QC contributions of all vars to `block`, congruenced through
// `map` so that [u; v] = map * xi feeds the constraint space.
void add_qc_terms(AffineLmiBlock& block, const std::vector<QcVar>& vars, const Matrix& map) {
    for (const QcVar& v : vars) {
        const Matrix x = family_x(v.family, v.delta);
        block.terms.emplace_back(v.var, symmetrize(map.transpose() * x * map));
    }
}

std::vector<int> feedforward_activation_widths(const Model& model) {
    std::vector<int> widths;
    for (size_t i = 0; i + 1 < model.layers.size(); ++i)
        widths.push_back(static_cast<int>(model.layers[i].W.rows()));
    return widths;
}

// Per-layer T terms for the decomposed chains: (var, basis in layer space).
struct LayerTTerms {
    std::vector<std::pair<int, Matrix>> terms;
};

std::vector<LayerTTerms> per_layer_t_terms(const std::vector<QcVar>& vars, const ActStack& st) {
    std::vector<LayerTTerms> layers(st.widths.size());
    for (const QcVar& v : vars) {
        if (v.family != Family::LambdaT && v.family != Family::GammaT) continue;
        for (size_t i = 0; i < st.widths.size(); ++i) {
            const Matrix piece = v.delta.block(st.offsets[i], st.offsets[i], st.widths[i],
                                               st.widths[i]);
            if (piece.cwiseAbs().maxCoeff() > 0.0)
                layers[i].terms.emplace_back(v.var, piece);
        }
    }
    return layers;
}

}  // namespace

MultiplierClass multiplier_class_from_string(const std::string& s) {
    if (s == "neuron2") return MultiplierClass::Neuron2;
    if (s == "neuron1") return MultiplierClass::Neuron1;
    if (s == "layer2") return MultiplierClass::Layer2;
    if (s == "layer1") return MultiplierClass::Layer1;
    throw ValueError("unknown multiplier class '" + s + "'");
}

const char* to_string(MultiplierClass mclass) {
    switch (mclass) {
        case MultiplierClass::Neuron2: return "neuron2";
        case MultiplierClass::Neuron1: return "neuron1";
        case MultiplierClass::Layer2: return "layer2";
        case MultiplierClass::Layer1: return "layer1";
    }
    return "unknown";
}

SdpProblem assemble_l2_feedforward(const Model& model, MultiplierClass mclass,
                                   bool decomposed) {
    if (model.arch != Arch::Feedforward)
        throw UnsupportedError("assemble_l2_feedforward: feedforward models only");
    require_groupsort_or_householder(model, "assemble_l2_feedforward");
    const int l = model.depth();
    if (l < 2) throw DimensionError("assemble_l2_feedforward: needs at least 2 layers");

    SdpProblem p;
    p.bound_semantics = BoundSemantics::SqrtRhoL2;
    add_rho(p);
    const ActStack st = make_stack(model, feedforward_activation_widths(model),
                                   "assemble_l2_feedforward");
    const std::vector<QcVar> vars =
        make_multiplier_vars(p, st, mclass, !decomposed, !decomposed);

    const int n0 = model.input_width();

    if (decomposed) {
        const auto layer_t = per_layer_t_terms(vars, st);
        // W1' T1 W1 - rho I <= 0
        {
            AffineLmiBlock blk;
            blk.size = n0;
            blk.F0 = Matrix::Zero(n0, n0);
            blk.terms.emplace_back(0, Matrix(-Matrix::Identity(n0, n0)));
            const Matrix& w1 = model.layers[0].W;
            for (const auto& [var, delta] : layer_t[0].terms)
                blk.terms.emplace_back(var, symmetrize(w1.transpose() * delta * w1));
            p.blocks.insert(p.blocks.begin(), blk);
        }
        // Wi' Ti Wi - T_{i-1} <= 0 for the interior layers
        for (int i = 1; i + 1 < l; ++i) {
            AffineLmiBlock blk;
            const int ni_prev = st.widths[i - 1];
            blk.size = ni_prev;
            blk.F0 = Matrix::Zero(ni_prev, ni_prev);
            const Matrix& wi = model.layers[i].W;
            for (const auto& [var, delta] : layer_t[i].terms)
                blk.terms.emplace_back(var, symmetrize(wi.transpose() * delta * wi));
            for (const auto& [var, delta] : layer_t[i - 1].terms)
                blk.terms.emplace_back(var, Matrix(-delta));
            p.blocks.push_back(blk);
        }
        // Wl' Wl - T_{l-1} <= 0
        {
            AffineLmiBlock blk;
            const int nl_prev = st.widths.back();
            blk.size = nl_prev;
            const Matrix& wl = model.layers.back().W;
            blk.F0 = symmetrize(wl.transpose() * wl);
            for (const auto& [var, delta] : layer_t.back().terms)
                blk.terms.emplace_back(var, Matrix(-delta));
            p.blocks.push_back(blk);
        }
        return p;
    }

    // Dense form: one inequality over the stacked pre/post activation vector.
    const int n_stack = n0 + st.total;
    Matrix a = Matrix::Zero(st.total, n_stack);
    Matrix b = Matrix::Zero(st.total, n_stack);
    int col = 0;
    for (int i = 0; i + 1 < l; ++i) {
        const Matrix& wi = model.layers[i].W;
        a.block(st.offsets[i], col, wi.rows(), wi.cols()) = wi;
        col += static_cast<int>(wi.cols());
        b.block(st.offsets[i], col, wi.rows(), wi.rows()) =
            Matrix::Identity(wi.rows(), wi.rows());
    }
    Matrix map(2 * st.total, n_stack);
    map << a, b;

    AffineLmiBlock blk;
    blk.size = n_stack;
    blk.F0 = Matrix::Zero(n_stack, n_stack);
    const Matrix& wl = model.layers.back().W;
    blk.F0.bottomRightCorner(st.widths.back(), st.widths.back()) =
        symmetrize(wl.transpose() * wl);
    Matrix rho_term = Matrix::Zero(n_stack, n_stack);
    rho_term.topLeftCorner(n0, n0) = -Matrix::Identity(n0, n0);
    blk.terms.emplace_back(0, rho_term);
    add_qc_terms(blk, vars, map);
    p.blocks.insert(p.blocks.begin(), blk);
    return p;
}

SdpProblem assemble_linf(const Model& model, int label, MultiplierClass mclass) {
    if (model.arch != Arch::Feedforward)
        throw UnsupportedError("assemble_linf: feedforward models only");
    require_groupsort_or_householder(model, "assemble_linf");
    const Matrix& wl_full = model.layers.back().W;
    if (label < 0 || label >= wl_full.rows())
        throw ValueError("assemble_linf: label " + std::to_string(label) + " out of range");
    const Vector w_out = wl_full.row(label).transpose();
    const int l = model.depth();
    const int n0 = model.input_width();

    SdpProblem p;
    p.bound_semantics = BoundSemantics::RhoLinfL1;
    add_rho(p);
    std::vector<int> mu(n0);
    for (int j = 0; j < n0; ++j) {
        mu[j] = p.num_vars++;
        p.var_names.push_back("mu_" + std::to_string(j + 1));
        p.objective.conservativeResize(p.num_vars);
        p.objective(p.num_vars - 1) = 0.0;
        p.add_nonnegativity(mu[j]);
    }

    std::vector<LayerTTerms> layer_t;
    ActStack st;
    if (l >= 2) {
        st = make_stack(model, feedforward_activation_widths(model), "assemble_linf");
        const std::vector<QcVar> vars = make_multiplier_vars(p, st, mclass, false, false);
        layer_t = per_layer_t_terms(vars, st);
    }

    // Chain blocks: Wi' Ti Wi - T_{i-1} <= 0 with T0 = diag(mu).
    for (int i = 0; i + 1 < l; ++i) {
        AffineLmiBlock blk;
        const int prev = i == 0 ? n0 : st.widths[i - 1];
        blk.size = prev;
        blk.F0 = Matrix::Zero(prev, prev);
        const Matrix& wi = model.layers[i].W;
        for (const auto& [var, delta] : layer_t[i].terms)
            blk.terms.emplace_back(var, symmetrize(wi.transpose() * delta * wi));
        if (i == 0) {
            for (int j = 0; j < n0; ++j) {
                Matrix e = Matrix::Zero(n0, n0);
                e(j, j) = -1.0;
                blk.terms.emplace_back(mu[j], e);
            }
        } else {
            for (const auto& [var, delta] : layer_t[i - 1].terms)
                blk.terms.emplace_back(var, Matrix(-delta));
        }
        p.blocks.push_back(blk);
    }

    // Output block: -[[T_{l-1}, w'], [w, 2 rho - sum mu]] <= 0.
    {
        const int prev = l >= 2 ? st.widths.back() : n0;
        AffineLmiBlock blk;
        blk.size = prev + 1;
        blk.F0 = Matrix::Zero(prev + 1, prev + 1);
        blk.F0.block(0, prev, prev, 1) = -w_out;
        blk.F0.block(prev, 0, 1, prev) = -w_out.transpose();
        Matrix rho_term = Matrix::Zero(prev + 1, prev + 1);
        rho_term(prev, prev) = -2.0;
        blk.terms.emplace_back(0, rho_term);
        for (int j = 0; j < n0; ++j) {
            Matrix e = Matrix::Zero(prev + 1, prev + 1);
            e(prev, prev) = 1.0;
            if (l == 1) e(j, j) = -1.0;  // T0 = diag(mu) sits in the same block
            blk.terms.emplace_back(mu[j], e);
        }
        if (l >= 2)
            for (const auto& [var, delta] : layer_t.back().terms) {
                Matrix e = Matrix::Zero(prev + 1, prev + 1);
                e.topLeftCorner(prev, prev) = -delta;
                blk.terms.emplace_back(var, e);
            }
        p.blocks.push_back(blk);
    }
    return p;
}

SdpProblem assemble_l2_residual(const Model& model, bool zero_s, bool zero_p) {
    require_groupsort_or_householder(model, "assemble_l2_residual");
    SdpProblem p;
    p.bound_semantics = BoundSemantics::SqrtRhoL2Residual;
    add_rho(p);

    if (model.arch == Arch::SingleLayerResidual) {
        const auto& sr = model.single_res;
        const int n0 = static_cast<int>(sr.W1.cols());
        const int n1 = static_cast<int>(sr.W1.rows());
        const ActStack st = make_stack(model, {n1}, "assemble_l2_residual");
        const std::vector<QcVar> vars = make_multiplier_vars(
            p, st, MultiplierClass::Neuron2, !zero_p, !zero_s);

        AffineLmiBlock blk;
        blk.size = n0 + n1;
        blk.F0 = Matrix::Zero(n0 + n1, n0 + n1);
        blk.F0.topLeftCorner(n0, n0) = symmetrize(sr.H1.transpose() * sr.H1);
        blk.F0.topRightCorner(n0, n1) = sr.H1.transpose() * sr.G1;
        blk.F0.bottomLeftCorner(n1, n0) = sr.G1.transpose() * sr.H1;
        blk.F0.bottomRightCorner(n1, n1) = symmetrize(sr.G1.transpose() * sr.G1);
        Matrix rho_term = Matrix::Zero(n0 + n1, n0 + n1);
        rho_term.topLeftCorner(n0, n0) = -Matrix::Identity(n0, n0);
        blk.terms.emplace_back(0, rho_term);
        Matrix map = Matrix::Zero(2 * n1, n0 + n1);
        map.topLeftCorner(n1, n0) = sr.W1;
        map.bottomRightCorner(n1, n1) = Matrix::Identity(n1, n1);
        add_qc_terms(blk, vars, map);
        p.blocks.insert(p.blocks.begin(), blk);
        return p;
    }

    if (model.arch != Arch::Residual)
        throw UnsupportedError("assemble_l2_residual: residual architectures only");
    if (zero_s && zero_p)
        throw ValueError(
            "assemble_l2_residual: S and P cannot both be dropped for the multi-layer form");

    std::vector<int> widths;
    for (const Layer& layer : model.layers)
        widths.push_back(static_cast<int>(layer.W.rows()));
    const ActStack st = make_stack(model, widths, "assemble_l2_residual");
    const std::vector<QcVar> vars = make_multiplier_vars(
        p, st, MultiplierClass::Neuron2, !zero_p, !zero_s);

    const int n0 = model.input_width();
    const int l = model.depth();
    const int n_stack = n0 + st.total;

    Matrix a_tilde = Matrix::Zero(st.total, n_stack);
    Matrix b_tilde = Matrix::Zero(st.total, n_stack);
    Matrix c_row = Matrix::Zero(n0, n_stack);
    c_row.topLeftCorner(n0, n0) = Matrix::Identity(n0, n0);
    for (int i = 0; i < l; ++i) {
        const Matrix& wi = model.layers[i].W;
        a_tilde.block(st.offsets[i], 0, st.widths[i], n0) = wi;
        for (int k = 0; k < i; ++k)
            a_tilde.block(st.offsets[i], n0 + st.offsets[k], st.widths[i], st.widths[k]) =
                wi * (*model.layers[k].G);
        b_tilde.block(st.offsets[i], n0 + st.offsets[i], st.widths[i], st.widths[i]) =
            Matrix::Identity(st.widths[i], st.widths[i]);
        c_row.block(0, n0 + st.offsets[i], n0, st.widths[i]) = *model.layers[i].G;
    }
    Matrix map(2 * st.total, n_stack);
    map << a_tilde, b_tilde;

    AffineLmiBlock blk;
    blk.size = n_stack;
    blk.F0 = symmetrize(c_row.transpose() * c_row);
    Matrix rho_term = Matrix::Zero(n_stack, n_stack);
    rho_term.topLeftCorner(n0, n0) = -Matrix::Identity(n0, n0);
    blk.terms.emplace_back(0, rho_term);
    add_qc_terms(blk, vars, map);
    p.blocks.insert(p.blocks.begin(), blk);
    return p;
}

SdpProblem assemble_rr(const Model& model) {
    if (model.arch != Arch::Feedforward)
        throw UnsupportedError("assemble_rr: feedforward models only");
    const auto& act = model.activation;
    const bool maxmin_like =
        act.kind == ActivationKind::MaxMin ||
        (act.kind == ActivationKind::GroupSort && act.group_size == 2);
    if (!maxmin_like)
        throw UnsupportedError("assemble_rr: the rewrite covers MaxMin (group size 2) only");
    const int l = model.depth();
    if (l < 2) throw UnsupportedError("assemble_rr: model has no activation layer");

    SdpProblem p;
    p.bound_semantics = BoundSemantics::SqrtRhoL2;
    add_rho(p);

    const int n0 = model.input_width();
    const std::vector<int> widths = feedforward_activation_widths(model);
    int total = 0;
    std::vector<int> offsets;
    for (int w : widths) {
        offsets.push_back(total);
        total += w;
    }

    // Per layer: x^i = Htilde_i x^{i-1} + G_i relu(What_i x^{i-1} + bhat_i).
    std::vector<Matrix> h_tilde, w_hat, g_mat;
    for (int i = 0; i + 1 < l; ++i) {
        const ResidualReluRewrite rw = maxmin_to_residual_relu(widths[i]);
        h_tilde.push_back(rw.H * model.layers[i].W);
        w_hat.push_back(rw.W * model.layers[i].W);
        g_mat.push_back(rw.G);
    }

    // phi[i][k] = Htilde_i ... Htilde_{k+1} maps the layer-k state forward.
    const int act_layers = l - 1;
    std::vector<std::vector<Matrix>> phi(act_layers + 1);
    for (int i = 0; i <= act_layers; ++i) {
        phi[i].resize(i + 1);
        const int ni = i == 0 ? n0 : widths[i - 1];
        phi[i][i] = Matrix::Identity(ni, ni);
        for (int k = i - 1; k >= 0; --k) phi[i][k] = h_tilde[i - 1] * phi[i - 1][k];
    }

    const int n_stack = n0 + total;
    Matrix a_tilde = Matrix::Zero(total, n_stack);
    Matrix b_tilde = Matrix::Zero(total, n_stack);
    for (int i = 0; i < act_layers; ++i) {
        a_tilde.block(offsets[i], 0, widths[i], n0) = w_hat[i] * phi[i][0];
        for (int k = 1; k <= i; ++k)
            a_tilde.block(offsets[i], n0 + offsets[k - 1], widths[i], widths[k - 1]) =
                w_hat[i] * phi[i][k] * g_mat[k - 1];
        b_tilde.block(offsets[i], n0 + offsets[i], widths[i], widths[i]) =
            Matrix::Identity(widths[i], widths[i]);
    }
    const Matrix& wl = model.layers.back().W;
    Matrix c_out = Matrix::Zero(wl.rows(), n_stack);
    c_out.topLeftCorner(wl.rows(), n0) = wl * phi[act_layers][0];
    for (int k = 1; k <= act_layers; ++k)
        c_out.block(0, n0 + offsets[k - 1], wl.rows(), widths[k - 1]) =
            wl * phi[act_layers][k] * g_mat[k - 1];

    AffineLmiBlock blk;
    blk.size = n_stack;
    blk.F0 = symmetrize(c_out.transpose() * c_out);
    Matrix rho_term = Matrix::Zero(n_stack, n_stack);
    rho_term.topLeftCorner(n0, n0) = -Matrix::Identity(n0, n0);
    blk.terms.emplace_back(0, rho_term);

    // One slope-restriction multiplier per ReLU neuron.
    for (int i = 0; i < act_layers; ++i) {
        for (int j = 0; j < widths[i]; ++j) {
            const int id = p.num_vars++;
            p.var_names.push_back("t_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
            p.objective.conservativeResize(p.num_vars);
            p.objective(p.num_vars - 1) = 0.0;
            const Vector arow = a_tilde.row(offsets[i] + j).transpose();
            const Vector brow = b_tilde.row(offsets[i] + j).transpose();
            // [[0, t], [t, -2t]] congruenced through the stacked rows
            Matrix term = arow * brow.transpose() + brow * arow.transpose() -
                          2.0 * brow * brow.transpose();
            blk.terms.emplace_back(id, symmetrize(term));
            p.add_nonnegativity(id);
        }
    }
    p.blocks.insert(p.blocks.begin(), blk);
    return p;
}

SdpProblem assemble_deq_wellposed(const Model& model) {
    if (model.arch != Arch::Deq)
        throw UnsupportedError("assemble_deq_wellposed: deq models only");
    require_groupsort_or_householder(model, "assemble_deq_wellposed");
    const int d = static_cast<int>(model.deq.W.rows());

    SdpProblem p;
    p.bound_semantics = BoundSemantics::Feasibility;
    p.num_vars = 0;
    p.objective = Vector::Zero(0);

    const ActStack st = make_stack(model, {d}, "assemble_deq_wellposed");
    const std::vector<QcVar> vars =
        make_multiplier_vars(p, st, MultiplierClass::Neuron2, true, true);

    // Pi entries (symmetric d x d).
    std::vector<std::vector<int>> pi_idx(d, std::vector<int>(d, -1));
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            pi_idx[i][j] = pi_idx[j][i] = p.num_vars++;
            p.var_names.push_back("pi_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
            p.objective.conservativeResize(p.num_vars);
            p.objective(p.num_vars - 1) = 0.0;
        }

    const auto pi_basis = [&](int i, int j) {
        Matrix e = Matrix::Zero(d, d);
        e(i, j) = 1.0;
        e(j, i) = 1.0;
        return e;
    };

    // Main contraction block with the strictness margin folded into F0.
    AffineLmiBlock blk;
    blk.size = 2 * d;
    blk.F0 = kStrictMargin * Matrix::Identity(2 * d, 2 * d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            const Matrix e = pi_basis(i, j);
            Matrix term = Matrix::Zero(2 * d, 2 * d);
            term.topLeftCorner(d, d) = -2.0 * e;
            term.topRightCorner(d, d) = e;
            term.bottomLeftCorner(d, d) = e;
            blk.terms.emplace_back(pi_idx[i][j], term);
        }
    Matrix map = Matrix::Zero(2 * d, 2 * d);
    map.topLeftCorner(d, d) = model.deq.W;
    map.bottomRightCorner(d, d) = Matrix::Identity(d, d);
    add_qc_terms(blk, vars, map);
    p.blocks.insert(p.blocks.begin(), blk);

    // Pi >= eps I as  eps I - Pi <= 0.
    AffineLmiBlock floor_blk;
    floor_blk.size = d;
    floor_blk.F0 = kPiFloor * Matrix::Identity(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            floor_blk.terms.emplace_back(pi_idx[i][j], Matrix(-pi_basis(i, j)));
    p.blocks.push_back(floor_blk);
    return p;
}

SdpProblem assemble_deq_lipschitz(const Model& model, bool wellposed_established) {
    if (model.arch != Arch::Deq)
        throw UnsupportedError("assemble_deq_lipschitz: deq models only");
    require_groupsort_or_householder(model, "assemble_deq_lipschitz");
    if (!wellposed_established)
        throw PreconditionError(
            "assemble_deq_lipschitz: well-posedness not established (certify it first or "
            "waive explicitly)");
    const int d = static_cast<int>(model.deq.W.rows());
    const int n = static_cast<int>(model.deq.U.cols());

    SdpProblem p;
    p.bound_semantics = BoundSemantics::SqrtRhoL2Deq;
    add_rho(p);
    const ActStack st = make_stack(model, {d}, "assemble_deq_lipschitz");
    const std::vector<QcVar> vars =
        make_multiplier_vars(p, st, MultiplierClass::Neuron2, true, true);

    AffineLmiBlock blk;
    blk.size = d + n;
    blk.F0 = Matrix::Zero(d + n, d + n);
    blk.F0.topLeftCorner(d, d) = symmetrize(model.deq.Wo.transpose() * model.deq.Wo);
    Matrix rho_term = Matrix::Zero(d + n, d + n);
    rho_term.bottomRightCorner(n, n) = -Matrix::Identity(n, n);
    blk.terms.emplace_back(0, rho_term);
    Matrix map = Matrix::Zero(2 * d, d + n);
    map.topLeftCorner(d, d) = model.deq.W;
    map.topRightCorner(d, n) = model.deq.U;
    map.block(d, 0, d, d) = Matrix::Identity(d, d);
    add_qc_terms(blk, vars, map);
    p.blocks.insert(p.blocks.begin(), blk);
    return p;
}

SdpProblem assemble_node_lipschitz(const Model& model) {
    if (model.arch != Arch::NeuralOde)
        throw UnsupportedError("assemble_node_lipschitz: neural ode models only");
    require_groupsort_or_householder(model, "assemble_node_lipschitz");
    const int n = static_cast<int>(model.node.W0.rows());

    SdpProblem p;
    p.bound_semantics = BoundSemantics::ExpHalfRhoL2Node;
    add_rho(p);
    const ActStack st = make_stack(model, {n}, "assemble_node_lipschitz");
    const std::vector<QcVar> vars =
        make_multiplier_vars(p, st, MultiplierClass::Neuron2, true, true);

    AffineLmiBlock blk;
    blk.size = 2 * n;
    blk.F0 = Matrix::Zero(2 * n, 2 * n);
    blk.F0.topRightCorner(n, n) = model.node.G;
    blk.F0.bottomLeftCorner(n, n) = model.node.G.transpose();
    Matrix rho_term = Matrix::Zero(2 * n, 2 * n);
    rho_term.topLeftCorner(n, n) = -Matrix::Identity(n, n);
    blk.terms.emplace_back(0, rho_term);
    Matrix map = Matrix::Zero(2 * n, 2 * n);
    map.topLeftCorner(n, n) = model.node.W0;
    map.bottomRightCorner(n, n) = Matrix::Identity(n, n);
    add_qc_terms(blk, vars, map);
    p.blocks.insert(p.blocks.begin(), blk);
    return p;
}

}  // namespace lipcert
