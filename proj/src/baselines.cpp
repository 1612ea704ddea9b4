#include "lipcert/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/SVD>

#include "lipcert/errors.hpp"

namespace lipcert {

namespace {

constexpr int kSvdCrossover = 32;
constexpr int kPowerMaxIters = 10000;
constexpr std::uint64_t kPowerSeed = 0x5eed5eedULL;

double svd_norm(const Matrix& w) {
    return Eigen::JacobiSVD<Matrix>(w).singularValues().maxCoeff();
}

double jacobian_norm(const Matrix& jac, NormKind norm, int label) {
    if (norm == NormKind::L2) return svd_norm(jac);
    if (label < 0) {
        if (jac.rows() != 1)
            throw ValueError("linf sampling needs a scalar output or a label row");
        return jac.row(0).cwiseAbs().sum();
    }
    if (label >= jac.rows()) throw ValueError("label out of range");
    return jac.row(label).cwiseAbs().sum();
}

}  // namespace

const char* to_string(Method method) {
    switch (method) {
        case Method::Mp: return "mp";
        case Method::Sample: return "sample";
        case Method::Fgl: return "fgl";
        case Method::NormEq: return "norm-eq";
        case Method::NsrL2: return "nsr-l2";
        case Method::NsrLinf: return "nsr-linf";
        case Method::Rr: return "rr";
    }
    return "unknown";
}

const char* to_string(NormKind norm) {
    switch (norm) {
        case NormKind::L2: return "l2";
        case NormKind::LinfL1: return "linf-l1";
    }
    return "unknown";
}

double spectral_norm(const Matrix& w, double tol) {
    if (w.size() == 0) throw DimensionError("spectral_norm: empty matrix");
    if (w.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    if (std::min(w.rows(), w.cols()) <= kSvdCrossover) return svd_norm(w);

    Rng rng(kPowerSeed);
    Vector v = random_normal_vector(rng, static_cast<int>(w.cols()));
    v.normalize();
    double sigma = 0.0;
    for (int iter = 0; iter < kPowerMaxIters; ++iter) {
        Vector next = w.transpose() * (w * v);
        const double norm = next.norm();
        if (norm == 0.0) return 0.0;
        next /= norm;
        const double estimate = std::sqrt(norm);
        if (iter > 0 && std::abs(estimate - sigma) <= tol * std::max(1.0, estimate)) {
            return estimate;
        }
        sigma = estimate;
        v = next;
    }
    throw ConvergenceError("spectral_norm: power iteration did not converge");
}

BoundReport mp_bound(const Model& model) {
    BoundReport report;
    report.method = Method::Mp;
    report.norm = NormKind::L2;
    switch (model.arch) {
        case Arch::Feedforward: {
            double prod = 1.0;
            for (const Layer& layer : model.layers) prod *= spectral_norm(layer.W);
            report.value = prod;
            break;
        }
        case Arch::Residual: {
            double prod = 1.0;
            for (const Layer& layer : model.layers)
                prod *= 1.0 + spectral_norm(*layer.G) * spectral_norm(layer.W);
            report.value = prod;
            break;
        }
        case Arch::SingleLayerResidual: {
            const auto& sr = model.single_res;
            report.value = spectral_norm(sr.H1) + spectral_norm(sr.G1) * spectral_norm(sr.W1);
            break;
        }
        default:
            throw UnsupportedError("mp_bound: explicit architectures only");
    }
    return report;
}

BoundReport sample_lower_bound(const Model& model, NormKind norm, int n_samples,
                               std::uint64_t seed, int label, bool allow_pairs) {
    if (n_samples < 1) throw ValueError("sample_lower_bound: n_samples must be >= 1");
    BoundReport report;
    report.method = Method::Sample;
    report.norm = norm;
    report.lower_bound = true;
    report.metadata["samples"] = n_samples;

    const bool implicit = model.arch == Arch::Deq || model.arch == Arch::NeuralOde;
    if (implicit) {
        if (!allow_pairs)
            throw UnsupportedError(
                "sample_lower_bound: implicit models need the pair-sampling flag");
        if (norm != NormKind::L2)
            throw UnsupportedError("sample_lower_bound: pair sampling covers l2 only");
    }

    Rng rng(seed);
    const int n = model.input_width();
    double best = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        const double radius = rng.log_uniform(1e-1, 1e1);
        const Vector x = radius * random_normal_vector(rng, n);
        double value = 0.0;
        if (implicit) {
            Vector dir = random_normal_vector(rng, n);
            dir *= 1e-4 / dir.norm();
            const Vector fx = forward(model, x);
            const Vector fy = forward(model, x + dir);
            value = (fx - fy).norm() / dir.norm();
        } else {
            value = jacobian_norm(jacobian(model, x).matrix, norm, label);
        }
        best = std::max(best, value);
    }
    report.value = best;
    return report;
}

namespace {

struct FglContext {
    const Model* model = nullptr;
    NormKind norm = NormKind::L2;
    int label = -1;
    int n_g = 2;
    bool householder = false;
    Matrix reflect;                           // I - 2vv' (Householder)
    std::vector<std::vector<int>> perms;      // all permutations of 0..n_g-1
    double best = 0.0;
    std::int64_t leaves = 0;

    double leaf_norm(const Matrix& m) const {
        if (norm == NormKind::L2) return svd_norm(m);
        if (label >= 0) return m.row(label).cwiseAbs().sum();
        if (m.rows() != 1) throw ValueError("fgl: linf needs a scalar output or a label");
        return m.row(0).cwiseAbs().sum();
    }

    // Enumerates group-wise choices of layer `i` applied to partial product m,
    // then recurses into the next layer.
    void recurse_groups(size_t i, int group, Matrix& m) {
        const int groups = static_cast<int>(m.rows()) / n_g;
        if (group == groups) {
            descend(i + 1, m);
            return;
        }
        const int off = group * n_g;
        const Matrix saved = m.middleRows(off, n_g);
        if (householder) {
            recurse_groups(i, group + 1, m);  // identity branch
            m.middleRows(off, n_g) = reflect * saved;
            recurse_groups(i, group + 1, m);
            m.middleRows(off, n_g) = saved;
        } else {
            for (const auto& perm : perms) {
                for (int k = 0; k < n_g; ++k) m.row(off + k) = saved.row(perm[k]);
                recurse_groups(i, group + 1, m);
            }
            m.middleRows(off, n_g) = saved;
        }
    }

    void descend(size_t i, const Matrix& m) {
        if (i == model->layers.size()) {
            best = std::max(best, leaf_norm(m));
            ++leaves;
            return;
        }
        Matrix next = model->layers[i].W * m;
        if (i + 1 == model->layers.size()) {
            descend(i + 1, next);
            return;
        }
        recurse_groups(i, 0, next);
    }
};

}  // namespace

BoundReport fgl_bound(const Model& model, NormKind norm, int label, std::int64_t guard) {
    if (model.arch != Arch::Feedforward)
        throw UnsupportedError("fgl_bound: feedforward models only");
    if (model.activation.kind == ActivationKind::ReLU)
        throw UnsupportedError("fgl_bound: sorting or Householder activations only");

    FglContext ctx;
    ctx.model = &model;
    ctx.norm = norm;
    ctx.label = label;
    ctx.householder = model.activation.kind == ActivationKind::Householder;

    // Enumeration size: branches per group, raised to the total group count.
    double log_count = 0.0;
    int n_g = -1;
    for (size_t i = 0; i + 1 < model.layers.size(); ++i) {
        const int width = static_cast<int>(model.layers[i].W.rows());
        const int g = model.activation.group_size_for(width);
        if (n_g == -1) n_g = g;
        if (g != n_g) throw DimensionError("fgl_bound: mixed group sizes");
        double branches = ctx.householder ? 2.0 : 1.0;
        if (!ctx.householder)
            for (int k = 2; k <= n_g; ++k) branches *= k;
        log_count += (width / n_g) * std::log(branches);
    }
    if (model.layers.size() < 2) {
        BoundReport report;
        report.method = Method::Fgl;
        report.norm = norm;
        report.metadata["patterns"] = 1.0;
        const Matrix& w = model.layers.front().W;
        report.value = norm == NormKind::L2
                           ? svd_norm(w)
                           : (label >= 0 ? w.row(label).cwiseAbs().sum()
                                         : w.row(0).cwiseAbs().sum());
        return report;
    }
    if (log_count > std::log(static_cast<double>(guard)))
        throw TooLargeError("fgl_bound: enumeration exceeds the guard of " +
                            std::to_string(guard) + " patterns");

    ctx.n_g = n_g <= 0 ? 2 : n_g;
    if (ctx.householder) {
        const Vector& v = model.activation.householder_v;
        ctx.reflect = Matrix::Identity(ctx.n_g, ctx.n_g) - 2.0 * v * v.transpose();
    } else {
        std::vector<int> base(ctx.n_g);
        std::iota(base.begin(), base.end(), 0);
        do {
            ctx.perms.push_back(base);
        } while (std::next_permutation(base.begin(), base.end()));
    }

    const int n0 = model.input_width();
    const Matrix start = Matrix::Identity(n0, n0);
    ctx.descend(0, start);

    BoundReport report;
    report.method = Method::Fgl;
    report.norm = norm;
    report.value = ctx.best;
    report.metadata["patterns"] = static_cast<double>(ctx.leaves);
    return report;
}

BoundReport norm_eq_bound(double l2_bound, int n0) {
    if (l2_bound < 0.0) throw ValueError("norm_eq_bound: l2 bound must be nonnegative");
    BoundReport report;
    report.method = Method::NormEq;
    report.norm = NormKind::LinfL1;
    report.value = std::sqrt(static_cast<double>(n0)) * l2_bound;
    return report;
}

}  // namespace lipcert
