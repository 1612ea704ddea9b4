#include "lipcert/activations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lipcert/errors.hpp"

namespace lipcert {

namespace {

void check_group_size(int n, int n_g, const char* who) {
    if (n_g < 1) throw DimensionError(std::string(who) + ": group size must be positive");
    if (n % n_g != 0)
        throw DimensionError(std::string(who) + ": group size " + std::to_string(n_g) +
                             " does not divide width " + std::to_string(n));
}

void check_unit(const Vector& v) {
    if (std::abs(v.norm() - 1.0) > 1e-12)
        throw ValueError("householder: v is not a unit vector (|v| = " +
                         std::to_string(v.norm()) + ")");
}

}  // namespace

Vector groupsort(const Vector& x, int n_g) {
    const int n = static_cast<int>(x.size());
    check_group_size(n, n_g, "groupsort");
    Vector out(n);
    std::vector<int> idx(n_g);
    for (int g = 0; g < n / n_g; ++g) {
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return x(g * n_g + a) > x(g * n_g + b);
        });
        for (int k = 0; k < n_g; ++k) out(g * n_g + k) = x(g * n_g + idx[k]);
    }
    return out;
}

Matrix groupsort_jacobian(const Vector& x, int n_g) {
    const int n = static_cast<int>(x.size());
    check_group_size(n, n_g, "groupsort");
    Matrix jac = Matrix::Zero(n, n);
    std::vector<int> idx(n_g);
    for (int g = 0; g < n / n_g; ++g) {
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return x(g * n_g + a) > x(g * n_g + b);
        });
        for (int k = 0; k < n_g; ++k) jac(g * n_g + k, g * n_g + idx[k]) = 1.0;
    }
    return jac;
}

Vector householder(const Vector& x, int n_g, const Vector& v) {
    const int n = static_cast<int>(x.size());
    check_group_size(n, n_g, "householder");
    if (v.size() != n_g) throw DimensionError("householder: v length must equal group size");
    check_unit(v);
    Vector out(n);
    for (int g = 0; g < n / n_g; ++g) {
        const auto xg = x.segment(g * n_g, n_g);
        const double proj = v.dot(xg);
        if (proj > 0.0)
            out.segment(g * n_g, n_g) = xg;
        else
            out.segment(g * n_g, n_g) = xg - 2.0 * proj * v;
    }
    return out;
}

Matrix householder_jacobian(const Vector& x, int n_g, const Vector& v) {
    const int n = static_cast<int>(x.size());
    check_group_size(n, n_g, "householder");
    if (v.size() != n_g) throw DimensionError("householder: v length must equal group size");
    check_unit(v);
    const Matrix reflect = Matrix::Identity(n_g, n_g) - 2.0 * v * v.transpose();
    Matrix jac = Matrix::Zero(n, n);
    for (int g = 0; g < n / n_g; ++g) {
        const double proj = v.dot(x.segment(g * n_g, n_g));
        if (proj > 0.0)
            jac.block(g * n_g, g * n_g, n_g, n_g).setIdentity();
        else
            jac.block(g * n_g, g * n_g, n_g, n_g) = reflect;
    }
    return jac;
}

Vector relu(const Vector& x) { return x.cwiseMax(0.0); }

Matrix relu_jacobian(const Vector& x) {
    const int n = static_cast<int>(x.size());
    Matrix jac = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) jac(i, i) = x(i) > 0.0 ? 1.0 : 0.0;
    return jac;
}

ResidualReluRewrite maxmin_to_residual_relu(int width) {
    if (width < 2 || width % 2 != 0)
        throw DimensionError("maxmin_to_residual_relu: width must be even, got " +
                             std::to_string(width));
    ResidualReluRewrite rw;
    rw.H = Matrix::Zero(width, width);
    rw.G = Matrix::Zero(width, width);
    rw.W = Matrix::Zero(width, width);
    for (int g = 0; g < width / 2; ++g) {
        const int o = 2 * g;
        rw.H(o, o + 1) = 1.0;
        rw.H(o + 1, o + 1) = 1.0;
        rw.G(o, o) = 1.0;
        rw.G(o + 1, o + 1) = -1.0;
        rw.W(o, o) = 1.0;
        rw.W(o, o + 1) = -1.0;
        rw.W(o + 1, o) = -1.0;
        rw.W(o + 1, o + 1) = 1.0;
    }
    return rw;
}

}  // namespace lipcert
