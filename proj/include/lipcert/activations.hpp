#pragma once

#include "lipcert/linalg.hpp"

namespace lipcert {

// Sorts each contiguous group of n_g entries in descending order, so the
// n_g = 2 case yields MaxMin = [max, min]. Group-wise sums are preserved.
Vector groupsort(const Vector& x, int n_g);

// Per group g: x_g when v'x_g > 0, otherwise the reflection (I - 2vv')x_g.
// The boundary v'x = 0 takes the reflection branch.
Vector householder(const Vector& x, int n_g, const Vector& v);

Vector relu(const Vector& x);

// Block-permutation Jacobian factor of groupsort at x (n x n, 0/1 entries).
// Exact ties resolve by original index order (stable sort).
Matrix groupsort_jacobian(const Vector& x, int n_g);

// Block-diagonal Jacobian factor of householder at x: I or I - 2vv' per group.
Matrix householder_jacobian(const Vector& x, int n_g, const Vector& v);

Matrix relu_jacobian(const Vector& x);

// MaxMin on an even-width vector written as x -> Hx + G relu(Wx), the 2x2
// construction lifted block-diagonally to width/2 copies.
struct ResidualReluRewrite {
    Matrix H;
    Matrix G;
    Matrix W;

    Vector evaluate(const Vector& x) const { return H * x + G * relu(W * x); }
};

ResidualReluRewrite maxmin_to_residual_relu(int width);

}  // namespace lipcert
