#pragma once

#include <Eigen/Dense>

#include "lipcert/rng.hpp"

namespace lipcert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline double sym_error(const Matrix& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

inline Vector random_normal_vector(Rng& rng, int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

inline Matrix random_normal_matrix(Rng& rng, int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

}  // namespace lipcert
