#include <doctest.h>

#include <Eigen/SVD>

#include "lipcert/activations.hpp"
#include "lipcert/errors.hpp"
#include "lipcert/rng.hpp"

using namespace lipcert;

namespace {

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

const double kSqrt2Half = std::sqrt(2.0) / 2.0;

// The paper's 2x2 residual-ReLU construction, hardcoded as the independent
// reference for the sorting convention.
Vector maxmin_via_rewrite_2(const Vector& x) {
    Matrix h(2, 2), g(2, 2), w(2, 2);
    h << 0, 1, 0, 1;
    g << 1, 0, 0, -1;
    w << 1, -1, -1, 1;
    return h * x + g * relu(w * x);
}

}  // namespace

TEST_CASE("groupsort sorts descending per group") {
    // reference values from the residual-ReLU identity
    const Vector expected = maxmin_via_rewrite_2(vec2(1, 2));
    CHECK(expected(0) == doctest::Approx(2.0));
    CHECK(expected(1) == doctest::Approx(1.0));
    CHECK((groupsort(vec2(1, 2), 2) - expected).norm() == doctest::Approx(0.0));

    Vector x(4);
    x << 3, 1, 4, 2;
    CHECK((groupsort(x, 2) - x).norm() == doctest::Approx(0.0));

    Vector y(4);
    y << 1, 2, 3, 4;
    Vector sorted(4);
    sorted << 4, 3, 2, 1;
    CHECK((groupsort(y, 4) - sorted).norm() == doctest::Approx(0.0));
}

TEST_CASE("groupsort rejects bad group sizes") {
    Vector x(4);
    x << 1, 2, 3, 4;
    CHECK_THROWS_AS(groupsort(x, 3), DimensionError);
}

TEST_CASE("householder branches") {
    const Vector v = vec2(kSqrt2Half, -kSqrt2Half);
    // v'x <= 0: reflection swaps the coordinates for this v
    CHECK((householder(vec2(0, 1), 2, v) - vec2(1, 0)).norm() == doctest::Approx(0.0));
    // v'x > 0: identity branch
    CHECK((householder(vec2(1, 0), 2, v) - vec2(1, 0)).norm() == doctest::Approx(0.0));
    // v'x = 0: reflection branch fixes the symmetric vector anyway
    CHECK((householder(vec2(1, 1), 2, v) - vec2(1, 1)).norm() == doctest::Approx(0.0));

    CHECK_THROWS_AS(householder(vec2(1, 0), 2, vec2(1, 1)), ValueError);
}

TEST_CASE("householder preserves group norms") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        Vector v = random_normal_vector(rng, 3);
        v /= v.norm();
        const Vector x = random_normal_vector(rng, 9);
        const Vector y = householder(x, 3, v);
        for (int g = 0; g < 3; ++g)
            CHECK(y.segment(3 * g, 3).norm() ==
                  doctest::Approx(x.segment(3 * g, 3).norm()).epsilon(1e-12));
    }
}

TEST_CASE("maxmin rewrite matches the 2x2 construction and its lift") {
    const ResidualReluRewrite rw = maxmin_to_residual_relu(2);
    Matrix h(2, 2), g(2, 2), w(2, 2);
    h << 0, 1, 0, 1;
    g << 1, 0, 0, -1;
    w << 1, -1, -1, 1;
    CHECK((rw.H - h).norm() == doctest::Approx(0.0));
    CHECK((rw.G - g).norm() == doctest::Approx(0.0));
    CHECK((rw.W - w).norm() == doctest::Approx(0.0));

    const ResidualReluRewrite rw4 = maxmin_to_residual_relu(4);
    CHECK((rw4.H.topLeftCorner(2, 2) - h).norm() == doctest::Approx(0.0));
    CHECK((rw4.H.bottomRightCorner(2, 2) - h).norm() == doctest::Approx(0.0));
    CHECK(rw4.H.topRightCorner(2, 2).norm() == doctest::Approx(0.0));

    CHECK((rw.evaluate(vec2(1, 2)) - vec2(2, 1)).norm() == doctest::Approx(0.0));
    CHECK_THROWS_AS(maxmin_to_residual_relu(3), DimensionError);
}

TEST_CASE("rewrite equivalence over random inputs") {
    Rng rng(11);
    const ResidualReluRewrite rw = maxmin_to_residual_relu(6);
    for (int trial = 0; trial < 10000; ++trial) {
        const Vector x = 10.0 * random_normal_vector(rng, 6);
        CHECK((rw.evaluate(x) - groupsort(x, 2)).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("activations are 1-Lipschitz by sampling") {
    Rng rng(13);
    Vector v(3);
    v << 0.6, -0.8, 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        const Vector x = 5.0 * random_normal_vector(rng, 6);
        const Vector y = 5.0 * random_normal_vector(rng, 6);
        CHECK((groupsort(x, 2) - groupsort(y, 2)).norm() <= (x - y).norm() + 1e-12);
        CHECK((groupsort(x, 6) - groupsort(y, 6)).norm() <= (x - y).norm() + 1e-12);
        CHECK((householder(x, 3, v) - householder(y, 3, v)).norm() <=
              (x - y).norm() + 1e-12);
        CHECK((relu(x) - relu(y)).norm() <= (x - y).norm() + 1e-12);
    }
}

TEST_CASE("householder jacobian factors have unit singular values") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        Vector v = random_normal_vector(rng, 4);
        v /= v.norm();
        const Vector x = random_normal_vector(rng, 8);
        const Matrix jac = householder_jacobian(x, 4, v);
        const auto svals = Eigen::JacobiSVD<Matrix>(jac).singularValues();
        CHECK(svals.maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(svals.minCoeff() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("groupsort is not slope-restricted") {
    // [0,1] slope restriction demands dphi_i * (dx_i - dphi_i) >= 0 entrywise.
    // The max coordinate can move twice as fast as the first input.
    const Vector x = vec2(1, 2);
    const Vector y = vec2(2, 4);
    const Vector dphi = groupsort(x, 2) - groupsort(y, 2);
    const Vector dx = x - y;
    CHECK(dphi(0) == doctest::Approx(-2.0));
    CHECK(dx(0) == doctest::Approx(-1.0));
    bool violated = false;
    for (int i = 0; i < 2; ++i)
        if (dphi(i) * (dx(i) - dphi(i)) < -1e-12) violated = true;
    CHECK(violated);
}
