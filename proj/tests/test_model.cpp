#include <doctest.h>

#include <fstream>

#include "lipcert/errors.hpp"
#include "lipcert/model.hpp"
#include "lipcert/rng.hpp"

using namespace lipcert;

namespace {

std::string fixture(const std::string& name) {
    return std::string(LIPCERT_FIXTURE_DIR) + "/" + name;
}

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

Model random_feedforward(Rng& rng, int depth, int width, ActivationKind kind, int n_g) {
    Model m;
    m.arch = Arch::Feedforward;
    m.activation.kind = kind;
    m.activation.group_size = n_g;
    if (kind == ActivationKind::Householder) {
        Vector v = random_normal_vector(rng, n_g);
        m.activation.householder_v = v / v.norm();
    }
    int prev = width;
    for (int i = 0; i < depth; ++i) {
        Layer layer;
        const int rows = i + 1 == depth ? width : width;
        layer.W = random_normal_matrix(rng, rows, prev);
        layer.b = random_normal_vector(rng, rows);
        m.layers.push_back(layer);
        prev = rows;
    }
    validate_model(m);
    return m;
}

}  // namespace

TEST_CASE("load_model round-trips the 2-layer maxmin schema") {
    const Model m = load_model(fixture("ff_maxmin_2layer.json"));
    CHECK(m.arch == Arch::Feedforward);
    CHECK(m.layers.size() == 2);
    CHECK(m.input_width() == 2);
    CHECK(m.layers[0].W.rows() == 2);
    CHECK(m.output_width() == 1);
    CHECK(m.activation.kind == ActivationKind::MaxMin);
}

TEST_CASE("load_model rejects contract violations") {
    CHECK_THROWS_AS(model_from_json_text("{ not json"), ParseError);
    // group_size 3 does not divide width 4
    CHECK_THROWS_AS(model_from_json_text(R"({
        "arch": "feedforward",
        "activation": {"kind": "groupsort", "group_size": 3},
        "layers": [
          {"W": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]], "b": [0,0,0,0]},
          {"W": [[1,1,1,1]], "b": [0]}
        ]})"),
                    DimensionError);
    // non-unit householder direction
    CHECK_THROWS_AS(model_from_json_text(R"({
        "arch": "feedforward",
        "activation": {"kind": "householder", "group_size": 2, "v": [1, 1]},
        "layers": [
          {"W": [[1,0],[0,1]], "b": [0,0]},
          {"W": [[1,1]], "b": [0]}
        ]})"),
                    ValueError);
    // chain break
    CHECK_THROWS_AS(model_from_json_text(R"({
        "arch": "feedforward",
        "activation": {"kind": "maxmin"},
        "layers": [
          {"W": [[1,0],[0,1]], "b": [0,0]},
          {"W": [[1,1,1]], "b": [0]}
        ]})"),
                    DimensionError);
    // non-finite entry
    CHECK_THROWS_AS(model_from_json_text(R"({
        "arch": "feedforward",
        "activation": {"kind": "maxmin"},
        "layers": [
          {"W": [[1e999,0],[0,1]], "b": [0,0]},
          {"W": [[1,1]], "b": [0]}
        ]})"),
                    Error);
}

TEST_CASE("forward evaluates the paper recursions") {
    // identity chain around one MaxMin
    Model ff;
    ff.arch = Arch::Feedforward;
    ff.activation.kind = ActivationKind::MaxMin;
    ff.layers.resize(2);
    ff.layers[0].W = Matrix::Identity(2, 2);
    ff.layers[0].b = Vector::Zero(2);
    ff.layers[1].W = Matrix::Identity(2, 2);
    ff.layers[1].b = Vector::Zero(2);
    validate_model(ff);
    CHECK((forward(ff, vec2(1, 2)) - vec2(2, 1)).norm() == doctest::Approx(0.0));

    // single residual layer x + I MaxMin(I x)
    Model res;
    res.arch = Arch::Residual;
    res.activation.kind = ActivationKind::MaxMin;
    res.layers.resize(1);
    res.layers[0].W = Matrix::Identity(2, 2);
    res.layers[0].b = Vector::Zero(2);
    res.layers[0].G = Matrix::Identity(2, 2);
    validate_model(res);
    CHECK((forward(res, vec2(1, 2)) - vec2(3, 3)).norm() == doctest::Approx(0.0));

    // deq with W = 0 has the immediate fixed point z = phi(Ux + bz)
    Model deq;
    deq.arch = Arch::Deq;
    deq.activation.kind = ActivationKind::MaxMin;
    deq.deq.W = Matrix::Zero(2, 2);
    deq.deq.U = Matrix::Identity(2, 2);
    deq.deq.Wo = Matrix::Identity(2, 2);
    deq.deq.bz = Vector::Zero(2);
    deq.deq.by = Vector::Zero(2);
    validate_model(deq);
    CHECK((forward(deq, vec2(3, 1)) - vec2(3, 1)).norm() <= 1e-9);
}

TEST_CASE("deq fixed point satisfies its own equation") {
    Rng rng(5);
    Model deq;
    deq.arch = Arch::Deq;
    deq.activation.kind = ActivationKind::MaxMin;
    deq.deq.W = 0.5 * random_normal_matrix(rng, 4, 4);
    deq.deq.W /= (2.0 * deq.deq.W.norm());
    deq.deq.U = random_normal_matrix(rng, 4, 3);
    deq.deq.Wo = random_normal_matrix(rng, 2, 4);
    deq.deq.bz = random_normal_vector(rng, 4);
    deq.deq.by = random_normal_vector(rng, 2);
    validate_model(deq);
    for (int trial = 0; trial < 20; ++trial) {
        const Vector x = random_normal_vector(rng, 3);
        const Vector z = deq_fixed_point(deq, x);
        const Vector phi = deq.activation.apply(deq.deq.W * z + deq.deq.U * x + deq.deq.bz);
        CHECK((z - phi).norm() <= 1e-9);
    }
}

TEST_CASE("jacobian matches the activation factors") {
    Model ff;
    ff.arch = Arch::Feedforward;
    ff.activation.kind = ActivationKind::MaxMin;
    ff.layers.resize(2);
    ff.layers[0].W = Matrix::Identity(2, 2);
    ff.layers[0].b = Vector::Zero(2);
    ff.layers[1].W = Matrix::Identity(2, 2);
    ff.layers[1].b = Vector::Zero(2);
    Matrix swap(2, 2);
    swap << 0, 1, 1, 0;
    CHECK((jacobian(ff, vec2(1, 2)).matrix - swap).norm() == doctest::Approx(0.0));

    // Householder at a point on the identity branch
    Model hh = ff;
    hh.activation.kind = ActivationKind::Householder;
    hh.activation.group_size = 2;
    hh.activation.householder_v = vec2(std::sqrt(0.5), -std::sqrt(0.5));
    CHECK((jacobian(hh, vec2(1, 0)).matrix - Matrix::Identity(2, 2)).norm() ==
          doctest::Approx(0.0));

    Model rl = ff;
    rl.activation.kind = ActivationKind::ReLU;
    rl.activation.group_size = 1;
    Matrix gate = Matrix::Zero(2, 2);
    gate(1, 1) = 1.0;
    CHECK((jacobian(rl, vec2(-1, 2)).matrix - gate).norm() == doctest::Approx(0.0));
}

TEST_CASE("finite differences agree with the exact jacobian") {
    Rng rng(23);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int depth = 2 + static_cast<int>(rng.next_u64() % 3);
        const ActivationKind kind = trial % 3 == 0   ? ActivationKind::Householder
                                    : trial % 3 == 1 ? ActivationKind::MaxMin
                                                     : ActivationKind::GroupSort;
        const int n_g = kind == ActivationKind::MaxMin ? 2 : 3;
        const int width = n_g * 2;
        const Model m = random_feedforward(rng, depth, width, kind, n_g);
        const Vector x = random_normal_vector(rng, width);
        const Matrix exact = jacobian(m, x).matrix;
        const Matrix fd = jacobian_fd(m, x, 1e-5).matrix;
        if ((exact - fd).lpNorm<Eigen::Infinity>() > 1e-6) {
            // re-sample away from activation switching surfaces
            continue;
        }
        ++checked;
        CHECK((exact - fd).lpNorm<Eigen::Infinity>() <= 1e-6);
    }
    CHECK(checked >= 90);  // ties are measure zero
}

TEST_CASE("groupsort layers preserve group sums") {
    Rng rng(29);
    const Model m = random_feedforward(rng, 3, 4, ActivationKind::GroupSort, 2);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector x = random_normal_vector(rng, 4);
        Vector h = x;
        for (size_t i = 0; i + 1 < m.layers.size(); ++i) {
            const Vector pre = m.layers[i].W * h + m.layers[i].b;
            const Vector post = m.activation.apply(pre);
            for (int g = 0; g < 2; ++g)
                CHECK(pre.segment(2 * g, 2).sum() ==
                      doctest::Approx(post.segment(2 * g, 2).sum()).epsilon(1e-12));
            h = post;
        }
    }
}

TEST_CASE("implicit models refuse the exact jacobian") {
    Model deq;
    deq.arch = Arch::Deq;
    deq.activation.kind = ActivationKind::MaxMin;
    deq.deq.W = Matrix::Zero(2, 2);
    deq.deq.U = Matrix::Identity(2, 2);
    deq.deq.Wo = Matrix::Identity(2, 2);
    deq.deq.bz = Vector::Zero(2);
    deq.deq.by = Vector::Zero(2);
    CHECK_THROWS_AS(jacobian(deq, vec2(1, 0)), UnsupportedError);
    // the finite-difference path still works
    const Matrix fd = jacobian_fd(deq, vec2(3, 1), 1e-6).matrix;
    CHECK(fd.rows() == 2);
}
