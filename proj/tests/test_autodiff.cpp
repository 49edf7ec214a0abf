#include <doctest.h>

#include <functional>
#include <random>

#include "vmgcn/autodiff.hpp"
#include "vmgcn/errors.hpp"

using namespace vmgcn;
using Eigen::MatrixXd;

namespace {

MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

using Op = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

// Compares tape gradients of mse(op(inputs), target) against central differences.
double max_gradient_error(const Op& op, std::vector<MatrixXd> inputs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    MatrixXd target;
    auto loss = [&](const std::vector<MatrixXd>& in, std::vector<MatrixXd>* grads) {
        ad::Tape t(grads != nullptr);
        std::vector<ad::Var> vars;
        for (const auto& m : in) vars.push_back(t.parameter(m));
        ad::Var out = op(t, vars);
        if (target.size() == 0) target = random_matrix(t.value(out).rows(), t.value(out).cols(), rng);
        ad::Var l = ad::mse_loss(t, out, target);
        if (grads) {
            t.backward(l);
            for (auto v : vars) grads->push_back(t.grad(v));
        }
        return t.value(l)(0, 0);
    };
    std::vector<MatrixXd> analytic;
    loss(inputs, &analytic);
    double worst = 0.0;
    const double h = 1e-6;
    for (std::size_t i = 0; i < inputs.size(); ++i)
        for (Eigen::Index j = 0; j < inputs[i].size(); ++j) {
            double& w = inputs[i].data()[j];
            const double w0 = w;
            w = w0 + h;
            const double up = loss(inputs, nullptr);
            w = w0 - h;
            const double down = loss(inputs, nullptr);
            w = w0;
            const double fd = (up - down) / (2 * h);
            worst = std::max(worst, std::abs(fd - analytic[i].data()[j]) / std::max(1.0, std::abs(fd)));
        }
    return worst;
}

}  // namespace

TEST_CASE("elementary op gradients match finite differences") {
    std::mt19937_64 rng(1);
    const MatrixXd a = random_matrix(3, 4, rng), b = random_matrix(3, 4, rng), c = random_matrix(4, 2, rng);
    const MatrixXd row = random_matrix(1, 4, rng);
    const double tol = 1e-7;

    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::matmul(t, v[0], v[1]); }, {a, c}, 2) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::add(t, v[0], v[1]); }, {a, b}, 3) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::sub(t, v[0], v[1]); }, {a, b}, 4) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::hadamard(t, v[0], v[1]); }, {a, b}, 5) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::scale(t, v[0], -2.5); }, {a}, 6) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::add_row(t, v[0], v[1]); }, {a, row}, 7) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::mul_cols(t, v[0], v[1]); }, {a, row}, 8) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::sigmoid(t, v[0]); }, {a}, 9) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::relu(t, v[0]); }, {a}, 10) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::softmax_rows(t, v[0]); }, {a}, 11) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::transpose(t, v[0]); }, {a}, 12) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::reshape(t, v[0], 6, 2); }, {a}, 13) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::swap_last_axes(t, v[0], 2, 2); }, {a}, 14) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::shift_rows(t, v[0], 1); }, {a}, 15) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::shift_rows(t, v[0], -2); }, {a}, 16) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::layer_norm_rows(t, v[0]); }, {a}, 17) < tol);
    CHECK(max_gradient_error([](ad::Tape& t, const auto& v) { return ad::sum(t, {v[0], v[1], v[0]}); }, {a, b}, 18) < tol);
}

TEST_CASE("composite expression gradients") {
    std::mt19937_64 rng(2);
    const MatrixXd x = random_matrix(4, 6, rng), w = random_matrix(6, 3, rng), g = random_matrix(1, 3, rng);
    auto op = [](ad::Tape& t, const std::vector<ad::Var>& v) {
        ad::Var h = ad::sigmoid(t, ad::matmul(t, v[0], v[1]));
        h = ad::layer_norm_rows(t, h);
        h = ad::mul_cols(t, h, v[2]);
        return ad::softmax_rows(t, ad::matmul(t, h, ad::transpose(t, h)));
    };
    CHECK(max_gradient_error(op, {x, w, g}, 3) < 1e-7);
}

TEST_CASE("op values") {
    ad::Tape t(false);
    MatrixXd m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    const auto v = t.constant(m);

    // (R, P, Q) = (2, 3, 1) to (2, 1, 3) is the identity on storage
    CHECK(t.value(ad::swap_last_axes(t, v, 3, 1)) == m);
    MatrixXd wide(1, 6);
    wide << 0, 1, 2, 3, 4, 5;  // (1, P=2, Q=3): element (p, q) at p + 2q
    MatrixXd swapped(1, 6);
    swapped << 0, 2, 4, 1, 3, 5;  // (1, Q=3, P=2): element (q, p) at q + 3p
    CHECK(t.value(ad::swap_last_axes(t, t.constant(wide), 2, 3)) == swapped);

    MatrixXd shifted(2, 3);
    shifted << 4, 5, 6, 0, 0, 0;
    CHECK(t.value(ad::shift_rows(t, v, 1)) == shifted);

    const MatrixXd sm = t.value(ad::softmax_rows(t, v));
    CHECK((sm.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
    const MatrixXd ln = t.value(ad::layer_norm_rows(t, v, 0.0));
    CHECK(std::abs(ln.row(0).mean()) < 1e-15);
    CHECK(ln(0, 2) == doctest::Approx(std::sqrt(1.5)));

    CHECK(t.value(ad::mae_loss(t, v, MatrixXd::Zero(2, 3)))(0, 0) == doctest::Approx(3.5));
    CHECK(t.value(ad::mse_loss(t, v, MatrixXd::Zero(2, 3)))(0, 0) == doctest::Approx(91.0 / 6.0));
}

TEST_CASE("tape errors") {
    ad::Tape t;
    const auto a = t.parameter(MatrixXd::Ones(2, 3));
    const auto b = t.parameter(MatrixXd::Ones(2, 2));
    CHECK_THROWS_AS(ad::matmul(t, a, b), ShapeMismatch);
    CHECK_THROWS_AS(ad::add(t, a, b), ShapeMismatch);
    CHECK_THROWS_AS(ad::reshape(t, a, 4, 2), ShapeMismatch);
    CHECK_THROWS_AS(t.backward(a), ShapeMismatch);

    ad::Tape inference(false);
    const auto c = inference.parameter(MatrixXd::Ones(1, 1));
    CHECK_THROWS_AS(inference.backward(c), InvalidInput);
}

TEST_CASE("unreached parameters get zero gradient") {
    ad::Tape t;
    const auto a = t.parameter(MatrixXd::Ones(2, 2));
    const auto unused = t.parameter(MatrixXd::Ones(3, 1));
    const auto l = ad::mse_loss(t, a, MatrixXd::Zero(2, 2));
    t.backward(l);
    CHECK(t.grad(unused).isZero());
    CHECK(t.grad(a).isApprox(MatrixXd::Constant(2, 2, 0.5)));
}
