#include "vmgcn/autodiff.hpp"

#include <cmath>

#include "vmgcn/errors.hpp"

namespace vmgcn::ad {

namespace {

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeMismatch(std::string(op) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                            " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

}  // namespace

Var Tape::constant(Eigen::MatrixXd value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(Eigen::MatrixXd value) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = record_;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Tape::push(Eigen::MatrixXd value, bool needs_grad, Backward back) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = record_ && needs_grad;
    if (n.needs_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
}

Eigen::MatrixXd Tape::grad(Var v) const {
    const Node& n = nodes_[idx(v)];
    if (n.grad.size() == 0) return Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::accumulate(Var v, const Eigen::MatrixXd& g) {
    Node& n = nodes_[idx(v)];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
        n.grad = g;
    } else {
        n.grad += g;
    }
}

void Tape::backward(Var root) {
    if (!record_) throw InvalidInput("backward on a tape that does not record");
    Node& r = nodes_[idx(root)];
    if (r.value.size() != 1) throw ShapeMismatch("backward needs a scalar root");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    r.grad = Eigen::MatrixXd::Ones(1, 1);
    for (std::size_t i = idx(root) + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.back && n.grad.size() != 0) n.back(*this, n.grad);
    }
}

Var matmul(Tape& t, Var a, Var b) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    if (av.cols() != bv.rows()) throw ShapeMismatch("matmul: inner dimensions differ");
    return t.push(av * bv, t.needs_grad(a) || t.needs_grad(b), [a, b](Tape& tp, const Eigen::MatrixXd& g) {
        if (tp.needs_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
        if (tp.needs_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
    });
}

Var add(Tape& t, Var a, Var b) {
    require_same_shape(t.value(a), t.value(b), "add");
    return t.push(t.value(a) + t.value(b), t.needs_grad(a) || t.needs_grad(b),
                  [a, b](Tape& tp, const Eigen::MatrixXd& g) {
                      tp.accumulate(a, g);
                      tp.accumulate(b, g);
                  });
}

Var sub(Tape& t, Var a, Var b) {
    require_same_shape(t.value(a), t.value(b), "sub");
    return t.push(t.value(a) - t.value(b), t.needs_grad(a) || t.needs_grad(b),
                  [a, b](Tape& tp, const Eigen::MatrixXd& g) {
                      tp.accumulate(a, g);
                      if (tp.needs_grad(b)) tp.accumulate(b, -g);
                  });
}

Var hadamard(Tape& t, Var a, Var b) {
    require_same_shape(t.value(a), t.value(b), "hadamard");
    return t.push(t.value(a).cwiseProduct(t.value(b)), t.needs_grad(a) || t.needs_grad(b),
                  [a, b](Tape& tp, const Eigen::MatrixXd& g) {
                      if (tp.needs_grad(a)) tp.accumulate(a, g.cwiseProduct(tp.value(b)));
                      if (tp.needs_grad(b)) tp.accumulate(b, g.cwiseProduct(tp.value(a)));
                  });
}

Var scale(Tape& t, Var a, double s) {
    return t.push(s * t.value(a), t.needs_grad(a),
                  [a, s](Tape& tp, const Eigen::MatrixXd& g) { tp.accumulate(a, s * g); });
}

Var add_row(Tape& t, Var a, Var row) {
    const auto& av = t.value(a);
    const auto& rv = t.value(row);
    if (rv.rows() != 1 || rv.cols() != av.cols()) throw ShapeMismatch("add_row: row shape");
    Eigen::MatrixXd out = av.rowwise() + rv.row(0);
    return t.push(std::move(out), t.needs_grad(a) || t.needs_grad(row),
                  [a, row](Tape& tp, const Eigen::MatrixXd& g) {
                      tp.accumulate(a, g);
                      if (tp.needs_grad(row)) tp.accumulate(row, g.colwise().sum());
                  });
}

Var mul_cols(Tape& t, Var a, Var row) {
    const auto& av = t.value(a);
    const auto& rv = t.value(row);
    if (rv.rows() != 1 || rv.cols() != av.cols()) throw ShapeMismatch("mul_cols: row shape");
    Eigen::MatrixXd out = av.array().rowwise() * rv.row(0).array();
    return t.push(std::move(out), t.needs_grad(a) || t.needs_grad(row),
                  [a, row](Tape& tp, const Eigen::MatrixXd& g) {
                      if (tp.needs_grad(a)) {
                          Eigen::MatrixXd ga = g.array().rowwise() * tp.value(row).row(0).array();
                          tp.accumulate(a, ga);
                      }
                      if (tp.needs_grad(row)) tp.accumulate(row, g.cwiseProduct(tp.value(a)).colwise().sum());
                  });
}

Var sigmoid(Tape& t, Var a) {
    Eigen::MatrixXd y = t.value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    const int self = static_cast<int>(t.size());
    return t.push(std::move(y), t.needs_grad(a), [a, self](Tape& tp, const Eigen::MatrixXd& g) {
        const auto& yv = tp.value(Var{self});
        tp.accumulate(a, g.array() * yv.array() * (1.0 - yv.array()));
    });
}

Var relu(Tape& t, Var a) {
    return t.push(t.value(a).cwiseMax(0.0), t.needs_grad(a), [a](Tape& tp, const Eigen::MatrixXd& g) {
        Eigen::MatrixXd ga = (tp.value(a).array() > 0.0).select(g, 0.0);
        tp.accumulate(a, ga);
    });
}

Var softmax_rows(Tape& t, Var a) {
    const auto& av = t.value(a);
    Eigen::MatrixXd y = av.colwise() - av.rowwise().maxCoeff();
    y = y.array().exp();
    const Eigen::VectorXd denom = y.rowwise().sum();
    y = y.array().colwise() / denom.array();
    const int self = static_cast<int>(t.size());
    return t.push(std::move(y), t.needs_grad(a), [a, self](Tape& tp, const Eigen::MatrixXd& g) {
        const auto& yv = tp.value(Var{self});
        const Eigen::VectorXd dot = g.cwiseProduct(yv).rowwise().sum();
        Eigen::MatrixXd ga = yv.array() * (g.colwise() - dot).array();
        tp.accumulate(a, ga);
    });
}

Var transpose(Tape& t, Var a) {
    return t.push(t.value(a).transpose(), t.needs_grad(a),
                  [a](Tape& tp, const Eigen::MatrixXd& g) { tp.accumulate(a, g.transpose()); });
}

Var reshape(Tape& t, Var a, Eigen::Index rows, Eigen::Index cols) {
    const auto& av = t.value(a);
    if (rows * cols != av.size()) throw ShapeMismatch("reshape: element count differs");
    Eigen::MatrixXd out = av.reshaped(rows, cols);
    const Eigen::Index r0 = av.rows(), c0 = av.cols();
    return t.push(std::move(out), t.needs_grad(a), [a, r0, c0](Tape& tp, const Eigen::MatrixXd& g) {
        tp.accumulate(a, g.reshaped(r0, c0));
    });
}

namespace {

Eigen::MatrixXd swap_axes(const Eigen::MatrixXd& x, Eigen::Index p, Eigen::Index q) {
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < q; ++j)
        for (Eigen::Index i = 0; i < p; ++i) out.col(j + q * i) = x.col(i + p * j);
    return out;
}

}  // namespace

Var swap_last_axes(Tape& t, Var a, Eigen::Index p, Eigen::Index q) {
    const auto& av = t.value(a);
    if (av.cols() != p * q) throw ShapeMismatch("swap_last_axes: column count is not p*q");
    return t.push(swap_axes(av, p, q), t.needs_grad(a), [a, p, q](Tape& tp, const Eigen::MatrixXd& g) {
        tp.accumulate(a, swap_axes(g, q, p));
    });
}

Var shift_rows(Tape& t, Var a, Eigen::Index offset) {
    const auto& av = t.value(a);
    const Eigen::Index n = av.rows();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, av.cols());
    const Eigen::Index lo = std::max<Eigen::Index>(0, -offset);
    const Eigen::Index hi = std::min<Eigen::Index>(n, n - offset);
    if (hi > lo) out.middleRows(lo, hi - lo) = av.middleRows(lo + offset, hi - lo);
    return t.push(std::move(out), t.needs_grad(a), [a, offset, lo, hi](Tape& tp, const Eigen::MatrixXd& g) {
        Eigen::MatrixXd ga = Eigen::MatrixXd::Zero(g.rows(), g.cols());
        if (hi > lo) ga.middleRows(lo + offset, hi - lo) = g.middleRows(lo, hi - lo);
        tp.accumulate(a, ga);
    });
}

Var layer_norm_rows(Tape& t, Var a, double eps) {
    const auto& av = t.value(a);
    const double c = static_cast<double>(av.cols());
    const Eigen::VectorXd mean = av.rowwise().sum() / c;
    Eigen::MatrixXd centered = av.colwise() - mean;
    const Eigen::VectorXd inv_std =
        ((centered.array().square().rowwise().sum() / c) + eps).sqrt().inverse().matrix();
    Eigen::MatrixXd y = centered.array().colwise() * inv_std.array();
    const int self = static_cast<int>(t.size());
    return t.push(std::move(y), t.needs_grad(a), [a, self, inv_std, c](Tape& tp, const Eigen::MatrixXd& g) {
        const auto& yv = tp.value(Var{self});
        const Eigen::VectorXd g_mean = g.rowwise().sum() / c;
        const Eigen::VectorXd gy_mean = g.cwiseProduct(yv).rowwise().sum() / c;
        Eigen::MatrixXd ga = (g.colwise() - g_mean).array() - yv.array().colwise() * gy_mean.array();
        ga = ga.array().colwise() * inv_std.array();
        tp.accumulate(a, ga);
    });
}

Var sum(Tape& t, const std::vector<Var>& terms) {
    if (terms.empty()) throw InvalidInput("sum of no terms");
    Eigen::MatrixXd out = t.value(terms[0]);
    bool needs = t.needs_grad(terms[0]);
    for (std::size_t i = 1; i < terms.size(); ++i) {
        require_same_shape(out, t.value(terms[i]), "sum");
        out += t.value(terms[i]);
        needs = needs || t.needs_grad(terms[i]);
    }
    return t.push(std::move(out), needs, [terms](Tape& tp, const Eigen::MatrixXd& g) {
        for (Var v : terms) tp.accumulate(v, g);
    });
}

Var mae_loss(Tape& t, Var pred, const Eigen::MatrixXd& target) {
    require_same_shape(t.value(pred), target, "mae_loss");
    const Eigen::MatrixXd diff = t.value(pred) - target;
    const double n = static_cast<double>(diff.size());
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = diff.cwiseAbs().sum() / n;
    return t.push(std::move(out), t.needs_grad(pred), [pred, diff, n](Tape& tp, const Eigen::MatrixXd& g) {
        Eigen::MatrixXd sign = diff.unaryExpr([](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); });
        tp.accumulate(pred, sign * (g(0, 0) / n));
    });
}

Var mse_loss(Tape& t, Var pred, const Eigen::MatrixXd& target) {
    require_same_shape(t.value(pred), target, "mse_loss");
    const Eigen::MatrixXd diff = t.value(pred) - target;
    const double n = static_cast<double>(diff.size());
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = diff.squaredNorm() / n;
    return t.push(std::move(out), t.needs_grad(pred), [pred, diff, n](Tape& tp, const Eigen::MatrixXd& g) {
        tp.accumulate(pred, diff * (2.0 * g(0, 0) / n));
    });
}

}  // namespace vmgcn::ad
