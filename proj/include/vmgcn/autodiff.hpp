#pragma once

// Small reverse-mode autodiff over dense matrices. Every value is an
// Eigen::MatrixXd; 3-D tensors are carried as column-major reshapes.

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace vmgcn::ad {

struct Var {
    int id = -1;
};

class Tape {
public:
    /// With record = false no backward closures are kept (inference only).
    explicit Tape(bool record = true) : record_(record) {}

    Var constant(Eigen::MatrixXd value);
    Var parameter(Eigen::MatrixXd value);

    const Eigen::MatrixXd& value(Var v) const { return nodes_[idx(v)].value; }
    /// Gradient accumulated by backward(); zeros if the node was never reached.
    Eigen::MatrixXd grad(Var v) const;

    /// Seeds d(root)/d(root) = 1 for a 1x1 root and propagates to every node.
    void backward(Var root);

    bool recording() const noexcept { return record_; }
    bool needs_grad(Var v) const { return nodes_[idx(v)].needs_grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    using Backward = std::function<void(Tape&, const Eigen::MatrixXd& g)>;
    Var push(Eigen::MatrixXd value, bool needs_grad, Backward back);
    /// Adds g into the gradient of v when v participates in differentiation.
    void accumulate(Var v, const Eigen::MatrixXd& g);

private:
    struct Node {
        Eigen::MatrixXd value;
        Eigen::MatrixXd grad;
        bool needs_grad = false;
        Backward back;
    };
    static std::size_t idx(Var v) { return static_cast<std::size_t>(v.id); }

    bool record_;
    std::vector<Node> nodes_;
};

Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var hadamard(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
/// a (r x c) plus a 1 x c row broadcast over rows
Var add_row(Tape& t, Var a, Var row);
/// a (r x c) times a 1 x c row broadcast over rows, element-wise
Var mul_cols(Tape& t, Var a, Var row);
Var sigmoid(Tape& t, Var a);
Var relu(Tape& t, Var a);
Var softmax_rows(Tape& t, Var a);
Var transpose(Tape& t, Var a);
/// Column-major reshape; rows * cols must equal the element count.
Var reshape(Tape& t, Var a, Eigen::Index rows, Eigen::Index cols);
/// a holds (R, P, Q) as R x (P*Q); returns (R, Q, P) as R x (Q*P).
Var swap_last_axes(Tape& t, Var a, Eigen::Index p, Eigen::Index q);
/// out.row(r) = a.row(r + offset), zero where r + offset falls outside.
Var shift_rows(Tape& t, Var a, Eigen::Index offset);
/// Zero-mean unit-variance normalization of each row (population variance).
Var layer_norm_rows(Tape& t, Var a, double eps = 1e-5);
/// Sum of a list of same-shape values.
Var sum(Tape& t, const std::vector<Var>& terms);

/// mean |pred - target|; target is treated as a constant
Var mae_loss(Tape& t, Var pred, const Eigen::MatrixXd& target);
/// mean (pred - target)^2
Var mse_loss(Tape& t, Var pred, const Eigen::MatrixXd& target);

}  // namespace vmgcn::ad
