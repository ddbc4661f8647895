#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "cvc/tensor.hpp"

namespace cvc {

class Tape;

// Lightweight handle to a node on a tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;
};

// Reverse-mode tape. Nodes are appended in forward order; backward walks
// them in reverse, so the graph is always topologically sorted. Gradients
// accumulate additively, which makes repeated backward calls and shared
// subexpressions both work without special cases.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, Var self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor value);
    Var node(Tensor value, BackwardFn back);

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
    Tensor& grad(Var v) { return nodes_[v.id].grad; }

    // Seeds d(root)/d(root) = 1 and propagates. root must be a scalar.
    void backward(Var root);

    std::size_t num_nodes() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        BackwardFn back; // empty for leaves
    };
    std::vector<Node> nodes_;
};

// --- differentiable primitives -------------------------------------------
// Each op checks operand shapes (ShapeMismatch) and installs an exact
// reverse-mode gradient rule.

Var matmul(Var a, Var b);          // [m,k] x [k,n] -> [m,n]
Var matvec(Var a, Var x);          // [m,k] x [k]   -> [m]
Var add(Var a, Var b);             // elementwise, same shape
Var mul(Var a, Var b);             // elementwise (Hadamard), same shape
Var affine(Var a, double scale, double shift); // scale*a + shift elementwise
Var sigmoid(Var a);
Var tanh(Var a);
Var concat(Var a, Var b);          // rank-1 ++ rank-1
Var slice(Var a, std::size_t offset, std::size_t len); // rank-1 window
Var embedding_lookup(Var table, std::size_t row);       // [V,E] -> [E]
Var sum(Var a);                    // -> scalar

// Fused softmax + cross-entropy against a class index; numerically stable
// (loss = logsumexp(logits) - logits[target]).
Var softmax_cross_entropy(Var logits, std::size_t target);

} // namespace cvc
