#pragma once

#include <functional>
#include <vector>

#include "fieldloc/tensor.hpp"

namespace fieldloc {

class Tape;

// Lightweight handle to a tape node. Valid as long as its tape lives.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Tensor& value() const;
    double scalar() const;
};

// Define-by-run reverse-mode tape. Nodes are appended in execution order,
// which is already a topological order; backward walks the list once in
// reverse. Single-threaded by contract; use one tape per thread.
class Tape {
  public:
    Var input(Tensor value);     // differentiable leaf
    Var constant(Tensor value);  // leaf excluded from differentiation

    Var matmul(Var a, Var b);
    Var softmax_rows(Var x);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var relu(Var x);
    Var tanh(Var x);
    Var exp(Var x);
    Var log(Var x);
    Var sqrt(Var x);
    Var neg(Var x);
    Var softplus(Var x);
    Var acos(Var x);
    Var clamp(Var x, double lo, double hi);
    Var concat(Var a, Var b, int axis);
    Var mean_pool(Var x);
    Var sum(Var x);
    Var scale(Var x, double c);
    Var add_scalar(Var x, double c);
    Var element(Var x, std::size_t r, std::size_t c);
    Var mul_scalar(Var x, Var s);  // s must be a 1-element tensor
    Var div_scalar(Var x, Var s);
    Var reshape(Var x, std::vector<std::size_t> shape);
    Var transpose(Var x);
    Var slice_cols(Var x, std::size_t c0, std::size_t c1);  // columns [c0, c1)

    // Reverse sweep from a scalar loss. May be called again (gradients are
    // reset first); repeated runs are bit-identical.
    void backward(Var loss);

    // Gradient of the last backward() w.r.t. v; zeros if v never received
    // one (disconnected or constant).
    Tensor grad(Var v) const;

    const Tensor& value_of(int id) const { return nodes_[id].value; }
    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Tensor value;
        std::vector<int> parents;
        bool needs_grad = false;
        // Receives d(loss)/d(node) and adds each parent's contribution via
        // Tape::accumulate.
        std::function<void(Tape&, const Tensor&, const Node&)> backprop;
    };

    Var push(Tensor value, std::vector<int> parents, const char* what,
             std::function<void(Tape&, const Tensor&, const Node&)> backprop);
    void accumulate(int node_id, const Tensor& contribution);
    void check_same_tape(Var v) const;

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

// Free-function forms so model code reads as plain math.
inline Var matmul(Var a, Var b) { return a.tape->matmul(a, b); }
inline Var softmax_rows(Var x) { return x.tape->softmax_rows(x); }
inline Var add(Var a, Var b) { return a.tape->add(a, b); }
inline Var sub(Var a, Var b) { return a.tape->sub(a, b); }
inline Var mul(Var a, Var b) { return a.tape->mul(a, b); }
inline Var relu(Var x) { return x.tape->relu(x); }
inline Var tanh(Var x) { return x.tape->tanh(x); }
inline Var exp(Var x) { return x.tape->exp(x); }
inline Var log(Var x) { return x.tape->log(x); }
inline Var sqrt(Var x) { return x.tape->sqrt(x); }
inline Var neg(Var x) { return x.tape->neg(x); }
inline Var softplus(Var x) { return x.tape->softplus(x); }
inline Var acos(Var x) { return x.tape->acos(x); }
inline Var clamp(Var x, double lo, double hi) { return x.tape->clamp(x, lo, hi); }
inline Var concat(Var a, Var b, int axis) { return a.tape->concat(a, b, axis); }
inline Var mean_pool(Var x) { return x.tape->mean_pool(x); }
inline Var sum(Var x) { return x.tape->sum(x); }
inline Var scale(Var x, double c) { return x.tape->scale(x, c); }
inline Var add_scalar(Var x, double c) { return x.tape->add_scalar(x, c); }
inline Var element(Var x, std::size_t r, std::size_t c) { return x.tape->element(x, r, c); }
inline Var mul_scalar(Var x, Var s) { return x.tape->mul_scalar(x, s); }
inline Var div_scalar(Var x, Var s) { return x.tape->div_scalar(x, s); }
inline Var reshape(Var x, std::vector<std::size_t> shape) {
    return x.tape->reshape(x, std::move(shape));
}
inline Var transpose(Var x) { return x.tape->transpose(x); }
inline Var slice_cols(Var x, std::size_t c0, std::size_t c1) {
    return x.tape->slice_cols(x, c0, c1);
}

}  // namespace fieldloc
