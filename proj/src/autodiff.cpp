#include "fieldloc/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace fieldloc {

const Tensor& Var::value() const { return tape->value_of(id); }

double Var::scalar() const {
    const Tensor& t = value();
    if (!t.is_scalar()) throw ContractError("Var::scalar: tensor is not 1-element");
    return t.data[0];
}

void Tape::check_same_tape(Var v) const {
    if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
        throw ContractError("op applied to a Var from a different tape");
}

Var Tape::push(Tensor value, std::vector<int> parents, const char* what,
               std::function<void(Tape&, const Tensor&, const Node&)> backprop) {
    check_finite(value, what);
    Node n;
    n.value = std::move(value);
    n.parents = std::move(parents);
    for (int p : n.parents)
        if (nodes_[p].needs_grad) n.needs_grad = true;
    if (n.needs_grad) n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int node_id, const Tensor& contribution) {
    if (!nodes_[node_id].needs_grad) return;
    Tensor& g = grads_[node_id];
    if (g.data.empty()) {
        g = contribution;
        return;
    }
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += contribution.data[i];
}

Var Tape::input(Tensor value) {
    check_finite(value, "input");
    Node n;
    n.value = std::move(value);
    n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor value) {
    check_finite(value, "constant");
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::matmul(Var a, Var b) {
    check_same_tape(a);
    check_same_tape(b);
    Tensor out = kernels::matmul(a.value(), b.value());
    const int ia = a.id, ib = b.id;
    return push(std::move(out), {ia, ib}, "matmul",
                [ia, ib](Tape& t, const Tensor& gout, const Node&) {
                    t.accumulate(ia, kernels::matmul_nt(gout, t.value_of(ib)));
                    t.accumulate(ib, kernels::matmul_tn(t.value_of(ia), gout));
                });
}

Var Tape::softmax_rows(Var x) {
    check_same_tape(x);
    Tensor out = kernels::softmax_rows(x.value());
    const int ix = x.id;
    return push(std::move(out), {ix}, "softmax_rows",
                [ix](Tape& t, const Tensor& gout, const Node& self) {
                    const Tensor& y = self.value;
                    Tensor gx = y;
                    const std::size_t n = y.shape[1];
                    for (std::size_t r = 0; r < y.shape[0]; ++r) {
                        double dot = 0.0;
                        for (std::size_t c = 0; c < n; ++c)
                            dot += gout.data[r * n + c] * y.data[r * n + c];
                        for (std::size_t c = 0; c < n; ++c)
                            gx.data[r * n + c] =
                                y.data[r * n + c] * (gout.data[r * n + c] - dot);
                    }
                    t.accumulate(ix, gx);
                });
}

namespace {

// Sums a gradient back down to the shape of a broadcast operand.
Tensor reduce_to_shape(const Tensor& grad, const Tensor& like) {
    if (grad.same_shape(like)) return grad;
    // grad is [m x n], operand was a length-n vector broadcast across rows.
    Tensor out(like.shape, 0.0);
    const std::size_t n = like.numel();
    for (std::size_t i = 0; i < grad.data.size(); ++i) out.data[i % n] += grad.data[i];
    return out;
}

}  // namespace

Var Tape::add(Var a, Var b) {
    check_same_tape(a);
    check_same_tape(b);
    Tensor out = kernels::zip(a.value(), b.value(),
                              [](double x, double y) { return x + y; }, "add");
    const int ia = a.id, ib = b.id;
    return push(std::move(out), {ia, ib}, "add",
                [ia, ib](Tape& t, const Tensor& gout, const Node&) {
                    t.accumulate(ia, reduce_to_shape(gout, t.value_of(ia)));
                    t.accumulate(ib, reduce_to_shape(gout, t.value_of(ib)));
                });
}

Var Tape::sub(Var a, Var b) {
    check_same_tape(a);
    check_same_tape(b);
    Tensor out = kernels::zip(a.value(), b.value(),
                              [](double x, double y) { return x - y; }, "sub");
    const int ia = a.id, ib = b.id;
    return push(std::move(out), {ia, ib}, "sub",
                [ia, ib](Tape& t, const Tensor& gout, const Node&) {
                    t.accumulate(ia, reduce_to_shape(gout, t.value_of(ia)));
                    Tensor neg = gout;
                    for (double& v : neg.data) v = -v;
                    t.accumulate(ib, reduce_to_shape(neg, t.value_of(ib)));
                });
}

Var Tape::mul(Var a, Var b) {
    check_same_tape(a);
    check_same_tape(b);
    Tensor out = kernels::zip(a.value(), b.value(),
                              [](double x, double y) { return x * y; }, "mul");
    const int ia = a.id, ib = b.id;
    return push(std::move(out), {ia, ib}, "mul",
                [ia, ib](Tape& t, const Tensor& gout, const Node&) {
                    const Tensor& av = t.value_of(ia);
                    const Tensor& bv = t.value_of(ib);
                    Tensor ga = kernels::zip(gout, bv,
                                             [](double g, double y) { return g * y; }, "mul.bwd");
                    t.accumulate(ia, reduce_to_shape(ga, av));
                    Tensor gb = kernels::zip(gout, av,
                                             [](double g, double x) { return g * x; }, "mul.bwd");
                    t.accumulate(ib, reduce_to_shape(gb, bv));
                });
}

Var Tape::relu(Var x) {
    check_same_tape(x);
    Tensor out = x.value();
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    const int ix = x.id;
    return push(std::move(out), {ix}, "relu",
                [ix](Tape& t, const Tensor& gout, const Node&) {
                    Tensor gx = gout;
                    const Tensor& xv = t.value_of(ix);
                    for (std::size_t i = 0; i < gx.data.size(); ++i)
                        if (xv.data[i] <= 0.0) gx.data[i] = 0.0;
                    t.accumulate(ix, gx);
                });
}

Var Tape::tanh(Var x) {
    check_same_tape(x);
    Tensor out = x.value();
    for (double& v : out.data) v = std::tanh(v);
    const int ix = x.id;
    return push(std::move(out), {ix}, "tanh",
                [ix](Tape& t, const Tensor& gout, const Node& self) {
                    Tensor gx = gout;
                    for (std::size_t i = 0; i < gx.data.size(); ++i)
                        gx.data[i] *= 1.0 - self.value.data[i] * self.value.data[i];
                    t.accumulate(ix, gx);
                });
}

Var Tape::exp(Var x) {
    check_same_tape(x);
    Tensor out = x.value();
    for (double& v : out.data) v = std::exp(v);
    const int ix = x.id;
    return push(std::move(out), {ix}, "exp",
                [ix](Tape& t, const Tensor& gout, const Node& self) {
                    Tensor gx = gout;
                    for (std::size_t i = 0; i < gx.data.size(); ++i)
                        gx.data[i] *= self.value.data[i];
                    t.accumulate(ix, gx);
                });
}

Var Tape::log(Var x) {
    check_same_tape(x);
    Tensor out = x.value();
    for (double& v : out.data) {
        if (v <= 0.0) throw DomainError("log: non-positive input");
        v = std::log(v);
    }
    const int ix = x.id;
    return push(std::move(out), {ix}, "log",
                [ix](Tape& t, const Tensor& gout, const Node&) {
                    Tensor gx = gout;
                    const Tensor& xv = t.value_of(ix);
                    for (std::size_t i = 0; i < gx.data.size(); ++i)
                        gx.data[i] /= xv.data[i];
                    t.accumulate(ix, gx);
                });
}

Var Tape::sqrt(Var x) {
    check_same_tape(x);
    Tensor out = x.value();
    for (double& v : out.data) {
        if (v <= 0.0) throw DomainError("sqrt: non-positive input");
        v = std::sqrt(v);
    }
    const int ix = x.id;
    return push(std::move(out), {ix}, "sqrt",
                [ix](Tape& t, const Tensor& gout, const Node& self) {
                    Tensor gx = gout;
                    for (std::size_t i = 0; i < gx.data.size(); ++i)
                        gx.data[i] *= 0.5 / self.value.data[i];
                    t.accumulate(ix, gx);
                });
}

Var Tape::neg(Var x) {
    check_same_tape(x);
    Tensor out = x.value();
    for (double& v : out.data) v = -v;
    const int ix = x.id;
    return push(std::move(out), {ix}, "neg",
                [ix](Tape& t, const Tensor& gout, const Node&) {
                    Tensor gx = gout;
                    for (double& v : gx.data) v = -v;
                    t.accumulate(ix, gx);
                });
}

Var Tape::softplus(Var x) {
    check_same_tape(x);
    Tensor out = x.value();
    for (double& v : out.data) v = kernels::softplus_scalar(v);
    const int ix = x.id;
    return push(std::move(out), {ix}, "softplus",
                [ix](Tape& t, const Tensor& gout, const Node&) {
                    Tensor gx = gout;
                    const Tensor& xv = t.value_of(ix);
                    for (std::size_t i = 0; i < gx.data.size(); ++i) {
                        const double x0 = xv.data[i];
                        const double s = x0 >= 0.0 ? 1.0 / (1.0 + std::exp(-x0))
                                                   : std::exp(x0) / (1.0 + std::exp(x0));
                        gx.data[i] *= s;
                    }
                    t.accumulate(ix, gx);
                });
}

Var Tape::acos(Var x) {
    check_same_tape(x);
    Tensor out = x.value();
    for (double& v : out.data) {
        if (v < -1.0 || v > 1.0) throw DomainError("acos: input outside [-1, 1]");
        v = std::acos(v);
    }
    const int ix = x.id;
    return push(std::move(out), {ix}, "acos",
                [ix](Tape& t, const Tensor& gout, const Node&) {
                    Tensor gx = gout;
                    const Tensor& xv = t.value_of(ix);
                    for (std::size_t i = 0; i < gx.data.size(); ++i)
                        gx.data[i] *= -1.0 / std::sqrt(1.0 - xv.data[i] * xv.data[i]);
                    t.accumulate(ix, gx);
                });
}

Var Tape::clamp(Var x, double lo, double hi) {
    check_same_tape(x);
    if (!(lo < hi)) throw ContractError("clamp: lo must be < hi");
    Tensor out = x.value();
    for (double& v : out.data) v = std::min(std::max(v, lo), hi);
    const int ix = x.id;
    return push(std::move(out), {ix}, "clamp",
                [ix, lo, hi](Tape& t, const Tensor& gout, const Node&) {
                    // Pass-through inside [lo, hi] (boundary inclusive), zero outside.
                    Tensor gx = gout;
                    const Tensor& xv = t.value_of(ix);
                    for (std::size_t i = 0; i < gx.data.size(); ++i)
                        if (xv.data[i] < lo || xv.data[i] > hi) gx.data[i] = 0.0;
                    t.accumulate(ix, gx);
                });
}

Var Tape::concat(Var a, Var b, int axis) {
    check_same_tape(a);
    check_same_tape(b);
    Tensor out = kernels::concat(a.value(), b.value(), axis);
    const int ia = a.id, ib = b.id;
    return push(std::move(out), {ia, ib}, "concat",
                [ia, ib, axis](Tape& t, const Tensor& gout, const Node&) {
                    const Tensor& av = t.value_of(ia);
                    const Tensor& bv = t.value_of(ib);
                    Tensor ga(av.shape), gb(bv.shape);
                    if (av.shape.size() == 1 || axis == 0) {
                        std::copy(gout.data.begin(), gout.data.begin() + ga.data.size(),
                                  ga.data.begin());
                        std::copy(gout.data.begin() + ga.data.size(), gout.data.end(),
                                  gb.data.begin());
                    } else {
                        const std::size_t na = av.shape[1], nb = bv.shape[1];
                        for (std::size_t r = 0; r < av.shape[0]; ++r) {
                            std::copy(gout.data.begin() + r * (na + nb),
                                      gout.data.begin() + r * (na + nb) + na,
                                      ga.data.begin() + r * na);
                            std::copy(gout.data.begin() + r * (na + nb) + na,
                                      gout.data.begin() + (r + 1) * (na + nb),
                                      gb.data.begin() + r * nb);
                        }
                    }
                    t.accumulate(ia, ga);
                    t.accumulate(ib, gb);
                });
}

Var Tape::mean_pool(Var x) {
    check_same_tape(x);
    Tensor out = kernels::mean_pool(x.value());
    const int ix = x.id;
    return push(std::move(out), {ix}, "mean_pool",
                [ix](Tape& t, const Tensor& gout, const Node&) {
                    const Tensor& xv = t.value_of(ix);
                    Tensor gx(xv.shape);
                    const std::size_t n = xv.shape[0], d = xv.shape[1];
                    for (std::size_t r = 0; r < n; ++r)
                        for (std::size_t c = 0; c < d; ++c)
                            gx.data[r * d + c] = gout.data[c] / static_cast<double>(n);
                    t.accumulate(ix, gx);
                });
}

Var Tape::sum(Var x) {
    check_same_tape(x);
    double s = 0.0;
    for (double v : x.value().data) s += v;
    Tensor out({1});
    out.data[0] = s;
    const int ix = x.id;
    return push(std::move(out), {ix}, "sum",
                [ix](Tape& t, const Tensor& gout, const Node&) {
                    const Tensor& xv = t.value_of(ix);
                    Tensor gx(xv.shape, gout.data[0]);
                    t.accumulate(ix, gx);
                });
}

Var Tape::scale(Var x, double c) {
    check_same_tape(x);
    Tensor out = x.value();
    for (double& v : out.data) v *= c;
    const int ix = x.id;
    return push(std::move(out), {ix}, "scale",
                [ix, c](Tape& t, const Tensor& gout, const Node&) {
                    Tensor gx = gout;
                    for (double& v : gx.data) v *= c;
                    t.accumulate(ix, gx);
                });
}

Var Tape::add_scalar(Var x, double c) {
    check_same_tape(x);
    Tensor out = x.value();
    for (double& v : out.data) v += c;
    const int ix = x.id;
    return push(std::move(out), {ix}, "add_scalar",
                [ix](Tape& t, const Tensor& gout, const Node&) {
                    t.accumulate(ix, gout);
                });
}

Var Tape::element(Var x, std::size_t r, std::size_t c) {
    check_same_tape(x);
    const Tensor& xv = x.value();
    if (r >= xv.rows() || c >= xv.numel() / xv.rows())
        throw DimensionError("element: index out of range");
    Tensor out({1});
    const std::size_t idx = r * (xv.numel() / xv.rows()) + c;
    out.data[0] = xv.data[idx];
    const int ix = x.id;
    return push(std::move(out), {ix}, "element",
                [ix, idx](Tape& t, const Tensor& gout, const Node&) {
                    const Tensor& src = t.value_of(ix);
                    Tensor gx(src.shape, 0.0);
                    gx.data[idx] = gout.data[0];
                    t.accumulate(ix, gx);
                });
}

Var Tape::mul_scalar(Var x, Var s) {
    check_same_tape(x);
    check_same_tape(s);
    if (!s.value().is_scalar()) throw ContractError("mul_scalar: s must be 1-element");
    const double sv = s.value().data[0];
    Tensor out = x.value();
    for (double& v : out.data) v *= sv;
    const int ix = x.id, is = s.id;
    return push(std::move(out), {ix, is}, "mul_scalar",
                [ix, is](Tape& t, const Tensor& gout, const Node&) {
                    const Tensor& xv = t.value_of(ix);
                    const double s0 = t.value_of(is).data[0];
                    Tensor gx = gout;
                    for (double& v : gx.data) v *= s0;
                    t.accumulate(ix, gx);
                    double gs = 0.0;
                    for (std::size_t i = 0; i < gout.data.size(); ++i)
                        gs += gout.data[i] * xv.data[i];
                    Tensor gst({1});
                    gst.data[0] = gs;
                    t.accumulate(is, gst);
                });
}

Var Tape::div_scalar(Var x, Var s) {
    check_same_tape(x);
    check_same_tape(s);
    if (!s.value().is_scalar()) throw ContractError("div_scalar: s must be 1-element");
    const double sv = s.value().data[0];
    if (sv == 0.0) throw DomainError("div_scalar: division by zero");
    Tensor out = x.value();
    for (double& v : out.data) v /= sv;
    const int ix = x.id, is = s.id;
    return push(std::move(out), {ix, is}, "div_scalar",
                [ix, is](Tape& t, const Tensor& gout, const Node&) {
                    const Tensor& xv = t.value_of(ix);
                    const double s0 = t.value_of(is).data[0];
                    Tensor gx = gout;
                    for (double& v : gx.data) v /= s0;
                    t.accumulate(ix, gx);
                    double gs = 0.0;
                    for (std::size_t i = 0; i < gout.data.size(); ++i)
                        gs += gout.data[i] * xv.data[i];
                    Tensor gst({1});
                    gst.data[0] = -gs / (s0 * s0);
                    t.accumulate(is, gst);
                });
}

Var Tape::reshape(Var x, std::vector<std::size_t> shape) {
    check_same_tape(x);
    Tensor out = x.value();
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    if (n != out.numel()) throw DimensionError("reshape: element count mismatch");
    out.shape = std::move(shape);
    const int ix = x.id;
    return push(std::move(out), {ix}, "reshape",
                [ix](Tape& t, const Tensor& gout, const Node&) {
                    Tensor gx = gout;
                    gx.shape = t.value_of(ix).shape;
                    t.accumulate(ix, gx);
                });
}

Var Tape::transpose(Var x) {
    check_same_tape(x);
    Tensor out = kernels::transpose(x.value());
    const int ix = x.id;
    return push(std::move(out), {ix}, "transpose",
                [ix](Tape& t, const Tensor& gout, const Node&) {
                    t.accumulate(ix, kernels::transpose(gout));
                });
}

Var Tape::slice_cols(Var x, std::size_t c0, std::size_t c1) {
    check_same_tape(x);
    Tensor out = kernels::slice_cols(x.value(), c0, c1);
    const int ix = x.id;
    return push(std::move(out), {ix}, "slice_cols",
                [ix, c0, c1](Tape& t, const Tensor& gout, const Node&) {
                    const Tensor& xv = t.value_of(ix);
                    Tensor gx(xv.shape, 0.0);
                    const std::size_t w = c1 - c0, n = xv.shape[1];
                    for (std::size_t r = 0; r < xv.shape[0]; ++r)
                        for (std::size_t c = 0; c < w; ++c)
                            gx.data[r * n + c0 + c] = gout.data[r * w + c];
                    t.accumulate(ix, gx);
                });
}

void Tape::backward(Var loss) {
    check_same_tape(loss);
    if (!loss.value().is_scalar())
        throw ContractError("backward: loss must be a 1-element tensor");
    if (!nodes_[loss.id].needs_grad)
        throw ContractError("backward: loss does not depend on any input");
    grads_.assign(nodes_.size(), Tensor{});
    Tensor seed({1});
    seed.data[0] = 1.0;
    grads_[loss.id] = seed;
    for (int i = loss.id; i >= 0; --i) {
        const Node& n = nodes_[i];
        if (grads_[i].data.empty() || !n.backprop) continue;
        n.backprop(*this, grads_[i], n);
    }
    for (std::size_t i = 0; i < grads_.size(); ++i)
        if (!grads_[i].data.empty()) check_finite(grads_[i], "backward");
}

Tensor Tape::grad(Var v) const {
    check_same_tape(v);
    if (v.id < static_cast<int>(grads_.size()) && !grads_[v.id].data.empty())
        return grads_[v.id];
    return Tensor(nodes_[v.id].value.shape, 0.0);
}

}  // namespace fieldloc
