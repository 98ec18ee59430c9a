#pragma once

// Finite-difference gradient oracle shared by the unit and acceptance
// suites: central differences, step 1e-5, relative error against
// max(1, |analytic|, |numeric|). Cases sample non-singular inputs only
// (away from kinks, domain edges, and normalization singularities).

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fieldloc/distributions.hpp"
#include "fieldloc/encoder.hpp"
#include "fieldloc/field.hpp"
#include "fieldloc/rng.hpp"

namespace fdcheck {

using fieldloc::Rng;
using fieldloc::Tape;
using fieldloc::Tensor;
using fieldloc::Var;

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

struct FdReport {
    std::size_t checked = 0;
    double max_rel_err = 0.0;
};

inline double eval_scalar(const std::vector<Tensor>& inputs,
                          const Builder& build) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(inputs.size());
    for (const Tensor& t : inputs) leaves.push_back(tape.input(t));
    return build(tape, leaves).scalar();
}

inline FdReport fd_gradients(std::vector<Tensor> inputs, const Builder& build,
                             double step = 1e-5) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(inputs.size());
    for (const Tensor& t : inputs) leaves.push_back(tape.input(t));
    Var loss = build(tape, leaves);
    tape.backward(loss);
    std::vector<Tensor> grads;
    grads.reserve(leaves.size());
    for (Var v : leaves) grads.push_back(tape.grad(v));

    FdReport rep;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (std::size_t k = 0; k < inputs[i].data.size(); ++k) {
            const double orig = inputs[i].data[k];
            inputs[i].data[k] = orig + step;
            const double fp = eval_scalar(inputs, build);
            inputs[i].data[k] = orig - step;
            const double fm = eval_scalar(inputs, build);
            inputs[i].data[k] = orig;
            const double fd = (fp - fm) / (2.0 * step);
            const double g = grads[i].data[k];
            const double rel = std::abs(g - fd) /
                               std::max({1.0, std::abs(g), std::abs(fd)});
            if (rel > rep.max_rel_err) rep.max_rel_err = rel;
            ++rep.checked;
        }
    }
    return rep;
}

struct OpCase {
    std::string name;
    // Draws one random non-singular input configuration plus the graph
    // builder (which may capture drawn constants such as loss targets).
    std::function<std::pair<std::vector<Tensor>, Builder>(Rng&)> make;
};

namespace detail {

inline Tensor rand_t(Rng& rng, std::vector<std::size_t> shape, double lo,
                     double hi) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = fieldloc::uniform_in(rng, lo, hi);
    return t;
}

// Magnitudes in [lo_mag, hi_mag] with random sign: keeps relu/abs-style
// kinks and zero denominators away.
inline Tensor rand_signed(Rng& rng, std::vector<std::size_t> shape,
                          double lo_mag, double hi_mag) {
    Tensor t(std::move(shape));
    for (double& v : t.data) {
        const double mag = fieldloc::uniform_in(rng, lo_mag, hi_mag);
        v = fieldloc::uniform_unit(rng) < 0.5 ? -mag : mag;
    }
    return t;
}

inline std::array<double, 2> rand_unit(Rng& rng) {
    const double a = fieldloc::uniform_in(rng, -fieldloc::kPi, fieldloc::kPi);
    return {std::cos(a), std::sin(a)};
}

}  // namespace detail

// Every differentiable tape operation plus every loss, each as one
// FD-checkable scalar graph.
inline std::vector<OpCase> all_op_cases() {
    using namespace detail;
    using namespace fieldloc;
    std::vector<OpCase> cases;

    auto simple = [&](std::string name,
                      std::function<Var(Tape&, std::vector<Var>)> graph,
                      std::function<std::vector<Tensor>(Rng&)> gen) {
        cases.push_back(
            {std::move(name), [graph, gen](Rng& rng) {
                 auto inputs = gen(rng);
                 Builder b = [graph](Tape& t, const std::vector<Var>& l) {
                     return graph(t, l);
                 };
                 return std::make_pair(inputs, b);
             }});
    };

    simple(
        "matmul",
        [](Tape& t, std::vector<Var> l) { return sum(matmul(l[0], l[1])); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -1, 1),
                                       rand_t(rng, {3, 4}, -1, 1)};
        });
    simple(
        "softmax_rows",
        [](Tape& t, std::vector<Var> l) {
            // Weighted sum so the gradient is not annihilated by the
            // rows-sum-to-one constraint.
            return sum(mul(softmax_rows(l[0]), l[1]));
        },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 4}, -2, 2),
                                       rand_t(rng, {2, 4}, -1, 1)};
        });
    simple(
        "add",
        [](Tape& t, std::vector<Var> l) { return sum(add(l[0], l[1])); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {3, 2}, -1, 1),
                                       rand_t(rng, {3, 2}, -1, 1)};
        });
    simple(
        "add_broadcast_rowvec",
        [](Tape& t, std::vector<Var> l) {
            return sum(mul(add(l[0], l[1]), l[2]));
        },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {3, 4}, -1, 1),
                                       rand_t(rng, {4}, -1, 1),
                                       rand_t(rng, {3, 4}, -1, 1)};
        });
    simple(
        "sub",
        [](Tape& t, std::vector<Var> l) { return sum(mul(sub(l[0], l[1]), l[1])); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -1, 1),
                                       rand_t(rng, {2, 3}, -1, 1)};
        });
    simple(
        "mul",
        [](Tape& t, std::vector<Var> l) { return sum(mul(l[0], l[1])); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -1, 1),
                                       rand_t(rng, {2, 3}, -1, 1)};
        });
    simple(
        "relu",
        [](Tape& t, std::vector<Var> l) { return sum(relu(l[0])); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_signed(rng, {3, 3}, 0.05, 1.0)};
        });
    simple(
        "tanh",
        [](Tape& t, std::vector<Var> l) { return sum(tanh(l[0])); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -2, 2)};
        });
    simple(
        "exp",
        [](Tape& t, std::vector<Var> l) { return sum(exp(l[0])); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 2}, -2, 2)};
        });
    simple(
        "log",
        [](Tape& t, std::vector<Var> l) { return sum(log(l[0])); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 2}, 0.2, 3.0)};
        });
    simple(
        "sqrt",
        [](Tape& t, std::vector<Var> l) { return sum(sqrt(l[0])); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 2}, 0.2, 3.0)};
        });
    simple(
        "neg",
        [](Tape& t, std::vector<Var> l) { return sum(mul(neg(l[0]), l[0])); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -1, 1)};
        });
    simple(
        "softplus",
        [](Tape& t, std::vector<Var> l) { return sum(softplus(l[0])); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -3, 3)};
        });
    simple(
        "acos",
        [](Tape& t, std::vector<Var> l) { return sum(acos(l[0])); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 2}, -0.9, 0.9)};
        });
    simple(
        "clamp_interior",
        [](Tape& t, std::vector<Var> l) { return sum(clamp(l[0], -10.0, 10.0)); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -2, 2)};
        });
    simple(
        "concat_axis0",
        [](Tape& t, std::vector<Var> l) {
            return sum(mul(concat(l[0], l[1], 0), l[2]));
        },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -1, 1),
                                       rand_t(rng, {1, 3}, -1, 1),
                                       rand_t(rng, {3, 3}, -1, 1)};
        });
    simple(
        "concat_axis1",
        [](Tape& t, std::vector<Var> l) {
            return sum(mul(concat(l[0], l[1], 1), l[2]));
        },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 2}, -1, 1),
                                       rand_t(rng, {2, 3}, -1, 1),
                                       rand_t(rng, {2, 5}, -1, 1)};
        });
    simple(
        "concat_rank1",
        [](Tape& t, std::vector<Var> l) {
            return sum(mul(concat(l[0], l[1], 0), l[2]));
        },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {3}, -1, 1),
                                       rand_t(rng, {2}, -1, 1),
                                       rand_t(rng, {5}, -1, 1)};
        });
    simple(
        "mean_pool",
        [](Tape& t, std::vector<Var> l) {
            return sum(mul(mean_pool(l[0]), l[1]));
        },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {4, 3}, -1, 1),
                                       rand_t(rng, {3}, -1, 1)};
        });
    simple(
        "sum",
        [](Tape& t, std::vector<Var> l) { return sum(l[0]); },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {3, 3}, -1, 1)};
        });
    simple(
        "scale_add_scalar",
        [](Tape& t, std::vector<Var> l) {
            return sum(add_scalar(scale(l[0], 2.5), -0.75));
        },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -1, 1)};
        });
    simple(
        "element",
        [](Tape& t, std::vector<Var> l) {
            return mul(element(l[0], 1, 2), element(l[0], 0, 0));
        },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -1, 1)};
        });
    simple(
        "mul_scalar",
        [](Tape& t, std::vector<Var> l) {
            return sum(mul_scalar(l[0], sum(l[1])));
        },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -1, 1),
                                       rand_t(rng, {2}, 0.2, 1.0)};
        });
    simple(
        "div_scalar",
        [](Tape& t, std::vector<Var> l) {
            return sum(div_scalar(l[0], sum(l[1])));
        },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -1, 1),
                                       rand_t(rng, {2}, 0.3, 1.0)};
        });
    simple(
        "reshape",
        [](Tape& t, std::vector<Var> l) {
            return sum(mul(reshape(l[0], {3, 2}), l[1]));
        },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -1, 1),
                                       rand_t(rng, {3, 2}, -1, 1)};
        });
    simple(
        "transpose",
        [](Tape& t, std::vector<Var> l) {
            return sum(mul(transpose(l[0]), l[1]));
        },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 3}, -1, 1),
                                       rand_t(rng, {3, 2}, -1, 1)};
        });
    simple(
        "slice_cols",
        [](Tape& t, std::vector<Var> l) {
            return sum(mul(slice_cols(l[0], 1, 3), l[1]));
        },
        [](Rng& rng) {
            return std::vector<Tensor>{rand_t(rng, {2, 4}, -1, 1),
                                       rand_t(rng, {2, 2}, -1, 1)};
        });

    // Losses from raw head outputs, the graphs training actually runs.
    cases.push_back({"loss_distance_nll", [](Rng& rng) {
                         fieldloc::DisplacementTarget tgt;
                         tgt.r_gt = fieldloc::uniform_in(rng, 0.1, 1.5);
                         tgt.theta_gt = detail::rand_unit(rng);
                         auto inputs = std::vector<Tensor>{
                             rand_t(rng, {1, 2}, -1.5, 1.5),
                             rand_t(rng, {1, 3}, -1.5, 1.5)};
                         Builder b = [tgt](Tape& t, const std::vector<Var>& l) {
                             return fieldloc::build_loss(t, l[0], l[1], tgt).loss_r;
                         };
                         return std::make_pair(inputs, b);
                     }});
    cases.push_back({"loss_direction_angmf", [](Rng& rng) {
                         fieldloc::DisplacementTarget tgt;
                         tgt.r_gt = fieldloc::uniform_in(rng, 0.1, 1.5);
                         tgt.theta_gt = detail::rand_unit(rng);
                         // Direction pair away from both the zero-vector
                         // singularity and exact (anti)alignment.
                         Tensor dir(std::vector<std::size_t>{1, 3});
                         const auto u = detail::rand_unit(rng);
                         const double m = fieldloc::uniform_in(rng, 0.4, 1.6);
                         dir.data = {m * u[0], m * u[1],
                                     fieldloc::uniform_in(rng, -1.5, 1.5)};
                         const double d = (u[0] * tgt.theta_gt[0] +
                                           u[1] * tgt.theta_gt[1]);
                         if (std::abs(d) > 0.999) {
                             tgt.theta_gt = {-tgt.theta_gt[1], tgt.theta_gt[0]};
                         }
                         auto inputs = std::vector<Tensor>{
                             rand_t(rng, {1, 2}, -1.5, 1.5), dir};
                         Builder b = [tgt](Tape& t, const std::vector<Var>& l) {
                             return fieldloc::build_loss(t, l[0], l[1], tgt)
                                 .loss_theta;
                         };
                         return std::make_pair(inputs, b);
                     }});
    cases.push_back({"loss_total", [](Rng& rng) {
                         fieldloc::DisplacementTarget tgt;
                         tgt.r_gt = fieldloc::uniform_in(rng, 0.1, 1.5);
                         tgt.theta_gt = detail::rand_unit(rng);
                         Tensor dir(std::vector<std::size_t>{1, 3});
                         const auto u = detail::rand_unit(rng);
                         const double m = fieldloc::uniform_in(rng, 0.4, 1.6);
                         dir.data = {m * u[0], m * u[1],
                                     fieldloc::uniform_in(rng, -1.5, 1.5)};
                         const double d = (u[0] * tgt.theta_gt[0] +
                                           u[1] * tgt.theta_gt[1]);
                         if (std::abs(d) > 0.999) {
                             tgt.theta_gt = {-tgt.theta_gt[1], tgt.theta_gt[0]};
                         }
                         auto inputs = std::vector<Tensor>{
                             rand_t(rng, {1, 2}, -1.5, 1.5), dir};
                         Builder b = [tgt](Tape& t, const std::vector<Var>& l) {
                             return fieldloc::build_loss(t, l[0], l[1], tgt).total;
                         };
                         return std::make_pair(inputs, b);
                     }});
    cases.push_back({"loss_masked_target", [](Rng& rng) {
                         fieldloc::DisplacementTarget tgt;
                         tgt.r_gt = 0.0;
                         tgt.masked = true;
                         auto inputs = std::vector<Tensor>{
                             rand_t(rng, {1, 2}, -1.5, 1.5),
                             rand_t(rng, {1, 3}, -1.5, 1.5)};
                         Builder b = [tgt](Tape& t, const std::vector<Var>& l) {
                             return fieldloc::build_loss(t, l[0], l[1], tgt).total;
                         };
                         return std::make_pair(inputs, b);
                     }});
    cases.push_back({"loss_orientation", [](Rng& rng) {
                         const auto g = detail::rand_unit(rng);
                         Tensor p(std::vector<std::size_t>{1, 2});
                         const auto u = detail::rand_unit(rng);
                         const double m = fieldloc::uniform_in(rng, 0.3, 2.0);
                         p.data = {m * u[0], m * u[1]};
                         auto inputs = std::vector<Tensor>{p};
                         Builder b = [g](Tape& t, const std::vector<Var>& l) {
                             return fieldloc::build_orientation_loss(t, l[0], g);
                         };
                         return std::make_pair(inputs, b);
                     }});

    // Whole pipeline at toy width: attention encoder, coordinate fusion,
    // trunk, heads, combined loss.
    cases.push_back({"end_to_end_field", [](Rng& rng) {
                         using namespace fieldloc;
                         const std::size_t dim = 8, emb = 4, hid = 5;
                         const std::size_t joint = dim + emb;
                         std::vector<Tensor> inputs;
                         inputs.push_back(rand_t(rng, {dim, dim}, -0.5, 0.5));
                         inputs.push_back(rand_t(rng, {dim, dim}, -0.5, 0.5));
                         inputs.push_back(rand_t(rng, {dim, dim}, -0.5, 0.5));
                         inputs.push_back(rand_t(rng, {2, emb}, -0.5, 0.5));
                         inputs.push_back(rand_t(rng, {emb}, -0.5, 0.5));
                         inputs.push_back(rand_t(rng, {joint, hid}, -0.5, 0.5));
                         inputs.push_back(rand_t(rng, {hid}, -0.3, 0.3));
                         inputs.push_back(rand_t(rng, {hid, hid}, -0.5, 0.5));
                         inputs.push_back(rand_t(rng, {hid}, -0.3, 0.3));
                         inputs.push_back(rand_t(rng, {hid, 2}, -0.5, 0.5));
                         inputs.push_back(rand_t(rng, {2}, -0.3, 0.3));
                         inputs.push_back(rand_t(rng, {hid, 3}, -0.5, 0.5));
                         inputs.push_back(rand_t(rng, {3}, -0.3, 0.3));
                         const Tensor ground = rand_t(rng, {4, dim}, -1, 1);
                         const Tensor sat = rand_t(rng, {9, dim}, -1, 1);
                         PoseHypothesis q0;
                         q0.x = uniform_in(rng, -0.8, 0.8);
                         q0.y = uniform_in(rng, -0.8, 0.8);
                         DisplacementTarget tgt;
                         tgt.r_gt = uniform_in(rng, 0.1, 1.2);
                         tgt.theta_gt = detail::rand_unit(rng);
                         Builder b = [=](Tape& t, const std::vector<Var>& l) {
                             EncoderVars ev{l[0], l[1], l[2], l[3], l[4], 4};
                             FieldVars fv;
                             fv.W1 = l[5];
                             fv.b1 = l[6];
                             fv.W2 = l[7];
                             fv.b2 = l[8];
                             fv.Wdist = l[9];
                             fv.bdist = l[10];
                             fv.Wdir = l[11];
                             fv.bdir = l[12];
                             Var g = t.constant(ground);
                             Var s = t.constant(sat);
                             Var f_vis = encode_scene_t(t, g, s, ev);
                             Var emb_v = embed_hypothesis_t(t, q0, ev);
                             Var z = fuse_t(t, f_vis, emb_v);
                             Var z_row = reshape(z, {1, joint});
                             FieldHeads heads = field_forward_t(t, z_row, fv);
                             return build_loss(t, heads.dist, heads.dir, tgt)
                                 .total;
                         };
                         return std::make_pair(inputs, b);
                     }});
    cases.push_back({"end_to_end_orientation", [](Rng& rng) {
                         using namespace fieldloc;
                         const std::size_t joint = 12, ohid = 6;
                         std::vector<Tensor> inputs;
                         inputs.push_back(rand_t(rng, {1, joint}, -1, 1));
                         inputs.push_back(rand_t(rng, {joint, ohid}, -0.5, 0.5));
                         inputs.push_back(rand_t(rng, {ohid}, -0.3, 0.3));
                         inputs.push_back(rand_t(rng, {ohid, 2}, -0.5, 0.5));
                         Tensor bo2(std::vector<std::size_t>{2});
                         // Bias keeps the pre-normalization head output away
                         // from the zero-vector singularity.
                         bo2.data = {fieldloc::uniform_in(rng, 0.4, 0.8),
                                     fieldloc::uniform_in(rng, 0.4, 0.8)};
                         inputs.push_back(bo2);
                         const auto g = detail::rand_unit(rng);
                         Builder b = [g](Tape& t, const std::vector<Var>& l) {
                             FieldVars fv;
                             fv.has_orientation = true;
                             // Orientation path reads z directly; trunk
                             // weights are unused and left unset.
                             fv.Wo1 = l[1];
                             fv.bo1 = l[2];
                             fv.Wo2 = l[3];
                             fv.bo2 = l[4];
                             Var h = tanh(add(matmul(l[0], fv.Wo1), fv.bo1));
                             Var o = add(matmul(h, fv.Wo2), fv.bo2);
                             return build_orientation_loss(t, o, g);
                         };
                         return std::make_pair(inputs, b);
                     }});

    return cases;
}

}  // namespace fdcheck
