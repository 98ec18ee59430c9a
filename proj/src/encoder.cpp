#include "fieldloc/encoder.hpp"

#include <atomic>
#include <cmath>

namespace fieldloc {

namespace {

std::atomic<std::size_t> g_encode_calls{0};

void check_dims(const TokenGrid& ground, const TokenGrid& satellite,
                const EncoderParams& p) {
    ground.validate();
    satellite.validate();
    if (ground.dim != satellite.dim)
        throw DimensionError("cross_attend: grid dims disagree");
    if (p.Wq.shape != std::vector<std::size_t>{ground.dim, ground.dim} ||
        !p.Wq.same_shape(p.Wk) || !p.Wq.same_shape(p.Wv))
        throw DimensionError("cross_attend: weight shapes disagree with token dim");
    if (p.heads < 1 || ground.dim % static_cast<std::size_t>(p.heads) != 0)
        throw DimensionError("cross_attend: dim not divisible by head count");
}

}  // namespace

void TokenGrid::validate() const {
    if (height == 0 || width == 0 || dim == 0)
        throw ContractError("TokenGrid: empty dimensions");
    if (values.shape != std::vector<std::size_t>{height * width, dim})
        throw DimensionError("TokenGrid: values shape disagrees with grid");
    check_finite(values, "TokenGrid");
}

Tensor sinusoidal_pe_2d(std::size_t height, std::size_t width, std::size_t dim) {
    if (dim % 4 != 0)
        throw DimensionError("sinusoidal_pe_2d: dim must be divisible by 4");
    const std::size_t half = dim / 2, pairs = half / 2;
    Tensor pe({height * width, dim});
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            double* row = pe.data.data() + (r * width + c) * dim;
            for (std::size_t i = 0; i < pairs; ++i) {
                const double omega =
                    std::pow(10000.0, -static_cast<double>(i) / pairs);
                row[2 * i] = std::sin(r * omega);
                row[2 * i + 1] = std::cos(r * omega);
                row[half + 2 * i] = std::sin(c * omega);
                row[half + 2 * i + 1] = std::cos(c * omega);
            }
        }
    }
    return pe;
}

EncoderParams init_encoder_params(std::size_t dim, Rng& rng) {
    EncoderParams p;
    // Query/key start near a scaled identity so token-similarity structure
    // is visible to the very first training steps; values start near a
    // plain pass-through.
    const double diag_qk = 1.5, diag_v = 1.0, noise = 0.05;
    auto near_identity = [&](double diag) {
        Tensor t = kernels::random_tensor({dim, dim}, rng, noise);
        for (std::size_t i = 0; i < dim; ++i) t.at(i, i) += diag;
        return t;
    };
    p.Wq = near_identity(diag_qk);
    p.Wk = near_identity(diag_qk);
    p.Wv = near_identity(diag_v);
    p.coord_W = kernels::random_tensor({2, kCoordEmbedDim}, rng, 0.5);
    p.coord_b = Tensor({kCoordEmbedDim}, 0.0);
    p.heads = kAttentionHeads;
    return p;
}

// The value path below and the tape path in cross_attend_t perform the
// same kernel calls in the same order, so their outputs are bit-identical;
// test_encoder asserts exact equality.
Tensor cross_attend(const TokenGrid& ground, const TokenGrid& satellite,
                    const EncoderParams& p) {
    check_dims(ground, satellite, p);
    const std::size_t d = ground.dim;
    const std::size_t dk = d / static_cast<std::size_t>(p.heads);
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

    const Tensor Q = kernels::matmul(ground.values, p.Wq);
    const Tensor K = kernels::matmul(satellite.values, p.Wk);
    const Tensor V = kernels::matmul(satellite.values, p.Wv);

    Tensor out;
    for (int h = 0; h < p.heads; ++h) {
        const std::size_t c0 = h * dk, c1 = c0 + dk;
        const Tensor Qh = kernels::slice_cols(Q, c0, c1);
        const Tensor Kh = kernels::slice_cols(K, c0, c1);
        const Tensor Vh = kernels::slice_cols(V, c0, c1);
        Tensor scores = kernels::matmul(Qh, kernels::transpose(Kh));
        for (double& v : scores.data) v *= inv_sqrt_dk;
        const Tensor attn = kernels::softmax_rows(scores);
        Tensor oh = kernels::matmul(attn, Vh);
        out = h == 0 ? std::move(oh) : kernels::concat(out, oh, 1);
    }
    check_finite(out, "cross_attend");
    return out;
}

VisualContext encode_scene(const TokenGrid& ground, const TokenGrid& satellite,
                           const EncoderParams& p) {
    g_encode_calls.fetch_add(1, std::memory_order_relaxed);
    return VisualContext{kernels::mean_pool(cross_attend(ground, satellite, p))};
}

std::size_t encode_scene_call_count() {
    return g_encode_calls.load(std::memory_order_relaxed);
}

Tensor embed_hypothesis(const PoseHypothesis& q0, const EncoderParams& p) {
    q0.validate();
    Tensor xy = Tensor::row({q0.x, q0.y});
    Tensor s = kernels::zip(kernels::matmul(xy, p.coord_W), p.coord_b,
                            [](double a, double b) { return a + b; }, "embed.add");
    for (double& v : s.data) v = std::tanh(v);
    s.shape = {s.data.size()};
    return s;
}

Tensor fuse(const VisualContext& ctx, const Tensor& s) {
    if (ctx.f_vis.shape != std::vector<std::size_t>{kContextDim})
        throw DimensionError("fuse: f_vis must be [128]");
    if (s.shape != std::vector<std::size_t>{kCoordEmbedDim})
        throw DimensionError("fuse: s must be [16]");
    return kernels::concat(ctx.f_vis, s, 0);
}

Var cross_attend_t(Tape& tape, Var ground, Var satellite, const EncoderVars& p) {
    const std::size_t d = ground.value().shape[1];
    const std::size_t dk = d / static_cast<std::size_t>(p.heads);
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

    Var Q = tape.matmul(ground, p.Wq);
    Var K = tape.matmul(satellite, p.Wk);
    Var V = tape.matmul(satellite, p.Wv);

    Var out;
    for (int h = 0; h < p.heads; ++h) {
        const std::size_t c0 = h * dk, c1 = c0 + dk;
        Var Qh = tape.slice_cols(Q, c0, c1);
        Var Kh = tape.slice_cols(K, c0, c1);
        Var Vh = tape.slice_cols(V, c0, c1);
        Var scores = tape.scale(tape.matmul(Qh, tape.transpose(Kh)), inv_sqrt_dk);
        Var attn = tape.softmax_rows(scores);
        Var oh = tape.matmul(attn, Vh);
        out = h == 0 ? oh : tape.concat(out, oh, 1);
    }
    return out;
}

Var encode_scene_t(Tape& tape, Var ground, Var satellite, const EncoderVars& p) {
    g_encode_calls.fetch_add(1, std::memory_order_relaxed);
    return tape.mean_pool(cross_attend_t(tape, ground, satellite, p));
}

Var embed_hypothesis_t(Tape& tape, const PoseHypothesis& q0, const EncoderVars& p) {
    q0.validate();
    Var xy = tape.constant(Tensor::row({q0.x, q0.y}));
    Var s = tape.tanh(tape.add(tape.matmul(xy, p.coord_W), p.coord_b));
    return tape.reshape(s, {s.value().shape[1]});
}

Var fuse_t(Tape& tape, Var f_vis, Var s) { return tape.concat(f_vis, s, 0); }

}  // namespace fieldloc
