#pragma once

#include <cstddef>

#include "fieldloc/autodiff.hpp"
#include "fieldloc/pose.hpp"

namespace fieldloc {

inline constexpr std::size_t kContextDim = 128;  // d, the common token width
inline constexpr std::size_t kCoordEmbedDim = 16;
inline constexpr std::size_t kJointDim = kContextDim + kCoordEmbedDim;  // 144
inline constexpr int kAttentionHeads = 4;

// A flattened grid of tokens; values is [height*width x dim], row-major in
// (row, col) order. Positional encodings are expected to be already added
// by the scene-preparation step.
struct TokenGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t dim = 0;
    Tensor values;

    void validate() const;
};

struct EncoderParams {
    Tensor Wq, Wk, Wv;  // each [d x d]; heads use contiguous column blocks
    Tensor coord_W;     // [2 x 16]
    Tensor coord_b;     // [16]
    int heads = kAttentionHeads;
};

// The fused scene representation, computed once per scene and shared by
// every refinement step. May be empty for fields that ignore it.
struct VisualContext {
    Tensor f_vis;  // [d] when present
    bool empty() const { return f_vis.data.empty(); }
};

// Fixed 2D sinusoidal encodings: first dim/2 channels encode the row
// index, the rest the column index, each half as interleaved (sin, cos)
// pairs over a geometric frequency ladder with base 10000.
Tensor sinusoidal_pe_2d(std::size_t height, std::size_t width, std::size_t dim);

EncoderParams init_encoder_params(std::size_t dim, Rng& rng);

// Multi-head cross-attention, ground queries against satellite keys and
// values: per head softmax(Q K^T / sqrt(d_k)) V, heads re-concatenated.
Tensor cross_attend(const TokenGrid& ground, const TokenGrid& satellite,
                    const EncoderParams& params);

// mean_pool(cross_attend(...)); the only producer of VisualContext.
VisualContext encode_scene(const TokenGrid& ground, const TokenGrid& satellite,
                           const EncoderParams& params);

// Process-wide count of encode_scene invocations (value and tape paths);
// tests assert a whole inference episode raises it by exactly one.
std::size_t encode_scene_call_count();

// tanh(W^T [x, y] + b): the 16-dim coordinate embedding s.
Tensor embed_hypothesis(const PoseHypothesis& q0, const EncoderParams& params);

// z = [f_vis (+) s], the joint vector feeding the regression trunk.
Tensor fuse(const VisualContext& ctx, const Tensor& s);

// Tape-side twins used by training; forward values are bit-identical to
// the functions above because both call the same kernels.
struct EncoderVars {
    Var Wq, Wk, Wv, coord_W, coord_b;
    int heads = kAttentionHeads;
};

Var cross_attend_t(Tape& tape, Var ground, Var satellite, const EncoderVars& p);
Var encode_scene_t(Tape& tape, Var ground, Var satellite, const EncoderVars& p);
Var embed_hypothesis_t(Tape& tape, const PoseHypothesis& q0, const EncoderVars& p);
Var fuse_t(Tape& tape, Var f_vis, Var s);

}  // namespace fieldloc
