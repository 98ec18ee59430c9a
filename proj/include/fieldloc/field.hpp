#pragma once

#include <cstdint>

#include "fieldloc/distributions.hpp"
#include "fieldloc/encoder.hpp"
#include "fieldloc/pose.hpp"

namespace fieldloc {

inline constexpr std::size_t kOrientationHidden = 64;

// Trainable parameters of the regression field: a trunk on the joint
// vector z, a distance head emitting (a_r, b_r), a direction head emitting
// (c1, c2, d_kappa), and in 3-DoF mode an orientation head 144 -> 64 -> 2
// read directly off z.
struct MlpFieldParams {
    std::size_t hidden = 256;
    Tensor W1, b1;      // [144 x hidden], [hidden]
    Tensor W2, b2;      // [hidden x hidden], [hidden]
    Tensor Wdist, bdist;  // [hidden x 2], [2]
    Tensor Wdir, bdir;    // [hidden x 3], [3]
    bool has_orientation = false;
    Tensor Wo1, bo1;    // [144 x 64], [64]
    Tensor Wo2, bo2;    // [64 x 2], [2]

    std::size_t param_count() const;
    std::size_t orientation_param_count() const;
};

MlpFieldParams init_field_params(std::size_t hidden, bool orientation, Rng& rng);

// Anything IRS can iterate against: maps a hypothesis plus the scene
// context to a displacement distribution. Implementations are pure and
// safe to call concurrently.
class Field {
  public:
    virtual ~Field() = default;
    virtual DisplacementDistribution predict(const PoseHypothesis& q0,
                                             const VisualContext& ctx) const = 0;
};

// View over encoder + field parameters; does not own them.
class MlpField : public Field {
  public:
    MlpField(const EncoderParams& enc, const MlpFieldParams& params)
        : enc_(enc), params_(params) {}

    DisplacementDistribution predict(const PoseHypothesis& q0,
                                     const VisualContext& ctx) const override;

    // z = [f_vis (+) embed(q0)], shared by predict and the orientation head.
    Tensor joint_vector(const PoseHypothesis& q0, const VisualContext& ctx) const;

    // Raw 2-vector; the consumer normalizes. Requires 3-DoF parameters.
    std::array<double, 2> predict_orientation(const Tensor& z) const;

  private:
    const EncoderParams& enc_;
    const MlpFieldParams& params_;
};

// Analytic stand-in for a trained field: points at a fixed target, closes
// the fraction alpha of the remaining gap per step, with optional
// deterministic hash-seeded noise standing in for model error.
struct OracleFieldSpec {
    PoseHypothesis target;
    double alpha = 1.0;                // fraction of the gap closed per step
    double direction_noise_std = 0.0;  // radians
    double distance_noise_std = 0.0;   // normalized units
    std::uint64_t noise_seed = 0;

    void validate() const;
};

class OracleField : public Field {
  public:
    explicit OracleField(OracleFieldSpec spec);
    DisplacementDistribution predict(const PoseHypothesis& q0,
                                     const VisualContext& ctx) const override;
    const OracleFieldSpec& spec() const { return spec_; }

  private:
    OracleFieldSpec spec_;
};

// One refinement: q1 = q0 + mu_r * mu_theta / |mu_theta|, clamped
// componentwise to the map. Heading, if any, passes through.
PoseHypothesis refine_step(const PoseHypothesis& q0,
                           const DisplacementDistribution& dist);

// Tape-side forward of trunk + heads from a [1 x 144] joint row.
struct FieldVars {
    Var W1, b1, W2, b2, Wdist, bdist, Wdir, bdir;
    bool has_orientation = false;
    Var Wo1, bo1, Wo2, bo2;
};

struct FieldHeads {
    Var dist;    // [1 x 2]
    Var dir;     // [1 x 3]
    Var orient;  // [1 x 2] when enabled
    bool has_orientation = false;
};

FieldHeads field_forward_t(Tape& tape, Var z_row, const FieldVars& p);

}  // namespace fieldloc
