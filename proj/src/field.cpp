#include "fieldloc/field.hpp"

#include <cmath>
#include <cstring>

namespace fieldloc {

std::size_t MlpFieldParams::param_count() const {
    std::size_t n = W1.numel() + b1.numel() + W2.numel() + b2.numel() +
                    Wdist.numel() + bdist.numel() + Wdir.numel() + bdir.numel();
    if (has_orientation) n += orientation_param_count();
    return n;
}

std::size_t MlpFieldParams::orientation_param_count() const {
    return Wo1.numel() + bo1.numel() + Wo2.numel() + bo2.numel();
}

MlpFieldParams init_field_params(std::size_t hidden, bool orientation, Rng& rng) {
    MlpFieldParams p;
    p.hidden = hidden;
    auto xavier = [&](std::size_t in, std::size_t out) {
        return kernels::random_tensor({in, out}, rng,
                                      std::sqrt(2.0 / static_cast<double>(in + out)));
    };
    p.W1 = xavier(kJointDim, hidden);
    p.b1 = Tensor({hidden}, 0.0);
    p.W2 = xavier(hidden, hidden);
    p.b2 = Tensor({hidden}, 0.0);
    p.Wdist = xavier(hidden, 2);
    p.bdist = Tensor({2}, 0.0);
    p.Wdir = xavier(hidden, 3);
    p.bdir = Tensor({3}, 0.0);
    p.has_orientation = orientation;
    if (orientation) {
        p.Wo1 = xavier(kJointDim, kOrientationHidden);
        p.bo1 = Tensor({kOrientationHidden}, 0.0);
        p.Wo2 = xavier(kOrientationHidden, 2);
        // Bias away from the origin so the normalized prediction is well
        // defined from the first step.
        p.bo2 = Tensor({2}, 0.0);
        p.bo2.data[0] = 0.2;
    }
    return p;
}

namespace {

Tensor affine_row(const Tensor& x, const Tensor& W, const Tensor& b,
                  const char* what) {
    Tensor out = kernels::zip(kernels::matmul(x, W), b,
                              [](double p, double q) { return p + q; }, what);
    check_finite(out, what);
    return out;
}

}  // namespace

Tensor MlpField::joint_vector(const PoseHypothesis& q0,
                              const VisualContext& ctx) const {
    if (ctx.empty())
        throw ContractError("MlpField: visual context is required");
    const Tensor s = embed_hypothesis(q0, enc_);
    return fuse(ctx, s);
}

// Mirrors field_forward_t + build_loss's head parameterization kernel for
// kernel so trained-forward and inference values are bit-identical.
DisplacementDistribution MlpField::predict(const PoseHypothesis& q0,
                                           const VisualContext& ctx) const {
    Tensor z = joint_vector(q0, ctx);
    z.shape = {1, kJointDim};
    Tensor h1 = affine_row(z, params_.W1, params_.b1, "field layer 1");
    for (double& v : h1.data) v = std::tanh(v);
    Tensor h2 = affine_row(h1, params_.W2, params_.b2, "field layer 2");
    for (double& v : h2.data) v = std::tanh(v);
    const Tensor dist = affine_row(h2, params_.Wdist, params_.bdist, "field distance head");
    const Tensor dir = affine_row(h2, params_.Wdir, params_.bdir, "field direction head");
    return distribution_from_raw(dist.data[0], dist.data[1], dir.data[0],
                                 dir.data[1], dir.data[2]);
}

std::array<double, 2> MlpField::predict_orientation(const Tensor& z) const {
    if (!params_.has_orientation)
        throw UnsupportedModeError("predict_orientation: 3-DoF mode is disabled");
    Tensor zr = z;
    zr.shape = {1, kJointDim};
    Tensor h = affine_row(zr, params_.Wo1, params_.bo1, "orientation layer 1");
    for (double& v : h.data) v = std::tanh(v);
    const Tensor o = affine_row(h, params_.Wo2, params_.bo2, "orientation head");
    return {o.data[0], o.data[1]};
}

void OracleFieldSpec::validate() const {
    target.validate();
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ContractError("OracleFieldSpec: alpha must be in (0, 1]");
    if (direction_noise_std < 0.0 || distance_noise_std < 0.0)
        throw ContractError("OracleFieldSpec: noise stds must be >= 0");
}

OracleField::OracleField(OracleFieldSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
}

DisplacementDistribution OracleField::predict(const PoseHypothesis& q0,
                                              const VisualContext&) const {
    const double dx = spec_.target.x - q0.x, dy = spec_.target.y - q0.y;
    const double r = std::hypot(dx, dy);
    DisplacementDistribution d;
    d.sigma2_r = spec_.distance_noise_std * spec_.distance_noise_std + 1e-12;
    d.kappa = 1.0 / (spec_.direction_noise_std * spec_.direction_noise_std + 1e-12);
    if (r < 1e-15) {
        // Degenerate case: already at the target; direction is arbitrary
        // but must stay a fixed unit vector for determinism.
        d.mu_r = 0.0;
        d.mu_theta = {1.0, 0.0};
        return d;
    }
    // Stateless hash noise keyed on the query point keeps predict a pure
    // function, which the parallel-schedule equivalence tests rely on.
    double z1 = 0.0, z2 = 0.0;
    if (spec_.direction_noise_std > 0.0 || spec_.distance_noise_std > 0.0) {
        std::uint64_t hx, hy;
        std::memcpy(&hx, &q0.x, sizeof hx);
        std::memcpy(&hy, &q0.y, sizeof hy);
        std::uint64_t s = derive_seed(spec_.noise_seed, hx, hy);
        const double u1 =
            (static_cast<double>(splitmix64(s) >> 11) + 0.5) * 0x1.0p-53;
        const double u2 =
            static_cast<double>(splitmix64(s + 1) >> 11) * 0x1.0p-53;
        const double mag = std::sqrt(-2.0 * std::log(u1));
        z1 = mag * std::cos(2.0 * kPi * u2);
        z2 = mag * std::sin(2.0 * kPi * u2);
    }
    d.mu_r = std::max(0.0, spec_.alpha * r + spec_.distance_noise_std * z1);
    const double ang = spec_.direction_noise_std * z2;
    const double ca = std::cos(ang), sa = std::sin(ang);
    const double ux = dx / r, uy = dy / r;
    d.mu_theta = {ca * ux - sa * uy, sa * ux + ca * uy};
    return d;
}

PoseHypothesis refine_step(const PoseHypothesis& q0,
                           const DisplacementDistribution& dist) {
    const double n = std::hypot(dist.mu_theta[0], dist.mu_theta[1]);
    if (n == 0.0) throw ContractError("refine_step: zero direction vector");
    PoseHypothesis q1 = q0;
    q1.x = q0.x + dist.mu_r * dist.mu_theta[0] / n;
    q1.y = q0.y + dist.mu_r * dist.mu_theta[1] / n;
    q1.x = std::min(std::max(q1.x, -1.0), 1.0);
    q1.y = std::min(std::max(q1.y, -1.0), 1.0);
    return q1;
}

FieldHeads field_forward_t(Tape& tape, Var z_row, const FieldVars& p) {
    Var h1 = tape.tanh(tape.add(tape.matmul(z_row, p.W1), p.b1));
    Var h2 = tape.tanh(tape.add(tape.matmul(h1, p.W2), p.b2));
    FieldHeads out;
    out.dist = tape.add(tape.matmul(h2, p.Wdist), p.bdist);
    out.dir = tape.add(tape.matmul(h2, p.Wdir), p.bdir);
    out.has_orientation = p.has_orientation;
    if (p.has_orientation) {
        Var ho = tape.tanh(tape.add(tape.matmul(z_row, p.Wo1), p.bo1));
        out.orient = tape.add(tape.matmul(ho, p.Wo2), p.bo2);
    }
    return out;
}

}  // namespace fieldloc
