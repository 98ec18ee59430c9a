#pragma once

#include <array>

#include "fieldloc/autodiff.hpp"

namespace fieldloc {

inline constexpr double kPi = 3.14159265358979323846;
// Displacements below this are treated as "already there": the direction
// target is undefined and its loss term is masked. Shared with the trainer.
inline constexpr double kEpsDir = 1e-6;
// Margin keeping acos away from its infinite-derivative endpoints.
inline constexpr double kAcosClampMargin = 1e-7;
// Smoothing floor for direction normalization (see distribution_from_raw).
inline constexpr double kNormEps = 1e-8;

// Polar displacement prediction: Gaussian over distance, von Mises-Fisher
// over direction on the unit circle.
struct DisplacementDistribution {
    double mu_r = 0.0;
    double sigma2_r = 1.0;
    std::array<double, 2> mu_theta{1.0, 0.0};
    double kappa = 0.0;

    void validate() const;
};

struct DisplacementTarget {
    double r_gt = 0.0;
    std::array<double, 2> theta_gt{1.0, 0.0};  // meaningful only when !masked
    bool masked = false;                       // true iff r_gt < kEpsDir
};

// Modified Bessel function of the first kind, order 0. Power series below
// x = 15, asymptotic expansion above; relative error < 1e-9 on [0, 100].
double bessel_i0(double x);
double log_bessel_i0(double x);

// Density of the S^1 von Mises-Fisher distribution at unit vector u.
double vmf_density(const std::array<double, 2>& u,
                   const std::array<double, 2>& mu_theta, double kappa);

// 0.5 * ((r - mu)^2 / s2 + log s2); the additive 0.5*log(2*pi) constant is
// deliberately omitted. Use gaussian_nll_full for actual density values.
double gaussian_nll(double r_gt, double mu_r, double sigma2_r);
double gaussian_nll_full(double r_gt, double mu_r, double sigma2_r);

// Directional loss: -log(k^2+1) + k*acos(clamp(mu.theta)) + log(1+exp(-k*pi)).
double angmf_loss(const std::array<double, 2>& mu_theta, double kappa,
                  const std::array<double, 2>& theta_gt);

// 1 - <normalize(p), g>. Throws on a near-zero prediction norm.
double orientation_loss(const std::array<double, 2>& p_gamma,
                        const std::array<double, 2>& g_gamma);

// L_r + L_theta (+ L_gamma when the orientation pair is supplied); the
// direction term is masked to zero when target.masked.
double total_loss(const DisplacementDistribution& dist,
                  const DisplacementTarget& target,
                  const std::array<double, 2>* p_gamma = nullptr,
                  const std::array<double, 2>* g_gamma = nullptr);

// Head parameterization mapping raw network outputs (a_r, b_r, c1, c2,
// d_kappa) to a distribution whose invariants hold by construction:
//   mu_r    = softplus(a_r)
//   sigma^2 = exp(clamp(b_r, -10, 10))
//   mu_th   = (c1, c2) / sqrt(c1^2 + c2^2 + kNormEps^2)
//   kappa   = softplus(d_kappa)
DisplacementDistribution distribution_from_raw(double a_r, double b_r,
                                               double c1, double c2,
                                               double d_kappa);

// Tape-side build of the training losses from raw head outputs, matching
// the value-level functions above number for number.
struct LossTerms {
    Var loss_r;
    Var loss_theta;  // zero constant when the target is masked
    Var total;
};
LossTerms build_loss(Tape& tape, Var dist_head /*[1x2]*/, Var dir_head /*[1x3]*/,
                     const DisplacementTarget& target);

Var build_orientation_loss(Tape& tape, Var orient_head /*[1x2]*/,
                           const std::array<double, 2>& g_gamma);

}  // namespace fieldloc
