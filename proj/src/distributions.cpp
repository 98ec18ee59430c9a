#include "fieldloc/distributions.hpp"

#include <cmath>

#include "fieldloc/tensor.hpp"

namespace fieldloc {

namespace {

void check_unit(const std::array<double, 2>& v, const char* what) {
    const double n = std::hypot(v[0], v[1]);
    if (std::abs(n - 1.0) > 1e-6)
        throw ContractError(std::string(what) + ": vector is not unit norm");
}

double clamp_dot(double d) {
    const double lim = 1.0 - kAcosClampMargin;
    return std::min(std::max(d, -lim), lim);
}

}  // namespace

void DisplacementDistribution::validate() const {
    if (!(mu_r >= 0.0)) throw ContractError("DisplacementDistribution: mu_r < 0");
    if (!(sigma2_r > 0.0)) throw ContractError("DisplacementDistribution: sigma2_r <= 0");
    if (!(kappa >= 0.0)) throw ContractError("DisplacementDistribution: kappa < 0");
    const double n = std::hypot(mu_theta[0], mu_theta[1]);
    if (std::abs(n - 1.0) > 1e-9)
        throw ContractError("DisplacementDistribution: mu_theta is not unit norm");
}

double bessel_i0(double x) {
    if (x < 0.0) throw DomainError("bessel_i0: negative input");
    if (x < 15.0) {
        const double q = x * x / 4.0;
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 200; ++k) {
            term *= q / (static_cast<double>(k) * k);
            sum += term;
            if (term < sum * 1e-17) break;
        }
        return sum;
    }
    // Asymptotic: e^x / sqrt(2*pi*x) * sum_k ((2k-1)!!)^2 / (k! (8x)^k).
    // Terms shrink until k ~ 4x; truncating at the smallest term leaves a
    // relative error ~1e-10 at x = 15 and far less beyond.
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 40; ++k) {
        const double factor =
            (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * x * k);
        if (factor >= 1.0) break;  // series started diverging
        term *= factor;
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return std::exp(x) / std::sqrt(2.0 * kPi * x) * sum;
}

double log_bessel_i0(double x) {
    if (x < 0.0) throw DomainError("log_bessel_i0: negative input");
    if (x < 15.0) return std::log(bessel_i0(x));
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 40; ++k) {
        const double factor =
            (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * x * k);
        if (factor >= 1.0) break;
        term *= factor;
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return x - 0.5 * std::log(2.0 * kPi * x) + std::log(sum);
}

double vmf_density(const std::array<double, 2>& u,
                   const std::array<double, 2>& mu_theta, double kappa) {
    if (kappa < 0.0) throw DomainError("vmf_density: kappa < 0");
    check_unit(u, "vmf_density(u)");
    check_unit(mu_theta, "vmf_density(mu_theta)");
    const double dot = u[0] * mu_theta[0] + u[1] * mu_theta[1];
    // exp(k*dot) / (2*pi*I0(k)), evaluated in log space so large kappa
    // cannot overflow.
    return std::exp(kappa * dot - std::log(2.0 * kPi) - log_bessel_i0(kappa));
}

double gaussian_nll(double r_gt, double mu_r, double sigma2_r) {
    if (!(sigma2_r > 0.0)) throw DomainError("gaussian_nll: sigma2 <= 0");
    const double d = r_gt - mu_r;
    return 0.5 * (d * d / sigma2_r + std::log(sigma2_r));
}

double gaussian_nll_full(double r_gt, double mu_r, double sigma2_r) {
    return gaussian_nll(r_gt, mu_r, sigma2_r) + 0.5 * std::log(2.0 * kPi);
}

double angmf_loss(const std::array<double, 2>& mu_theta, double kappa,
                  const std::array<double, 2>& theta_gt) {
    if (kappa < 0.0) throw DomainError("angmf_loss: kappa < 0");
    check_unit(mu_theta, "angmf_loss(mu_theta)");
    check_unit(theta_gt, "angmf_loss(theta_gt)");
    const double dot = mu_theta[0] * theta_gt[0] + mu_theta[1] * theta_gt[1];
    const double ang = std::acos(clamp_dot(dot));
    return -std::log(kappa * kappa + 1.0) + kappa * ang +
           kernels::softplus_scalar(-kappa * kPi);
}

double orientation_loss(const std::array<double, 2>& p_gamma,
                        const std::array<double, 2>& g_gamma) {
    check_unit(g_gamma, "orientation_loss(g_gamma)");
    if (std::hypot(p_gamma[0], p_gamma[1]) <= kNormEps)
        throw ContractError("orientation_loss: degenerate near-zero prediction");
    // Mirrors the tape sequence exactly: smoothed norm, normalize, dot.
    const double denom = std::sqrt(p_gamma[0] * p_gamma[0] +
                                   p_gamma[1] * p_gamma[1] +
                                   kNormEps * kNormEps);
    return 1.0 - ((p_gamma[0] / denom) * g_gamma[0] +
                  (p_gamma[1] / denom) * g_gamma[1]);
}

double total_loss(const DisplacementDistribution& dist,
                  const DisplacementTarget& target,
                  const std::array<double, 2>* p_gamma,
                  const std::array<double, 2>* g_gamma) {
    dist.validate();
    double loss = gaussian_nll(target.r_gt, dist.mu_r, dist.sigma2_r);
    if (!target.masked)
        loss += angmf_loss(dist.mu_theta, dist.kappa, target.theta_gt);
    if ((p_gamma == nullptr) != (g_gamma == nullptr))
        throw ContractError("total_loss: orientation prediction and target must come together");
    if (p_gamma) loss += orientation_loss(*p_gamma, *g_gamma);
    return loss;
}

DisplacementDistribution distribution_from_raw(double a_r, double b_r, double c1,
                                               double c2, double d_kappa) {
    DisplacementDistribution d;
    d.mu_r = kernels::softplus_scalar(a_r);
    d.sigma2_r = std::exp(std::min(std::max(b_r, -10.0), 10.0));
    const double denom = std::sqrt(c1 * c1 + c2 * c2 + kNormEps * kNormEps);
    d.mu_theta = {c1 / denom, c2 / denom};
    d.kappa = kernels::softplus_scalar(d_kappa);
    return d;
}

LossTerms build_loss(Tape& tape, Var dist_head, Var dir_head,
                     const DisplacementTarget& target) {
    // Distance: mu_r = softplus(a), sigma2 = exp(clamp(b, -10, 10)).
    Var a = tape.element(dist_head, 0, 0);
    Var b = tape.element(dist_head, 0, 1);
    Var mu_r = tape.softplus(a);
    Var sigma2 = tape.exp(tape.clamp(b, -10.0, 10.0));
    Var diff = tape.add_scalar(tape.neg(mu_r), target.r_gt);
    Var loss_r = tape.scale(
        tape.add(tape.div_scalar(tape.mul(diff, diff), sigma2), tape.log(sigma2)),
        0.5);

    LossTerms out;
    out.loss_r = loss_r;
    if (target.masked) {
        out.loss_theta = tape.constant(Tensor({1}, 0.0));
        out.total = loss_r;
        return out;
    }

    // Direction: mu_theta = (c1,c2)/sqrt(|v|^2 + eps^2), kappa = softplus(d).
    Var c1 = tape.element(dir_head, 0, 0);
    Var c2 = tape.element(dir_head, 0, 1);
    Var dk = tape.element(dir_head, 0, 2);
    Var v = tape.concat(c1, c2, 0);  // [2]
    Var denom = tape.sqrt(tape.add_scalar(tape.sum(tape.mul(v, v)),
                                          kNormEps * kNormEps));
    Var mu_theta = tape.div_scalar(v, denom);
    Var kappa = tape.softplus(dk);

    Var theta = tape.constant(Tensor::vec({target.theta_gt[0], target.theta_gt[1]}));
    Var dot = tape.sum(tape.mul(mu_theta, theta));
    const double lim = 1.0 - kAcosClampMargin;
    Var ang = tape.acos(tape.clamp(dot, -lim, lim));

    Var k2p1 = tape.add_scalar(tape.mul(kappa, kappa), 1.0);
    Var loss_theta = tape.add(
        tape.add(tape.neg(tape.log(k2p1)), tape.mul(kappa, ang)),
        tape.softplus(tape.scale(kappa, -kPi)));

    out.loss_theta = loss_theta;
    out.total = tape.add(loss_r, loss_theta);
    return out;
}

Var build_orientation_loss(Tape& tape, Var orient_head,
                           const std::array<double, 2>& g_gamma) {
    check_unit(g_gamma, "build_orientation_loss(g_gamma)");
    Var p1 = tape.element(orient_head, 0, 0);
    Var p2 = tape.element(orient_head, 0, 1);
    Var p = tape.concat(p1, p2, 0);
    Var denom = tape.sqrt(tape.add_scalar(tape.sum(tape.mul(p, p)),
                                          kNormEps * kNormEps));
    Var p_hat = tape.div_scalar(p, denom);
    Var g = tape.constant(Tensor::vec({g_gamma[0], g_gamma[1]}));
    return tape.add_scalar(tape.neg(tape.sum(tape.mul(p_hat, g))), 1.0);
}

}  // namespace fieldloc
