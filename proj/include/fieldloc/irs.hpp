#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "fieldloc/field.hpp"

namespace fieldloc {

struct IrsConfig {
    int n_seeds = 10;  // N
    int rounds = 5;    // R
    // Rectangular prior for the initial hypotheses, within [-1, 1]^2.
    double prior_lo_x = -1.0, prior_hi_x = 1.0;
    double prior_lo_y = -1.0, prior_hi_y = 1.0;
    std::uint64_t rng_seed = 0;
    int threads = 1;
    // When false, trajectories keep only the first and last pose per seed.
    bool store_full_trajectories = true;

    void validate() const;
};

// Per-(seed, round) diagnostics: the field's prediction evaluated at that
// round's pose. Update math uses only (mu_r, mu_theta); these are logged.
struct RoundDiagnostics {
    double mu_r = 0.0;
    double kappa = 0.0;
    double sigma2 = 0.0;
};

struct IrsResult {
    PoseHypothesis estimate;  // componentwise mean of the final population
    // N x (R+1) when store_full_trajectories, else N x 2 (first, last).
    std::vector<std::vector<PoseHypothesis>> trajectories;
    std::vector<std::vector<RoundDiagnostics>> diagnostics;  // same layout
    std::vector<double> spread_per_round;  // R+1 entries, round 0 first
    bool full_trajectories = true;
    int context_eval_count = 1;
};

// RMS distance of poses from their mean; the operational confidence proxy.
double population_spread(const std::vector<PoseHypothesis>& poses);

// i.i.d. uniform draws over the prior rectangle; per seed, x then y.
std::vector<PoseHypothesis> sample_seeds(const IrsConfig& config);

// R synchronous rounds of refine_step over the seed population. The
// context is taken as given and the encoder is never invoked here; one
// extra diagnostic prediction per seed is made at the final pose so every
// (seed, round) row carries the field's view of that pose.
IrsResult run_irs(const Field& field, const VisualContext& ctx,
                  const IrsConfig& config);

// CSV rows `scene_id,seed,round,x,y,mu_r,kappa,sigma2`; header included
// when write_header. Requires full trajectories.
void write_trajectory_csv(std::ostream& os, std::uint64_t scene_id,
                          const IrsResult& result, bool write_header = true);

nlohmann::json result_to_json(const IrsResult& result, const IrsConfig& config);

}  // namespace fieldloc
