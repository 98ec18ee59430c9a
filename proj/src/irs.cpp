#include "fieldloc/irs.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

namespace fieldloc {

void IrsConfig::validate() const {
    if (n_seeds < 1) throw ValidationError("irs: n_seeds must be >= 1");
    if (rounds < 1) throw ValidationError("irs: rounds must be >= 1");
    if (threads < 1) throw ValidationError("irs: threads must be >= 1");
    if (prior_lo_x > prior_hi_x || prior_lo_y > prior_hi_y)
        throw ValidationError("irs: prior rectangle is inverted");
    if (prior_lo_x < -1.0 || prior_hi_x > 1.0 || prior_lo_y < -1.0 ||
        prior_hi_y > 1.0)
        throw ValidationError("irs: prior must lie within [-1, 1]^2");
}

double population_spread(const std::vector<PoseHypothesis>& poses) {
    if (poses.empty()) throw ContractError("population_spread: empty population");
    double mx = 0.0, my = 0.0;
    for (const auto& p : poses) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(poses.size());
    my /= static_cast<double>(poses.size());
    double acc = 0.0;
    for (const auto& p : poses) {
        const double dx = p.x - mx, dy = p.y - my;
        acc += dx * dx + dy * dy;
    }
    return std::sqrt(acc / static_cast<double>(poses.size()));
}

std::vector<PoseHypothesis> sample_seeds(const IrsConfig& config) {
    config.validate();
    if (config.prior_lo_x == config.prior_hi_x &&
        config.prior_lo_y == config.prior_hi_y)
        std::fprintf(stderr,
                     "warning: degenerate zero-area prior; all seeds coincide\n");
    Rng rng(config.rng_seed);
    std::vector<PoseHypothesis> seeds(config.n_seeds);
    for (auto& s : seeds) {
        s.x = uniform_in(rng, config.prior_lo_x, config.prior_hi_x);
        s.y = uniform_in(rng, config.prior_lo_y, config.prior_hi_y);
    }
    return seeds;
}

IrsResult run_irs(const Field& field, const VisualContext& ctx,
                  const IrsConfig& config) {
    config.validate();
    const std::size_t n = static_cast<std::size_t>(config.n_seeds);
    const int rounds = config.rounds;

    std::vector<PoseHypothesis> current = sample_seeds(config);
    std::vector<PoseHypothesis> next(n);
    std::vector<RoundDiagnostics> diag_round(n);

    IrsResult result;
    result.full_trajectories = config.store_full_trajectories;
    result.trajectories.assign(n, {});
    result.diagnostics.assign(n, {});
    result.spread_per_round.reserve(rounds + 1);
    const bool full = config.store_full_trajectories;
    for (std::size_t i = 0; i < n; ++i) {
        result.trajectories[i].reserve(full ? rounds + 1 : 2);
        result.diagnostics[i].reserve(full ? rounds + 1 : 2);
        result.trajectories[i].push_back(current[i]);
    }
    result.spread_per_round.push_back(population_spread(current));

    // One worker advances a contiguous seed range for the current round.
    // Seeds never read each other, so chunked execution with a join per
    // round reproduces the synchronous schedule exactly.
    auto advance_range = [&](std::size_t lo, std::size_t hi, bool final_round) {
        for (std::size_t i = lo; i < hi; ++i) {
            try {
                const DisplacementDistribution d = field.predict(current[i], ctx);
                diag_round[i] = {d.mu_r, d.kappa, d.sigma2_r};
                if (!final_round) next[i] = refine_step(current[i], d);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (seed " +
                                   std::to_string(i) + ")");
            }
        }
    };

    auto run_round = [&](bool final_round) {
        if (config.threads == 1 || n < 2) {
            advance_range(0, n, final_round);
            return;
        }
        const std::size_t workers =
            std::min<std::size_t>(static_cast<std::size_t>(config.threads), n);
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
            pool.emplace_back([&, lo, hi, w] {
                try {
                    advance_range(lo, hi, final_round);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    };

    for (int k = 1; k <= rounds; ++k) {
        try {
            run_round(false);
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " (round " +
                               std::to_string(k) + ")");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (full) {
                result.diagnostics[i].push_back(diag_round[i]);
                result.trajectories[i].push_back(next[i]);
            } else if (k == 1) {
                result.diagnostics[i].push_back(diag_round[i]);
            }
        }
        current.swap(next);
        result.spread_per_round.push_back(population_spread(current));
    }

    // Diagnostic pass at the final poses; no pose update.
    run_round(true);
    for (std::size_t i = 0; i < n; ++i) {
        if (!full) {
            result.trajectories[i].push_back(current[i]);
        }
        result.diagnostics[i].push_back(diag_round[i]);
    }

    // Fixed summation order keeps the estimate schedule-independent.
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += current[i].x;
        my += current[i].y;
    }
    result.estimate.x = mx / static_cast<double>(n);
    result.estimate.y = my / static_cast<double>(n);
    result.context_eval_count = 1;
    return result;
}

void write_trajectory_csv(std::ostream& os, std::uint64_t scene_id,
                          const IrsResult& result, bool write_header) {
    if (!result.full_trajectories)
        throw ContractError("write_trajectory_csv: full trajectories required");
    if (write_header) os << "scene_id,seed,round,x,y,mu_r,kappa,sigma2\n";
    char buf[192];
    for (std::size_t i = 0; i < result.trajectories.size(); ++i) {
        const auto& traj = result.trajectories[i];
        const auto& diag = result.diagnostics[i];
        if (traj.size() != diag.size())
            throw ContractError(
                "write_trajectory_csv: trajectory and diagnostic lengths disagree");
        for (std::size_t k = 0; k < traj.size(); ++k) {
            std::snprintf(buf, sizeof buf,
                          "%llu,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          static_cast<unsigned long long>(scene_id), i, k,
                          traj[k].x, traj[k].y, diag[k].mu_r, diag[k].kappa,
                          diag[k].sigma2);
            os << buf;
        }
    }
}

nlohmann::json result_to_json(const IrsResult& result, const IrsConfig& config) {
    nlohmann::json j;
    j["estimate"] = {{"x", result.estimate.x}, {"y", result.estimate.y}};
    j["spread_per_round"] = result.spread_per_round;
    j["config"] = {{"n_seeds", config.n_seeds},
                   {"rounds", config.rounds},
                   {"prior", {{"lo_x", config.prior_lo_x},
                              {"hi_x", config.prior_hi_x},
                              {"lo_y", config.prior_lo_y},
                              {"hi_y", config.prior_hi_y}}},
                   {"rng_seed", config.rng_seed}};
    j["context_eval_count"] = result.context_eval_count;
    return j;
}

}  // namespace fieldloc
