#include "fieldloc/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "fieldloc/errors.hpp"

namespace fieldloc {

ErrorSummary summarize(std::vector<double> values) {
    if (values.empty()) throw ContractError("summarize: empty sample");
    std::sort(values.begin(), values.end());
    ErrorSummary s;
    s.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    const std::size_t mid = values.size() / 2;
    s.median = values.size() % 2 == 1 ? values[mid]
                                      : 0.5 * (values[mid - 1] + values[mid]);
    s.min = values.front();
    s.max = values.back();
    return s;
}

double recall_at(const std::vector<double>& values, double threshold) {
    if (values.empty()) throw ContractError("recall_at: empty sample");
    std::size_t hits = 0;
    for (double v : values) {
        if (v <= threshold) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(values.size());
}

double orientation_error_deg(const std::array<double, 2>& a,
                             const std::array<double, 2>& b) {
    const double na = std::hypot(a[0], a[1]);
    const double nb = std::hypot(b[0], b[1]);
    if (na < kNormEps || nb < kNormEps) {
        throw ContractError("orientation_error_deg: zero-length heading");
    }
    const double dot =
        std::clamp((a[0] * b[0] + a[1] * b[1]) / (na * nb), -1.0, 1.0);
    return std::acos(dot) * 180.0 / kPi;
}

void ModelSource::prepare(const SyntheticScene& scene, std::uint64_t scene_id) {
    (void)scene_id;
    ctx_ = encode_scene(scene.ground, scene.satellite, model_.enc);
}

std::optional<std::array<double, 2>> ModelSource::orientation(
    const PoseHypothesis& q) const {
    if (!model_.field.has_orientation) return std::nullopt;
    const Tensor z = field_.joint_vector(q, ctx_);
    const std::array<double, 2> raw = field_.predict_orientation(z);
    const double norm = std::hypot(raw[0], raw[1]);
    if (norm < kNormEps) {
        throw NumericError("orientation head produced a near-zero heading");
    }
    return std::array<double, 2>{raw[0] / norm, raw[1] / norm};
}

void OracleSource::prepare(const SyntheticScene& scene, std::uint64_t scene_id) {
    OracleFieldSpec s = spec_;
    s.target = scene.q_gt;
    s.noise_seed = derive_seed(spec_.noise_seed, scene_id);
    field_.emplace(s);
}

EvalReport evaluate(const std::vector<SyntheticScene>& scenes,
                    FieldSource& source, const IrsConfig& irs_base,
                    const SceneCallback& on_scene) {
    if (scenes.empty()) throw ValidationError("evaluate: no scenes");
    EvalReport report;
    std::vector<double> errs, lats, longs, orients;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const SyntheticScene& scene = scenes[i];
        source.prepare(scene, i);
        IrsConfig cfg = irs_base;
        cfg.rng_seed = derive_seed(irs_base.rng_seed, i);
        const IrsResult result = run_irs(source.field(), source.context(), cfg);
        if (on_scene) on_scene(i, scene, result);

        SceneEval se;
        se.scene_id = i;
        se.estimate = result.estimate;
        se.error_m = meters(result.estimate, scene.q_gt, scene.map_extent_m);
        const std::array<double, 2> err_vec{result.estimate.x - scene.q_gt.x,
                                            result.estimate.y - scene.q_gt.y};
        const ErrorDecomposition dec =
            decompose_error(err_vec, scene.gamma_gt, scene.map_extent_m);
        se.lateral_m = dec.lateral_m;
        se.longitudinal_m = dec.longitudinal_m;
        se.final_spread = result.spread_per_round.back();
        if (auto heading = source.orientation(result.estimate)) {
            se.orientation_deg = orientation_error_deg(*heading, scene.gamma_gt);
            orients.push_back(*se.orientation_deg);
        }
        errs.push_back(se.error_m);
        lats.push_back(se.lateral_m);
        longs.push_back(se.longitudinal_m);
        report.scenes.push_back(se);
    }
    const auto t1 = std::chrono::steady_clock::now();
    report.wall_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 -
                                                                              t0)
            .count();
    report.error_m = summarize(errs);
    report.lateral_m = summarize(lats);
    report.longitudinal_m = summarize(longs);
    if (!orients.empty()) report.orientation_deg = summarize(orients);
    report.recall_1m = recall_at(errs, 1.0);
    report.recall_5m = recall_at(errs, 5.0);
    return report;
}

namespace {

nlohmann::json summary_to_json(const ErrorSummary& s) {
    return nlohmann::json{{"count", s.count},
                          {"mean", s.mean},
                          {"median", s.median},
                          {"min", s.min},
                          {"max", s.max}};
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["error_m"] = summary_to_json(report.error_m);
    j["lateral_m"] = summary_to_json(report.lateral_m);
    j["longitudinal_m"] = summary_to_json(report.longitudinal_m);
    if (report.orientation_deg) {
        j["orientation_deg"] = summary_to_json(*report.orientation_deg);
    }
    j["recall_1m"] = report.recall_1m;
    j["recall_5m"] = report.recall_5m;
    j["wall_ms"] = report.wall_ms;
    nlohmann::json per = nlohmann::json::array();
    for (const SceneEval& se : report.scenes) {
        nlohmann::json js{{"scene_id", se.scene_id},
                          {"x", se.estimate.x},
                          {"y", se.estimate.y},
                          {"error_m", se.error_m},
                          {"lateral_m", se.lateral_m},
                          {"longitudinal_m", se.longitudinal_m},
                          {"final_spread", se.final_spread}};
        if (se.orientation_deg) js["orientation_deg"] = *se.orientation_deg;
        per.push_back(js);
    }
    j["scenes"] = std::move(per);
    return j;
}

std::vector<SweepCell> scaling_sweep(const std::vector<SyntheticScene>& scenes,
                                     FieldSource& source,
                                     const std::vector<std::size_t>& seed_counts,
                                     const std::vector<std::size_t>& round_counts,
                                     const IrsConfig& base) {
    if (scenes.empty()) throw ValidationError("scaling_sweep: no scenes");
    if (seed_counts.empty() || round_counts.empty()) {
        throw ValidationError("scaling_sweep: empty grid axis");
    }
    std::vector<SweepCell> cells;
    for (const std::size_t n : seed_counts) {
        for (const std::size_t r : round_counts) {
            std::vector<double> errs;
            const auto t0 = std::chrono::steady_clock::now();
            for (std::size_t i = 0; i < scenes.size(); ++i) {
                const SyntheticScene& scene = scenes[i];
                source.prepare(scene, i);
                IrsConfig cfg = base;
                cfg.n_seeds = n;
                cfg.rounds = r;
                cfg.store_full_trajectories = false;
                cfg.rng_seed = derive_seed(base.rng_seed, n, r, i);
                const IrsResult result =
                    run_irs(source.field(), source.context(), cfg);
                errs.push_back(
                    meters(result.estimate, scene.q_gt, scene.map_extent_m));
            }
            const auto t1 = std::chrono::steady_clock::now();
            SweepCell cell;
            cell.n_seeds = n;
            cell.rounds = r;
            const ErrorSummary s = summarize(errs);
            cell.mean_m = s.mean;
            cell.median_m = s.median;
            cell.recall_1m = recall_at(errs, 1.0);
            cell.recall_5m = recall_at(errs, 5.0);
            cell.wall_ms = std::chrono::duration_cast<
                               std::chrono::duration<double, std::milli>>(t1 - t0)
                               .count();
            cells.push_back(cell);
        }
    }
    return cells;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
    os << "N,R,mean_m,median_m,recall_1m,recall_5m,wall_ms\n";
    char buf[256];
    for (const SweepCell& c : cells) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      c.n_seeds, c.rounds, c.mean_m, c.median_m, c.recall_1m,
                      c.recall_5m, c.wall_ms);
        os << buf;
    }
    if (!os) throw IoError("failed writing sweep CSV");
}

}  // namespace fieldloc
