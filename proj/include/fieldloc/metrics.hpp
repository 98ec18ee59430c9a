#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "fieldloc/irs.hpp"
#include "fieldloc/synthenv.hpp"
#include "fieldloc/trainer.hpp"

namespace fieldloc {

struct ErrorSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
};

// Median of an even count is the mean of the two central order statistics.
ErrorSummary summarize(std::vector<double> values);

// Fraction of values <= threshold (closed bound).
double recall_at(const std::vector<double>& values, double threshold);

// Unsigned angle between two headings, degrees in [0, 180].
double orientation_error_deg(const std::array<double, 2>& a,
                             const std::array<double, 2>& b);

// Supplies the per-scene (field, context) pair the evaluator iterates:
// either a trained model (context = one encoder pass) or an analytic
// oracle pointed at the scene's true pose.
class FieldSource {
  public:
    virtual ~FieldSource() = default;
    virtual void prepare(const SyntheticScene& scene, std::uint64_t scene_id) = 0;
    virtual const Field& field() const = 0;
    virtual const VisualContext& context() const = 0;
    // Unit heading estimate at q; nullopt when the source has no heading head.
    virtual std::optional<std::array<double, 2>> orientation(
        const PoseHypothesis& q) const {
        (void)q;
        return std::nullopt;
    }
};

class ModelSource : public FieldSource {
  public:
    explicit ModelSource(const Model& model)
        : model_(model), field_(model.enc, model.field) {}

    void prepare(const SyntheticScene& scene, std::uint64_t scene_id) override;
    const Field& field() const override { return field_; }
    const VisualContext& context() const override { return ctx_; }
    std::optional<std::array<double, 2>> orientation(
        const PoseHypothesis& q) const override;

  private:
    const Model& model_;
    MlpField field_;
    VisualContext ctx_;
};

class OracleSource : public FieldSource {
  public:
    // spec.target is overwritten per scene; spec.noise_seed acts as the
    // base for per-scene derived seeds.
    explicit OracleSource(OracleFieldSpec spec) : spec_(spec) {}

    void prepare(const SyntheticScene& scene, std::uint64_t scene_id) override;
    const Field& field() const override { return *field_; }
    const VisualContext& context() const override { return ctx_; }

  private:
    OracleFieldSpec spec_;
    std::optional<OracleField> field_;
    VisualContext ctx_;  // stays empty; the oracle ignores it
};

struct SceneEval {
    std::uint64_t scene_id = 0;
    PoseHypothesis estimate;
    double error_m = 0.0;
    double lateral_m = 0.0;
    double longitudinal_m = 0.0;
    std::optional<double> orientation_deg;
    double final_spread = 0.0;
};

struct EvalReport {
    std::vector<SceneEval> scenes;
    ErrorSummary error_m;
    ErrorSummary lateral_m;
    ErrorSummary longitudinal_m;
    std::optional<ErrorSummary> orientation_deg;
    double recall_1m = 0.0;
    double recall_5m = 0.0;
    double wall_ms = 0.0;  // whole loop, scene preparation included
};

// Runs one IRS episode per scene. Per-scene IRS seed is
// derive_seed(irs_base.rng_seed, scene_id); everything else in irs_base is
// used as-is. on_scene, when set, observes each finished episode (used for
// trajectory export).
using SceneCallback = std::function<void(
    std::size_t scene_id, const SyntheticScene& scene, const IrsResult& result)>;

EvalReport evaluate(const std::vector<SyntheticScene>& scenes,
                    FieldSource& source, const IrsConfig& irs_base,
                    const SceneCallback& on_scene = {});

nlohmann::json report_to_json(const EvalReport& report);

struct SweepCell {
    std::size_t n_seeds = 0;
    std::size_t rounds = 0;
    double mean_m = 0.0;
    double median_m = 0.0;
    double recall_1m = 0.0;
    double recall_5m = 0.0;
    double wall_ms = 0.0;
};

// Accuracy/latency grid over seed and round counts. Per-scene seeds are
// derive_seed(base.rng_seed, N, R, scene_id) so cells are independent.
std::vector<SweepCell> scaling_sweep(const std::vector<SyntheticScene>& scenes,
                                     FieldSource& source,
                                     const std::vector<std::size_t>& seed_counts,
                                     const std::vector<std::size_t>& round_counts,
                                     const IrsConfig& base);

// Header "N,R,mean_m,median_m,recall_1m,recall_5m,wall_ms", %.17g floats.
void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells);

}  // namespace fieldloc
