#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fieldloc/encoder.hpp"
#include "fieldloc/pose.hpp"

namespace fieldloc {

// Generator knobs. Scenes are a pure function of (config, rng_seed):
// satellite cells carry random unit landmark signatures over a weak
// distractor background; ground tokens are distance-weighted sums of the
// signatures visible from q_gt. Ambiguity a in [0,1] writes each signature
// at strength a into the point-mirrored cell (a=1 duplicates the whole
// constellation, making the posterior exactly bimodal) and adds ground
// noise with std ground_noise_scale * a.
struct SceneGenConfig {
    std::size_t sat_h = 21, sat_w = 21;
    std::size_t ground_h = 4, ground_w = 4;
    std::size_t dim = kContextDim;
    std::size_t landmark_count = 24;
    double signal_to_distractor = 4.0;  // landmark norm / background norm
    double ambiguity = 0.0;
    double rho = 0.35;               // visibility decay length, normalized units
    double ground_patch_span = 0.08; // half-extent of the ground sample patch
    double ground_noise_scale = 0.05;
    double token_scale = 3.0;        // applied to both grids before PE
    double pe_scale = 0.3;           // positional encodings enter as pe_scale * PE
    double map_extent_m = 100.0;     // meters spanned by [-1, 1]
    bool heading_gate = false;       // 3-DoF: landmarks behind the heading fade out
    std::uint64_t rng_seed = 1;

    void validate() const;
};

struct SyntheticScene {
    TokenGrid ground;
    TokenGrid satellite;
    PoseHypothesis q_gt;
    std::array<double, 2> gamma_gt{1.0, 0.0};
    double map_extent_m = 100.0;
    // Generator internals, exposed so tests can run the generator's own
    // Bayes decoder against the emitted grids.
    std::vector<std::size_t> landmark_cells;
    Tensor landmark_sigs;  // [landmark_count x dim]
};

SyntheticScene generate_scene(const SceneGenConfig& config);

// Center of satellite cell (row, col) in normalized map coordinates.
std::array<double, 2> cell_center(const SceneGenConfig& config, std::size_t row,
                                  std::size_t col);

// Maximum-likelihood cell under the generator's own forward model with
// heading gating off: scores every satellite cell as a candidate pose and
// returns the argmax cell index. At ambiguity 0 this lands within one cell
// of q_gt (the solvability guarantee).
std::size_t bayes_decode_cell(const SyntheticScene& scene,
                              const SceneGenConfig& config);

// Euclidean distance in meters: normalized distance * extent / 2.
double meters(const PoseHypothesis& a, const PoseHypothesis& b, double extent_m);

// Splits a position error into components perpendicular to (lateral) and
// along (longitudinal) the heading, both in absolute meters.
struct ErrorDecomposition {
    double lateral_m = 0.0;
    double longitudinal_m = 0.0;
};
ErrorDecomposition decompose_error(const std::array<double, 2>& err_vec,
                                   const std::array<double, 2>& heading,
                                   double extent_m);

// Datasets ship as seed manifests: grids regenerate from (config, seed),
// and the recorded poses double as an integrity check on load.
struct ManifestEntry {
    std::uint64_t id = 0;
    std::uint64_t seed = 0;
    PoseHypothesis q_gt;
    std::array<double, 2> gamma_gt{1.0, 0.0};
};

struct SceneManifest {
    int version = 1;
    SceneGenConfig base;  // per-scene configs differ only in rng_seed
    std::vector<ManifestEntry> scenes;
};

// Per-scene seeds derive as derive_seed(base_seed, index).
SceneManifest make_manifest(const SceneGenConfig& base, std::size_t count);

// The scenes a manifest with the same base and count would describe.
std::vector<SyntheticScene> generate_scenes(const SceneGenConfig& base,
                                            std::size_t count);

nlohmann::json config_to_json(const SceneGenConfig& config);
SceneGenConfig config_from_json(const nlohmann::json& j);

void write_manifest(const std::string& path, const SceneManifest& manifest);
SceneManifest read_manifest(const std::string& path);

// Regenerates every scene, verifying the recorded poses match.
std::vector<SyntheticScene> materialize(const SceneManifest& manifest);

}  // namespace fieldloc
