#include "fieldloc/synthenv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "fieldloc/distributions.hpp"
#include "fieldloc/errors.hpp"
#include "fieldloc/rng.hpp"

namespace fieldloc {

void SceneGenConfig::validate() const {
    if (sat_h == 0 || sat_w == 0 || ground_h == 0 || ground_w == 0) {
        throw ValidationError("scene grids must be non-empty");
    }
    if (dim == 0 || dim % 4 != 0) {
        throw ValidationError("token dim must be a positive multiple of 4");
    }
    if (landmark_count == 0 || landmark_count > sat_h * sat_w) {
        throw ValidationError("landmark_count must be in [1, sat_h*sat_w]");
    }
    if (signal_to_distractor <= 0.0) {
        throw ValidationError("signal_to_distractor must be positive");
    }
    if (ambiguity < 0.0 || ambiguity > 1.0) {
        throw ValidationError("ambiguity must lie in [0, 1]");
    }
    if (rho <= 0.0) throw ValidationError("rho must be positive");
    if (ground_patch_span <= 0.0) {
        throw ValidationError("ground_patch_span must be positive");
    }
    if (ground_noise_scale < 0.0) {
        throw ValidationError("ground_noise_scale must be non-negative");
    }
    if (token_scale <= 0.0) throw ValidationError("token_scale must be positive");
    if (pe_scale < 0.0) throw ValidationError("pe_scale must be non-negative");
    if (map_extent_m <= 0.0) throw ValidationError("map_extent_m must be positive");
}

std::array<double, 2> cell_center(const SceneGenConfig& config, std::size_t row,
                                  std::size_t col) {
    // Cells tile [-1, 1]^2; centers sit at the midpoints.
    const double x = -1.0 + 2.0 * (static_cast<double>(col) + 0.5) /
                                static_cast<double>(config.sat_w);
    const double y = -1.0 + 2.0 * (static_cast<double>(row) + 0.5) /
                                static_cast<double>(config.sat_h);
    return {x, y};
}

namespace {

// Visibility of a landmark at cell center c from pose (q, gamma): Gaussian
// falloff in distance, optionally gated by the heading half-space in 3-DoF.
double visibility(const SceneGenConfig& config, const std::array<double, 2>& cell,
                  double qx, double qy, const std::array<double, 2>& gamma) {
    const double dx = cell[0] - qx;
    const double dy = cell[1] - qy;
    const double d2 = dx * dx + dy * dy;
    double w = std::exp(-d2 / (2.0 * config.rho * config.rho));
    if (config.heading_gate) {
        const double d = std::sqrt(d2);
        if (d > 1e-12) {
            const double cosang = (dx * gamma[0] + dy * gamma[1]) / d;
            w *= 0.5 * (1.0 + cosang);
        }
    }
    return w;
}

// Raw (pre-scale, pre-PE) ground token for a sensor sample at (sx, sy).
void raw_ground_token(const SceneGenConfig& config,
                      const std::vector<std::size_t>& cells, const Tensor& sigs,
                      double sx, double sy, const std::array<double, 2>& gamma,
                      double ambiguity_for_mirror, double* out) {
    const std::size_t dim = config.dim;
    std::fill(out, out + dim, 0.0);
    for (std::size_t l = 0; l < cells.size(); ++l) {
        const std::size_t r = cells[l] / config.sat_w;
        const std::size_t c = cells[l] % config.sat_w;
        const auto center = cell_center(config, r, c);
        const double w = visibility(config, center, sx, sy, gamma);
        const double* sig = &sigs.data[l * dim];
        for (std::size_t k = 0; k < dim; ++k) out[k] += w * sig[k];
        if (ambiguity_for_mirror > 0.0) {
            const auto mirror = cell_center(config, config.sat_h - 1 - r,
                                            config.sat_w - 1 - c);
            const double wm =
                ambiguity_for_mirror * visibility(config, mirror, sx, sy, gamma);
            for (std::size_t k = 0; k < dim; ++k) out[k] += wm * sig[k];
        }
    }
}

}  // namespace

SyntheticScene generate_scene(const SceneGenConfig& config) {
    config.validate();
    Rng rng(config.rng_seed);

    SyntheticScene scene;
    scene.map_extent_m = config.map_extent_m;

    // Fixed draw order keeps scenes bit-stable across code motion:
    // pose, heading, landmark cells, signatures, satellite background,
    // ground noise.
    scene.q_gt.x = uniform_in(rng, -0.9, 0.9);
    scene.q_gt.y = uniform_in(rng, -0.9, 0.9);
    const double heading_angle = uniform_in(rng, -kPi, kPi);
    scene.gamma_gt = {std::cos(heading_angle), std::sin(heading_angle)};
    if (config.heading_gate) scene.q_gt.gamma = scene.gamma_gt;

    // Distinct landmark cells via partial Fisher-Yates over the cell index.
    const std::size_t n_cells = config.sat_h * config.sat_w;
    std::vector<std::size_t> pool(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i) pool[i] = i;
    for (std::size_t i = 0; i < config.landmark_count; ++i) {
        const std::size_t j = i + uniform_index(rng, n_cells - i);
        std::swap(pool[i], pool[j]);
    }
    scene.landmark_cells.assign(pool.begin(),
                                pool.begin() + static_cast<std::ptrdiff_t>(
                                                   config.landmark_count));

    // Unit-norm signatures: iid normal rows, normalized.
    scene.landmark_sigs = Tensor({config.landmark_count, config.dim});
    for (std::size_t l = 0; l < config.landmark_count; ++l) {
        double norm2 = 0.0;
        double* row = &scene.landmark_sigs.data[l * config.dim];
        for (std::size_t k = 0; k < config.dim; ++k) {
            row[k] = normal_unit(rng);
            norm2 += row[k] * row[k];
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t k = 0; k < config.dim; ++k) row[k] *= inv;
    }

    // Satellite: weak iid background with expected norm 1/signal_to_distractor,
    // landmark cells overwritten by their signature, mirror cells reinforced
    // at strength ambiguity.
    scene.satellite.height = config.sat_h;
    scene.satellite.width = config.sat_w;
    scene.satellite.dim = config.dim;
    scene.satellite.values = Tensor({n_cells, config.dim});
    const double bg_std =
        1.0 / (config.signal_to_distractor * std::sqrt(double(config.dim)));
    for (std::size_t i = 0; i < n_cells * config.dim; ++i) {
        scene.satellite.values.data[i] = bg_std * normal_unit(rng);
    }
    for (std::size_t l = 0; l < config.landmark_count; ++l) {
        const std::size_t cell = scene.landmark_cells[l];
        const double* sig = &scene.landmark_sigs.data[l * config.dim];
        double* dst = &scene.satellite.values.data[cell * config.dim];
        std::copy(sig, sig + config.dim, dst);
        if (config.ambiguity > 0.0) {
            const std::size_t r = cell / config.sat_w;
            const std::size_t c = cell % config.sat_w;
            const std::size_t mcell =
                (config.sat_h - 1 - r) * config.sat_w + (config.sat_w - 1 - c);
            double* mdst = &scene.satellite.values.data[mcell * config.dim];
            for (std::size_t k = 0; k < config.dim; ++k) {
                mdst[k] += config.ambiguity * sig[k];
            }
        }
    }

    // Ground: a small patch of sensor samples around q_gt. Each token sums
    // the true landmark signatures weighted by visibility (the mirror copies
    // contribute only through the satellite, so at ambiguity 1 both modes
    // explain the observation equally well from the satellite's viewpoint).
    scene.ground.height = config.ground_h;
    scene.ground.width = config.ground_w;
    scene.ground.dim = config.dim;
    scene.ground.values = Tensor({config.ground_h * config.ground_w, config.dim});
    const double noise_std = config.ground_noise_scale * config.ambiguity /
                             std::sqrt(double(config.dim));
    for (std::size_t gr = 0; gr < config.ground_h; ++gr) {
        for (std::size_t gc = 0; gc < config.ground_w; ++gc) {
            const double fy =
                config.ground_h > 1
                    ? 2.0 * double(gr) / double(config.ground_h - 1) - 1.0
                    : 0.0;
            const double fx =
                config.ground_w > 1
                    ? 2.0 * double(gc) / double(config.ground_w - 1) - 1.0
                    : 0.0;
            const double sx = scene.q_gt.x + config.ground_patch_span * fx;
            const double sy = scene.q_gt.y + config.ground_patch_span * fy;
            double* tok =
                &scene.ground.values.data[(gr * config.ground_w + gc) * config.dim];
            raw_ground_token(config, scene.landmark_cells, scene.landmark_sigs, sx,
                             sy, scene.gamma_gt, 0.0, tok);
            for (std::size_t k = 0; k < config.dim; ++k) {
                tok[k] += noise_std * normal_unit(rng);
            }
        }
    }

    // Scale content, then add positional encodings.
    for (double& v : scene.satellite.values.data) v *= config.token_scale;
    for (double& v : scene.ground.values.data) v *= config.token_scale;
    if (config.pe_scale > 0.0) {
        const Tensor pe_sat = sinusoidal_pe_2d(config.sat_h, config.sat_w, config.dim);
        const Tensor pe_gnd =
            sinusoidal_pe_2d(config.ground_h, config.ground_w, config.dim);
        for (std::size_t i = 0; i < pe_sat.data.size(); ++i) {
            scene.satellite.values.data[i] += config.pe_scale * pe_sat.data[i];
        }
        for (std::size_t i = 0; i < pe_gnd.data.size(); ++i) {
            scene.ground.values.data[i] += config.pe_scale * pe_gnd.data[i];
        }
    }

    scene.ground.validate();
    scene.satellite.validate();
    scene.q_gt.validate();
    return scene;
}

std::size_t bayes_decode_cell(const SyntheticScene& scene,
                              const SceneGenConfig& config) {
    config.validate();
    // Strip PE and scale to recover raw ground content, then score every
    // candidate cell by the squared residual against the forward model.
    const Tensor pe_gnd =
        sinusoidal_pe_2d(config.ground_h, config.ground_w, config.dim);
    const std::size_t n_tok = config.ground_h * config.ground_w;
    Tensor raw({n_tok, config.dim});
    for (std::size_t i = 0; i < raw.data.size(); ++i) {
        raw.data[i] = (scene.ground.values.data[i] - config.pe_scale * pe_gnd.data[i]) /
                      config.token_scale;
    }

    std::vector<double> pred(config.dim);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_cell = 0;
    for (std::size_t cell = 0; cell < config.sat_h * config.sat_w; ++cell) {
        const auto center =
            cell_center(config, cell / config.sat_w, cell % config.sat_w);
        double score = 0.0;
        for (std::size_t gr = 0; gr < config.ground_h; ++gr) {
            for (std::size_t gc = 0; gc < config.ground_w; ++gc) {
                const double fy =
                    config.ground_h > 1
                        ? 2.0 * double(gr) / double(config.ground_h - 1) - 1.0
                        : 0.0;
                const double fx =
                    config.ground_w > 1
                        ? 2.0 * double(gc) / double(config.ground_w - 1) - 1.0
                        : 0.0;
                const double sx = center[0] + config.ground_patch_span * fx;
                const double sy = center[1] + config.ground_patch_span * fy;
                raw_ground_token(config, scene.landmark_cells, scene.landmark_sigs,
                                 sx, sy, scene.gamma_gt, 0.0, pred.data());
                const double* obs = &raw.data[(gr * config.ground_w + gc) * config.dim];
                for (std::size_t k = 0; k < config.dim; ++k) {
                    const double d = pred[k] - obs[k];
                    score += d * d;
                }
            }
        }
        if (score < best) {
            best = score;
            best_cell = cell;
        }
    }
    return best_cell;
}

double meters(const PoseHypothesis& a, const PoseHypothesis& b, double extent_m) {
    return pose_distance(a, b) * extent_m / 2.0;
}

ErrorDecomposition decompose_error(const std::array<double, 2>& err_vec,
                                   const std::array<double, 2>& heading,
                                   double extent_m) {
    const double norm = std::hypot(heading[0], heading[1]);
    if (norm < kNormEps) throw ContractError("decompose_error: zero heading");
    const double hx = heading[0] / norm, hy = heading[1] / norm;
    const double scale = extent_m / 2.0;
    ErrorDecomposition out;
    out.longitudinal_m = std::abs(err_vec[0] * hx + err_vec[1] * hy) * scale;
    out.lateral_m = std::abs(err_vec[0] * (-hy) + err_vec[1] * hx) * scale;
    return out;
}

std::vector<SyntheticScene> generate_scenes(const SceneGenConfig& base,
                                            std::size_t count) {
    base.validate();
    std::vector<SyntheticScene> scenes;
    scenes.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        SceneGenConfig cfg = base;
        cfg.rng_seed = derive_seed(base.rng_seed, i);
        scenes.push_back(generate_scene(cfg));
    }
    return scenes;
}

SceneManifest make_manifest(const SceneGenConfig& base, std::size_t count) {
    base.validate();
    if (count == 0) throw ValidationError("manifest needs at least one scene");
    SceneManifest manifest;
    manifest.base = base;
    manifest.scenes.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        SceneGenConfig cfg = base;
        cfg.rng_seed = derive_seed(base.rng_seed, i);
        const SyntheticScene scene = generate_scene(cfg);
        ManifestEntry e;
        e.id = i;
        e.seed = cfg.rng_seed;
        e.q_gt = scene.q_gt;
        e.gamma_gt = scene.gamma_gt;
        manifest.scenes.push_back(e);
    }
    return manifest;
}

nlohmann::json config_to_json(const SceneGenConfig& c) {
    return nlohmann::json{{"sat_h", c.sat_h},
                          {"sat_w", c.sat_w},
                          {"ground_h", c.ground_h},
                          {"ground_w", c.ground_w},
                          {"dim", c.dim},
                          {"landmark_count", c.landmark_count},
                          {"signal_to_distractor", c.signal_to_distractor},
                          {"ambiguity", c.ambiguity},
                          {"rho", c.rho},
                          {"ground_patch_span", c.ground_patch_span},
                          {"ground_noise_scale", c.ground_noise_scale},
                          {"token_scale", c.token_scale},
                          {"pe_scale", c.pe_scale},
                          {"map_extent_m", c.map_extent_m},
                          {"heading_gate", c.heading_gate},
                          {"rng_seed", c.rng_seed}};
}

SceneGenConfig config_from_json(const nlohmann::json& j) {
    SceneGenConfig c;
    c.sat_h = j.value("sat_h", c.sat_h);
    c.sat_w = j.value("sat_w", c.sat_w);
    c.ground_h = j.value("ground_h", c.ground_h);
    c.ground_w = j.value("ground_w", c.ground_w);
    c.dim = j.value("dim", c.dim);
    c.landmark_count = j.value("landmark_count", c.landmark_count);
    c.signal_to_distractor = j.value("signal_to_distractor", c.signal_to_distractor);
    c.ambiguity = j.value("ambiguity", c.ambiguity);
    c.rho = j.value("rho", c.rho);
    c.ground_patch_span = j.value("ground_patch_span", c.ground_patch_span);
    c.ground_noise_scale = j.value("ground_noise_scale", c.ground_noise_scale);
    c.token_scale = j.value("token_scale", c.token_scale);
    c.pe_scale = j.value("pe_scale", c.pe_scale);
    c.map_extent_m = j.value("map_extent_m", c.map_extent_m);
    c.heading_gate = j.value("heading_gate", c.heading_gate);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.validate();
    return c;
}

void write_manifest(const std::string& path, const SceneManifest& manifest) {
    nlohmann::json j;
    j["version"] = manifest.version;
    j["base"] = config_to_json(manifest.base);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : manifest.scenes) {
        nlohmann::json je{{"id", e.id},
                          {"seed", e.seed},
                          {"x", e.q_gt.x},
                          {"y", e.q_gt.y}};
        je["gamma"] = {e.gamma_gt[0], e.gamma_gt[1]};
        arr.push_back(je);
    }
    j["scenes"] = std::move(arr);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open manifest for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing manifest: " + path);
}

SceneManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed manifest " + path + ": " + e.what());
    }
    SceneManifest manifest;
    try {
        manifest.version = j.at("version").get<int>();
        manifest.base = config_from_json(j.at("base"));
        for (const auto& je : j.at("scenes")) {
            ManifestEntry e;
            e.id = je.at("id").get<std::uint64_t>();
            e.seed = je.at("seed").get<std::uint64_t>();
            e.q_gt.x = je.at("x").get<double>();
            e.q_gt.y = je.at("y").get<double>();
            e.gamma_gt = {je.at("gamma").at(0).get<double>(),
                          je.at("gamma").at(1).get<double>()};
            if (manifest.base.heading_gate) e.q_gt.gamma = e.gamma_gt;
            manifest.scenes.push_back(e);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("manifest " + path + " missing fields: " + e.what());
    }
    return manifest;
}

std::vector<SyntheticScene> materialize(const SceneManifest& manifest) {
    std::vector<SyntheticScene> scenes;
    scenes.reserve(manifest.scenes.size());
    for (const auto& e : manifest.scenes) {
        SceneGenConfig cfg = manifest.base;
        cfg.rng_seed = e.seed;
        SyntheticScene scene = generate_scene(cfg);
        const double dx = scene.q_gt.x - e.q_gt.x;
        const double dy = scene.q_gt.y - e.q_gt.y;
        if (std::abs(dx) > 1e-12 || std::abs(dy) > 1e-12) {
            throw IntegrityError("manifest scene " + std::to_string(e.id) +
                                 " regenerated with a different pose; config "
                                 "mismatch between writer and reader");
        }
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

}  // namespace fieldloc
