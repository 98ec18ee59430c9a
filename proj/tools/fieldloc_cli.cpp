#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fieldloc/errors.hpp"
#include "fieldloc/metrics.hpp"

namespace fl = fieldloc;
using nlohmann::json;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 1;
    bool seed_set = false;
    std::string mode;  // "", "2dof", "3dof"
};

void add_shared_flags(CLI::App* sub, GlobalArgs& g) {
    sub->add_option("--config", g.config_path, "JSON config file (CLI flags win)");
    sub->add_option("--seed", g.seed, "Base RNG seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", g.out_dir, "Output directory")->required();
    sub->add_option("--mode", g.mode, "Degrees of freedom")
        ->check(CLI::IsMember({"2dof", "3dof"}));
}

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw fl::IoError("cannot open config file: " + path);
    try {
        json j;
        in >> j;
        if (!j.is_object()) {
            throw fl::ValidationError("config file must hold a JSON object");
        }
        return j;
    } catch (const json::exception& e) {
        throw fl::ValidationError("config file " + path +
                                  " is not valid JSON: " + e.what());
    }
}

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) {
        throw fl::IoError("cannot create output directory " + out + ": " +
                          ec.message());
    }
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw fl::IoError("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw fl::IoError("failed writing: " + path);
}

void echo_config(const GlobalArgs& g, const json& effective) {
    write_text(g.out_dir + "/config_echo.json", effective.dump(2) + "\n");
}

fl::SceneGenConfig merged_scene_config(const json& file, const GlobalArgs& g) {
    fl::SceneGenConfig base;
    if (file.contains("scene")) base = fl::config_from_json(file.at("scene"));
    if (g.seed_set) base.rng_seed = g.seed;
    if (!g.mode.empty()) base.heading_gate = (g.mode == "3dof");
    base.validate();
    return base;
}

fl::OracleFieldSpec parse_oracle(const std::string& s) {
    fl::OracleFieldSpec spec;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = std::min(s.find(',', pos), s.size());
        const std::string item = s.substr(pos, comma - pos);
        pos = comma + 1;
        if (item.empty()) continue;
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos) {
            throw fl::ValidationError(
                "--oracle expects alpha=<a>,noise=<s>, got token: " + item);
        }
        const std::string key = item.substr(0, eq);
        double value = 0.0;
        try {
            std::size_t used = 0;
            value = std::stod(item.substr(eq + 1), &used);
            if (used != item.size() - eq - 1) throw std::invalid_argument("trail");
        } catch (const std::exception&) {
            throw fl::ValidationError("--oracle value for " + key +
                                      " is not a number");
        }
        if (key == "alpha") {
            spec.alpha = value;
        } else if (key == "noise") {
            spec.direction_noise_std = value;
            spec.distance_noise_std = value;
        } else {
            throw fl::ValidationError("--oracle key must be alpha or noise, got: " +
                                      key);
        }
    }
    spec.validate();
    return spec;
}

std::vector<std::size_t> parse_size_list(const std::string& s, const char* flag) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = std::min(s.find(',', pos), s.size());
        const std::string item = s.substr(pos, comma - pos);
        pos = comma + 1;
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(item, &used);
            if (used != item.size() || v == 0) throw std::invalid_argument("bad");
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw fl::ValidationError(std::string(flag) +
                                      " expects comma-separated positive "
                                      "integers, got: " +
                                      item);
        }
    }
    if (out.empty()) {
        throw fl::ValidationError(std::string(flag) + " must list at least one value");
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Keeps the model (inside the trainer) alive for as long as the source is.
struct SourceBundle {
    std::unique_ptr<fl::Trainer> trainer;
    std::unique_ptr<fl::FieldSource> source;
};

SourceBundle make_source(const std::string& checkpoint, const std::string& oracle,
                         std::uint64_t seed, const fl::SceneManifest& manifest) {
    if (!checkpoint.empty() && !oracle.empty()) {
        throw fl::ValidationError("give either --checkpoint or --oracle, not both");
    }
    SourceBundle b;
    if (!checkpoint.empty()) {
        b.trainer =
            std::make_unique<fl::Trainer>(fl::Trainer::load_checkpoint(checkpoint));
        const fl::SceneGenConfig& sc = b.trainer->scene_config();
        const fl::SceneGenConfig& mc = manifest.base;
        if (sc.dim != mc.dim || sc.ground_h != mc.ground_h ||
            sc.ground_w != mc.ground_w || sc.sat_h != mc.sat_h ||
            sc.sat_w != mc.sat_w) {
            throw fl::ValidationError(
                "checkpoint was trained on a different scene geometry than "
                "this manifest");
        }
        b.source = std::make_unique<fl::ModelSource>(b.trainer->model());
    } else if (!oracle.empty()) {
        fl::OracleFieldSpec spec = parse_oracle(oracle);
        spec.noise_seed = seed;
        b.source = std::make_unique<fl::OracleSource>(spec);
    } else {
        throw fl::ValidationError("one of --checkpoint or --oracle is required");
    }
    return b;
}

// Satellite cell containing a normalized coordinate.
std::array<std::size_t, 2> cell_of(const fl::SceneGenConfig& c, double x, double y) {
    const auto clamp_idx = [](double v, std::size_t n) {
        const double idx = std::floor((v + 1.0) / 2.0 * static_cast<double>(n));
        return static_cast<std::size_t>(
            std::clamp(idx, 0.0, static_cast<double>(n - 1)));
    };
    return {clamp_idx(y, c.sat_h), clamp_idx(x, c.sat_w)};
}

void print_report_summary(const fl::EvalReport& report) {
    std::printf(
        "scenes %zu  mean %.3f m  median %.3f m  recall@1m %.2f  recall@5m "
        "%.2f  wall %.0f ms\n",
        report.scenes.size(), report.error_m.mean, report.error_m.median,
        report.recall_1m, report.recall_5m, report.wall_ms);
    if (report.orientation_deg) {
        std::printf("orientation median %.2f deg\n", report.orientation_deg->median);
    }
}

int cmd_gen(const GlobalArgs& g, std::size_t count, bool count_set) {
    const json file = load_config_file(g.config_path);
    if (!count_set && file.contains("gen") && file.at("gen").contains("count")) {
        count = file.at("gen").at("count").get<std::size_t>();
    }
    if (count == 0) {
        throw fl::ValidationError("scene count must be positive");
    }
    const fl::SceneGenConfig base = merged_scene_config(file, g);
    ensure_out_dir(g.out_dir);

    const fl::SceneManifest manifest = fl::make_manifest(base, count);
    fl::write_manifest(g.out_dir + "/manifest.json", manifest);

    // Solvability probe: decode a handful of scenes with the generator's
    // own forward model; at ambiguity 0 they must land within one cell.
    const std::size_t probes = std::min<std::size_t>(count, 10);
    const std::vector<fl::SyntheticScene> sample =
        fl::generate_scenes(base, probes);
    std::size_t within_one = 0;
    for (const fl::SyntheticScene& scene : sample) {
        const std::size_t decoded = fl::bayes_decode_cell(scene, base);
        const auto truth = cell_of(base, scene.q_gt.x, scene.q_gt.y);
        const std::size_t dr = decoded / base.sat_w > truth[0]
                                   ? decoded / base.sat_w - truth[0]
                                   : truth[0] - decoded / base.sat_w;
        const std::size_t dc = decoded % base.sat_w > truth[1]
                                   ? decoded % base.sat_w - truth[1]
                                   : truth[1] - decoded % base.sat_w;
        if (dr <= 1 && dc <= 1) ++within_one;
    }
    echo_config(g, json{{"scene", fl::config_to_json(base)},
                        {"gen", json{{"count", count}}}});
    std::printf("scenes: %zu\n", count);
    std::printf("solvability: %zu/%zu probe scenes decode within one cell\n",
                within_one, probes);
    return fl::kExitOk;
}

int cmd_train(const GlobalArgs& g, const std::string& manifest_path,
              const std::string& resume, std::optional<std::size_t> steps,
              std::optional<std::size_t> epochs) {
    if (manifest_path.empty()) throw fl::ValidationError("--manifest is required");
    const json file = load_config_file(g.config_path);
    const fl::SceneManifest manifest = fl::read_manifest(manifest_path);

    fl::TrainConfig tc;
    if (file.contains("train")) tc = fl::train_config_from_json(file.at("train"));
    if (g.seed_set) tc.rng_seed = g.seed;
    if (!g.mode.empty()) tc.mode = fl::mode_from_string(g.mode);
    if (steps) tc.steps = *steps;
    if (epochs) tc.epochs = *epochs;
    tc.validate();

    std::unique_ptr<fl::Trainer> trainer;
    if (!resume.empty()) {
        trainer =
            std::make_unique<fl::Trainer>(fl::Trainer::load_checkpoint(resume));
        if (fl::config_to_json(trainer->scene_config()) !=
                fl::config_to_json(manifest.base) ||
            trainer->scenes().size() != manifest.scenes.size()) {
            throw fl::ValidationError(
                "resume checkpoint disagrees with the manifest's scene set");
        }
        if (steps || epochs) {
            trainer->set_budget(steps.value_or(trainer->config().steps),
                                epochs.value_or(trainer->config().epochs));
        }
    } else {
        trainer = std::make_unique<fl::Trainer>(tc, manifest.base,
                                                manifest.scenes.size());
    }

    // The cache regenerates from seeds; recorded poses must agree.
    for (std::size_t i = 0; i < manifest.scenes.size(); ++i) {
        const fl::PoseHypothesis& got = trainer->scenes()[i].q_gt;
        const fl::PoseHypothesis& want = manifest.scenes[i].q_gt;
        if (std::abs(got.x - want.x) > 1e-12 || std::abs(got.y - want.y) > 1e-12) {
            throw fl::IntegrityError("manifest scene " + std::to_string(i) +
                                     " does not match its recorded pose");
        }
    }

    ensure_out_dir(g.out_dir);
    echo_config(
        g, json{{"train", fl::train_config_to_json(trainer->config())},
                {"scene", fl::config_to_json(trainer->scene_config())},
                {"scene_count", manifest.scenes.size()},
                {"resume", resume}});

    const std::string log_path = g.out_dir + "/train_log.jsonl";
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw fl::IoError("cannot open training log: " + log_path);

    const std::string ckpt_path = g.out_dir + "/checkpoint.bin";
    const bool has_gamma = trainer->config().mode == fl::Mode::k3Dof;
    std::size_t last_epoch = trainer->epochs_done();
    double last_loss = std::numeric_limits<double>::quiet_NaN();
    while (!trainer->done()) {
        const fl::StepStats st = trainer->train_step();
        last_loss = st.loss;
        if (st.step % trainer->config().log_every == 0 || trainer->done()) {
            json line{{"step", st.step},
                      {"loss", st.loss},
                      {"loss_r", st.loss_r},
                      {"loss_theta", st.loss_theta},
                      {"grad_norm", st.grad_norm}};
            if (has_gamma) line["loss_gamma"] = st.loss_gamma;
            const std::string text = line.dump();
            log << text << "\n";
            if (!log) throw fl::IoError("failed writing training log");
            std::printf("%s\n", text.c_str());
        }
        if (trainer->epochs_done() != last_epoch) {
            last_epoch = trainer->epochs_done();
            trainer->save_checkpoint(ckpt_path);
        }
    }
    if (!std::isfinite(last_loss)) {
        throw fl::NumericError("training ended with a non-finite loss");
    }
    trainer->save_checkpoint(ckpt_path);
    log.flush();
    std::printf("trained %zu steps (%zu epochs), final loss %.6f\n",
                trainer->steps_done(), trainer->epochs_done(), last_loss);
    return fl::kExitOk;
}

int cmd_irs(const GlobalArgs& g, const std::string& manifest_path,
            const std::string& checkpoint, const std::string& oracle, int seeds,
            int rounds, int threads) {
    if (manifest_path.empty()) throw fl::ValidationError("--manifest is required");
    const fl::SceneManifest manifest = fl::read_manifest(manifest_path);
    const std::vector<fl::SyntheticScene> scenes = fl::materialize(manifest);
    SourceBundle bundle = make_source(checkpoint, oracle, g.seed, manifest);

    fl::IrsConfig base;
    base.n_seeds = seeds;
    base.rounds = rounds;
    base.threads = threads;
    base.rng_seed = g.seed;
    base.store_full_trajectories = true;
    base.validate();

    ensure_out_dir(g.out_dir);
    ensure_out_dir(g.out_dir + "/results");
    const std::string traj_path = g.out_dir + "/trajectories.csv";
    std::ofstream traj(traj_path, std::ios::trunc);
    if (!traj) throw fl::IoError("cannot open trajectory CSV: " + traj_path);

    bool first = true;
    const auto on_scene = [&](std::size_t id, const fl::SyntheticScene&,
                              const fl::IrsResult& result) {
        fl::write_trajectory_csv(traj, id, result, first);
        first = false;
        fl::IrsConfig cfg = base;
        cfg.rng_seed = fl::derive_seed(base.rng_seed, id);
        write_text(g.out_dir + "/results/scene_" + std::to_string(id) + ".json",
                   fl::result_to_json(result, cfg).dump(2) + "\n");
    };
    const fl::EvalReport report = fl::evaluate(scenes, *bundle.source, base, on_scene);
    if (!traj) throw fl::IoError("failed writing trajectory CSV");

    write_text(g.out_dir + "/eval.json", fl::report_to_json(report).dump(2) + "\n");
    echo_config(g, json{{"irs",
                         json{{"seeds", seeds},
                              {"rounds", rounds},
                              {"threads", threads},
                              {"rng_seed", base.rng_seed},
                              {"checkpoint", checkpoint},
                              {"oracle", oracle}}},
                        {"scene", fl::config_to_json(manifest.base)},
                        {"scene_count", manifest.scenes.size()}});
    print_report_summary(report);
    return fl::kExitOk;
}

int cmd_eval(const GlobalArgs& g, const std::string& manifest_path,
             const std::string& checkpoint, const std::string& oracle, int seeds,
             int rounds, int threads) {
    if (manifest_path.empty()) throw fl::ValidationError("--manifest is required");
    const fl::SceneManifest manifest = fl::read_manifest(manifest_path);
    const std::vector<fl::SyntheticScene> scenes = fl::materialize(manifest);
    SourceBundle bundle = make_source(checkpoint, oracle, g.seed, manifest);

    fl::IrsConfig base;
    base.n_seeds = seeds;
    base.rounds = rounds;
    base.threads = threads;
    base.rng_seed = g.seed;
    base.store_full_trajectories = false;
    base.validate();

    ensure_out_dir(g.out_dir);
    const fl::EvalReport report = fl::evaluate(scenes, *bundle.source, base);
    write_text(g.out_dir + "/eval.json", fl::report_to_json(report).dump(2) + "\n");
    echo_config(g, json{{"eval",
                         json{{"seeds", seeds},
                              {"rounds", rounds},
                              {"threads", threads},
                              {"rng_seed", base.rng_seed},
                              {"checkpoint", checkpoint},
                              {"oracle", oracle}}},
                        {"scene", fl::config_to_json(manifest.base)},
                        {"scene_count", manifest.scenes.size()}});
    print_report_summary(report);
    return fl::kExitOk;
}

bool non_increasing_within(const std::vector<double>& v, double tol_frac) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        if (v[i + 1] > v[i] * (1.0 + tol_frac)) return false;
    }
    return true;
}

int cmd_sweep(const GlobalArgs& g, const std::string& manifest_path,
              const std::string& checkpoint, const std::string& oracle,
              const std::string& seeds_list, const std::string& rounds_list,
              int threads) {
    if (manifest_path.empty()) throw fl::ValidationError("--manifest is required");
    const std::vector<std::size_t> ns = parse_size_list(seeds_list, "--seeds-list");
    const std::vector<std::size_t> rs =
        parse_size_list(rounds_list, "--rounds-list");
    const fl::SceneManifest manifest = fl::read_manifest(manifest_path);
    const std::vector<fl::SyntheticScene> scenes = fl::materialize(manifest);
    SourceBundle bundle = make_source(checkpoint, oracle, g.seed, manifest);

    fl::IrsConfig base;
    base.threads = threads;
    base.rng_seed = g.seed;
    base.validate();

    const std::vector<fl::SweepCell> cells =
        fl::scaling_sweep(scenes, *bundle.source, ns, rs, base);

    ensure_out_dir(g.out_dir);
    {
        std::ofstream csv(g.out_dir + "/sweep.csv", std::ios::trunc);
        if (!csv) throw fl::IoError("cannot open sweep CSV");
        fl::write_sweep_csv(csv, cells);
    }
    json jcells = json::array();
    for (const fl::SweepCell& c : cells) {
        jcells.push_back(json{{"N", c.n_seeds},
                              {"R", c.rounds},
                              {"mean_m", c.mean_m},
                              {"median_m", c.median_m},
                              {"recall_1m", c.recall_1m},
                              {"recall_5m", c.recall_5m},
                              {"wall_ms", c.wall_ms}});
    }
    write_text(g.out_dir + "/sweep.json", jcells.dump(2) + "\n");
    echo_config(g, json{{"sweep",
                         json{{"seeds_list", ns},
                              {"rounds_list", rs},
                              {"threads", threads},
                              {"rng_seed", base.rng_seed},
                              {"checkpoint", checkpoint},
                              {"oracle", oracle}}},
                        {"scene", fl::config_to_json(manifest.base)},
                        {"scene_count", manifest.scenes.size()}});

    // Trend verdicts over the emitted matrix, 2% noise band.
    bool rounds_ok = true, seeds_ok = true;
    for (const std::size_t n : ns) {
        std::vector<double> row;
        for (const fl::SweepCell& c : cells) {
            if (c.n_seeds == n) row.push_back(c.mean_m);
        }
        rounds_ok = rounds_ok && non_increasing_within(row, 0.02);
    }
    for (const std::size_t r : rs) {
        std::vector<double> col;
        for (const fl::SweepCell& c : cells) {
            if (c.rounds == r) col.push_back(c.mean_m);
        }
        seeds_ok = seeds_ok && non_increasing_within(col, 0.02);
    }
    std::printf(
        "trend: mean error non-increasing within 2%% over rounds: %s, over "
        "seeds: %s\n",
        rounds_ok ? "yes" : "no", seeds_ok ? "yes" : "no");
    return fl::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Displacement-field localization toolkit"};
    app.require_subcommand(1);

    GlobalArgs g_gen, g_train, g_irs, g_sweep, g_eval;

    CLI::App* gen = app.add_subcommand("gen", "Generate a scene manifest");
    add_shared_flags(gen, g_gen);
    std::size_t gen_count = 200;
    CLI::Option* gen_count_opt =
        gen->add_option("--count", gen_count, "Number of scenes");

    CLI::App* train = app.add_subcommand("train", "Train the regression field");
    add_shared_flags(train, g_train);
    std::string train_manifest, train_resume;
    std::size_t train_steps = 0, train_epochs = 0;
    train->add_option("--manifest", train_manifest, "Scene manifest path");
    train->add_option("--resume", train_resume, "Checkpoint to continue from");
    CLI::Option* steps_opt =
        train->add_option("--steps", train_steps, "Stop after this many steps");
    CLI::Option* epochs_opt =
        train->add_option("--epochs", train_epochs, "Stop after this many epochs");

    const auto add_field_source = [](CLI::App* sub, std::string& ckpt,
                                     std::string& oracle) {
        sub->add_option("--checkpoint", ckpt, "Trained model checkpoint");
        sub->add_option("--oracle", oracle,
                        "Analytic field spec: alpha=<a>,noise=<s>");
    };

    CLI::App* irs = app.add_subcommand("irs", "Run iterative refinement sampling");
    add_shared_flags(irs, g_irs);
    std::string irs_manifest, irs_ckpt, irs_oracle;
    int irs_seeds = 10, irs_rounds = 5, irs_threads = 1;
    irs->add_option("--manifest", irs_manifest, "Scene manifest path");
    add_field_source(irs, irs_ckpt, irs_oracle);
    irs->add_option("--seeds", irs_seeds, "Hypotheses per scene (N)");
    irs->add_option("--rounds", irs_rounds, "Refinement rounds (R)");
    irs->add_option("--threads", irs_threads, "Worker threads per episode");

    CLI::App* sweep = app.add_subcommand("sweep", "Accuracy/latency scaling grid");
    add_shared_flags(sweep, g_sweep);
    std::string sweep_manifest, sweep_ckpt, sweep_oracle;
    std::string sweep_ns = "1,5,10,20", sweep_rs = "1,3,5,10";
    int sweep_threads = 1;
    sweep->add_option("--manifest", sweep_manifest, "Scene manifest path");
    add_field_source(sweep, sweep_ckpt, sweep_oracle);
    sweep->add_option("--seeds-list", sweep_ns, "Comma-separated N values");
    sweep->add_option("--rounds-list", sweep_rs, "Comma-separated R values");
    sweep->add_option("--threads", sweep_threads, "Worker threads per episode");

    CLI::App* eval = app.add_subcommand("eval", "Evaluate a field over a manifest");
    add_shared_flags(eval, g_eval);
    std::string eval_manifest, eval_ckpt, eval_oracle;
    int eval_seeds = 10, eval_rounds = 5, eval_threads = 1;
    eval->add_option("--manifest", eval_manifest, "Scene manifest path");
    add_field_source(eval, eval_ckpt, eval_oracle);
    eval->add_option("--seeds", eval_seeds, "Hypotheses per scene (N)");
    eval->add_option("--rounds", eval_rounds, "Refinement rounds (R)");
    eval->add_option("--threads", eval_threads, "Worker threads per episode");

    try {
        app.parse(argc, argv);
        const auto finish_globals = [&](GlobalArgs& g, CLI::App* sub) {
            g.seed_set = sub->count("--seed") > 0;
        };
        if (gen->parsed()) {
            finish_globals(g_gen, gen);
            return cmd_gen(g_gen, gen_count, gen_count_opt->count() > 0);
        }
        if (train->parsed()) {
            finish_globals(g_train, train);
            std::optional<std::size_t> steps, epochs;
            if (steps_opt->count() > 0) steps = train_steps;
            if (epochs_opt->count() > 0) epochs = train_epochs;
            return cmd_train(g_train, train_manifest, train_resume, steps, epochs);
        }
        if (irs->parsed()) {
            finish_globals(g_irs, irs);
            return cmd_irs(g_irs, irs_manifest, irs_ckpt, irs_oracle, irs_seeds,
                           irs_rounds, irs_threads);
        }
        if (sweep->parsed()) {
            finish_globals(g_sweep, sweep);
            return cmd_sweep(g_sweep, sweep_manifest, sweep_ckpt, sweep_oracle,
                             sweep_ns, sweep_rs, sweep_threads);
        }
        if (eval->parsed()) {
            finish_globals(g_eval, eval);
            return cmd_eval(g_eval, eval_manifest, eval_ckpt, eval_oracle,
                            eval_seeds, eval_rounds, eval_threads);
        }
        return fl::kExitValidation;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? fl::kExitOk : fl::kExitValidation;
    } catch (const fl::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return fl::kExitValidation;
    } catch (const fl::UnsupportedModeError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return fl::kExitValidation;
    } catch (const fl::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return fl::kExitNumeric;
    } catch (const fl::DomainError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return fl::kExitNumeric;
    } catch (const fl::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return fl::kExitIo;
    } catch (const fl::IntegrityError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return fl::kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
