#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fieldloc/errors.hpp"
#include "fieldloc/metrics.hpp"
#include "fieldloc/rng.hpp"

using namespace fieldloc;

namespace {

SceneGenConfig small_config(std::uint64_t seed) {
    SceneGenConfig c;
    c.sat_h = c.sat_w = 9;
    c.ground_h = c.ground_w = 3;
    c.dim = 32;
    c.landmark_count = 8;
    c.rng_seed = seed;
    return c;
}

}  // namespace

TEST_CASE("summarize computes order statistics with the even-count median") {
    const ErrorSummary odd = summarize({3.0, 1.0, 2.0});
    CHECK(odd.count == 3);
    CHECK(odd.mean == 2.0);
    CHECK(odd.median == 2.0);
    CHECK(odd.min == 1.0);
    CHECK(odd.max == 3.0);

    const ErrorSummary even = summarize({4.0, 1.0, 3.0, 2.0});
    CHECK(even.count == 4);
    CHECK(even.median == 2.5);
    CHECK(even.mean == 2.5);

    const ErrorSummary single = summarize({7.5});
    CHECK(single.median == 7.5);
    CHECK(single.min == 7.5);
    CHECK(single.max == 7.5);

    CHECK_THROWS_AS(summarize({}), ContractError);
}

TEST_CASE("recall uses a closed threshold") {
    const std::vector<double> v{0.5, 1.0, 1.5, 2.0};
    CHECK(recall_at(v, 1.0) == 0.5);
    CHECK(recall_at(v, 2.0) == 1.0);
    CHECK(recall_at(v, 0.49) == 0.0);
    CHECK(recall_at(v, 0.5) == 0.25);
}

TEST_CASE("orientation error in degrees") {
    const std::array<double, 2> east{1.0, 0.0};
    const std::array<double, 2> north{0.0, 1.0};
    CHECK(orientation_error_deg(east, east) == 0.0);
    CHECK(orientation_error_deg(east, north) ==
          doctest::Approx(90.0).epsilon(1e-12));
    CHECK(orientation_error_deg(east, {-1.0, 0.0}) ==
          doctest::Approx(180.0).epsilon(1e-12));
    const double a = 0.3;
    CHECK(orientation_error_deg({std::cos(a), std::sin(a)}, east) ==
          doctest::Approx(a * 180.0 / kPi).epsilon(1e-9));
    // Non-unit inputs are normalized rather than trusted.
    CHECK(orientation_error_deg({3.0, 0.0}, {0.0, 0.5}) ==
          doctest::Approx(90.0).epsilon(1e-12));
}

TEST_CASE("a perfect oracle source evaluates to zero error") {
    const auto scenes = generate_scenes(small_config(5), 6);
    OracleFieldSpec spec;
    spec.alpha = 1.0;
    OracleSource source(spec);
    IrsConfig irs;
    irs.n_seeds = 4;
    irs.rounds = 3;
    irs.rng_seed = 9;
    const EvalReport rep = evaluate(scenes, source, irs);
    REQUIRE(rep.scenes.size() == 6);
    for (const auto& s : rep.scenes) {
        CHECK(s.error_m == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(s.final_spread == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(!s.orientation_deg.has_value());
    }
    CHECK(rep.error_m.mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(rep.recall_1m == 1.0);
    CHECK(rep.recall_5m == 1.0);
    CHECK(!rep.orientation_deg.has_value());
    CHECK(rep.wall_ms >= 0.0);
}

TEST_CASE("per-scene IRS seeds derive from the base seed and scene id") {
    const auto scenes = generate_scenes(small_config(15), 3);
    OracleFieldSpec spec;
    spec.alpha = 0.5;
    spec.direction_noise_std = 0.2;
    spec.noise_seed = 4;
    OracleSource source(spec);
    IrsConfig irs;
    irs.n_seeds = 3;
    irs.rounds = 2;
    irs.rng_seed = 77;

    std::vector<PoseHypothesis> starts;
    const SceneCallback grab = [&](std::size_t, const SyntheticScene&,
                                   const IrsResult& r) {
        starts.push_back(r.trajectories[0][0]);
    };
    (void)evaluate(scenes, source, irs, grab);
    REQUIRE(starts.size() == 3);

    for (std::size_t i = 0; i < 3; ++i) {
        IrsConfig expect = irs;
        expect.rng_seed = derive_seed(irs.rng_seed, i);
        const auto seeds = sample_seeds(expect);
        CHECK(seeds[0].x == starts[i].x);
        CHECK(seeds[0].y == starts[i].y);
    }

    // Same inputs, same report, down to the last bit (wall time aside).
    OracleSource s2(spec);
    OracleSource s3(spec);
    const EvalReport r1 = evaluate(scenes, s2, irs);
    const EvalReport r2 = evaluate(scenes, s3, irs);
    for (std::size_t i = 0; i < r1.scenes.size(); ++i) {
        CHECK(r1.scenes[i].estimate.x == r2.scenes[i].estimate.x);
        CHECK(r1.scenes[i].error_m == r2.scenes[i].error_m);
    }
    CHECK(r1.error_m.mean == r2.error_m.mean);
}

TEST_CASE("evaluation decomposes errors against the true heading") {
    const auto scenes = generate_scenes(small_config(25), 4);
    OracleFieldSpec spec;
    spec.alpha = 0.6;
    spec.direction_noise_std = 0.3;
    spec.distance_noise_std = 0.02;
    spec.noise_seed = 31;
    OracleSource source(spec);
    IrsConfig irs;
    irs.n_seeds = 5;
    irs.rounds = 3;
    const EvalReport rep = evaluate(scenes, source, irs);
    for (const auto& s : rep.scenes) {
        const double recomposed = std::sqrt(s.lateral_m * s.lateral_m +
                                            s.longitudinal_m * s.longitudinal_m);
        CHECK(recomposed == doctest::Approx(s.error_m).epsilon(1e-9));
    }
    CHECK(rep.error_m.max >= rep.error_m.median);
    CHECK(rep.error_m.median >= rep.error_m.min);
}

TEST_CASE("model source runs one encoder pass per scene") {
    SceneGenConfig sc = small_config(35);
    sc.dim = kContextDim;  // the trained encoder is fixed-width
    const auto scenes = generate_scenes(sc, 2);
    Rng rng(3);
    Model model = init_model(Mode::k2Dof, 8, rng);
    ModelSource source(model);
    IrsConfig irs;
    irs.n_seeds = 3;
    irs.rounds = 2;
    const std::size_t before = encode_scene_call_count();
    const EvalReport rep = evaluate(scenes, source, irs);
    CHECK(encode_scene_call_count() - before == scenes.size());
    REQUIRE(rep.scenes.size() == 2);
    for (const auto& s : rep.scenes) {
        CHECK(std::isfinite(s.error_m));
        CHECK(!s.orientation_deg.has_value());  // 2-DoF model has no heading
    }
}

TEST_CASE("a 3-DoF model source reports orientation errors") {
    SceneGenConfig sc = small_config(45);
    sc.dim = kContextDim;
    sc.heading_gate = true;
    const auto scenes = generate_scenes(sc, 2);
    Rng rng(7);
    Model model = init_model(Mode::k3Dof, 8, rng);
    ModelSource source(model);
    IrsConfig irs;
    irs.n_seeds = 2;
    irs.rounds = 2;
    const EvalReport rep = evaluate(scenes, source, irs);
    REQUIRE(rep.orientation_deg.has_value());
    for (const auto& s : rep.scenes) {
        REQUIRE(s.orientation_deg.has_value());
        CHECK(*s.orientation_deg >= 0.0);
        CHECK(*s.orientation_deg <= 180.0);
    }
}

TEST_CASE("report serialization carries summaries and per-scene rows") {
    const auto scenes = generate_scenes(small_config(55), 3);
    OracleFieldSpec spec;
    spec.alpha = 1.0;
    OracleSource source(spec);
    IrsConfig irs;
    irs.n_seeds = 2;
    irs.rounds = 2;
    const EvalReport rep = evaluate(scenes, source, irs);
    const nlohmann::json j = report_to_json(rep);
    CHECK(j["scenes"].size() == 3);
    CHECK(j["scenes"][0].contains("error_m"));
    CHECK(j["scenes"][0]["x"].get<double>() == rep.scenes[0].estimate.x);
    CHECK(j["scenes"][0]["y"].get<double>() == rep.scenes[0].estimate.y);
    CHECK(j["error_m"]["mean"].get<double>() == rep.error_m.mean);
    CHECK(j["error_m"]["count"].get<std::size_t>() == 3);
    CHECK(j["recall_1m"].get<double>() == rep.recall_1m);
    CHECK(j.contains("wall_ms"));
    CHECK(!j.contains("orientation_deg"));
}

TEST_CASE("scaling sweep fills the full grid deterministically") {
    const auto scenes = generate_scenes(small_config(65), 3);
    OracleFieldSpec spec;
    spec.alpha = 0.7;
    spec.direction_noise_std = 0.25;
    spec.noise_seed = 8;
    OracleSource source(spec);
    IrsConfig base;
    base.rng_seed = 21;
    const std::vector<std::size_t> ns{1, 4};
    const std::vector<std::size_t> rs{1, 2, 3};
    const auto cells = scaling_sweep(scenes, source, ns, rs, base);
    REQUIRE(cells.size() == 6);
    // Row-major over (N, R), N outermost.
    CHECK(cells[0].n_seeds == 1);
    CHECK(cells[0].rounds == 1);
    CHECK(cells[2].n_seeds == 1);
    CHECK(cells[2].rounds == 3);
    CHECK(cells[3].n_seeds == 4);
    CHECK(cells[5].rounds == 3);
    for (const auto& c : cells) {
        CHECK(std::isfinite(c.mean_m));
        CHECK(c.mean_m >= 0.0);
        CHECK(c.wall_ms >= 0.0);
    }

    OracleSource source2(spec);
    const auto again = scaling_sweep(scenes, source2, ns, rs, base);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        CHECK(cells[i].mean_m == again[i].mean_m);
        CHECK(cells[i].median_m == again[i].median_m);
        CHECK(cells[i].recall_1m == again[i].recall_1m);
    }
}

TEST_CASE("sweep CSV layout") {
    std::vector<SweepCell> cells(2);
    cells[0] = {1, 5, 2.5, 2.0, 0.25, 0.75, 10.0};
    cells[1] = {10, 5, 1.25, 1.0, 0.5, 1.0, 95.5};
    std::ostringstream os;
    write_sweep_csv(os, cells);
    std::istringstream is(os.str());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(is, line)) lines.push_back(line);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "N,R,mean_m,median_m,recall_1m,recall_5m,wall_ms");
    CHECK(lines[1] == "1,5,2.5,2,0.25,0.75,10");
    CHECK(lines[2] == "10,5,1.25,1,0.5,1,95.5");
}
