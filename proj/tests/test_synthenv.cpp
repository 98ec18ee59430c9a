#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "fieldloc/errors.hpp"
#include "fieldloc/rng.hpp"
#include "fieldloc/synthenv.hpp"

using namespace fieldloc;

namespace {

SceneGenConfig small_config(std::uint64_t seed) {
    SceneGenConfig c;
    c.sat_h = c.sat_w = 9;
    c.ground_h = c.ground_w = 3;
    c.dim = 32;
    c.landmark_count = 10;
    c.rng_seed = seed;
    return c;
}

std::size_t cell_of(const SceneGenConfig& c, const PoseHypothesis& q) {
    double best = 1e300;
    std::size_t best_cell = 0;
    for (std::size_t r = 0; r < c.sat_h; ++r)
        for (std::size_t col = 0; col < c.sat_w; ++col) {
            const auto ctr = cell_center(c, r, col);
            const double d = std::hypot(ctr[0] - q.x, ctr[1] - q.y);
            if (d < best) {
                best = d;
                best_cell = r * c.sat_w + col;
            }
        }
    return best_cell;
}

}  // namespace

TEST_CASE("scene generation is a pure function of config and seed") {
    const SceneGenConfig c = small_config(42);
    const SyntheticScene a = generate_scene(c);
    const SyntheticScene b = generate_scene(c);
    CHECK(a.ground.values.data == b.ground.values.data);
    CHECK(a.satellite.values.data == b.satellite.values.data);
    CHECK(a.q_gt.x == b.q_gt.x);
    CHECK(a.q_gt.y == b.q_gt.y);
    CHECK(a.gamma_gt == b.gamma_gt);
    CHECK(a.landmark_cells == b.landmark_cells);

    SceneGenConfig c2 = c;
    c2.rng_seed = 43;
    const SyntheticScene d = generate_scene(c2);
    CHECK(a.ground.values.data != d.ground.values.data);
}

TEST_CASE("scene geometry and pose ranges") {
    for (std::uint64_t seed : {1ull, 5ull, 90ull}) {
        const SceneGenConfig c = small_config(seed);
        const SyntheticScene s = generate_scene(c);
        CHECK(s.satellite.values.rows() == 81);
        CHECK(s.satellite.values.cols() == 32);
        CHECK(s.ground.values.rows() == 9);
        CHECK(s.q_gt.x >= -0.9);
        CHECK(s.q_gt.x <= 0.9);
        CHECK(s.q_gt.y >= -0.9);
        CHECK(s.q_gt.y <= 0.9);
        CHECK(std::hypot(s.gamma_gt[0], s.gamma_gt[1]) ==
              doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.landmark_cells.size() == 10);
        for (std::size_t cell : s.landmark_cells) CHECK(cell < 81);
        CHECK(s.map_extent_m == c.map_extent_m);
    }
}

TEST_CASE("satellite cells tile the map symmetrically") {
    const SceneGenConfig c = small_config(1);
    const auto mid = cell_center(c, 4, 4);
    CHECK(mid[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(mid[1] == doctest::Approx(0.0).epsilon(1e-15));
    const auto tl = cell_center(c, 0, 0);
    const auto br = cell_center(c, 8, 8);
    CHECK(tl[0] == doctest::Approx(-br[0]).epsilon(1e-15));
    CHECK(tl[1] == doctest::Approx(-br[1]).epsilon(1e-15));
    CHECK(tl[0] < -0.8);
}

TEST_CASE("unambiguous scenes decode to the true cell") {
    for (std::uint64_t seed : {2ull, 3ull, 17ull, 123ull, 400ull}) {
        CAPTURE(seed);
        const SceneGenConfig c = small_config(seed);
        const SyntheticScene s = generate_scene(c);
        const std::size_t decoded = bayes_decode_cell(s, c);
        const std::size_t truth = cell_of(c, s.q_gt);
        const auto dr = static_cast<long>(decoded / c.sat_w) -
                        static_cast<long>(truth / c.sat_w);
        const auto dc = static_cast<long>(decoded % c.sat_w) -
                        static_cast<long>(truth % c.sat_w);
        CHECK(std::max(std::labs(dr), std::labs(dc)) <= 1);
    }
}

TEST_CASE("full ambiguity duplicates the constellation at the mirror") {
    SceneGenConfig c = small_config(9);
    c.ambiguity = 1.0;
    const SyntheticScene s = generate_scene(c);
    // Strip positional encodings, then compare each landmark cell with its
    // point-mirrored counterpart; at a=1 the mirror carries the same
    // signature at full strength (unless another landmark overwrote it).
    const Tensor pe = sinusoidal_pe_2d(c.sat_h, c.sat_w, c.dim);
    auto raw = [&](std::size_t cell, std::size_t j) {
        return (s.satellite.values.at(cell, j) - c.pe_scale * pe.at(cell, j)) /
               c.token_scale;
    };
    std::size_t verified = 0;
    for (std::size_t k = 0; k < s.landmark_cells.size(); ++k) {
        const std::size_t cell = s.landmark_cells[k];
        const std::size_t r = cell / c.sat_w, col = cell % c.sat_w;
        const std::size_t mirror =
            (c.sat_h - 1 - r) * c.sat_w + (c.sat_w - 1 - col);
        bool mirror_is_landmark = false;
        for (std::size_t other : s.landmark_cells)
            if (other == mirror) mirror_is_landmark = true;
        if (mirror_is_landmark || mirror == cell) continue;
        for (std::size_t j = 0; j < c.dim; ++j) {
            // mirror = background + 1.0 * sig; cell = sig.
            const double sig = s.landmark_sigs.at(k, j);
            const double back = raw(mirror, j) - sig;
            CHECK(std::abs(back) < 0.5);  // background is weak
        }
        ++verified;
    }
    CHECK(verified >= 5);
}

TEST_CASE("ambiguity adds ground noise, zero ambiguity stays clean") {
    SceneGenConfig c0 = small_config(21);
    SceneGenConfig c1 = c0;
    c1.ambiguity = 0.8;
    const SyntheticScene s0 = generate_scene(c0);
    const SyntheticScene s1 = generate_scene(c1);
    // Same draws up to the noise stage; the ambiguous variant must differ.
    CHECK(s0.q_gt.x == s1.q_gt.x);
    CHECK(s0.ground.values.data != s1.ground.values.data);
}

TEST_CASE("metric conversion and error decomposition") {
    CHECK(meters(PoseHypothesis{0.0, 0.0}, PoseHypothesis{0.6, -0.8}, 100.0) ==
          doctest::Approx(50.0).epsilon(1e-12));
    CHECK(meters(PoseHypothesis{0.1, 0.1}, PoseHypothesis{0.1, 0.1}, 100.0) ==
          0.0);

    const auto d = decompose_error({0.1, -0.2}, {1.0, 0.0}, 100.0);
    CHECK(d.longitudinal_m == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(d.lateral_m == doctest::Approx(10.0).epsilon(1e-12));

    // Rotated heading: components follow the frame, total is preserved.
    const double ang = 0.7;
    const std::array<double, 2> h{std::cos(ang), std::sin(ang)};
    const std::array<double, 2> e{0.13, -0.07};
    const auto rd = decompose_error(e, h, 100.0);
    const double total = meters(PoseHypothesis{0.0, 0.0},
                                PoseHypothesis{e[0], e[1]}, 100.0);
    CHECK(std::sqrt(rd.lateral_m * rd.lateral_m +
                    rd.longitudinal_m * rd.longitudinal_m) ==
          doctest::Approx(total).epsilon(1e-9));
    CHECK_THROWS_AS(decompose_error(e, {0.0, 0.0}, 100.0), ContractError);
}

TEST_CASE("manifest round-trips through JSON and regenerates exactly") {
    const SceneGenConfig base = small_config(31);
    const SceneManifest m = make_manifest(base, 4);
    REQUIRE(m.scenes.size() == 4);
    CHECK(m.scenes[0].seed == derive_seed(31, 0));
    CHECK(m.scenes[3].seed == derive_seed(31, 3));

    const std::string path =
        (std::filesystem::temp_directory_path() / "fieldloc_manifest_test.json")
            .string();
    write_manifest(path, m);
    const SceneManifest r = read_manifest(path);
    std::remove(path.c_str());
    CHECK(r.version == m.version);
    CHECK(r.base.rng_seed == base.rng_seed);
    CHECK(r.base.dim == base.dim);
    REQUIRE(r.scenes.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(r.scenes[i].id == m.scenes[i].id);
        CHECK(r.scenes[i].seed == m.scenes[i].seed);
        CHECK(r.scenes[i].q_gt.x == m.scenes[i].q_gt.x);
        CHECK(r.scenes[i].q_gt.y == m.scenes[i].q_gt.y);
        CHECK(r.scenes[i].gamma_gt == m.scenes[i].gamma_gt);
    }

    const auto scenes = materialize(r);
    const auto direct = generate_scenes(base, 4);
    REQUIRE(scenes.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(scenes[i].ground.values.data == direct[i].ground.values.data);
        CHECK(scenes[i].satellite.values.data ==
              direct[i].satellite.values.data);
    }
}

TEST_CASE("materialize rejects a tampered manifest") {
    const SceneGenConfig base = small_config(77);
    SceneManifest m = make_manifest(base, 2);
    m.scenes[1].q_gt.x += 1e-6;
    CHECK_THROWS_AS(materialize(m), IntegrityError);
}

TEST_CASE("config JSON round-trip preserves every knob") {
    SceneGenConfig c = small_config(5);
    c.ambiguity = 0.4;
    c.heading_gate = true;
    c.token_scale = 2.5;
    c.pe_scale = 0.11;
    c.map_extent_m = 250.0;
    const SceneGenConfig r = config_from_json(config_to_json(c));
    CHECK(r.sat_h == c.sat_h);
    CHECK(r.sat_w == c.sat_w);
    CHECK(r.ground_h == c.ground_h);
    CHECK(r.ground_w == c.ground_w);
    CHECK(r.dim == c.dim);
    CHECK(r.landmark_count == c.landmark_count);
    CHECK(r.signal_to_distractor == c.signal_to_distractor);
    CHECK(r.ambiguity == c.ambiguity);
    CHECK(r.rho == c.rho);
    CHECK(r.ground_patch_span == c.ground_patch_span);
    CHECK(r.ground_noise_scale == c.ground_noise_scale);
    CHECK(r.token_scale == c.token_scale);
    CHECK(r.pe_scale == c.pe_scale);
    CHECK(r.map_extent_m == c.map_extent_m);
    CHECK(r.heading_gate == c.heading_gate);
    CHECK(r.rng_seed == c.rng_seed);
}

TEST_CASE("configuration validation rejects broken settings") {
    SceneGenConfig c = small_config(1);
    c.landmark_count = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = small_config(1);
    c.landmark_count = 82;  // more landmarks than satellite cells
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = small_config(1);
    c.ambiguity = 1.5;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = small_config(1);
    c.dim = 30;  // PE needs dim % 4 == 0
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = small_config(1);
    c.rho = 0.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = small_config(1);
    c.map_extent_m = -5.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("heading gate attenuates landmarks behind the sensor") {
    // With gating on, the ground tokens depend on gamma_gt; verify the
    // gate changes the tokens relative to an otherwise identical scene.
    SceneGenConfig c = small_config(13);
    SceneGenConfig cg = c;
    cg.heading_gate = true;
    const SyntheticScene plain = generate_scene(c);
    const SyntheticScene gated = generate_scene(cg);
    CHECK(plain.q_gt.x == gated.q_gt.x);
    CHECK(plain.satellite.values.data == gated.satellite.values.data);
    CHECK(plain.ground.values.data != gated.ground.values.data);
}
