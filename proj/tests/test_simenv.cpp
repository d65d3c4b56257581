#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "dolly/rng.hpp"
#include "dolly/simenv.hpp"

using namespace dolly;

namespace {

EnvConfig desk_env() {
    EnvConfig cfg;
    cfg.episode_len = 200;
    return cfg;
}

// Scripted action sequence used by determinism and golden tests.
ActionVector scripted_action(long t) {
    ActionVector a;
    a.a[0] = 0.6 * std::sin(0.013 * static_cast<double>(t)) + 0.3;
    a.a[1] = 0.4 * std::sin(0.007 * static_cast<double>(t) + 1.0);
    a.a[2] = 0.3 * std::sin(0.011 * static_cast<double>(t) + 2.0);
    a.a[3] = 0.2 * std::sin(0.005 * static_cast<double>(t) + 3.0);
    return a;
}

bool observations_equal(const Observation& a, const Observation& b) {
    for (int i = 0; i < 9; ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace

TEST_SUITE_BEGIN("simenv");

TEST_CASE("centre start looks straight at the subject") {
    EnvConfig cfg = desk_env();
    cfg.start_position = StartPosition::centre;
    Environment env(cfg);
    env.reset(0);
    const ShotMetrics& m = env.last_metrics();
    REQUIRE(m.subject_visible);
    CHECK(m.centroid_x == 60.0);
    CHECK(m.camera_offset == 0.0);
    CHECK(m.subject_offset == 0.0);
    CHECK(env.last_observation()[8] == 0.0);
    // Standoff is chosen so the initial area sits well under the target.
    CHECK(m.area_frac > 0.0);
    CHECK(m.area_frac < cfg.target_area);
}

TEST_CASE("left and right starts mirror the offset angle") {
    EnvConfig cfg = desk_env();
    cfg.start_position = StartPosition::left;
    Environment left(cfg);
    left.reset(9);
    cfg.start_position = StartPosition::right;
    Environment right(cfg);
    right.reset(9);

    const double a_left = left.last_metrics().camera_offset;
    const double a_right = right.last_metrics().camera_offset;
    CHECK(a_left > 0.0);  // robot left of the line sees the subject right of centre
    CHECK(a_right < 0.0);
    CHECK(std::abs(a_left + a_right) < 1e-9);
}

TEST_CASE("reset is deterministic") {
    EnvConfig cfg = desk_env();
    cfg.start_position = StartPosition::mixed;
    cfg.start_jitter_pos = 0.1;
    cfg.start_jitter_heading = 0.05;
    Environment env1(cfg), env2(cfg);
    for (std::uint64_t seed : {0ULL, 1ULL, 2ULL, 17ULL}) {
        const Observation o1 = env1.reset(seed);
        const Observation o2 = env2.reset(seed);
        CHECK(observations_equal(o1, o2));
        CHECK(env1.world().robot_x == env2.world().robot_x);
        CHECK(env1.world().robot_y == env2.world().robot_y);
    }
}

TEST_CASE("mixed starts cycle with the seed") {
    EnvConfig cfg = desk_env();
    cfg.start_position = StartPosition::mixed;
    Environment env(cfg);
    int counts[3] = {0, 0, 0};
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        env.reset(seed);
        switch (env.episode_start()) {
            case StartPosition::left: counts[0]++; break;
            case StartPosition::right: counts[1]++; break;
            case StartPosition::centre: counts[2]++; break;
            default: FAIL("unexpected start");
        }
    }
    CHECK(counts[0] == 10);
    CHECK(counts[1] == 10);
    CHECK(counts[2] == 10);
}

TEST_CASE("zero action leaves the world unchanged") {
    Environment env(desk_env());
    const Observation before = env.reset(4);
    const WorldState w0 = env.world();
    const auto res = env.step(ActionVector{});
    CHECK(observations_equal(res.obs, before));
    CHECK(env.world().robot_x == w0.robot_x);
    CHECK(env.world().robot_y == w0.robot_y);
    CHECK(env.world().robot_heading == w0.robot_heading);
    CHECK(env.world().pan == w0.pan);
    CHECK(env.world().tilt == w0.tilt);
}

TEST_CASE("full throttle toward the subject grows the area") {
    EnvConfig cfg = desk_env();
    cfg.start_position = StartPosition::centre;
    Environment env(cfg);
    const Observation before = env.reset(0);
    ActionVector a;
    a.a[0] = 1.0;
    const auto res = env.step(a);
    CHECK(res.obs[0] > before[0]);
}

TEST_CASE("first steps match independently integrated kinematics") {
    EnvConfig cfg = desk_env();
    cfg.start_position = StartPosition::left;
    Environment env(cfg);
    env.reset(0);

    // Hand integration of the documented update rule.
    double x = -cfg.start_standoff, y = cfg.start_lateral, h = 0.0, pan = 0.0, tilt = 0.0;
    for (long t = 0; t < 3; ++t) {
        const ActionVector a = scripted_action(t);
        env.step(a);

        const double v = a.a[0] * cfg.max_speed;
        const double omega = -a.a[1] * cfg.max_turn_rate;
        x += v * std::cos(h) * cfg.dt;
        y += v * std::sin(h) * cfg.dt;
        h += omega * cfg.dt;
        pan = std::clamp(pan + a.a[2] * cfg.max_pan_rate * cfg.dt, -cfg.pan_limit, cfg.pan_limit);
        tilt = std::clamp(tilt + a.a[3] * cfg.max_tilt_rate * cfg.dt, -cfg.tilt_limit,
                          cfg.tilt_limit);

        CHECK(env.world().robot_x == doctest::Approx(x).epsilon(1e-15));
        CHECK(env.world().robot_y == doctest::Approx(y).epsilon(1e-15));
        CHECK(env.world().robot_heading == doctest::Approx(h).epsilon(1e-15));
        CHECK(env.world().pan == doctest::Approx(pan).epsilon(1e-15));
        CHECK(env.world().tilt == doctest::Approx(tilt).epsilon(1e-15));
    }
}

TEST_CASE("paper-length episode replays the committed golden trajectory") {
    EnvConfig cfg;  // paper-scale defaults: 1500 steps
    cfg.start_position = StartPosition::left;
    Environment env(cfg);
    env.reset(0);

    std::ifstream golden(std::string(DOLLY_TEST_DATA_DIR) + "/golden_trajectory.csv");
    REQUIRE_MESSAGE(golden.good(), "golden trajectory file missing");
    std::string header;
    std::getline(golden, header);

    long rows = 0;
    for (long t = 0; t < cfg.episode_len; ++t) {
        const auto res = env.step(scripted_action(t));
        std::string line;
        REQUIRE(std::getline(golden, line));
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        REQUIRE(fields.size() == 15);

        char buf[32];
        auto same = [&](double v, const std::string& s) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return s == buf;
        };
        REQUIRE(fields[0] == std::to_string(t + 1));
        REQUIRE(same(env.world().robot_x, fields[1]));
        REQUIRE(same(env.world().robot_y, fields[2]));
        REQUIRE(same(env.world().robot_heading, fields[3]));
        REQUIRE(same(env.world().pan, fields[4]));
        REQUIRE(same(env.world().tilt, fields[5]));
        for (int i = 0; i < 9; ++i) REQUIRE(same(res.obs[i], fields[static_cast<std::size_t>(6 + i)]));
        rows += 1;
        if (res.done) break;
    }
    CHECK(rows == cfg.episode_len);
}

TEST_CASE("observation assembly follows the channel formulas") {
    EnvConfig cfg = desk_env();
    Environment env(cfg);
    env.reset(0);

    ShotMetrics m;
    m.subject_visible = true;
    m.area_frac = cfg.target_area;
    m.centroid_x = 60.0;
    m.centroid_y = 45.0;
    m.subject_offset = 0.0;
    WorldState w = env.world();
    w.pan = 0.0;
    w.tilt = 0.0;

    Observation o = env.assemble_observation(w, m);
    CHECK(o[1] == 0.0);
    CHECK(o[3] == 0.0);
    CHECK(o[5] == 0.0);
    CHECK(o[2] == 0.5);
    CHECK(o[4] == 0.5);

    m.area_frac = 2.0 * cfg.target_area;
    o = env.assemble_observation(w, m);
    CHECK(o[1] == 1.0);  // clamped

    m.centroid_x = 0.0;
    o = env.assemble_observation(w, m);
    CHECK(o[3] == -1.0);

    w.pan = 0.5 * cfg.pan_limit;
    w.tilt = -cfg.tilt_limit;
    o = env.assemble_observation(w, m);
    CHECK(o[6] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(o[7] == -1.0);
}

TEST_CASE("losing the subject saturates error channels and holds positions") {
    EnvConfig cfg = desk_env();
    // Start facing away from the subject: nothing to see.
    cfg.start_position = StartPosition::explicit_pose;
    cfg.start_x = -1.0;
    cfg.start_y = 0.0;
    cfg.start_heading = 3.0;  // almost opposite the subject bearing
    Environment env(cfg);
    const Observation o = env.reset(0);
    CHECK(!env.last_metrics().subject_visible);
    CHECK(o[0] == 0.0);
    CHECK(o[1] == -1.0);
    CHECK(std::abs(o[3]) == 1.0);
    CHECK(std::abs(o[5]) == 1.0);
    // Held centroid defaults to the frame centre before any sighting.
    CHECK(o[2] == 0.5);
    CHECK(o[4] == 0.5);

    // After a sighting, the held values track the last visible frame.
    EnvConfig cfg2 = desk_env();
    cfg2.start_position = StartPosition::left;
    Environment env2(cfg2);
    env2.reset(0);
    REQUIRE(env2.last_metrics().subject_visible);

    ActionVector pan_hard;
    pan_hard.a[2] = 1.0;
    double last_cx = env2.last_metrics().centroid_x;
    double last_s4 = env2.last_observation()[3];
    bool lost = false;
    for (int i = 0; i < 60 && !lost; ++i) {
        const auto res = env2.step(pan_hard);
        if (!res.metrics.subject_visible) {
            lost = true;
            CHECK(res.obs[0] == 0.0);
            CHECK(res.obs[1] == -1.0);
            CHECK(res.obs[2] == doctest::Approx(last_cx / cfg2.frame_width).epsilon(1e-12));
            CHECK(res.obs[3] == (last_s4 >= 0.0 ? 1.0 : -1.0));
            // theta keeps tracking the live pan angle through the held alpha.
            CHECK(res.metrics.subject_offset ==
                  doctest::Approx(res.metrics.camera_offset + env2.world().pan).epsilon(1e-12));
        } else {
            last_cx = res.metrics.centroid_x;
            last_s4 = res.obs[3];
        }
    }
    CHECK(lost);
}

TEST_CASE("episode horizon is fixed and step-after-done throws") {
    EnvConfig cfg = desk_env();
    cfg.episode_len = 5;
    Environment env(cfg);
    env.reset(0);
    for (int t = 0; t < 5; ++t) {
        CHECK(!env.episode_done());
        const auto res = env.step(ActionVector{});
        CHECK(res.done == (t == 4));
    }
    CHECK(env.episode_done());
    CHECK_THROWS_AS(env.step(ActionVector{}), std::logic_error);
}

TEST_CASE("invalid inputs are rejected") {
    EnvConfig cfg = desk_env();
    Environment env(cfg);
    CHECK_THROWS_AS(env.step(ActionVector{}), std::logic_error);  // before reset
    env.reset(0);
    ActionVector bad;
    bad.a[1] = 1.5;
    CHECK_THROWS_AS(env.step(bad), std::invalid_argument);
    bad.a[1] = std::nan("");
    CHECK_THROWS_AS(env.step(bad), std::invalid_argument);

    EnvConfig outside = desk_env();
    outside.start_standoff = 10.0;  // beyond the arena
    CHECK_THROWS_AS(Environment{outside}, std::invalid_argument);

    EnvConfig bad_area = desk_env();
    bad_area.target_area = 0.7;
    bad_area.area_max = 0.6;
    CHECK_THROWS_AS(Environment{bad_area}, std::invalid_argument);
}

TEST_CASE("observations stay in range and pan/tilt respect limits") {
    EnvConfig cfg = desk_env();
    cfg.start_position = StartPosition::mixed;
    Environment env(cfg);
    Rng rng(53);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        env.reset(seed);
        while (!env.episode_done()) {
            ActionVector a;
            for (auto& v : a.a) v = rng.uniform(-1.0, 1.0);
            const auto res = env.step(a);
            CHECK(env.world().pan <= cfg.pan_limit);
            CHECK(env.world().pan >= -cfg.pan_limit);
            CHECK(env.world().tilt <= cfg.tilt_limit);
            CHECK(env.world().tilt >= -cfg.tilt_limit);
            CHECK(res.obs[0] >= 0.0);
            CHECK(res.obs[0] <= 1.0);
            CHECK(res.obs[2] >= 0.0);
            CHECK(res.obs[2] <= 1.0);
            CHECK(res.obs[4] >= 0.0);
            CHECK(res.obs[4] <= 1.0);
            for (int i : {1, 3, 5, 6, 7, 8}) {
                CHECK(res.obs[i] >= -1.0);
                CHECK(res.obs[i] <= 1.0);
            }
        }
    }
}

TEST_CASE("stepping is bit-reproducible for a fixed seed and action sequence") {
    EnvConfig cfg = desk_env();
    cfg.start_position = StartPosition::mixed;
    Environment env1(cfg), env2(cfg);
    env1.reset(21);
    env2.reset(21);
    for (long t = 0; t < cfg.episode_len; ++t) {
        const ActionVector a = scripted_action(t);
        const auto r1 = env1.step(a);
        const auto r2 = env2.step(a);
        REQUIRE(observations_equal(r1.obs, r2.obs));
    }
}

TEST_CASE("mirrored starts with mirrored actions negate s4 and s9") {
    EnvConfig cfg = desk_env();
    cfg.start_position = StartPosition::left;
    Environment left(cfg);
    cfg.start_position = StartPosition::right;
    Environment right(cfg);
    left.reset(2);
    right.reset(2);

    for (long t = 0; t < cfg.episode_len; ++t) {
        ActionVector a = scripted_action(t);
        ActionVector mirrored = a;
        mirrored.a[1] = -a.a[1];
        mirrored.a[2] = -a.a[2];
        const auto rl = left.step(a);
        const auto rr = right.step(mirrored);

        CHECK(left.world().robot_y == doctest::Approx(-right.world().robot_y).epsilon(1e-12));
        CHECK(left.world().robot_heading ==
              doctest::Approx(-right.world().robot_heading).epsilon(1e-12));
        if (rl.metrics.subject_visible && rr.metrics.subject_visible) {
            CHECK(rl.obs[3] == doctest::Approx(-rr.obs[3]).epsilon(1e-9));
            CHECK(rl.obs[8] == doctest::Approx(-rr.obs[8]).epsilon(1e-9));
        }
    }
}

TEST_CASE("zero perturbation reproduces the clean environment bit for bit") {
    EnvConfig cfg = desk_env();
    cfg.start_position = StartPosition::mixed;
    Environment clean(cfg);
    PerturbedEnvironment perturbed(cfg, PerturbationConfig{});
    const Observation o1 = clean.reset(5);
    const Observation o2 = perturbed.reset(5);
    CHECK(observations_equal(o1, o2));
    for (long t = 0; t < cfg.episode_len; ++t) {
        const ActionVector a = scripted_action(t);
        const auto r1 = clean.step(a);
        const auto r2 = perturbed.step(a);
        REQUIRE(observations_equal(r1.obs, r2.obs));
    }
}

TEST_CASE("actuation latency holds a zero-action prefix") {
    EnvConfig cfg = desk_env();
    PerturbationConfig pcfg;
    pcfg.actuation_latency = 2;
    PerturbedEnvironment delayed(cfg, pcfg);
    Environment clean(cfg);
    delayed.reset(0);
    clean.reset(0);

    ActionVector forward;
    forward.a[0] = 1.0;
    // First two steps act as zero-action regardless of input.
    for (int t = 0; t < 2; ++t) {
        const auto rd = delayed.step(forward);
        const auto rc = clean.step(ActionVector{});
        CHECK(observations_equal(rd.obs, rc.obs));
    }
    // The original first action arrives on step three.
    const auto rd = delayed.step(forward);
    const auto rc = clean.step(forward);
    CHECK(observations_equal(rd.obs, rc.obs));
}

TEST_CASE("mask dropout thins moments binomially") {
    EnvConfig cfg = desk_env();
    cfg.start_position = StartPosition::centre;
    PerturbationConfig pcfg;
    pcfg.mask_dropout_prob = 0.5;

    // Clean pixel count of the initial frame.
    Environment clean(cfg);
    clean.reset(0);
    const double clean_count =
        clean.last_metrics().area_frac * static_cast<double>(clean.last_mask().total_pixels());
    REQUIRE(clean_count > 50.0);

    double sum = 0.0;
    const int n_seeds = 1000;
    for (int s = 0; s < n_seeds; ++s) {
        PerturbationConfig p = pcfg;
        p.rng_seed = static_cast<std::uint64_t>(s);
        PerturbedEnvironment env(cfg, p);
        env.reset(0);
        sum += env.last_metrics().area_frac * static_cast<double>(env.last_mask().total_pixels());
    }
    const double mean = sum / n_seeds;
    // Binomial(n, 0.5): mean n/2, sd sqrt(n)/2; the sample mean over 1000
    // draws stays within ~4 standard errors.
    const double expect = 0.5 * clean_count;
    const double tol = 4.0 * 0.5 * std::sqrt(clean_count) / std::sqrt(static_cast<double>(n_seeds));
    CHECK(std::abs(mean - expect) <= tol);
}

TEST_CASE("perturbation config validation") {
    PerturbationConfig p;
    p.mask_dropout_prob = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = PerturbationConfig{};
    p.actuation_latency = -1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = PerturbationConfig{};
    p.observation_noise_std = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_SUITE_END();
