#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dolly/baseline.hpp"

using namespace dolly;

namespace {

EnvConfig default_env() { return EnvConfig{}; }

ShotMetrics metrics_at(double area, double cx, double cy) {
    ShotMetrics m;
    m.subject_visible = true;
    m.area_frac = area;
    m.centroid_x = cx;
    m.centroid_y = cy;
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("baseline");

TEST_CASE("pd_step arithmetic") {
    CHECK(pd_step(0.0, 0.0, 2.0, 0.5, 0.05) == 0.0);

    // kd = 0 reduces to pure proportional control.
    CHECK(pd_step(0.3, 0.9, 2.0, 0.0, 0.05) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(pd_step(0.9, 0.0, 2.0, 0.0, 0.05) == 1.0);  // clamped

    // kp 2, kd 0.1, dt 0.05: 0.6 + 0.1 * (0.3 - 0.2) / 0.05 = 0.8
    CHECK(pd_step(0.3, 0.2, 2.0, 0.1, 0.05) == doctest::Approx(0.8).epsilon(1e-12));

    // First step suppresses the derivative term.
    CHECK(pd_step(0.3, -5.0, 2.0, 0.1, 0.05, true) == doctest::Approx(0.6).epsilon(1e-12));

    CHECK_THROWS_AS(pd_step(0.1, 0.0, 1.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("linearity below the clamp with kd = 0") {
    for (double e : {0.05, 0.1, 0.2}) {
        const double one = pd_step(e, 0.0, 2.0, 0.0, 0.05, true);
        const double two = pd_step(2.0 * e, 0.0, 2.0, 0.0, 0.05, true);
        CHECK(two == doctest::Approx(2.0 * one).epsilon(1e-12));
    }
}

TEST_CASE("controller is quiet at the setpoints") {
    const EnvConfig env = default_env();
    PdController pd(PDGains{}, env);
    pd.reset();
    const ActionVector a = pd.act(metrics_at(env.target_area, 60.0, 45.0), env.dt);
    for (double v : a.a) CHECK(v == 0.0);
}

TEST_CASE("error signs map to the declared action directions") {
    const EnvConfig env = default_env();
    PdController pd(PDGains{}, env);
    pd.reset();

    // Subject too small and left of centre: drive forward, steer left.
    const ActionVector a = pd.act(metrics_at(0.02, 40.0, 45.0), env.dt);
    CHECK(a.a[0] > 0.0);
    CHECK(a.a[1] < 0.0);
    CHECK(a.a[2] < 0.0);  // pan follows the same centroid error

    // Subject below centre tilts the camera down.
    pd.reset();
    const ActionVector b = pd.act(metrics_at(env.target_area, 60.0, 70.0), env.dt);
    CHECK(b.a[3] < 0.0);

    // Oversized subject backs away.
    pd.reset();
    const ActionVector c = pd.act(metrics_at(0.4, 60.0, 45.0), env.dt);
    CHECK(c.a[0] < 0.0);
}

TEST_CASE("commands always stay in bounds") {
    const EnvConfig env = default_env();
    PDGains hot;
    hot.kp_throttle = 50.0;
    hot.kp_steer = 50.0;
    hot.kp_pan = 50.0;
    hot.kp_tilt = 50.0;
    PdController pd(hot, env);
    pd.reset();
    for (double cx : {0.0, 30.0, 90.0, 120.0}) {
        const ActionVector a = pd.act(metrics_at(0.0, cx, 90.0), env.dt);
        for (double v : a.a) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("scripted metric sequence reproduces the hand-evaluated chain") {
    const EnvConfig env = default_env();
    PDGains gains;
    gains.kp_throttle = 2.0;
    gains.kd_throttle = 0.1;
    gains.kp_steer = 1.0;
    gains.kd_steer = 0.05;
    gains.kp_pan = 0.0;
    gains.kd_pan = 0.0;
    gains.kp_tilt = 0.0;
    gains.kd_tilt = 0.0;
    PdController pd(gains, env);
    pd.reset();

    const std::vector<double> areas{0.02, 0.05, 0.08};
    const std::vector<double> cxs{80.0, 70.0, 64.0};

    double prev_ea = 0.0, prev_ex = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < areas.size(); ++i) {
        const ActionVector got = pd.act(metrics_at(areas[i], cxs[i], 45.0), env.dt);

        const double ea = (env.target_area - areas[i]) / env.target_area;
        const double ex = (cxs[i] - 60.0) / 60.0;
        const double want_a1 =
            std::clamp(gains.kp_throttle * ea +
                           (first ? 0.0 : gains.kd_throttle * (ea - prev_ea) / env.dt),
                       -1.0, 1.0);
        const double want_a2 =
            std::clamp(gains.kp_steer * ex +
                           (first ? 0.0 : gains.kd_steer * (ex - prev_ex) / env.dt),
                       -1.0, 1.0);
        CHECK(got.a[0] == doctest::Approx(want_a1).epsilon(1e-12));
        CHECK(got.a[1] == doctest::Approx(want_a2).epsilon(1e-12));
        prev_ea = ea;
        prev_ex = ex;
        first = false;
    }
}

TEST_CASE("losing the subject decays the held commands") {
    const EnvConfig env = default_env();
    PdController pd(PDGains{}, env);
    pd.reset();
    const ActionVector last = pd.act(metrics_at(0.02, 40.0, 45.0), env.dt);

    ShotMetrics lost;
    lost.subject_visible = false;
    ActionVector held = pd.act(lost, env.dt);
    for (int i = 0; i < 4; ++i)
        CHECK(held.a[static_cast<std::size_t>(i)] ==
              doctest::Approx(0.9 * last.a[static_cast<std::size_t>(i)]).epsilon(1e-12));
    held = pd.act(lost, env.dt);
    for (int i = 0; i < 4; ++i)
        CHECK(held.a[static_cast<std::size_t>(i)] ==
              doctest::Approx(0.81 * last.a[static_cast<std::size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("gains must be finite") {
    PDGains g;
    g.kp_steer = std::nan("");
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_SUITE_END();
