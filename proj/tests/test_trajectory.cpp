#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stride/trajectory.hpp"

using namespace stride;

TEST_CASE("com profile endpoints and coast speed") {
    ComProfile p;
    CHECK(p.duration() == doctest::Approx(3.4));

    const ComPoint start = suggested_com(0.0, p);
    CHECK(start.x == 0.0);
    CHECK(start.v == 0.0);

    const ComPoint end = suggested_com(3.4, p);
    CHECK(std::abs(end.x - 1.2) < 1e-9);
    CHECK(end.v == 0.0);

    // trapezoid area: v * (0.5 + 1.8 + 0.3) = 1.2  =>  v = 1.2 / 2.6
    const double v_expect = 1.2 / 2.6;
    CHECK(std::abs(p.v_peak() - v_expect) < 1e-12);
    CHECK(std::abs(p.v_peak() - 0.46154) < 1e-5);
    for (double t : {1.0, 1.5, 2.0, 2.79})
        CHECK(suggested_com(t, p).v == doctest::Approx(v_expect).epsilon(1e-9));
}

TEST_CASE("com displacement equals the analytic integral") {
    ComProfile p;
    // closed-form distance at the phase ends
    const double vp = p.v_peak();
    CHECK(suggested_com(p.t_accel, p).x == doctest::Approx(0.5 * vp * p.t_accel));
    CHECK(suggested_com(p.t_accel + p.t_coast, p).x ==
          doctest::Approx(0.5 * vp * p.t_accel + vp * p.t_coast));
    CHECK(std::abs(suggested_com(p.duration(), p).x - p.total_distance) < 1e-9);
}

TEST_CASE("com velocity is continuous") {
    ComProfile p;
    for (double b : {p.t_accel, p.t_accel + p.t_coast}) {
        const double before = suggested_com(b - 1e-9, p).v;
        const double after = suggested_com(b + 1e-9, p).v;
        CHECK(std::abs(before - after) < 1e-6);
    }
}

TEST_CASE("out-of-range times clamp to endpoints") {
    ComProfile p;
    CHECK(suggested_com(-1.0, p).x == 0.0);
    CHECK(suggested_com(-1.0, p).v == 0.0);
    CHECK(suggested_com(9.0, p).x == doctest::Approx(1.2));
    CHECK(suggested_com(9.0, p).v == 0.0);
}

TEST_CASE("envelope ramps and plateau") {
    ComProfile p;
    CHECK(envelope(0.0, p) == 0.0);
    CHECK(envelope(0.5, p) == doctest::Approx(0.5)); // smoothstep midpoint
    CHECK(envelope(1.0, p) == 1.0);
    CHECK(envelope(1.9, p) == 1.0);
    CHECK(envelope(2.8, p) == 1.0);
    CHECK(envelope(3.1, p) == doctest::Approx(0.5));
    CHECK(envelope(3.4, p) == 0.0);
}

TEST_CASE("joints start and end at the standing pose") {
    ComProfile p;
    const GaitParams g = default_gait();
    const auto stand = g.stand_pose();
    for (double t : {0.0, 3.4}) {
        const auto js = suggested_joints(t, p, g);
        for (int j = 0; j < kJointCount; ++j) CHECK(js[j] == doctest::Approx(stand[j]));
    }
}

TEST_CASE("left and right legs are pi out of phase during coast") {
    ComProfile p;
    const GaitParams g = default_gait();
    for (double t = 1.05; t < 2.75; t += 0.013) {
        const auto js = suggested_joints(t, p, g);
        // hipL - offset == -(hipR - offset)
        const double l = js[0] - g.joints[0].offset;
        const double r = js[3] - g.joints[3].offset;
        CHECK(l == doctest::Approx(-r).epsilon(1e-9));
        const double kl = js[1] - g.joints[1].offset;
        const double kr = js[4] - g.joints[4].offset;
        CHECK(kl == doctest::Approx(-kr).epsilon(1e-9));
    }
}

TEST_CASE("suggested joints are C1: finite-difference derivative is continuous") {
    ComProfile p;
    const GaitParams g = default_gait();
    const double h = 1e-6;
    for (double b : {0.3, p.t_accel, 1.7, p.t_accel + p.t_coast, 3.1}) {
        for (int j = 0; j < kJointCount; ++j) {
            const double dm =
                (suggested_joints(b, p, g)[j] - suggested_joints(b - h, p, g)[j]) / h;
            const double dp =
                (suggested_joints(b + h, p, g)[j] - suggested_joints(b, p, g)[j]) / h;
            CHECK(std::abs(dm - dp) < 1e-3);
        }
    }
}

TEST_CASE("knee stays flexed or straight, never hyperextended") {
    ComProfile p;
    const GaitParams g = default_gait();
    for (double t = 0.0; t <= 3.4; t += 0.001) {
        const auto js = suggested_joints(t, p, g);
        CHECK(js[1] <= 1e-9);
        CHECK(js[4] <= 1e-9);
    }
}
