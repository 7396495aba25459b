#include "stride/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace stride {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double smoothstep(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

} // namespace

GaitParams default_gait() {
    // Sign conventions: positive hip swings the leg forward, negative knee is
    // flexion, positive ankle is dorsiflexion. Offsets give a slightly
    // crouched stance with flat feet (hip + knee + ankle = 0).
    // Knee leads the hip by a quarter period so peak flexion happens at
    // mid-swing (ground clearance) and the stance knee is near straight.
    GaitParams g;
    g.step_period = 0.6;
    const JointWave hipR{0.15, 0.40, 0.0};
    const JointWave kneeR{-0.30, 0.30, -kPi / 2.0};
    const JointWave ankleR{0.15, 0.15, 0.0};
    auto mirrored = [](JointWave w) {
        w.phase += kPi;
        return w;
    };
    g.joints = {mirrored(hipR), mirrored(kneeR), mirrored(ankleR), hipR, kneeR, ankleR};
    return g;
}

ComPoint suggested_com(double t, const ComProfile& p) {
    const double vp = p.v_peak();
    if (t <= 0.0)
        return {0.0, 0.0};
    if (t >= p.duration())
        return {p.total_distance, 0.0};
    if (t < p.t_accel) {
        const double v = vp * t / p.t_accel;
        return {0.5 * v * t, v};
    }
    const double x_accel = 0.5 * vp * p.t_accel;
    if (t < p.t_accel + p.t_coast)
        return {x_accel + vp * (t - p.t_accel), vp};
    const double u = t - p.t_accel - p.t_coast;
    const double v = vp * (1.0 - u / p.t_decel);
    return {x_accel + vp * p.t_coast + vp * u - 0.5 * vp * u * u / p.t_decel, v};
}

double envelope(double t, const ComProfile& p) {
    if (t <= 0.0 || t >= p.duration())
        return 0.0;
    if (t < p.t_accel)
        return smoothstep(t / p.t_accel);
    if (t <= p.t_accel + p.t_coast)
        return 1.0;
    return 1.0 - smoothstep((t - p.t_accel - p.t_coast) / p.t_decel);
}

std::array<double, kJointCount> suggested_joints(double t, const ComProfile& p,
                                                 const GaitParams& g) {
    const double tc = std::clamp(t, 0.0, p.duration());
    const double env = envelope(tc, p);
    const double omega = 2.0 * kPi / g.step_period;
    std::array<double, kJointCount> out{};
    for (int j = 0; j < kJointCount; ++j) {
        const JointWave& w = g.joints[j];
        out[j] = w.offset + env * w.amplitude * std::sin(omega * tc + w.phase);
    }
    return out;
}

} // namespace stride
