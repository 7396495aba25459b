#pragma once

#include <array>

namespace stride {

inline constexpr int kJointCount = 6; // hipL kneeL ankleL hipR kneeR ankleR

// Trapezoidal-velocity forward translation of the center of mass:
// ramp up over t_accel, coast, ramp down over t_decel.
struct ComProfile {
    double t_accel = 1.0;
    double t_coast = 1.8;
    double t_decel = 0.6;
    double total_distance = 1.2;

    double duration() const { return t_accel + t_coast + t_decel; }
    // area of the velocity trapezoid = total_distance
    double v_peak() const {
        return total_distance / (0.5 * t_accel + t_coast + 0.5 * t_decel);
    }
};

struct JointWave {
    double offset = 0.0;    // standing angle, rad
    double amplitude = 0.0; // >= 0
    double phase = 0.0;     // rad
};

// Sine-based gait generator. Left/right legs are pi out of phase; the
// envelope ramps the oscillation in over the acceleration phase (initial
// half-step) and out over the deceleration phase (final half-step).
struct GaitParams {
    double step_period = 0.6;
    std::array<JointWave, kJointCount> joints{};

    std::array<double, kJointCount> stand_pose() const {
        std::array<double, kJointCount> p{};
        for (int i = 0; i < kJointCount; ++i) p[i] = joints[i].offset;
        return p;
    }
};

GaitParams default_gait();

// (position, velocity) of the suggested COM translation at time t.
// t outside [0, duration] clamps to the endpoints.
struct ComPoint {
    double x;
    double v;
};
ComPoint suggested_com(double t, const ComProfile& p);

// Smoothstep amplitude envelope: 0->1 over the acceleration phase, 1 during
// coast, 1->0 over deceleration. C1 everywhere.
double envelope(double t, const ComProfile& p);

// Per-effector suggested joint angles at time t (clamped outside the walk).
std::array<double, kJointCount> suggested_joints(double t, const ComProfile& p,
                                                 const GaitParams& g);

} // namespace stride
