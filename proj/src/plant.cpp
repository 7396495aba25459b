#include "stride/plant.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "stride/errors.hpp"

namespace stride {

namespace {

struct Vec2 {
    double x = 0.0, z = 0.0;
};
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.z}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.z * b.z; }
// 90 degree CCW rotation; d(R(a)v)/da = rot90(R(a)v)
inline Vec2 rot90(Vec2 v) { return {-v.z, v.x}; }
inline Vec2 rotate(double a, Vec2 v) {
    const double c = std::cos(a), s = std::sin(a);
    return {c * v.x - s * v.z, s * v.x + c * v.z};
}

// link indices
enum { kTorso = 0, kThighL, kShankL, kFootL, kThighR, kShankR, kFootR };

// q-indices of the joints on the path from torso to each link
constexpr int kPath[7][3] = {
    {-1, -1, -1}, {3, -1, -1}, {3, 4, -1}, {3, 4, 5}, {6, -1, -1}, {6, 7, -1}, {6, 7, 8},
};

struct Kinematics {
    std::array<double, 7> angle{}; // absolute link angles
    std::array<Vec2, 7> com{};
    Vec2 hip{};                    // shared hip anchor on the torso
    std::array<Vec2, 2> knee{}, ankle{}; // [left, right]
    std::array<Vec2, 4> contact{};       // heelL toeL heelR toeR
    // pivot point for each q rotation column, indexed by q index 2..8
    std::array<Vec2, 9> pivot{};
    // centripetal acceleration of each link com at qdd = 0
    std::array<Vec2, 7> a0{};
};

struct LinkProps {
    std::array<double, 7> mass{}, inertia{};
};

LinkProps link_props(const BipedParams& p) {
    LinkProps lp;
    const double it = p.torso_mass * p.torso_length * p.torso_length / 12.0;
    const double ith = p.thigh_mass * p.thigh_length * p.thigh_length / 12.0;
    const double ish = p.shank_mass * p.shank_length * p.shank_length / 12.0;
    const double ift = p.foot_mass *
                       (p.foot_length * p.foot_length + p.foot_height * p.foot_height) / 12.0;
    lp.mass = {p.torso_mass, p.thigh_mass, p.shank_mass, p.foot_mass,
               p.thigh_mass, p.shank_mass, p.foot_mass};
    lp.inertia = {it, ith, ish, ift, ith, ish, ift};
    return lp;
}

Kinematics forward_kin(const BipedParams& p, const PlanarBiped::State& s) {
    Kinematics k;
    const Vec2 base{s.q[0], s.q[1]};
    const double th = s.q[2];
    k.angle[kTorso] = th;
    k.com[kTorso] = base;
    k.hip = base + rotate(th, {0.0, -0.5 * p.torso_length});
    k.pivot[2] = base; // torso rotates about its own com

    for (int side = 0; side < 2; ++side) {
        const int j0 = 3 + 3 * side; // first q index of this leg
        const int thigh = 1 + 3 * side, shank = 2 + 3 * side, foot = 3 + 3 * side;
        const double a1 = th + s.q[j0];
        const double a2 = a1 + s.q[j0 + 1];
        const double a3 = a2 + s.q[j0 + 2];
        k.angle[thigh] = a1;
        k.angle[shank] = a2;
        k.angle[foot] = a3;
        k.knee[side] = k.hip + rotate(a1, {0.0, -p.thigh_length});
        k.ankle[side] = k.knee[side] + rotate(a2, {0.0, -p.shank_length});
        k.com[thigh] = k.hip + rotate(a1, {0.0, -0.5 * p.thigh_length});
        k.com[shank] = k.knee[side] + rotate(a2, {0.0, -0.5 * p.shank_length});
        k.com[foot] = k.ankle[side] + rotate(a3, {0.0, -0.5 * p.foot_height});
        k.contact[2 * side] =
            k.ankle[side] + rotate(a3, {-0.5 * p.foot_length, -p.foot_height});
        k.contact[2 * side + 1] =
            k.ankle[side] + rotate(a3, {0.5 * p.foot_length, -p.foot_height});
        k.pivot[j0] = k.hip;
        k.pivot[j0 + 1] = k.knee[side];
        k.pivot[j0 + 2] = k.ankle[side];
    }

    // centripetal terms: each chain segment rotates rigidly at its absolute
    // rate, so the qdd = 0 acceleration of a point is -sum omega^2 * segment.
    const double wt = s.qd[2];
    const Vec2 seg_t = k.hip - base;
    const Vec2 a0_hip = -wt * wt * seg_t;
    k.a0[kTorso] = {0.0, 0.0};
    for (int side = 0; side < 2; ++side) {
        const int j0 = 3 + 3 * side;
        const int thigh = 1 + 3 * side, shank = 2 + 3 * side, foot = 3 + 3 * side;
        const double w1 = wt + s.qd[j0];
        const double w2 = w1 + s.qd[j0 + 1];
        const double w3 = w2 + s.qd[j0 + 2];
        const Vec2 a0_knee = a0_hip + (-w1 * w1) * (k.knee[side] - k.hip);
        const Vec2 a0_ankle = a0_knee + (-w2 * w2) * (k.ankle[side] - k.knee[side]);
        k.a0[thigh] = a0_hip + (-w1 * w1) * (k.com[thigh] - k.hip);
        k.a0[shank] = a0_knee + (-w2 * w2) * (k.com[shank] - k.knee[side]);
        k.a0[foot] = a0_ankle + (-w3 * w3) * (k.com[foot] - k.ankle[side]);
    }
    return k;
}

// velocity of a material point attached to link b
Vec2 point_velocity(const Kinematics& k, const PlanarBiped::State& s, int link, Vec2 pt) {
    Vec2 v{s.qd[0], s.qd[1]};
    v = v + s.qd[2] * rot90(pt - k.pivot[2]);
    for (int c : kPath[link]) {
        if (c < 0) break;
        v = v + s.qd[c] * rot90(pt - k.pivot[c]);
    }
    return v;
}

using Mat9 = Eigen::Matrix<double, PlanarBiped::kDof, PlanarBiped::kDof>;
using Vec9 = Eigen::Matrix<double, PlanarBiped::kDof, 1>;

Mat9 mass_matrix(const BipedParams& p, const LinkProps& lp, const Kinematics& k) {
    Mat9 M = Mat9::Zero();
    for (int b = 0; b < 7; ++b) {
        const double m = lp.mass[b];
        // rotation columns of this link's point Jacobian: (q index, vector)
        int cols[4];
        Vec2 vecs[4];
        int n = 0;
        cols[n] = 2;
        vecs[n++] = rot90(k.com[b] - k.pivot[2]);
        for (int c : kPath[b]) {
            if (c < 0) break;
            cols[n] = c;
            vecs[n++] = rot90(k.com[b] - k.pivot[c]);
        }
        M(0, 0) += m;
        M(1, 1) += m;
        for (int i = 0; i < n; ++i) {
            M(0, cols[i]) += m * vecs[i].x;
            M(1, cols[i]) += m * vecs[i].z;
            for (int j = i; j < n; ++j) {
                const double v = m * dot(vecs[i], vecs[j]);
                M(cols[i], cols[j]) += v;
                if (i != j) M(cols[j], cols[i]) += v;
            }
        }
        // angular rows: J_w has ones in col 2 and the path joints
        const double I = lp.inertia[b];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                M(cols[i], cols[j]) += I;
    }
    // mirror the translational cross terms
    for (int c = 2; c < PlanarBiped::kDof; ++c) {
        M(c, 0) = M(0, c);
        M(c, 1) = M(1, c);
    }
    return M;
}

void add_point_force(Vec9& rhs, const Kinematics& k, int link, Vec2 pt, Vec2 f) {
    rhs[0] += f.x;
    rhs[1] += f.z;
    rhs[2] += dot(rot90(pt - k.pivot[2]), f);
    for (int c : kPath[link]) {
        if (c < 0) break;
        rhs[c] += dot(rot90(pt - k.pivot[c]), f);
    }
}

struct JointGains {
    double kp, kd, tau_max;
};

JointGains gains_for(const BipedParams& p, int joint_in_leg) {
    switch (joint_in_leg) {
        case 0: return {p.hip_kp, p.hip_kd, p.hip_tau_max};
        case 1: return {p.knee_kp, p.knee_kd, p.knee_tau_max};
        default: return {p.ankle_kp, p.ankle_kd, p.ankle_tau_max};
    }
}

} // namespace

std::array<double, 2> mass_center(std::span<const MassPoint> points) {
    double m = 0.0, mx = 0.0, mz = 0.0;
    for (const auto& p : points) {
        m += p.mass;
        mx += p.mass * p.x;
        mz += p.mass * p.z;
    }
    return {mx / m, mz / m};
}

PlantContract biped_contract(const std::array<double, kEffectorCount>& stand_pose) {
    PlantContract c;
    c.channels = {
        {"pitch", 0.5, 0.0, false},
        {"pitch_rate", 2.0, 0.0, false},
        {"com_vx", 1.0, 0.0, false},
        {"com_vz", 1.0, 0.0, false},
        {"q_hipL", 1.0, stand_pose[0], false},
        {"q_kneeL", 1.0, stand_pose[1], false},
        {"q_ankleL", 1.0, stand_pose[2], false},
        {"q_hipR", 1.0, stand_pose[3], false},
        {"q_kneeR", 1.0, stand_pose[4], false},
        {"q_ankleR", 1.0, stand_pose[5], false},
    };
    c.effectors = {"hipL", "kneeL", "ankleL", "hipR", "kneeR", "ankleR"};
    c.tick = 0.01;
    return c;
}

PlanarBiped::PlanarBiped(const BipedParams& p) : params_(p) {}

void PlanarBiped::place_standing(const std::array<double, kEffectorCount>& stand_pose,
                                 double stance_offset) {
    state_ = State{};
    for (int j = 0; j < kEffectorCount; ++j) state_.q[3 + j] = stand_pose[j];

    // nominal hip height before any stance adjustment, feet exactly touching
    {
        Kinematics k = forward_kin(params_, state_);
        double min_z = 1e300;
        for (const auto& c : k.contact) min_z = std::min(min_z, c.z);
        nominal_hip_height_ = k.hip.z - min_z;
    }

    if (stance_offset != 0.0) {
        Kinematics k = forward_kin(params_, state_);
        const Vec2 reach = k.ankle[1] - k.hip;
        const double leg = std::sqrt(dot(reach, reach));
        const double delta = std::asin(std::clamp(0.5 * stance_offset / leg, -0.5, 0.5));
        state_.q[3] -= delta; // hipL back
        state_.q[5] += delta; // keep left foot flat
        state_.q[6] += delta; // hipR forward
        state_.q[8] -= delta;
    }

    // drop the torso so the lowest contact point touches the ground exactly
    Kinematics k = forward_kin(params_, state_);
    double min_z = 1e300;
    for (const auto& c : k.contact) min_z = std::min(min_z, c.z);
    state_.q[1] -= min_z;
    state_.t = 0.0;
}

void PlanarBiped::substep(const std::array<double, kEffectorCount>& commands) {
    const BipedParams& p = params_;
    const LinkProps lp = link_props(p);
    const Kinematics k = forward_kin(p, state_);

    Mat9 M = mass_matrix(p, lp, k);
    Vec9 rhs = Vec9::Zero();

    // gravity and centripetal bias
    for (int b = 0; b < 7; ++b) {
        const Vec2 f{-lp.mass[b] * k.a0[b].x, lp.mass[b] * (-p.gravity - k.a0[b].z)};
        add_point_force(rhs, k, b, k.com[b], f);
    }

    // spring-damper actuators with torque clamp
    for (int j = 0; j < kEffectorCount; ++j) {
        if (p.locked_joints[j]) continue;
        const JointGains g = gains_for(p, j % 3);
        const int qi = 3 + j;
        const double tau =
            std::clamp(g.kp * (commands[j] - state_.q[qi]) - g.kd * state_.qd[qi],
                       -g.tau_max, g.tau_max);
        rhs[qi] += tau;
    }

    // heel/toe penalty contact with regularized Coulomb friction
    for (int ci = 0; ci < 4; ++ci) {
        const Vec2 pt = k.contact[ci];
        const double pen = -pt.z;
        if (pen <= 0.0) continue;
        const int link = ci < 2 ? kFootL : kFootR;
        const Vec2 v = point_velocity(k, state_, link, pt);
        const double fn = std::max(0.0, p.contact_kn * pen + p.contact_cn * (-v.z));
        const double ft =
            -p.friction_mu * fn * std::clamp(v.x / p.slip_velocity, -1.0, 1.0);
        add_point_force(rhs, k, link, pt, {ft, fn});
    }

    // reduced solve over the active coordinates
    int act[kDof];
    int na = 0;
    for (int i = 0; i < 3; ++i)
        if (!p.fix_base) act[na++] = i;
    for (int j = 0; j < kEffectorCount; ++j)
        if (!p.locked_joints[j]) act[na++] = 3 + j;

    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kDof, kDof> Ma(na, na);
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kDof, 1> ba(na);
    for (int i = 0; i < na; ++i) {
        ba[i] = rhs[act[i]];
        for (int j = 0; j < na; ++j) Ma(i, j) = M(act[i], act[j]);
    }
    const auto qdd = Ma.ldlt().solve(ba).eval();

    // averaged-velocity update: exact for constant acceleration
    const double dt = p.substep_dt;
    for (int i = 0; i < na; ++i) {
        const int qi = act[i];
        const double v0 = state_.qd[qi];
        const double v1 = v0 + dt * qdd[i];
        state_.qd[qi] = v1;
        state_.q[qi] += dt * 0.5 * (v0 + v1);
    }
    state_.t += dt;
}

SensorFrame PlanarBiped::step(const std::array<double, kEffectorCount>& commands) {
    for (int i = 0; i < params_.substeps_per_tick; ++i) substep(commands);
    for (double v : state_.q)
        if (!std::isfinite(v)) throw BlowupError("non-finite plant state");
    for (double v : state_.qd)
        if (!std::isfinite(v)) throw BlowupError("non-finite plant velocity");
    return sensors();
}

SensorFrame PlanarBiped::sensors() const {
    const Kinematics k = forward_kin(params_, state_);
    const LinkProps lp = link_props(params_);
    double m = 0.0;
    Vec2 mv{0.0, 0.0};
    for (int b = 0; b < 7; ++b) {
        const Vec2 v = point_velocity(k, state_, b, k.com[b]);
        m += lp.mass[b];
        mv = mv + lp.mass[b] * v;
    }
    SensorFrame f;
    f.values[ChPitch] = state_.q[2];
    f.values[ChPitchRate] = state_.qd[2];
    f.values[ChComVx] = mv.x / m;
    f.values[ChComVz] = mv.z / m;
    for (int j = 0; j < kEffectorCount; ++j) f.values[ChJoint0 + j] = state_.q[3 + j];
    return f;
}

void PlanarBiped::apply_impulse_x(double impulse) {
    const LinkProps lp = link_props(params_);
    const Kinematics k = forward_kin(params_, state_);
    Mat9 M = mass_matrix(params_, lp, k);
    Vec9 rhs = Vec9::Zero();
    rhs[0] = impulse; // applied at the torso com: only the x row loads

    int act[kDof];
    int na = 0;
    for (int i = 0; i < 3; ++i)
        if (!params_.fix_base) act[na++] = i;
    for (int j = 0; j < kEffectorCount; ++j)
        if (!params_.locked_joints[j]) act[na++] = 3 + j;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kDof, kDof> Ma(na, na);
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kDof, 1> ba(na);
    for (int i = 0; i < na; ++i) {
        ba[i] = rhs[act[i]];
        for (int j = 0; j < na; ++j) Ma(i, j) = M(act[i], act[j]);
    }
    const auto dqd = Ma.ldlt().solve(ba).eval();
    for (int i = 0; i < na; ++i) state_.qd[act[i]] += dqd[i];
}

bool PlanarBiped::has_fallen() const {
    if (std::abs(state_.q[2]) > params_.fall_pitch) return true;
    return hip_height() < params_.fall_hip_height_frac * nominal_hip_height_;
}

double PlanarBiped::hip_height() const {
    const Kinematics k = forward_kin(params_, state_);
    return k.hip.z;
}

ComSupport PlanarBiped::com_and_support() const {
    const Kinematics k = forward_kin(params_, state_);
    const LinkProps lp = link_props(params_);
    std::array<MassPoint, 7> pts;
    for (int b = 0; b < 7; ++b) pts[b] = {lp.mass[b], k.com[b].x, k.com[b].z};
    const auto c = mass_center(pts);
    return {c[0], c[1], 0.5 * (k.com[kFootL].x + k.com[kFootR].x)};
}

double PlanarBiped::total_energy() const {
    const Kinematics k = forward_kin(params_, state_);
    const LinkProps lp = link_props(params_);
    const Mat9 M = mass_matrix(params_, lp, k);
    Vec9 qd;
    for (int i = 0; i < kDof; ++i) qd[i] = state_.qd[i];
    double e = 0.5 * qd.dot(M * qd);
    for (int b = 0; b < 7; ++b) e += lp.mass[b] * params_.gravity * k.com[b].z;
    return e;
}

std::array<LinkPose, 7> PlanarBiped::link_poses() const {
    const Kinematics k = forward_kin(params_, state_);
    std::array<LinkPose, 7> out;
    for (int b = 0; b < 7; ++b) out[b] = {k.com[b].x, k.com[b].z, k.angle[b]};
    return out;
}

PlanarBiped::State PlanarBiped::swap_legs(const State& s) {
    State o = s;
    for (int j = 0; j < 3; ++j) {
        std::swap(o.q[3 + j], o.q[6 + j]);
        std::swap(o.qd[3 + j], o.qd[6 + j]);
    }
    return o;
}

std::array<double, kEffectorCount> PlanarBiped::swap_legs(
    const std::array<double, kEffectorCount>& joints) {
    return {joints[3], joints[4], joints[5], joints[0], joints[1], joints[2]};
}

// ---------------------------------------------------------------------------
// deceptive chain
// ---------------------------------------------------------------------------

double chain_gene_reward(double g, const ChainTaskParams& p) {
    const double dw = g - p.wide_center;
    const double dn = g - p.narrow_center;
    return p.wide_height * std::exp(-dw * dw / (2.0 * p.wide_sigma * p.wide_sigma)) +
           p.narrow_height * std::exp(-dn * dn / (2.0 * p.narrow_sigma * p.narrow_sigma));
}

bool chain_gene_superior(double g, const ChainTaskParams& p) {
    const double dw = g - p.wide_center;
    const double dn = g - p.narrow_center;
    const double wide = p.wide_height * std::exp(-dw * dw / (2.0 * p.wide_sigma * p.wide_sigma));
    const double narrow =
        p.narrow_height * std::exp(-dn * dn / (2.0 * p.narrow_sigma * p.narrow_sigma));
    return narrow > wide;
}

double chain_score(const Genotype& genotype, int exposure_k, const ChainTaskParams& p) {
    if (exposure_k < 0 || exposure_k >= p.gene_count)
        throw ConfigError("chain exposure index out of range: " + std::to_string(exposure_k));
    if (genotype.chromosomes.size() < static_cast<std::size_t>(p.gene_count))
        throw StructuralError("chain genotype has too few chromosomes");
    double score = 0.0;
    for (int i = 0; i <= exposure_k; ++i) {
        const auto& c = genotype.chromosomes[i];
        if (c.weights.empty())
            throw StructuralError("chain chromosome has no weights");
        score += chain_gene_reward(c.weights[0], p);
    }
    return score;
}

std::vector<ChromosomeShape> chain_shapes(const ChainTaskParams& p) {
    return std::vector<ChromosomeShape>(kChromosomeCount,
                                        ChromosomeShape{"chain", p.chromosome_length});
}

} // namespace stride
