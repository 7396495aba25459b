#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stride/genome.hpp"

namespace stride {

// ---------------------------------------------------------------------------
// Black-box plant contract: ordered effector and sensor registries shared by
// the controller side. Commands are absolute joint target angles (rad).
// ---------------------------------------------------------------------------

inline constexpr int kEffectorCount = 6; // hipL kneeL ankleL hipR kneeR ankleR
inline constexpr int kChannelCount = 10;

enum Channel : int {
    ChPitch = 0,
    ChPitchRate = 1,
    ChComVx = 2,
    ChComVz = 3,
    ChJoint0 = 4, // +0..5 = hipL kneeL ankleL hipR kneeR ankleR
};

struct ChannelInfo {
    std::string name;
    double norm_scale = 1.0;  // normalized = (value - norm_offset) / norm_scale
    double norm_offset = 0.0;
    bool lateral = false;     // sign-flipped under mirroring (none on this plant)
};

struct PlantContract {
    std::vector<ChannelInfo> channels;
    std::vector<std::string> effectors;
    double tick = 0.01;
};

// Registry for the planar biped. Joint channels are normalized about the
// standing pose so an upright robot reads all-zero.
PlantContract biped_contract(const std::array<double, kEffectorCount>& stand_pose);

struct SensorFrame {
    std::array<double, kChannelCount> values{};
    double operator[](int i) const { return values[i]; }
};

// ---------------------------------------------------------------------------
// Planar 7-link biped with spring-damper position-controlled joints.
// ---------------------------------------------------------------------------

struct BipedParams {
    // links: torso, 2x thigh, 2x shank, 2x foot
    double torso_mass = 20.0, torso_length = 0.6;
    double thigh_mass = 5.0, thigh_length = 0.4;
    double shank_mass = 3.0, shank_length = 0.4;
    double foot_mass = 1.0, foot_length = 0.2, foot_height = 0.05;

    // actuator spring-damper gains and torque clamps [hip, knee, ankle]
    double hip_kp = 120.0, hip_kd = 4.0, hip_tau_max = 60.0;
    double knee_kp = 120.0, knee_kd = 4.0, knee_tau_max = 60.0;
    double ankle_kp = 60.0, ankle_kd = 2.0, ankle_tau_max = 30.0;

    // ground contact at heel/toe points
    double contact_kn = 3.0e4;     // N/m
    double contact_cn = 300.0;     // N.s/m
    double friction_mu = 0.8;
    double slip_velocity = 0.01;   // m/s, Coulomb regularization scale

    double gravity = 9.81;
    double substep_dt = 0.001;
    int substeps_per_tick = 10;    // control tick = 10 ms

    // fall thresholds
    double fall_pitch = 0.9;              // rad
    double fall_hip_height_frac = 0.45;   // fraction of nominal hip height

    // test-harness knobs: freeze the floating base and/or weld joints
    bool fix_base = false;
    std::array<bool, kEffectorCount> locked_joints{};
};

// Initial-condition randomization for one trial.
struct JitterSpec {
    double impulse_min = 0.5;       // N.s
    double impulse_max = 3.0;
    double stance_halfwidth = 0.03; // m, fore-aft foot offset
    double settle_duration = 2.0;   // s, unscored settle under balance control
    double impulse_time_min = 0.4;  // s into the settle / balance window
    double impulse_time_max = 1.4;

    bool disabled() const {
        return impulse_max <= 0.0 && stance_halfwidth <= 0.0;
    }
};

struct LinkPose {
    double x, z, angle;
};

struct ComSupport {
    double com_x, com_z, midfeet_x;
};

// Mass-weighted planar center of mass.
struct MassPoint {
    double mass, x, z;
};
std::array<double, 2> mass_center(std::span<const MassPoint> points);

class PlanarBiped {
public:
    // generalized coordinates: [x, z, pitch, hipL, kneeL, ankleL, hipR, kneeR, ankleR]
    static constexpr int kDof = 9;

    struct State {
        std::array<double, kDof> q{};
        std::array<double, kDof> qd{};
        double t = 0.0;
    };

    explicit PlanarBiped(const BipedParams& p);

    // Stand at the origin with flat feet; feet displaced fore/aft by
    // +-stance_offset/2 (right forward for positive offset). Velocities zero.
    void place_standing(const std::array<double, kEffectorCount>& stand_pose,
                        double stance_offset);

    // Advance one control tick (substeps_per_tick substeps, zero-order-hold
    // commands) and return the post-step sensor frame. Throws BlowupError if
    // the state goes non-finite.
    SensorFrame step(const std::array<double, kEffectorCount>& commands);

    void substep(const std::array<double, kEffectorCount>& commands);

    SensorFrame sensors() const;

    // Horizontal impulse (N.s) applied at the torso center of mass.
    void apply_impulse_x(double impulse);

    bool has_fallen() const;
    ComSupport com_and_support() const;

    double pitch() const { return state_.q[2]; }
    double hip_height() const;
    double nominal_hip_height() const { return nominal_hip_height_; }
    double time() const { return state_.t; }

    // Kinetic plus gravitational potential energy (no contact term; meant
    // for airborne conservation checks).
    double total_energy() const;

    // Largest position-level articulation gap (identically zero in reduced
    // coordinates; kept as the contract probe).
    double joint_gap() const { return 0.0; }

    // order: torso, thighL, shankL, footL, thighR, shankR, footR
    std::array<LinkPose, 7> link_poses() const;

    const State& state() const { return state_; }
    void set_state(const State& s) { state_ = s; }
    const BipedParams& params() const { return params_; }

    // Left/right relabeling (the planar analogue of the sagittal mirror).
    static State swap_legs(const State& s);
    static std::array<double, kEffectorCount> swap_legs(
        const std::array<double, kEffectorCount>& joints);

private:
    BipedParams params_;
    State state_;
    double nominal_hip_height_ = 0.0;
};

// ---------------------------------------------------------------------------
// Synthetic deceptive-chain task: one gene per deme, each gene scored by a
// wide inferior hill and a narrow superior hill. Genes beyond the exposure
// index contribute nothing, which makes the fitness clipping exact.
// ---------------------------------------------------------------------------

struct ChainTaskParams {
    std::size_t chromosome_length = 4; // gene = first weight of each chromosome
    int gene_count = 19;
    double wide_center = -1.0, wide_sigma = 0.5, wide_height = 0.8;
    double narrow_center = 1.0, narrow_sigma = 0.05, narrow_height = 1.0;
};

double chain_gene_reward(double g, const ChainTaskParams& p);

// Sum of gene rewards for genes 0..exposure_k. Throws ConfigError for
// exposure_k outside [0, gene_count-1].
double chain_score(const Genotype& genotype, int exposure_k, const ChainTaskParams& p);

// True when the narrow hill's contribution dominates the wide hill's at g.
bool chain_gene_superior(double g, const ChainTaskParams& p);

std::vector<ChromosomeShape> chain_shapes(const ChainTaskParams& p);

} // namespace stride
