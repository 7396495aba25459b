#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stride/genome.hpp"
#include "stride/plant.hpp"

namespace stride {

// ---------------------------------------------------------------------------
// Topologies. Single hidden layer, tanh hidden units with a bias input,
// linear outputs scaled by output_gain. A network's output vector is
// expanded through output_map so effector groups share one output.
//
// Canonical chromosome layout (required for genotype file portability):
//   W_in  row-major, hidden x (inputs + 1), bias in the last column,
//   then W_out row-major, outputs x hidden.
// ---------------------------------------------------------------------------

enum class TopologyKind { Balance, StepOff, Walk };

std::string topology_id(TopologyKind k);

struct TopologySpec {
    TopologyKind kind = TopologyKind::Walk;
    std::vector<int> input_channels;
    int hidden_count = 8;
    std::vector<std::vector<int>> output_map; // groups of effector indices
    double output_gain = 0.3;                 // rad

    int input_count() const { return static_cast<int>(input_channels.size()); }
    int output_count() const { return static_cast<int>(output_map.size()); }
    std::size_t weight_count() const {
        return static_cast<std::size_t>(input_count() + 1) * hidden_count +
               static_cast<std::size_t>(hidden_count) * output_count();
    }
};

// Bilateral mirroring: channels to negate (none on the planar plant) and the
// left/right channel and effector pairings. Pairings are involutions.
struct MirrorSpec {
    std::vector<int> negated_channels;
    std::vector<std::pair<int, int>> swapped_channels;
    std::vector<std::pair<int, int>> swapped_effectors;
};

SensorFrame mirror_frame(const SensorFrame& f, const MirrorSpec& m);

// Immutable view of one chromosome as a runnable network.
class Network {
public:
    Network(const TopologySpec& spec, std::span<const double> weights);

    // Per-effector deviation vector (rad). Inputs are normalized through the
    // contract's channel registry.
    std::array<double, kEffectorCount> forward(const SensorFrame& f,
                                               const PlantContract& contract) const;

    const TopologySpec& spec() const { return *spec_; }

private:
    const TopologySpec* spec_;
    std::span<const double> weights_;
};

// walk-left evaluation: mirror the frame, run the walk-right network, swap
// the left/right effector outputs.
std::array<double, kEffectorCount> mirror_apply(const Network& net, const MirrorSpec& m,
                                                const SensorFrame& f,
                                                const PlantContract& contract);

// ---------------------------------------------------------------------------
// 34-slice controller schedule.
// ---------------------------------------------------------------------------

enum class SliceMode { StepOff, WalkRight, WalkLeft };

struct SliceEntry {
    int net;
    SliceMode mode;
};

struct ScheduleConfig {
    int step_off_count = 4;
    int accel_count = 6;
    int middle_count = 6;
    int middle_reuse = 3; // alternating walk-left / walk-right / walk-left
    int decel_count = 6;
    double slice_duration = 0.1;
    double tick_duration = 0.01;
    double crossfade_duration = 0.05;
    int step_off_hidden = 8;
    int walk_hidden = 8;
    int balance_hidden = 5;
    double output_gain = 0.3;
};

struct ControllerSchedule {
    std::vector<SliceEntry> slices; // 34 entries
    int network_count = 0;          // 22
    double slice_duration = 0.1;
    double tick_duration = 0.01;
    double crossfade_duration = 0.05;
    TopologySpec step_off, walk, balance;
    MirrorSpec mirror;

    int slice_count() const { return static_cast<int>(slices.size()); }
    int ticks_per_slice() const;
    double controlled_duration() const { return slice_count() * slice_duration; }
    const TopologySpec& spec_for(SliceMode m) const {
        return m == SliceMode::StepOff ? step_off : walk;
    }
    // expected chromosome shapes by net index (0..21)
    std::vector<ChromosomeShape> genotype_shapes() const;
    std::vector<ChromosomeShape> balance_shapes() const;
};

// Builds the slice map (step-off block, accelerating walk-right block, the
// reused middle block alternating left/right/left, decelerating walk-right
// block) and validates the arithmetic: 34 slices, 22 networks.
ControllerSchedule build_schedule(const ScheduleConfig& cfg, const PlantContract& contract);

// ---------------------------------------------------------------------------
// Cross-fade and per-tick command assembly.
// ---------------------------------------------------------------------------

enum class TrialPhase { Controlled, Inhibited, Balance };

struct BlendEntry {
    int net = -1; // -1 = the balance network
    SliceMode mode = SliceMode::WalkRight;
    double weight = 0.0;
};

struct Blend {
    std::array<BlendEntry, 2> entry{};
    int count = 0;
};

// Blend weights at an integer control tick of the walk, honoring the
// truncation of the controlled window at last_slice. Weights sum to 1.
// The first 50 ms of slice 0 fade in from the balance network; when the
// timeline hands over to balance control afterwards, the last 50 ms of the
// final controlled slice fade out to it.
Blend blend_at_tick(const ControllerSchedule& s, int tick, int last_slice,
                    bool balance_follows);

struct ControlDebug {
    Blend blend;
    std::array<double, kEffectorCount> deviation{};
};

// One controller evaluation. `tick` indexes 10 ms control steps from walk
// start; `suggested` and `stand_pose` are per-effector targets.
//   controlled: suggested + cross-faded network deviations
//   inhibited:  suggested, exactly
//   balance:    stand pose + balance network deviation
std::array<double, kEffectorCount> control_tick(
    const ControllerSchedule& sched, const Genotype& genotype, const Network& balance_net,
    int tick, TrialPhase phase, int last_slice, bool balance_follows,
    const SensorFrame& sensors, const std::array<double, kEffectorCount>& suggested,
    const std::array<double, kEffectorCount>& stand_pose, const PlantContract& contract,
    ControlDebug* debug = nullptr);

MirrorSpec biped_mirror_spec();

} // namespace stride
