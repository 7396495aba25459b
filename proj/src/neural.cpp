#include "stride/neural.hpp"

#include <cmath>

#include "stride/errors.hpp"

namespace stride {

std::string topology_id(TopologyKind k) {
    switch (k) {
        case TopologyKind::Balance: return "balance";
        case TopologyKind::StepOff: return "step-off";
        case TopologyKind::Walk: return "walk";
    }
    return "?";
}

SensorFrame mirror_frame(const SensorFrame& f, const MirrorSpec& m) {
    SensorFrame out = f;
    for (int ch : m.negated_channels) out.values[ch] = -out.values[ch];
    for (auto [a, b] : m.swapped_channels) std::swap(out.values[a], out.values[b]);
    return out;
}

Network::Network(const TopologySpec& spec, std::span<const double> weights)
    : spec_(&spec), weights_(weights) {
    if (weights.size() != spec.weight_count())
        throw StructuralError("network weight count " + std::to_string(weights.size()) +
                              " does not match topology '" + topology_id(spec.kind) +
                              "' (" + std::to_string(spec.weight_count()) + ")");
}

std::array<double, kEffectorCount> Network::forward(const SensorFrame& f,
                                                    const PlantContract& contract) const {
    const TopologySpec& s = *spec_;
    const int ni = s.input_count();
    const int nh = s.hidden_count;
    const int no = s.output_count();

    std::array<double, 16> x{};
    for (int i = 0; i < ni; ++i) {
        const int ch = s.input_channels[i];
        if (ch < 0 || ch >= static_cast<int>(contract.channels.size()))
            throw StructuralError("sensor channel " + std::to_string(ch) + " not in contract");
        const ChannelInfo& info = contract.channels[ch];
        x[i] = (f.values[ch] - info.norm_offset) / info.norm_scale;
    }

    std::array<double, 32> hidden{};
    const double* win = weights_.data();
    for (int h = 0; h < nh; ++h) {
        const double* row = win + h * (ni + 1);
        double acc = row[ni]; // bias
        for (int i = 0; i < ni; ++i) acc += row[i] * x[i];
        hidden[h] = std::tanh(acc);
    }

    const double* wout = win + nh * (ni + 1);
    std::array<double, kEffectorCount> dev{};
    for (int o = 0; o < no; ++o) {
        const double* row = wout + o * nh;
        double acc = 0.0;
        for (int h = 0; h < nh; ++h) acc += row[h] * hidden[h];
        const double v = s.output_gain * acc;
        for (int e : s.output_map[o]) dev[e] = v;
    }
    return dev;
}

std::array<double, kEffectorCount> mirror_apply(const Network& net, const MirrorSpec& m,
                                                const SensorFrame& f,
                                                const PlantContract& contract) {
    auto dev = net.forward(mirror_frame(f, m), contract);
    for (auto [a, b] : m.swapped_effectors) std::swap(dev[a], dev[b]);
    return dev;
}

MirrorSpec biped_mirror_spec() {
    MirrorSpec m;
    m.negated_channels = {}; // the planar plant has no lateral channels
    m.swapped_channels = {{ChJoint0 + 0, ChJoint0 + 3},
                          {ChJoint0 + 1, ChJoint0 + 4},
                          {ChJoint0 + 2, ChJoint0 + 5}};
    m.swapped_effectors = {{0, 3}, {1, 4}, {2, 5}};
    return m;
}

int ControllerSchedule::ticks_per_slice() const {
    return static_cast<int>(std::lround(slice_duration / tick_duration));
}

std::vector<ChromosomeShape> ControllerSchedule::genotype_shapes() const {
    std::vector<ChromosomeShape> shapes(network_count);
    for (const auto& s : slices) {
        const TopologySpec& spec = spec_for(s.mode);
        shapes[s.net] = {topology_id(spec.kind), spec.weight_count()};
    }
    return shapes;
}

std::vector<ChromosomeShape> ControllerSchedule::balance_shapes() const {
    return {ChromosomeShape{topology_id(TopologyKind::Balance), balance.weight_count()}};
}

ControllerSchedule build_schedule(const ScheduleConfig& cfg, const PlantContract& contract) {
    const int nets =
        cfg.step_off_count + cfg.accel_count + cfg.middle_count + cfg.decel_count;
    const int slices = cfg.step_off_count + cfg.accel_count +
                       cfg.middle_count * cfg.middle_reuse + cfg.decel_count;
    if (nets != kChromosomeCount)
        throw ConfigError("schedule yields " + std::to_string(nets) +
                          " networks, expected 22");
    if (slices != 34)
        throw ConfigError("schedule yields " + std::to_string(slices) +
                          " slices, expected 34");
    if (cfg.slice_duration <= 0 || cfg.tick_duration <= 0 ||
        std::abs(cfg.slice_duration / cfg.tick_duration -
                 std::lround(cfg.slice_duration / cfg.tick_duration)) > 1e-9)
        throw ConfigError("slice duration must be an integer number of ticks");
    if (cfg.crossfade_duration < 0 || cfg.crossfade_duration > cfg.slice_duration)
        throw ConfigError("crossfade must fit inside a slice");

    ControllerSchedule s;
    s.slice_duration = cfg.slice_duration;
    s.tick_duration = cfg.tick_duration;
    s.crossfade_duration = cfg.crossfade_duration;
    s.network_count = nets;

    int net = 0;
    for (int i = 0; i < cfg.step_off_count; ++i)
        s.slices.push_back({net++, SliceMode::StepOff});
    for (int i = 0; i < cfg.accel_count; ++i)
        s.slices.push_back({net++, SliceMode::WalkRight});
    const int middle0 = net;
    for (int r = 0; r < cfg.middle_reuse; ++r) {
        const SliceMode mode = (r % 2 == 0) ? SliceMode::WalkLeft : SliceMode::WalkRight;
        for (int i = 0; i < cfg.middle_count; ++i)
            s.slices.push_back({middle0 + i, mode});
    }
    net += cfg.middle_count;
    for (int i = 0; i < cfg.decel_count; ++i)
        s.slices.push_back({net++, SliceMode::WalkRight});

    s.step_off = TopologySpec{TopologyKind::StepOff,
                              {ChPitch, ChPitchRate, ChComVx, ChComVz},
                              cfg.step_off_hidden,
                              {{0}, {1}, {3}, {4}, {2, 5}}, // ankles share one output
                              cfg.output_gain};
    s.walk = TopologySpec{TopologyKind::Walk,
                          {ChPitch, ChPitchRate, ChComVx, ChComVz},
                          cfg.walk_hidden,
                          {{0}, {1}, {2}, {3}, {4}, {5}},
                          cfg.output_gain};
    s.balance = TopologySpec{TopologyKind::Balance,
                             {ChPitch, ChPitchRate},
                             cfg.balance_hidden,
                             {{0}, {1}, {2}, {3}, {4}, {5}},
                             cfg.output_gain};
    s.mirror = biped_mirror_spec();

    const int nch = static_cast<int>(contract.channels.size());
    for (const TopologySpec* ts : {&s.step_off, &s.walk, &s.balance}) {
        for (int ch : ts->input_channels)
            if (ch < 0 || ch >= nch)
                throw ConfigError("topology references unknown channel " +
                                  std::to_string(ch));
        for (const auto& grp : ts->output_map)
            for (int e : grp)
                if (e < 0 || e >= static_cast<int>(contract.effectors.size()))
                    throw ConfigError("topology references unknown effector " +
                                      std::to_string(e));
    }
    for (auto [a, b] : s.mirror.swapped_channels) {
        const auto& ca = contract.channels[a];
        const auto& cb = contract.channels[b];
        if (ca.norm_scale != cb.norm_scale || ca.norm_offset != cb.norm_offset)
            throw ConfigError("mirrored channel pair " + ca.name + "/" + cb.name +
                              " must share normalization");
    }
    return s;
}

Blend blend_at_tick(const ControllerSchedule& s, int tick, int last_slice,
                    bool balance_follows) {
    const int tps = s.ticks_per_slice();
    const int fade_ticks = static_cast<int>(std::lround(s.crossfade_duration / s.tick_duration));
    const double half = 0.5 * s.crossfade_duration;
    const int slice = tick / tps;
    const int r = tick - slice * tps;

    Blend b;
    auto push = [&b](int net, SliceMode mode, double w) {
        b.entry[b.count++] = {net, mode, w};
    };
    const SliceEntry cur = s.slices[slice];

    if (slice == 0 && tick < fade_ticks) {
        // walk start: fade in from the balance network
        const double w = (tick * s.tick_duration) / s.crossfade_duration;
        push(-1, SliceMode::WalkRight, 1.0 - w);
        push(cur.net, cur.mode, w);
        return b;
    }
    const int end_fade_start = (last_slice + 1) * tps - fade_ticks;
    if (balance_follows && slice == last_slice && tick >= end_fade_start) {
        // walk end: fade out to the balance network
        const double w = ((tick - end_fade_start) * s.tick_duration) / s.crossfade_duration;
        push(cur.net, cur.mode, 1.0 - w);
        push(-1, SliceMode::WalkRight, w);
        return b;
    }
    // fade window straddles each slice boundary, half a window on each side
    if (slice > 0 && r * s.tick_duration < half) {
        const SliceEntry prev = s.slices[slice - 1];
        const double w = (r * s.tick_duration + half) / s.crossfade_duration;
        push(prev.net, prev.mode, 1.0 - w);
        push(cur.net, cur.mode, w);
        return b;
    }
    if (slice < last_slice && (tps - r) * s.tick_duration <= half) {
        const SliceEntry next = s.slices[slice + 1];
        const double w = ((r - tps) * s.tick_duration + half) / s.crossfade_duration;
        push(cur.net, cur.mode, 1.0 - w);
        push(next.net, next.mode, w);
        return b;
    }
    push(cur.net, cur.mode, 1.0);
    return b;
}

std::array<double, kEffectorCount> control_tick(
    const ControllerSchedule& sched, const Genotype& genotype, const Network& balance_net,
    int tick, TrialPhase phase, int last_slice, bool balance_follows,
    const SensorFrame& sensors, const std::array<double, kEffectorCount>& suggested,
    const std::array<double, kEffectorCount>& stand_pose, const PlantContract& contract,
    ControlDebug* debug) {
    if (phase == TrialPhase::Inhibited) return suggested;

    if (phase == TrialPhase::Balance) {
        const auto dev = balance_net.forward(sensors, contract);
        std::array<double, kEffectorCount> cmd;
        for (int e = 0; e < kEffectorCount; ++e) cmd[e] = stand_pose[e] + dev[e];
        return cmd;
    }

    const Blend blend = blend_at_tick(sched, tick, last_slice, balance_follows);
    std::array<double, kEffectorCount> cmd = suggested;
    std::array<double, kEffectorCount> dev_total{};
    for (int i = 0; i < blend.count; ++i) {
        const BlendEntry& e = blend.entry[i];
        if (e.net < 0) {
            // balance contribution blends full commands (stand pose basis)
            const auto dev = balance_net.forward(sensors, contract);
            for (int j = 0; j < kEffectorCount; ++j) {
                cmd[j] += e.weight * (stand_pose[j] - suggested[j] + dev[j]);
                dev_total[j] += e.weight * dev[j];
            }
            continue;
        }
        const TopologySpec& spec = sched.spec_for(e.mode);
        const auto& weights = genotype.chromosomes[e.net].weights;
        const Network net(spec, weights);
        const auto dev = e.mode == SliceMode::WalkLeft
                             ? mirror_apply(net, sched.mirror, sensors, contract)
                             : net.forward(sensors, contract);
        for (int j = 0; j < kEffectorCount; ++j) {
            cmd[j] += e.weight * dev[j];
            dev_total[j] += e.weight * dev[j];
        }
    }
    if (debug) {
        debug->blend = blend;
        debug->deviation = dev_total;
    }
    return cmd;
}

} // namespace stride
