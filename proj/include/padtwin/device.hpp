#pragma once

// One simulated heating pad: plant, cell, thermistors and firmware behind a
// byte-stream link. Used by the scenario harness and by the bridge service.

#include "padtwin/battery.hpp"
#include "padtwin/firmware.hpp"
#include "padtwin/physics.hpp"
#include "padtwin/plant.hpp"
#include "padtwin/protocol.hpp"
#include "padtwin/trace.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace padtwin {

struct DeviceConfig {
    PlantParams plant;
    BatteryParams battery;
    firmware::FirmwareConfig firmware;
    double initial_soc = 1.0;
    double ambient = 30.0;
    std::uint64_t seed = 1;
};

struct TickOutput {
    TraceRow row;
    std::vector<protocol::Message> outbox;
    protocol::Bytes to_app;  // empty while the link is down
};

class Device {
public:
    static constexpr double kPlantDt = 0.1;  // s
    static constexpr int kSubsteps = 5;      // plant steps per control tick

    // Throws std::invalid_argument on invalid parameters or limits.
    explicit Device(const DeviceConfig& config);

    // Taking the link down discards any partial frame and undelivered commands.
    void set_link(bool up);
    bool link() const { return link_; }

    // App-to-device bytes. Dropped while the link is down; complete frames are
    // handed to the firmware on the next tick.
    void receive(std::span<const std::uint8_t> bytes);

    // Replaces the fault on fault.zone; kind None clears it.
    void inject(const SensorFault& fault);
    void set_ambient(double celsius);

    // Samples the thermistors and runs one firmware tick on the commands
    // received since the previous tick. Duties hold until the next tick.
    TickOutput control_tick();

    // Advances the plant and cell by kPlantDt under the current duties.
    void substep();

    double time() const { return physics_.plant.time; }
    const PlantState& plant() const { return physics_.plant; }
    const BatteryState& battery() const { return physics_.battery; }
    const firmware::FirmwareSnapshot& snapshot() const { return snapshot_; }
    const protocol::DecodeStats& decode_stats() const { return decoder_.stats(); }
    const DeviceConfig& config() const { return config_; }

private:
    DeviceConfig config_;
    PhysicsState physics_;
    firmware::FirmwareSnapshot snapshot_;
    std::array<SensorFault, kZones> faults_{};
    NoiseRng rng_;
    protocol::StreamDecoder decoder_;
    std::vector<protocol::Message> inbox_;
    bool link_ = false;
    std::uint64_t steps_ = 0;
};

}  // namespace padtwin
