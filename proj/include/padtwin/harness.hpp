#pragma once

// Deterministic co-simulation of a scenario: plant substeps at 0.1 s, firmware
// ticks at 0.5 s, app commands framed through the wire codec.

#include "padtwin/battery.hpp"
#include "padtwin/device.hpp"
#include "padtwin/firmware.hpp"
#include "padtwin/plant.hpp"
#include "padtwin/scenario.hpp"
#include "padtwin/trace.hpp"

#include <cstdint>
#include <functional>

namespace padtwin {

struct RunOptions {
    BatteryParams battery;
    firmware::SafetyLimits limits;
    // Called after every control tick with the device state and the new row.
    std::function<void(const Device&, const TickOutput&)> observer;
};

// One row per control tick, round(duration * 2) rows. Events take effect at
// the first plant step whose time is at or after their timestamp; events with
// equal timestamps apply in file order. App commands reach the firmware on the
// next tick and are lost while the link is down.
Trace run(const Scenario& scenario, const PlantParams& params, std::uint64_t seed,
          const RunOptions& options = {});

// Anomalies in the trace that the scenario did not list in `expect`.
std::vector<firmware::AnomalyCode> unexpected_anomalies(const Scenario& scenario, const Trace& trace);

}  // namespace padtwin
