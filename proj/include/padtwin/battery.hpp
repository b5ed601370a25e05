#pragma once

// Coulomb-counting model of the single LiPo cell.

#include <stdexcept>

namespace padtwin {

struct BatteryParams {
    double capacity_mah = 2200.0;
    double internal_resistance = 0.050;  // ohm
    double max_current = 5.0;            // A, protection limit
    double quiescent_current = 0.010;    // A, controller and radio

    bool operator==(const BatteryParams&) const = default;
};

struct BatteryState {
    double charge = 2200.0;          // mAh remaining
    double terminal_voltage = 4.2;   // V
    double current = 0.0;            // A, most recent draw
    double soc = 1.0;                // charge / capacity
    bool depleted = false;
    bool overcurrent = false;        // set by the most recent draw()

    bool operator==(const BatteryState&) const = default;
};

inline constexpr double kMinTerminalVoltage = 3.3;
inline constexpr double kMaxTerminalVoltage = 4.2;

// Open-circuit voltage: piecewise linear through (0, 3.3), (0.1, 3.7), (1, 4.2).
double ocv(double soc);

BatteryState battery_at(double soc, const BatteryParams& params = {});

// Removes current*dt of charge. A request above max_current is not served:
// the returned state has overcurrent set and only the quiescent draw applied,
// and the caller must drop the load.
BatteryState draw(const BatteryState& state, double current, double dt,
                  const BatteryParams& params = {});

// Terminal voltage seen by a resistive load of the given conductance (S) in
// parallel with the quiescent draw. Zero once the cell is depleted.
double loaded_voltage(const BatteryState& state, double load_conductance,
                      const BatteryParams& params = {});

}  // namespace padtwin
