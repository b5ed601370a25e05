#pragma once

// Electrical coupling of the heater zones to the cell for one plant step.

#include "padtwin/battery.hpp"
#include "padtwin/plant.hpp"

namespace padtwin {

struct PhysicsState {
    PlantState plant;
    BatteryState battery;
};

// Load conductance of the heater for the given duties (S).
double heater_conductance(const ZoneDuty& duty, const PlantParams& params);

// Voltage available to the heater right now; zero when the cell is depleted.
double heater_voltage(const BatteryState& battery, const ZoneDuty& duty, const PlantParams& params,
                      const BatteryParams& battery_params);

// Total electrical heating power for the given duties (W).
double heater_power(const BatteryState& battery, const ZoneDuty& duty, const PlantParams& params,
                    const BatteryParams& battery_params);

// Draws the heater and quiescent current from the cell for dt and steps the
// thermal network with the resulting voltage. An overcurrent draw is not
// served, so the heater sees zero voltage for that step.
PhysicsState advance_physics(const PhysicsState& state, const ZoneDuty& duty, const PlantParams& params,
                             const BatteryParams& battery_params, double dt);

}  // namespace padtwin
