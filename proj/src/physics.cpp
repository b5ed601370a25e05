#include "padtwin/physics.hpp"

namespace padtwin {

double heater_conductance(const ZoneDuty& duty, const PlantParams& params) {
    double g = 0.0;
    for (double d : duty) {
        g += d / params.coil_resistance;
    }
    return g;
}

double heater_voltage(const BatteryState& battery, const ZoneDuty& duty, const PlantParams& params,
                      const BatteryParams& battery_params) {
    return loaded_voltage(battery, heater_conductance(duty, params), battery_params);
}

double heater_power(const BatteryState& battery, const ZoneDuty& duty, const PlantParams& params,
                    const BatteryParams& battery_params) {
    const double v = heater_voltage(battery, duty, params, battery_params);
    double p = 0.0;
    for (double d : duty) {
        p += electrical_power(d, v, params.coil_resistance);
    }
    return p;
}

PhysicsState advance_physics(const PhysicsState& state, const ZoneDuty& duty, const PlantParams& params,
                             const BatteryParams& battery_params, double dt) {
    const double g = heater_conductance(duty, params);
    double v = loaded_voltage(state.battery, g, battery_params);
    const double current = state.battery.depleted ? 0.0 : g * v + battery_params.quiescent_current;

    PhysicsState next;
    next.battery = draw(state.battery, current, dt, battery_params);
    if (next.battery.overcurrent || state.battery.depleted) {
        v = 0.0;
    }
    next.plant = step(state.plant, params, duty, v, dt);
    return next;
}

}  // namespace padtwin
