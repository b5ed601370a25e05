#include "padtwin/battery.hpp"

#include <algorithm>
#include <cmath>

namespace padtwin {

double ocv(double soc) {
    if (!(soc >= 0.0 && soc <= 1.0)) {
        throw std::domain_error("state of charge must be in [0, 1]");
    }
    if (soc >= 0.1) {
        return 3.7 + (soc - 0.1) / 0.9 * 0.5;
    }
    return 3.3 + soc / 0.1 * 0.4;
}

BatteryState battery_at(double soc, const BatteryParams& params) {
    BatteryState s;
    s.soc = std::clamp(soc, 0.0, 1.0);
    s.charge = s.soc * params.capacity_mah;
    s.terminal_voltage = ocv(s.soc);
    s.depleted = s.charge <= 0.0;
    return s;
}

BatteryState draw(const BatteryState& state, double current, double dt, const BatteryParams& params) {
    if (!(current >= 0.0)) {
        throw std::domain_error("draw current must be non-negative");
    }
    if (!(dt > 0.0)) {
        throw std::domain_error("dt must be positive");
    }
    BatteryState next = state;
    next.overcurrent = current > params.max_current;
    const double served = next.overcurrent ? params.quiescent_current : current;

    next.charge = state.charge - served * dt / 3600.0 * 1000.0;
    if (next.charge <= 0.0) {
        next.charge = 0.0;
        next.depleted = true;
    }
    next.soc = next.charge / params.capacity_mah;
    next.current = next.depleted ? 0.0 : served;
    next.terminal_voltage = std::clamp(ocv(next.soc) - next.current * params.internal_resistance,
                                       kMinTerminalVoltage, kMaxTerminalVoltage);
    return next;
}

double loaded_voltage(const BatteryState& state, double load_conductance, const BatteryParams& params) {
    if (state.depleted) {
        return 0.0;
    }
    const double r = params.internal_resistance;
    // V = ocv - (V * G + I_q) * R
    const double v = (ocv(state.soc) - params.quiescent_current * r) / (1.0 + r * load_conductance);
    return std::clamp(v, kMinTerminalVoltage, kMaxTerminalVoltage);
}

}  // namespace padtwin
