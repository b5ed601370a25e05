#include "padtwin/plant.hpp"

#include <cmath>
#include <numbers>

namespace padtwin {

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

bool all_finite(const PlantState& s) {
    if (!std::isfinite(s.time) || !std::isfinite(s.skin_temp) || !std::isfinite(s.ambient_temp)) {
        return false;
    }
    for (std::size_t i = 0; i < kZones; ++i) {
        if (!std::isfinite(s.zone_coil_temp[i]) || !std::isfinite(s.zone_pad_temp[i])) {
            return false;
        }
    }
    return true;
}

}  // namespace

void validate(const PlantParams& p) {
    require(p.coil_heat_capacity > 0, "coil_heat_capacity must be positive");
    require(p.coil_to_pad_conductance > 0, "coil_to_pad_conductance must be positive");
    require(p.pad_heat_capacity > 0, "pad_heat_capacity must be positive");
    require(p.pad_to_skin_conductance > 0, "pad_to_skin_conductance must be positive");
    require(p.loss_to_ambient_conductance > 0, "loss_to_ambient_conductance must be positive");
    require(p.inter_zone_conductance > 0, "inter_zone_conductance must be positive");
    require(p.coil_resistance > 0, "coil_resistance must be positive");
    require(p.sensor_noise_sd >= 0, "sensor_noise_sd must be non-negative");
    require(std::isfinite(p.ambient), "ambient must be finite");
    require(full_load_current(p, 4.2) <= 5.0, "full-load current at 4.2 V exceeds 5 A");
}

double full_load_current(const PlantParams& params, double supply_voltage) {
    return static_cast<double>(kZones) * supply_voltage / params.coil_resistance;
}

PlantState equilibrium_state(const PlantParams& params, double ambient) {
    (void)params;
    PlantState s;
    s.zone_coil_temp.fill(ambient);
    s.zone_pad_temp.fill(ambient);
    s.skin_temp = ambient;
    s.ambient_temp = ambient;
    return s;
}

SensorFault SensorFault::stuck(std::size_t zone, double reading, double from) {
    return {FaultKind::Stuck, zone, from, reading};
}

SensorFault SensorFault::drift(std::size_t zone, double rate, double from) {
    return {FaultKind::Drift, zone, from, rate};
}

SensorFault SensorFault::open_circuit(std::size_t zone, double from) {
    return {FaultKind::OpenCircuit, zone, from, 0.0};
}

std::string to_string(FaultKind kind) {
    switch (kind) {
    case FaultKind::None: return "none";
    case FaultKind::Stuck: return "stuck";
    case FaultKind::Drift: return "drift";
    case FaultKind::OpenCircuit: return "open";
    }
    return "?";
}

double electrical_power(double duty, double voltage, double resistance) {
    if (!(resistance > 0)) {
        throw std::domain_error("coil resistance must be positive");
    }
    return duty * voltage * voltage / resistance;
}

double nichrome_resistance(double diameter, double length, double resistivity) {
    if (!(diameter > 0) || !(length > 0) || !(resistivity > 0)) {
        throw std::domain_error("wire dimensions and resistivity must be positive");
    }
    const double area = std::numbers::pi * diameter * diameter / 4.0;
    return resistivity * length / area;
}

double skin_temperature(const ZoneTemps& pad_temps, double ambient, const PlantParams& p) {
    double pad_sum = 0.0;
    for (double t : pad_temps) {
        pad_sum += t;
    }
    const double g_ps = p.pad_to_skin_conductance;
    const double g_loss = p.loss_to_ambient_conductance;
    return (g_ps * pad_sum + g_loss * ambient) / (static_cast<double>(kZones) * g_ps + g_loss);
}

double stored_heat(const PlantState& s, const PlantParams& p) {
    double q = 0.0;
    for (std::size_t i = 0; i < kZones; ++i) {
        q += p.coil_heat_capacity * (s.zone_coil_temp[i] - s.ambient_temp);
        q += p.pad_heat_capacity * (s.zone_pad_temp[i] - s.ambient_temp);
    }
    return q;
}

PlantState step(const PlantState& state, const PlantParams& p, const ZoneDuty& zone_duty,
                double supply_voltage, double dt) {
    if (!all_finite(state)) {
        throw PlantError("non-finite plant state at t=" + std::to_string(state.time));
    }
    require(dt > 0 && dt <= 0.5, "dt must be in (0, 0.5]");
    require(supply_voltage >= 0 && supply_voltage <= 4.2, "supply voltage must be in [0, 4.2]");
    for (double d : zone_duty) {
        require(d >= 0 && d <= 1, "zone duty must be in [0, 1]");
    }

    const auto& coil = state.zone_coil_temp;
    const auto& pad = state.zone_pad_temp;
    const double skin = skin_temperature(pad, state.ambient_temp, p);

    PlantState next = state;
    for (std::size_t i = 0; i < kZones; ++i) {
        const double heat_in = electrical_power(zone_duty[i], supply_voltage, p.coil_resistance);
        const double to_pad = p.coil_to_pad_conductance * (coil[i] - pad[i]);
        double to_neighbours = 0.0;
        if (i > 0) {
            to_neighbours += p.inter_zone_conductance * (coil[i] - coil[i - 1]);
        }
        if (i + 1 < kZones) {
            to_neighbours += p.inter_zone_conductance * (coil[i] - coil[i + 1]);
        }
        const double to_skin = p.pad_to_skin_conductance * (pad[i] - skin);

        next.zone_coil_temp[i] = coil[i] + dt * (heat_in - to_pad - to_neighbours) / p.coil_heat_capacity;
        next.zone_pad_temp[i] = pad[i] + dt * (to_pad - to_skin) / p.pad_heat_capacity;
    }
    next.skin_temp = skin_temperature(next.zone_pad_temp, state.ambient_temp, p);
    next.time = state.time + dt;
    return next;
}

double thermistor_read(const PlantState& state, std::size_t zone, const SensorFault& fault,
                       const PlantParams& params, NoiseRng& rng) {
    if (zone >= kZones) {
        throw std::out_of_range("zone index out of range");
    }
    std::normal_distribution<double> unit(0.0, 1.0);
    const double noise = unit(rng) * params.sensor_noise_sd;
    const double truth = state.zone_coil_temp[zone];

    const bool active = fault.kind != FaultKind::None && fault.zone == zone &&
                        state.time >= fault.active_from;
    if (!active) {
        return truth + noise;
    }
    switch (fault.kind) {
    case FaultKind::Stuck: return fault.value;
    case FaultKind::Drift: return truth + noise + fault.value * (state.time - fault.active_from);
    case FaultKind::OpenCircuit: return kOpenCircuitReading;
    case FaultKind::None: break;
    }
    return truth + noise;
}

}  // namespace padtwin
