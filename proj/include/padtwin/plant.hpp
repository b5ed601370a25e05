#pragma once

// Lumped-parameter thermal model of the three-zone heating pad.
//
// Per zone there are two nodes: the nichrome coil and the pad/garment stack
// directly above it. All pads feed a single skin node, which leaks to ambient.
// The skin node carries no heat capacity and is solved algebraically each step.
//
//   coil[i] --G_cp-- pad[i] --G_ps-- skin --G_loss-- ambient
//   coil[i] --G_iz-- coil[i+1]          (nearest neighbours only)

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace padtwin {

inline constexpr std::size_t kZones = 3;

using ZoneTemps = std::array<double, kZones>;
using ZoneDuty = std::array<double, kZones>;

// Thermistor reading reported by an open (disconnected) sensor.
inline constexpr double kOpenCircuitReading = -273.0;

struct PlantParams {
    double coil_heat_capacity = 0.0;           // J/C, per zone
    double coil_to_pad_conductance = 0.0;      // W/C
    double pad_heat_capacity = 0.0;            // J/C, per zone
    double pad_to_skin_conductance = 0.0;      // W/C, per zone
    double loss_to_ambient_conductance = 0.0;  // W/C, skin node to ambient
    double inter_zone_conductance = 0.0;       // W/C, between adjacent coils
    double coil_resistance = 0.0;              // ohm per zone (3 coils in parallel)
    double sensor_noise_sd = 0.1;              // C
    double ambient = 30.0;                     // C

    bool operator==(const PlantParams&) const = default;
};

// Throws std::invalid_argument naming the first violated constraint.
void validate(const PlantParams& params);

// Total heater current with every zone fully on at the given supply voltage.
double full_load_current(const PlantParams& params, double supply_voltage);

struct PlantState {
    double time = 0.0;
    ZoneTemps zone_coil_temp{};
    ZoneTemps zone_pad_temp{};
    double skin_temp = 0.0;
    double ambient_temp = 0.0;

    bool operator==(const PlantState&) const = default;
};

// Every node at ambient, time zero.
PlantState equilibrium_state(const PlantParams& params, double ambient);

enum class FaultKind : std::uint8_t { None, Stuck, Drift, OpenCircuit };

struct SensorFault {
    FaultKind kind = FaultKind::None;
    std::size_t zone = 0;
    double active_from = 0.0;  // s
    double value = 0.0;        // stuck reading (C) or drift rate (C/s)

    static SensorFault stuck(std::size_t zone, double reading, double from);
    static SensorFault drift(std::size_t zone, double rate, double from);
    static SensorFault open_circuit(std::size_t zone, double from);

    bool operator==(const SensorFault&) const = default;
};

std::string to_string(FaultKind kind);

class PlantError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Joule heating of one zone: duty * V^2 / R.
double electrical_power(double duty, double voltage, double resistance);

// Resistance of a round wire: rho * L / (pi d^2 / 4).
double nichrome_resistance(double diameter, double length, double resistivity);

// Explicit Euler step of the thermal network.
// Throws PlantError if the incoming state is not finite, and
// std::invalid_argument on out-of-range dt, duty or voltage.
PlantState step(const PlantState& state, const PlantParams& params, const ZoneDuty& zone_duty,
                double supply_voltage, double dt);

// Steady-state skin temperature for the given pad temperatures.
double skin_temperature(const ZoneTemps& pad_temps, double ambient, const PlantParams& params);

// Heat stored above ambient, summed over the capacitive nodes (J).
double stored_heat(const PlantState& state, const PlantParams& params);

using NoiseRng = std::mt19937_64;

// One thermistor sample. Always consumes exactly one normal draw from rng so
// that the noise stream does not depend on fault activity.
double thermistor_read(const PlantState& state, std::size_t zone, const SensorFault& fault,
                       const PlantParams& params, NoiseRng& rng);

}  // namespace padtwin
