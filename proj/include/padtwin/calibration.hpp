#pragma once

// Fits the thermal network to the measured heating curve.
//
// The network topology and the ratios between its elements are fixed; three
// scalars are searched by coordinate descent:
//   - total thermal resistance from one coil to ambient (sets the full-power peak)
//   - share of that resistance between coil and skin (sets the coil-skin offset)
//   - heat-capacity scale (sets the rise time)

#include "padtwin/battery.hpp"
#include "padtwin/params_io.hpp"
#include "padtwin/plant.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>

namespace padtwin {

struct CalibrationTargets {
    double rise_s = 90.0;
    double rise_from = 30.0;          // C, initial temperature of every node
    double rise_to = 55.0;            // C
    double coil_skin_offset = 10.0;   // C, at steady regulation on rise_to
    double ambient = 30.0;            // C
    double full_power_peak = 55.3;    // C, open-loop peak from a full cell
    double coil_resistance = 2.7;     // ohm per zone, held fixed
    double sensor_noise_sd = 0.1;     // C, copied through

    double rise_tolerance = 0.05;     // fraction of rise_s
    double offset_tolerance = 1.0;    // C
    double peak_tolerance = 0.1;      // C
    int max_evaluations = 3000;
};

// Throws std::invalid_argument when the targets are physically inconsistent.
void validate(const CalibrationTargets& targets);

CalibrationTargets calibration_targets_from(const KeyValues& kv);
CalibrationTargets load_calibration_targets(const std::filesystem::path& path);

struct HeatupMeasurement {
    std::optional<double> rise_time;  // first time any coil reaches rise_to
    double peak = 0.0;                // highest coil temperature seen
};

// Open-loop run with every zone at full duty from a full cell.
HeatupMeasurement measure_full_power(const PlantParams& params, const BatteryParams& battery,
                                     double start_temp, double rise_to, double horizon);

// Regulates the true coil temperature at setpoint from a fixed 4.2 V supply
// and returns the mean coil-minus-skin difference over the last third of the run.
double measure_steady_offset(const PlantParams& params, double setpoint, double horizon = 1800.0);

struct CalibrationReport {
    PlantParams params;
    std::optional<double> rise_time;
    double peak = 0.0;
    double steady_offset = 0.0;
    int evaluations = 0;
    bool converged = false;
};

class CalibrationError : public std::runtime_error {
public:
    CalibrationError(const std::string& what, CalibrationReport best)
        : std::runtime_error(what), best_(std::move(best)) {}
    const CalibrationReport& best() const noexcept { return best_; }

private:
    CalibrationReport best_;
};

// Throws CalibrationError with the best parameters found if the budget runs out.
CalibrationReport calibrate(const CalibrationTargets& targets,
                            const BatteryParams& battery = BatteryParams{});

}  // namespace padtwin
