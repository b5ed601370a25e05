#include "padtwin/calibration.hpp"

#include "padtwin/physics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace padtwin {

namespace {

constexpr double kDt = 0.1;
constexpr int kSubsteps = 5;         // plant steps per control decision
constexpr double kCoilPathShare = 1.0 / 3.0;  // of the coil-to-skin resistance
constexpr double kPadToCoilCapacity = 4.0;
constexpr double kInterZoneShare = 0.3;       // of coil-to-pad conductance
constexpr double kPeakHorizon = 600.0;

struct Shape {
    double total_resistance;  // C/W, coil to ambient, per zone
    double capacity;          // J/C, coil node
    double offset_share;      // coil-to-skin part of total_resistance
};

PlantParams build(const Shape& s, const CalibrationTargets& t) {
    const double internal = s.offset_share * s.total_resistance;
    const double r_cp = kCoilPathShare * internal;
    const double r_ps = internal - r_cp;
    const double r_loss = (1.0 - s.offset_share) * s.total_resistance;  // per-zone share

    PlantParams p;
    p.coil_heat_capacity = s.capacity;
    p.pad_heat_capacity = kPadToCoilCapacity * s.capacity;
    p.coil_to_pad_conductance = 1.0 / r_cp;
    p.pad_to_skin_conductance = 1.0 / r_ps;
    p.loss_to_ambient_conductance = static_cast<double>(kZones) / r_loss;
    p.inter_zone_conductance = kInterZoneShare * p.coil_to_pad_conductance;
    p.coil_resistance = t.coil_resistance;
    p.sensor_noise_sd = t.sensor_noise_sd;
    p.ambient = t.ambient;
    return p;
}

double max_coil(const PlantState& s) {
    return *std::max_element(s.zone_coil_temp.begin(), s.zone_coil_temp.end());
}

bool stable(const Shape& s) {
    // Explicit Euler needs dt well inside the fastest node time constant.
    const double internal = s.offset_share * s.total_resistance;
    const double g_cp = 1.0 / (kCoilPathShare * internal);
    const double rate = g_cp * (1.0 + 2.0 * kInterZoneShare) / s.capacity;
    return rate * kDt < 0.5;
}

struct Evaluation {
    CalibrationReport report;
    double cost = 0.0;
    bool within = false;
};

Evaluation evaluate(const Shape& shape, const CalibrationTargets& t, const BatteryParams& battery) {
    Evaluation e;
    e.report.params = build(shape, t);
    if (!stable(shape) || shape.offset_share <= 0.02 || shape.offset_share >= 0.98) {
        e.cost = 1e12;
        return e;
    }
    const HeatupMeasurement m = measure_full_power(e.report.params, battery, t.rise_from, t.rise_to, kPeakHorizon);
    e.report.rise_time = m.rise_time;
    e.report.peak = m.peak;
    e.report.steady_offset = measure_steady_offset(e.report.params, t.rise_to);

    const double rise_tol = t.rise_tolerance * t.rise_s;
    const double rise = m.rise_time ? *m.rise_time : kPeakHorizon + 50.0 * (t.rise_to - m.peak);
    const double d_rise = (rise - t.rise_s) / rise_tol;
    const double d_peak = (m.peak - t.full_power_peak) / t.peak_tolerance;
    const double d_offset = (e.report.steady_offset - t.coil_skin_offset) / t.offset_tolerance;
    e.cost = d_rise * d_rise + d_peak * d_peak + d_offset * d_offset;
    e.within = m.rise_time && std::abs(d_rise) <= 1.0 && std::abs(d_peak) <= 1.0 && std::abs(d_offset) <= 1.0;
    return e;
}

}  // namespace

void validate(const CalibrationTargets& t) {
    if (!(t.rise_to > t.rise_from)) {
        throw std::invalid_argument("rise_to must be above rise_from");
    }
    if (!(t.rise_s > 0 && t.coil_skin_offset > 0 && t.coil_resistance > 0)) {
        throw std::invalid_argument("rise time, offset and coil resistance must be positive");
    }
    if (!(t.full_power_peak >= t.rise_to)) {
        throw std::invalid_argument("full_power_peak must be at or above rise_to");
    }
    if (!(t.coil_skin_offset < t.rise_to - t.ambient)) {
        throw std::invalid_argument("coil_skin_offset must be smaller than the rise above ambient");
    }
    if (!(t.rise_tolerance > 0 && t.offset_tolerance > 0 && t.peak_tolerance > 0) || t.max_evaluations < 1) {
        throw std::invalid_argument("tolerances and budget must be positive");
    }
}

CalibrationTargets calibration_targets_from(const KeyValues& kv) {
    static constexpr std::array kKnown{"rise_s",          "rise_from",        "rise_to",
                                       "coil_skin_offset", "ambient",          "full_power_peak",
                                       "coil_resistance", "sensor_noise_sd",  "rise_tolerance",
                                       "offset_tolerance", "peak_tolerance",  "max_evaluations"};
    for (const auto& [key, value] : kv) {
        if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) {
            throw ConfigError("unknown calibration target '" + key + "'");
        }
    }
    CalibrationTargets t;
    t.rise_s = get_number(kv, "rise_s", t.rise_s);
    t.rise_from = get_number(kv, "rise_from", t.rise_from);
    t.rise_to = get_number(kv, "rise_to", t.rise_to);
    t.coil_skin_offset = get_number(kv, "coil_skin_offset", t.coil_skin_offset);
    t.ambient = get_number(kv, "ambient", t.ambient);
    t.full_power_peak = get_number(kv, "full_power_peak", t.full_power_peak);
    t.coil_resistance = get_number(kv, "coil_resistance", t.coil_resistance);
    t.sensor_noise_sd = get_number(kv, "sensor_noise_sd", t.sensor_noise_sd);
    t.rise_tolerance = get_number(kv, "rise_tolerance", t.rise_tolerance);
    t.offset_tolerance = get_number(kv, "offset_tolerance", t.offset_tolerance);
    t.peak_tolerance = get_number(kv, "peak_tolerance", t.peak_tolerance);
    t.max_evaluations = static_cast<int>(get_number(kv, "max_evaluations", t.max_evaluations));
    return t;
}

CalibrationTargets load_calibration_targets(const std::filesystem::path& path) {
    return calibration_targets_from(read_key_values(path));
}

HeatupMeasurement measure_full_power(const PlantParams& params, const BatteryParams& battery,
                                     double start_temp, double rise_to, double horizon) {
    PhysicsState s{equilibrium_state(params, params.ambient), battery_at(1.0, battery)};
    s.plant.zone_coil_temp.fill(start_temp);
    s.plant.zone_pad_temp.fill(start_temp);
    s.plant.skin_temp = skin_temperature(s.plant.zone_pad_temp, s.plant.ambient_temp, params);

    const ZoneDuty full{1.0, 1.0, 1.0};
    HeatupMeasurement m;
    m.peak = max_coil(s.plant);
    const long steps = std::lround(horizon / kDt);
    for (long k = 0; k < steps; ++k) {
        s = advance_physics(s, full, params, battery, kDt);
        const double hottest = max_coil(s.plant);
        if (!m.rise_time && hottest >= rise_to) {
            m.rise_time = s.plant.time;
        }
        m.peak = std::max(m.peak, hottest);
    }
    return m;
}

double measure_steady_offset(const PlantParams& params, double setpoint, double horizon) {
    PlantState s = equilibrium_state(params, params.ambient);
    ZoneDuty duty{};
    const long steps = std::lround(horizon / kDt);
    const long average_from = steps - steps / 3;
    double sum = 0.0;
    long n = 0;
    for (long k = 0; k < steps; ++k) {
        if (k % kSubsteps == 0) {
            for (std::size_t i = 0; i < kZones; ++i) {
                const double t = s.zone_coil_temp[i];
                if (t < setpoint - 0.5) {
                    duty[i] = 1.0;
                } else if (t > setpoint + 0.5) {
                    duty[i] = 0.0;
                }
            }
        }
        s = step(s, params, duty, 4.2, kDt);
        if (k >= average_from) {
            const double mean_coil = (s.zone_coil_temp[0] + s.zone_coil_temp[1] + s.zone_coil_temp[2]) / 3.0;
            sum += mean_coil - s.skin_temp;
            ++n;
        }
    }
    return sum / static_cast<double>(n);
}

CalibrationReport calibrate(const CalibrationTargets& targets, const BatteryParams& battery) {
    validate(targets);

    // Starting point: split the rise above ambient according to the requested offset.
    const double rise = targets.full_power_peak - targets.ambient;
    Shape shape{rise / 5.8, 1.25, targets.coil_skin_offset / (targets.rise_to - targets.ambient)};

    int evaluations = 0;
    Evaluation best = evaluate(shape, targets, battery);
    ++evaluations;

    // Multiplicative steps on resistance and capacity, additive on the share.
    std::array<double, 3> step{0.05, 0.2, 0.05};
    const auto perturb = [](Shape s, std::size_t axis, double delta) {
        switch (axis) {
        case 0: s.total_resistance *= std::exp(delta); break;
        case 1: s.capacity *= std::exp(delta); break;
        default: s.offset_share += delta; break;
        }
        return s;
    };

    // Keep descending well inside the tolerance band so noisy replays stay within it.
    constexpr double kGoodEnough = 0.01;
    while (best.cost > kGoodEnough && evaluations < targets.max_evaluations) {
        bool improved = false;
        for (std::size_t axis = 0; axis < step.size(); ++axis) {
            for (double sign : {1.0, -1.0}) {
                const Shape candidate = perturb(shape, axis, sign * step[axis]);
                Evaluation e = evaluate(candidate, targets, battery);
                ++evaluations;
                if (e.cost < best.cost) {
                    best = std::move(e);
                    shape = candidate;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) {
            for (double& s : step) {
                s *= 0.5;
            }
            if (step[0] < 1e-9) {
                break;
            }
        }
    }

    best.report.evaluations = evaluations;
    best.report.converged = best.within;
    if (!best.within) {
        throw CalibrationError("calibration did not reach the targets within the search budget",
                               best.report);
    }
    return best.report;
}

}  // namespace padtwin
