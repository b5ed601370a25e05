#include "padtwin/device.hpp"

#include <stdexcept>

namespace padtwin {

Device::Device(const DeviceConfig& config)
    : config_(config),
      physics_{equilibrium_state(config.plant, config.ambient), battery_at(config.initial_soc, config.battery)},
      rng_(config.seed) {
    validate(config_.plant);
    firmware::validate(config_.firmware.limits);
    if (config_.firmware.secret.empty() || config_.firmware.secret.size() > protocol::kMaxSecret) {
        throw std::invalid_argument("device secret must be 1..32 bytes");
    }
    for (std::size_t z = 0; z < kZones; ++z) {
        faults_[z].zone = z;
    }
    snapshot_.battery_soc = physics_.battery.soc;
}

void Device::set_link(bool up) {
    if (link_ && !up) {
        decoder_.discard_partial();
        inbox_.clear();
    }
    link_ = up;
}

void Device::receive(std::span<const std::uint8_t> bytes) {
    if (!link_) {
        return;
    }
    for (auto& msg : decoder_.feed(bytes)) {
        inbox_.push_back(std::move(msg));
    }
}

void Device::inject(const SensorFault& fault) {
    if (fault.zone >= kZones) {
        throw std::out_of_range("fault zone out of range");
    }
    faults_[fault.zone] = fault;
}

void Device::set_ambient(double celsius) { physics_.plant.ambient_temp = celsius; }

TickOutput Device::control_tick() {
    ZoneTemps readings{};
    for (std::size_t z = 0; z < kZones; ++z) {
        readings[z] = thermistor_read(physics_.plant, z, faults_[z], config_.plant, rng_);
    }

    auto result = firmware::tick(snapshot_, config_.firmware, readings, physics_.battery, link_, inbox_);
    inbox_.clear();
    snapshot_ = std::move(result.snapshot);

    TickOutput out;
    TraceRow& row = out.row;
    row.time = physics_.plant.time;
    row.coil = physics_.plant.zone_coil_temp;
    row.reading = readings;
    row.skin = physics_.plant.skin_temp;
    for (std::size_t z = 0; z < kZones; ++z) {
        if (snapshot_.zone_duty[z] > 0.0) {
            row.duty_bits |= static_cast<std::uint8_t>(1u << z);
        }
    }
    row.power = heater_power(physics_.battery, snapshot_.zone_duty, config_.plant, config_.battery);
    row.soc = physics_.battery.soc;
    row.voltage = physics_.battery.terminal_voltage;
    row.mode = firmware::mode_label(snapshot_.mode);
    for (const auto& msg : result.outbox) {
        if (const auto* a = std::get_if<protocol::Anomaly>(&msg)) {
            row.anomalies.push_back(static_cast<firmware::AnomalyCode>(a->code));
        }
        if (link_) {
            protocol::encode_into(msg, out.to_app);
        }
    }
    out.outbox = std::move(result.outbox);
    return out;
}

void Device::substep() {
    physics_ = advance_physics(physics_, snapshot_.zone_duty, config_.plant, config_.battery, kPlantDt);
    // Keep the clock on the step grid instead of accumulating rounding error.
    physics_.plant.time = static_cast<double>(++steps_) * kPlantDt;
}

}  // namespace padtwin
