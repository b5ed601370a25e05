#include "padtwin/firmware.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace padtwin::firmware {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

constexpr std::array kLevelNames{"Low", "Medium", "High"};

struct AnomalyName {
    AnomalyCode code;
    const char* name;
};
constexpr std::array kAnomalyNames{
    AnomalyName{AnomalyCode::SigmaTrip, "SigmaTrip"},
    AnomalyName{AnomalyCode::OverTemp, "OverTemp"},
    AnomalyName{AnomalyCode::LinkLost, "LinkLost"},
    AnomalyName{AnomalyCode::SensorOpenCircuit, "SensorOpenCircuit"},
    AnomalyName{AnomalyCode::Overcurrent, "Overcurrent"},
    AnomalyName{AnomalyCode::BatteryLow, "BatteryLow"},
    AnomalyName{AnomalyCode::AuthFailure, "AuthFailure"},
};

bool is_open_circuit(double reading) {
    return !std::isfinite(reading) || reading <= kOpenCircuitReading + 0.5;
}

void enqueue(FirmwareSnapshot& s, AnomalyCode code) { s.anomaly_queue.push_back(code); }

void nack(std::vector<protocol::Message>& out, protocol::NackReason reason) {
    out.emplace_back(protocol::Nack{static_cast<std::uint8_t>(reason)});
}

// Where an authenticated controller rests when it is not heating.
FirmwareMode resting_mode(const FirmwareSnapshot& s, const SafetyLimits& limits) {
    if (s.latch) {
        return mode::SafetyLatched{*s.latch};
    }
    if (s.battery_soc < limits.low_battery_soc) {
        return mode::BatteryLow{};
    }
    return mode::Idle{};
}

bool authenticated(const FirmwareMode& m) {
    return !std::holds_alternative<mode::Disconnected>(m) &&
           !std::holds_alternative<mode::ConnectedUnauthenticated>(m);
}

void handle_command(FirmwareSnapshot& s, const FirmwareConfig& cfg, const BatteryState& battery,
                    const protocol::Message& msg, std::vector<protocol::Message>& out) {
    using protocol::NackReason;
    const auto& limits = cfg.limits;

    if (std::holds_alternative<protocol::Ping>(msg)) {
        out.emplace_back(protocol::Pong{});
        return;
    }
    if (const auto* auth = std::get_if<protocol::Auth>(&msg)) {
        if (s.locked_out) {
            nack(out, NackReason::LockedOut);
            return;
        }
        const AuthDecision d =
            authenticate(auth->secret, cfg.secret, s.auth_failures, limits.max_auth_failures);
        s.auth_failures = d.failure_count;
        switch (d.outcome) {
        case AuthOutcome::Granted:
            out.emplace_back(protocol::AuthResult{true});
            if (std::holds_alternative<mode::ConnectedUnauthenticated>(s.mode)) {
                s.mode = resting_mode(s, limits);
            }
            break;
        case AuthOutcome::Denied:
            out.emplace_back(protocol::AuthResult{false});
            break;
        case AuthOutcome::LockedOut:
            out.emplace_back(protocol::AuthResult{false});
            s.locked_out = true;
            enqueue(s, AnomalyCode::AuthFailure);
            break;
        }
        return;
    }
    if (!authenticated(s.mode)) {
        nack(out, NackReason::NotAuthenticated);
        return;
    }

    std::visit(
        Overloaded{
            [&](const protocol::SetLevel& m) {
                if (m.level > 2) {
                    nack(out, NackReason::BadArgument);
                    return;
                }
                const auto level = static_cast<HeatLevel>(m.level);
                s.selected_level = level;
                if (auto* h = std::get_if<mode::Heating>(&s.mode)) {
                    h->level = level;
                }
            },
            [&](const protocol::StartHeat&) {
                if (std::holds_alternative<mode::Idle>(s.mode)) {
                    if (battery.soc < limits.low_battery_soc || battery.depleted) {
                        nack(out, NackReason::BatteryLow);
                        return;
                    }
                    mode::Heating h;
                    h.level = s.selected_level;
                    if (s.pending_timer_min) {
                        h.timer_remaining = *s.pending_timer_min * 60.0;
                        s.pending_timer_min.reset();
                    }
                    s.mode = h;
                    s.session_overrun = false;
                } else if (std::holds_alternative<mode::SafetyLatched>(s.mode)) {
                    nack(out, NackReason::Latched);
                } else if (std::holds_alternative<mode::BatteryLow>(s.mode)) {
                    nack(out, NackReason::BatteryLow);
                } else {
                    nack(out, NackReason::WrongMode);
                }
            },
            [&](const protocol::StopHeat&) {
                if (std::holds_alternative<mode::Heating>(s.mode)) {
                    s.mode = resting_mode(s, limits);
                } else {
                    nack(out, NackReason::WrongMode);
                }
            },
            [&](const protocol::SetTimer& m) {
                std::optional<std::uint8_t> minutes;
                if (m.minutes > 0) {
                    minutes = m.minutes;
                }
                if (auto* h = std::get_if<mode::Heating>(&s.mode)) {
                    h->timer_remaining.reset();
                    if (minutes) {
                        h->timer_remaining = *minutes * 60.0;
                    }
                } else if (std::holds_alternative<mode::Idle>(s.mode)) {
                    s.pending_timer_min = minutes;
                } else {
                    nack(out, NackReason::WrongMode);
                }
            },
            [&](const protocol::ResetLatch&) {
                if (std::holds_alternative<mode::SafetyLatched>(s.mode)) {
                    s.latch.reset();
                    s.mode = resting_mode(s, limits);
                } else {
                    nack(out, NackReason::WrongMode);
                }
            },
            [&](const auto&) { nack(out, NackReason::BadArgument); },
        },
        msg);
}

}  // namespace

std::string to_string(HeatLevel level) { return kLevelNames.at(static_cast<std::size_t>(level)); }

std::string to_string(AnomalyCode code) {
    for (const auto& a : kAnomalyNames) {
        if (a.code == code) {
            return a.name;
        }
    }
    return "Anomaly" + std::to_string(static_cast<int>(code));
}

std::optional<HeatLevel> parse_level(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "low") return HeatLevel::Low;
    if (lower == "medium") return HeatLevel::Medium;
    if (lower == "high") return HeatLevel::High;
    return std::nullopt;
}

std::optional<AnomalyCode> parse_anomaly(std::string_view name) {
    for (const auto& a : kAnomalyNames) {
        if (name == a.name) {
            return a.code;
        }
    }
    return std::nullopt;
}

int SafetyLimits::link_timeout_ticks() const {
    return static_cast<int>(std::ceil(link_timeout * tick_rate - 1e-9));
}

void validate(const SafetyLimits& l) {
    if (!(l.coil_cap > 0 && l.coil_cap <= SafetyLimits::kMaxCoilCap)) {
        throw std::invalid_argument("coil_cap must be in (0, 55]");
    }
    if (!(l.overtemp_margin > l.hysteresis && l.hysteresis > 0 && l.tick_rate > 0 && l.link_timeout > 0)) {
        throw std::invalid_argument("safety limits must be positive, with overtemp_margin above hysteresis");
    }
    if (!(l.low_battery_soc >= 0 && l.low_battery_soc < 1) || l.max_auth_failures < 1) {
        throw std::invalid_argument("battery threshold or auth limit out of range");
    }
}

double skin_setpoint(HeatLevel level) {
    switch (level) {
    case HeatLevel::Low: return 38.0;
    case HeatLevel::Medium: return 42.0;
    case HeatLevel::High: return 46.0;
    }
    return 38.0;
}

double coil_setpoint(HeatLevel level, const SafetyLimits& limits) {
    return std::min(skin_setpoint(level) + limits.coil_skin_offset, limits.coil_cap);
}

std::uint8_t mode_code(const FirmwareMode& m) { return static_cast<std::uint8_t>(m.index()); }

std::string mode_label(const FirmwareMode& m) {
    return std::visit(Overloaded{
                          [](const mode::Disconnected&) { return std::string("Disconnected"); },
                          [](const mode::ConnectedUnauthenticated&) {
                              return std::string("ConnectedUnauthenticated");
                          },
                          [](const mode::Idle&) { return std::string("Idle"); },
                          [](const mode::Heating& h) { return "Heating:" + to_string(h.level); },
                          [](const mode::SafetyLatched& l) { return "SafetyLatched:" + to_string(l.trip); },
                          [](const mode::BatteryLow&) { return std::string("BatteryLow"); },
                      },
                      m);
}

double stddev(const ZoneTemps& r) {
    const double mean = (r[0] + r[1] + r[2]) / 3.0;
    double acc = 0.0;
    for (double x : r) {
        acc += (x - mean) * (x - mean);
    }
    return std::sqrt(acc / 3.0);
}

double regulate(double zone_reading, double setpoint, double hysteresis, double previous_duty) {
    if (zone_reading < setpoint - hysteresis) {
        return 1.0;
    }
    if (zone_reading > setpoint + hysteresis) {
        return 0.0;
    }
    return previous_duty > 0.0 ? 1.0 : 0.0;
}

std::vector<AnomalyCode> check_safety(const ZoneTemps& readings, const SafetyLimits& limits,
                                      bool link_ok, const BatteryState& battery) {
    std::vector<AnomalyCode> trips;
    ZoneTemps sane = readings;
    bool open = false;
    for (double& r : sane) {
        if (is_open_circuit(r)) {
            open = true;
            r = kOpenCircuitReading;
        }
    }
    if (stddev(sane) > SafetyLimits::kStddevTrip) {
        trips.push_back(AnomalyCode::SigmaTrip);
    }
    const double cutoff = limits.coil_cap + limits.overtemp_margin;
    if (std::any_of(sane.begin(), sane.end(), [&](double r) { return r > cutoff; })) {
        trips.push_back(AnomalyCode::OverTemp);
    }
    if (open) {
        trips.push_back(AnomalyCode::SensorOpenCircuit);
    }
    if (!link_ok) {
        trips.push_back(AnomalyCode::LinkLost);
    }
    if (battery.overcurrent) {
        trips.push_back(AnomalyCode::Overcurrent);
    }
    if (battery.depleted) {
        trips.push_back(AnomalyCode::BatteryLow);
    }
    return trips;
}

bool constant_time_equal(std::string_view a, std::string_view b) {
    // Length is not secret; the byte comparison does not short-circuit.
    const std::size_t n = std::max(a.size(), b.size());
    unsigned diff = static_cast<unsigned>(a.size() ^ b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char x = i < a.size() ? static_cast<unsigned char>(a[i]) : 0;
        const unsigned char y = i < b.size() ? static_cast<unsigned char>(b[i]) : 0;
        diff |= static_cast<unsigned>(x ^ y);
    }
    return diff == 0;
}

AuthDecision authenticate(std::string_view attempt, std::string_view stored, int failure_count,
                          int max_failures) {
    if (failure_count >= max_failures) {
        return {AuthOutcome::LockedOut, failure_count};
    }
    if (constant_time_equal(attempt, stored)) {
        return {AuthOutcome::Granted, 0};
    }
    const int failures = failure_count + 1;
    if (failures >= max_failures) {
        return {AuthOutcome::LockedOut, failures};
    }
    return {AuthOutcome::Denied, failures};
}

protocol::Telemetry make_telemetry(const FirmwareSnapshot& s, const SafetyLimits& limits) {
    protocol::Telemetry t;
    double sum = 0.0;
    for (std::size_t i = 0; i < kZones; ++i) {
        t.zone_centi[i] = protocol::to_centi(s.last_readings[i]);
        sum += s.last_readings[i];
    }
    t.skin_centi = protocol::to_centi(sum / 3.0 - limits.coil_skin_offset);
    t.soc_percent = static_cast<std::uint8_t>(std::lround(std::clamp(s.battery_soc, 0.0, 1.0) * 100.0));
    HeatLevel level = s.selected_level;
    if (const auto* h = std::get_if<mode::Heating>(&s.mode)) {
        level = h->level;
    }
    t.mode = static_cast<std::uint8_t>(mode_code(s.mode) | (static_cast<std::uint8_t>(level) << 4));
    for (std::size_t i = 0; i < kZones; ++i) {
        if (s.zone_duty[i] > 0.0) {
            t.duty_bits |= static_cast<std::uint8_t>(1u << i);
        }
    }
    return t;
}

TickResult tick(const FirmwareSnapshot& snapshot, const FirmwareConfig& config,
                const ZoneTemps& readings, const BatteryState& battery, bool link_ok,
                const std::vector<protocol::Message>& inbox) {
    const SafetyLimits& limits = config.limits;
    const double period = limits.tick_period();

    TickResult result{snapshot, {}};
    FirmwareSnapshot& s = result.snapshot;
    auto& out = result.outbox;
    ++s.tick_count;
    s.last_readings = readings;
    s.battery_soc = battery.soc;

    // Account for the interval that just elapsed.
    if (auto* h = std::get_if<mode::Heating>(&s.mode)) {
        h->elapsed += period;
        if (h->elapsed >= limits.max_session) {
            s.session_overrun = true;
        }
        if (h->timer_remaining) {
            *h->timer_remaining -= period;
            if (*h->timer_remaining <= 1e-9) {
                s.mode = resting_mode(s, limits);
            }
        }
    }

    // Link watchdog.
    if (link_ok) {
        s.link_down_ticks = 0;
        if (std::holds_alternative<mode::Disconnected>(s.mode)) {
            s.mode = mode::ConnectedUnauthenticated{};
        }
    } else {
        ++s.link_down_ticks;
        if (s.link_down_ticks >= limits.link_timeout_ticks() &&
            !std::holds_alternative<mode::Disconnected>(s.mode)) {
            if (std::holds_alternative<mode::Heating>(s.mode)) {
                enqueue(s, AnomalyCode::LinkLost);
            }
            s.mode = mode::Disconnected{};
        }
    }

    if (link_ok) {
        for (const auto& msg : inbox) {
            handle_command(s, config, battery, msg, out);
        }
    }

    // Battery supervision.
    if (std::holds_alternative<mode::Heating>(s.mode) && battery.depleted) {
        s.mode = mode::BatteryLow{};
    } else if (std::holds_alternative<mode::Idle>(s.mode) && battery.soc < limits.low_battery_soc) {
        s.mode = mode::BatteryLow{};
    }
    if (std::holds_alternative<mode::BatteryLow>(s.mode) && !s.battery_low_reported) {
        enqueue(s, AnomalyCode::BatteryLow);
        s.battery_low_reported = true;
    }

    // Safety checks apply whenever the controller is operational.
    const bool operational =
        std::holds_alternative<mode::Idle>(s.mode) || std::holds_alternative<mode::Heating>(s.mode);
    if (operational) {
        const bool link_alive = s.link_down_ticks < limits.link_timeout_ticks();
        const auto trips = check_safety(readings, limits, link_alive, battery);
        std::optional<AnomalyCode> latch;
        for (AnomalyCode code : trips) {
            switch (code) {
            case AnomalyCode::SigmaTrip:
            case AnomalyCode::OverTemp:
            case AnomalyCode::SensorOpenCircuit:
            case AnomalyCode::Overcurrent:
                if (!latch) {
                    latch = code;
                }
                enqueue(s, code);
                break;
            default:
                break;
            }
        }
        if (latch) {
            s.latch = latch;
            s.mode = mode::SafetyLatched{*latch};
        }
    }

    if (const auto* h = std::get_if<mode::Heating>(&s.mode)) {
        const double setpoint = coil_setpoint(h->level, limits);
        for (std::size_t i = 0; i < kZones; ++i) {
            s.zone_duty[i] = regulate(readings[i], setpoint, limits.hysteresis, s.zone_duty[i]);
        }
    } else {
        s.zone_duty.fill(0.0);
    }

    if (link_ok) {
        for (AnomalyCode code : s.anomaly_queue) {
            out.emplace_back(protocol::Anomaly{static_cast<std::uint8_t>(code)});
        }
        s.anomaly_queue.clear();
    }
    out.emplace_back(make_telemetry(s, limits));
    return result;
}

}  // namespace padtwin::firmware
