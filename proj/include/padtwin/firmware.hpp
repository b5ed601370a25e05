#pragma once

// 2 Hz control and safety state machine of the heating controller.
//
// tick() is a pure function: all time comes from the caller's tick cadence and
// all I/O flows through the inbox/outbox message lists.

#include "padtwin/battery.hpp"
#include "padtwin/plant.hpp"
#include "padtwin/protocol.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace padtwin::firmware {

enum class HeatLevel : std::uint8_t { Low = 0, Medium = 1, High = 2 };

enum class AnomalyCode : std::uint8_t {
    SigmaTrip = 1,
    OverTemp = 2,
    LinkLost = 3,
    SensorOpenCircuit = 4,
    Overcurrent = 5,
    BatteryLow = 6,
    AuthFailure = 7,
};

std::string to_string(HeatLevel level);
std::string to_string(AnomalyCode code);
std::optional<HeatLevel> parse_level(std::string_view name);
std::optional<AnomalyCode> parse_anomaly(std::string_view name);

struct SafetyLimits {
    static constexpr double kStddevTrip = 2.5;   // fixed
    static constexpr double kMaxCoilCap = 55.0;  // C, fixed upper bound

    double coil_cap = kMaxCoilCap;
    // The over-temperature cutoff sits this far above the cap, beyond the
    // regulator's own off threshold at cap + hysteresis.
    double overtemp_margin = 0.75;
    double hysteresis = 0.5;
    double tick_rate = 2.0;           // Hz
    double link_timeout = 3.0;        // s
    double low_battery_soc = 0.10;
    double max_session = 8.0 * 60.0;  // s, warning only
    double coil_skin_offset = 10.0;   // C
    int max_auth_failures = 5;

    double tick_period() const { return 1.0 / tick_rate; }
    int link_timeout_ticks() const;
};

// Throws std::invalid_argument if a fixed limit was altered or a value is out of range.
void validate(const SafetyLimits& limits);

double skin_setpoint(HeatLevel level);

// Skin setpoint plus the coil-skin offset, clamped to the cap.
double coil_setpoint(HeatLevel level, const SafetyLimits& limits);

namespace mode {
struct Disconnected {
    bool operator==(const Disconnected&) const = default;
};
struct ConnectedUnauthenticated {
    bool operator==(const ConnectedUnauthenticated&) const = default;
};
struct Idle {
    bool operator==(const Idle&) const = default;
};
struct Heating {
    HeatLevel level = HeatLevel::Medium;
    double elapsed = 0.0;                  // s
    std::optional<double> timer_remaining; // s
    bool operator==(const Heating&) const = default;
};
struct SafetyLatched {
    AnomalyCode trip = AnomalyCode::SigmaTrip;
    bool operator==(const SafetyLatched&) const = default;
};
struct BatteryLow {
    bool operator==(const BatteryLow&) const = default;
};
}  // namespace mode

using FirmwareMode = std::variant<mode::Disconnected, mode::ConnectedUnauthenticated, mode::Idle,
                                  mode::Heating, mode::SafetyLatched, mode::BatteryLow>;

// Wire code of a mode (low nibble of Telemetry.mode).
std::uint8_t mode_code(const FirmwareMode& mode);
// Human-readable label used in traces, e.g. "Heating:High" or "SafetyLatched:SigmaTrip".
std::string mode_label(const FirmwareMode& mode);

struct FirmwareSnapshot {
    FirmwareMode mode = mode::Disconnected{};
    ZoneDuty zone_duty{};
    ZoneTemps last_readings{};
    double battery_soc = 1.0;
    std::vector<AnomalyCode> anomaly_queue;
    std::uint64_t tick_count = 0;

    // State that outlives individual modes.
    HeatLevel selected_level = HeatLevel::Medium;
    std::optional<std::uint8_t> pending_timer_min;
    std::optional<AnomalyCode> latch;  // survives link loss; cleared only by ResetLatch
    int auth_failures = 0;
    bool locked_out = false;           // until power cycle
    int link_down_ticks = 0;
    bool session_overrun = false;      // heating longer than max_session
    bool battery_low_reported = false;

    bool operator==(const FirmwareSnapshot&) const = default;
};

struct FirmwareConfig {
    SafetyLimits limits;
    std::string secret = "padtwin";
};

struct TickResult {
    FirmwareSnapshot snapshot;
    std::vector<protocol::Message> outbox;
};

TickResult tick(const FirmwareSnapshot& snapshot, const FirmwareConfig& config,
                const ZoneTemps& readings, const BatteryState& battery, bool link_ok,
                const std::vector<protocol::Message>& inbox);

// Population standard deviation of the three zone readings.
double stddev(const ZoneTemps& readings);

// Bang-bang with hysteresis: on below setpoint - h, off above setpoint + h,
// previous duty held inside the band.
double regulate(double zone_reading, double coil_setpoint, double hysteresis, double previous_duty);

// Every violated safety condition, in a fixed order:
// SigmaTrip, OverTemp, SensorOpenCircuit, LinkLost, Overcurrent, BatteryLow.
std::vector<AnomalyCode> check_safety(const ZoneTemps& readings, const SafetyLimits& limits,
                                      bool link_ok, const BatteryState& battery);

enum class AuthOutcome { Granted, Denied, LockedOut };

struct AuthDecision {
    AuthOutcome outcome = AuthOutcome::Denied;
    int failure_count = 0;
};

// Constant-time comparison; max_failures consecutive failures lock the gate.
AuthDecision authenticate(std::string_view attempt, std::string_view stored, int failure_count,
                          int max_failures = 5);

bool constant_time_equal(std::string_view a, std::string_view b);

protocol::Telemetry make_telemetry(const FirmwareSnapshot& snapshot, const SafetyLimits& limits);

}  // namespace padtwin::firmware
