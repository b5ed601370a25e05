#pragma once

// Per-tick trace rows, their CSV form, and the summary statistics computed from them.

#include "padtwin/firmware.hpp"
#include "padtwin/plant.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace padtwin {

struct TraceRow {
    double time = 0.0;       // s
    ZoneTemps coil{};        // C, plant truth
    ZoneTemps reading{};     // C, what the firmware saw
    double skin = 0.0;       // C, plant truth
    std::uint8_t duty_bits = 0;
    double power = 0.0;      // W, heater power over the coming control period
    double soc = 0.0;
    double voltage = 0.0;    // V, terminal
    std::string mode;        // firmware::mode_label
    std::vector<firmware::AnomalyCode> anomalies;  // delivered to the app this tick

    bool operator==(const TraceRow&) const = default;
};

struct Trace {
    std::vector<TraceRow> rows;
};

class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

extern const char* const kTraceHeader;

// Fixed-precision CSV; identical traces produce identical bytes.
void write_csv(std::ostream& out, const Trace& trace);
void save_csv(const std::filesystem::path& path, const Trace& trace);
std::string format_row(const TraceRow& row);

// Throws TraceError on a missing or different header, or a malformed row.
Trace read_csv(std::istream& in);
Trace load_csv(const std::filesystem::path& path);

struct TraceSummary {
    std::optional<double> rise_time;        // s, first max-coil crossing of 55 C
    std::optional<double> ripple_sd;        // C, largest per-zone sd in the settled window
    std::optional<double> settled_coil;     // C, mean coil in the settled window
    std::optional<double> settled_skin;     // C, mean plant skin in the settled window
    std::optional<double> settled_skin_estimate;  // C, mean(readings) - offset in the window
    std::optional<double> window_start;     // s
    std::optional<double> window_end;       // s
    double max_coil = 0.0;                  // C
    std::optional<double> runtime_to_empty; // s, first row with soc 0
    std::optional<double> heating_life;     // s, last row with a powered zone
    std::vector<firmware::AnomalyCode> anomalies;  // in delivery order
};

inline constexpr double kRiseThreshold = 55.0;
inline constexpr double kSettleDelay = 60.0;  // s after the first setpoint crossing

// The settled window starts kSettleDelay after the first tick of the first
// heating segment at which the hottest coil reaches that segment's setpoint,
// and ends when the segment does. Statistics over an empty window are absent.
TraceSummary summarize(const Trace& trace, const firmware::SafetyLimits& limits = {});

std::string summary_json(const TraceSummary& summary, int indent = 2);

}  // namespace padtwin
