#include "padtwin/trace.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace padtwin {

const char* const kTraceHeader =
    "time_s,coil0_c,coil1_c,coil2_c,reading0_c,reading1_c,reading2_c,skin_c,duty_bits,power_w,soc,"
    "voltage_v,mode,anomalies";

namespace {

constexpr std::size_t kColumns = 14;

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) {
            return out;
        }
        start = pos + 1;
    }
}

double to_double(const std::string& s, int lineno) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw TraceError("trace line " + std::to_string(lineno) + ": bad number '" + s + "'");
    }
    return v;
}

std::optional<firmware::HeatLevel> heating_level(const std::string& mode) {
    constexpr std::string_view prefix = "Heating:";
    if (mode.rfind(prefix, 0) != 0) {
        return std::nullopt;
    }
    return firmware::parse_level(std::string_view(mode).substr(prefix.size()));
}

double max_of(const ZoneTemps& t) { return *std::max_element(t.begin(), t.end()); }

double mean_of(const ZoneTemps& t) { return (t[0] + t[1] + t[2]) / 3.0; }

}  // namespace

std::string format_row(const TraceRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "%.1f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%u,%.4f,%.6f,%.4f,", r.time, r.coil[0],
                  r.coil[1], r.coil[2], r.reading[0], r.reading[1], r.reading[2], r.skin,
                  static_cast<unsigned>(r.duty_bits), r.power, r.soc, r.voltage);
    std::string line = buf;
    line += r.mode;
    line += ',';
    for (std::size_t i = 0; i < r.anomalies.size(); ++i) {
        if (i > 0) {
            line += '|';
        }
        line += firmware::to_string(r.anomalies[i]);
    }
    return line;
}

void write_csv(std::ostream& out, const Trace& trace) {
    out << kTraceHeader << '\n';
    for (const auto& row : trace.rows) {
        out << format_row(row) << '\n';
    }
}

void save_csv(const std::filesystem::path& path, const Trace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw TraceError("cannot write " + path.string());
    }
    write_csv(out, trace);
}

Trace read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader) {
        throw TraceError("trace header missing or not recognized");
    }
    Trace trace;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != kColumns) {
            throw TraceError("trace line " + std::to_string(lineno) + ": expected 14 columns");
        }
        TraceRow r;
        r.time = to_double(f[0], lineno);
        for (std::size_t i = 0; i < kZones; ++i) {
            r.coil[i] = to_double(f[1 + i], lineno);
            r.reading[i] = to_double(f[4 + i], lineno);
        }
        r.skin = to_double(f[7], lineno);
        r.duty_bits = static_cast<std::uint8_t>(to_double(f[8], lineno));
        r.power = to_double(f[9], lineno);
        r.soc = to_double(f[10], lineno);
        r.voltage = to_double(f[11], lineno);
        r.mode = f[12];
        if (!f[13].empty()) {
            for (const auto& name : split(f[13], '|')) {
                const auto code = firmware::parse_anomaly(name);
                if (!code) {
                    throw TraceError("trace line " + std::to_string(lineno) + ": unknown anomaly " + name);
                }
                r.anomalies.push_back(*code);
            }
        }
        trace.rows.push_back(std::move(r));
    }
    return trace;
}

Trace load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw TraceError("cannot open " + path.string());
    }
    return read_csv(in);
}

TraceSummary summarize(const Trace& trace, const firmware::SafetyLimits& limits) {
    if (trace.rows.empty()) {
        throw TraceError("cannot summarize an empty trace");
    }
    const auto& rows = trace.rows;
    TraceSummary s;
    for (const auto& r : rows) {
        const double hottest = max_of(r.coil);
        s.max_coil = std::max(s.max_coil, hottest);
        if (!s.rise_time && hottest >= kRiseThreshold) {
            s.rise_time = r.time;
        }
        if (!s.runtime_to_empty && r.soc <= 0.0) {
            s.runtime_to_empty = r.time;
        }
        if (r.duty_bits != 0) {
            s.heating_life = r.time;
        }
        s.anomalies.insert(s.anomalies.end(), r.anomalies.begin(), r.anomalies.end());
    }

    // Settled window: inside the first heating segment whose hottest coil reaches its setpoint.
    for (std::size_t i = 0; i < rows.size();) {
        const auto level = heating_level(rows[i].mode);
        std::size_t end = i + 1;
        while (end < rows.size() && rows[end].mode == rows[i].mode) {
            ++end;
        }
        if (level) {
            const double setpoint = firmware::coil_setpoint(*level, limits);
            for (std::size_t k = i; k < end; ++k) {
                if (max_of(rows[k].coil) >= setpoint) {
                    s.window_start = rows[k].time + kSettleDelay;
                    s.window_end = rows[end - 1].time;
                    break;
                }
            }
        }
        if (s.window_start) {
            std::array<double, kZones> sum{}, sum_sq{};
            double coil = 0.0, skin = 0.0, est = 0.0;
            std::size_t n = 0;
            for (std::size_t k = i; k < end; ++k) {
                const auto& r = rows[k];
                if (r.time < *s.window_start) {
                    continue;
                }
                for (std::size_t z = 0; z < kZones; ++z) {
                    sum[z] += r.coil[z];
                    sum_sq[z] += r.coil[z] * r.coil[z];
                }
                coil += mean_of(r.coil);
                skin += r.skin;
                est += mean_of(r.reading) - limits.coil_skin_offset;
                ++n;
            }
            if (n >= 2) {
                double worst = 0.0;
                for (std::size_t z = 0; z < kZones; ++z) {
                    const double mean = sum[z] / n;
                    worst = std::max(worst, std::sqrt(std::max(0.0, sum_sq[z] / n - mean * mean)));
                }
                s.ripple_sd = worst;
                s.settled_coil = coil / n;
                s.settled_skin = skin / n;
                s.settled_skin_estimate = est / n;
            }
            break;
        }
        i = end;
    }
    return s;
}

std::string summary_json(const TraceSummary& s, int indent) {
    using nlohmann::json;
    const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json j;
    j["rise_time_s"] = opt(s.rise_time);
    j["ripple_sd_c"] = opt(s.ripple_sd);
    j["max_coil_c"] = s.max_coil;
    j["runtime_to_empty_s"] = opt(s.runtime_to_empty);
    j["heating_life_s"] = opt(s.heating_life);
    j["settled_coil_c"] = opt(s.settled_coil);
    j["settled_skin_c"] = opt(s.settled_skin);
    j["settled_skin_estimate_c"] = opt(s.settled_skin_estimate);
    j["window_start_s"] = opt(s.window_start);
    j["window_end_s"] = opt(s.window_end);
    json anomalies = json::array();
    for (auto code : s.anomalies) {
        anomalies.push_back(firmware::to_string(code));
    }
    j["anomalies"] = anomalies;
    return j.dump(indent);
}

}  // namespace padtwin
