#include "padtwin/params_io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace padtwin {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

struct Field {
    const char* key;
    double PlantParams::*member;
};

constexpr std::array kFields{
    Field{"coil_heat_capacity", &PlantParams::coil_heat_capacity},
    Field{"coil_to_pad_conductance", &PlantParams::coil_to_pad_conductance},
    Field{"pad_heat_capacity", &PlantParams::pad_heat_capacity},
    Field{"pad_to_skin_conductance", &PlantParams::pad_to_skin_conductance},
    Field{"loss_to_ambient_conductance", &PlantParams::loss_to_ambient_conductance},
    Field{"inter_zone_conductance", &PlantParams::inter_zone_conductance},
    Field{"coil_resistance", &PlantParams::coil_resistance},
    Field{"sensor_noise_sd", &PlantParams::sensor_noise_sd},
    Field{"ambient", &PlantParams::ambient},
};

constexpr std::array kUnits{"J/C", "W/C", "J/C", "W/C", "W/C", "W/C", "ohm", "C", "C"};

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string text = trim(line);
        if (text.empty()) {
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'name = value'");
        }
        std::string key = trim(std::string_view(text).substr(0, eq));
        std::string value = trim(std::string_view(text).substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
        }
        if (!kv.emplace(std::move(key), std::move(value)).second) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key");
        }
    }
    return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    return parse_key_values(in, path.string());
}

double get_number(const KeyValues& kv, std::string_view key) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
        throw ConfigError("missing key '" + std::string(key) + "'");
    }
    const std::string& text = it->second;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("key '" + std::string(key) + "' is not a number: " + text);
    }
    return value;
}

double get_number(const KeyValues& kv, std::string_view key, double fallback) {
    return kv.contains(key) ? get_number(kv, key) : fallback;
}

PlantParams plant_params_from(const KeyValues& kv) {
    for (const auto& [key, value] : kv) {
        bool known = false;
        for (const auto& f : kFields) {
            known = known || key == f.key;
        }
        if (!known) {
            throw ConfigError("unknown plant parameter '" + key + "'");
        }
    }
    PlantParams p;
    for (const auto& f : kFields) {
        p.*(f.member) = get_number(kv, f.key);
    }
    try {
        validate(p);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid plant parameters: ") + e.what());
    }
    return p;
}

PlantParams load_plant_params(const std::filesystem::path& path) {
    return plant_params_from(read_key_values(path));
}

std::string format_plant_params(const PlantParams& params, const std::string& header) {
    std::ostringstream os;
    if (!header.empty()) {
        std::istringstream lines(header);
        std::string line;
        while (std::getline(lines, line)) {
            os << "# " << line << '\n';
        }
    }
    for (std::size_t i = 0; i < kFields.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", params.*(kFields[i].member));
        os << kFields[i].key << " = " << buf << "   # " << kUnits[i] << '\n';
    }
    return os.str();
}

void save_plant_params(const std::filesystem::path& path, const PlantParams& params,
                       const std::string& header) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << format_plant_params(params, header);
}

}  // namespace padtwin
