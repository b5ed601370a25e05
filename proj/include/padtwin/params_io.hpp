#pragma once

// Flat "name = value" text files. '#' starts a comment; blank lines are ignored.

#include "padtwin/plant.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>

namespace padtwin {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using KeyValues = std::map<std::string, std::string, std::less<>>;

KeyValues parse_key_values(std::istream& in, const std::string& source = "<input>");
KeyValues read_key_values(const std::filesystem::path& path);

double get_number(const KeyValues& kv, std::string_view key);
double get_number(const KeyValues& kv, std::string_view key, double fallback);

// Unknown keys are rejected so that typos do not silently fall back to defaults.
PlantParams plant_params_from(const KeyValues& kv);
PlantParams load_plant_params(const std::filesystem::path& path);

// Values are written with enough digits to round-trip exactly.
std::string format_plant_params(const PlantParams& params, const std::string& header = {});
void save_plant_params(const std::filesystem::path& path, const PlantParams& params,
                       const std::string& header = {});

}  // namespace padtwin
