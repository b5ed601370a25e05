#pragma once

// Declarative scenario files for the co-simulation harness.
//
//   # comment
//   name = heatup
//   duration = 300          # s
//   ambient = 30            # C
//   soc = 1.0
//   secret = padtwin        # device secret, optional
//   expect = SigmaTrip      # anomalies this scenario is meant to raise, optional
//   at=0 link up
//   at=0 app auth padtwin
//   at=0 app level high
//   at=0 app start
//   at=120 inject stuck 1 49
//
// Actions:
//   link up|down
//   app auth <secret> | level low|medium|high | start | stop | timer <min> | reset | ping
//   inject stuck <zone> <C> | drift <zone> <C/s> | open <zone> | none <zone>
//   set_ambient <C>

#include "padtwin/firmware.hpp"
#include "padtwin/plant.hpp"
#include "padtwin/protocol.hpp"

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace padtwin {

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AppCommand {
    protocol::Message message;
    bool operator==(const AppCommand&) const = default;
};

struct LinkChange {
    bool up = true;
    bool operator==(const LinkChange&) const = default;
};

struct InjectFault {
    SensorFault fault;  // kind None clears the zone
    bool operator==(const InjectFault&) const = default;
};

struct SetAmbient {
    double celsius = 30.0;
    bool operator==(const SetAmbient&) const = default;
};

using Action = std::variant<AppCommand, LinkChange, InjectFault, SetAmbient>;

struct Event {
    double at = 0.0;  // s
    Action action;
    int line = 0;     // source line, for diagnostics
    bool operator==(const Event&) const = default;
};

struct Scenario {
    std::string name = "unnamed";
    double duration = 0.0;  // s
    double ambient = 30.0;  // C
    double initial_soc = 1.0;
    std::string secret = "padtwin";
    std::vector<firmware::AnomalyCode> expect;
    std::vector<Event> events;
};

// Throws ScenarioError on syntax errors, unknown actions, bad zones or levels,
// unsorted events and out-of-range header values.
Scenario parse_scenario(std::istream& in, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

void validate(const Scenario& scenario);

// Renders an event back into scenario syntax, e.g. "at=120 inject stuck 1 49".
std::string format_event(const Event& event);

}  // namespace padtwin
