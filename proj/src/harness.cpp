#include "padtwin/harness.hpp"

#include <algorithm>
#include <cmath>

namespace padtwin {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

void apply(Device& device, const Event& ev) {
    std::visit(Overloaded{
                   [&](const AppCommand& c) {
                       const auto bytes = protocol::encode(c.message);
                       device.receive(bytes);
                   },
                   [&](const LinkChange& l) { device.set_link(l.up); },
                   [&](const InjectFault& f) { device.inject(f.fault); },
                   [&](const SetAmbient& a) { device.set_ambient(a.celsius); },
               },
               ev.action);
}

}  // namespace

Trace run(const Scenario& scenario, const PlantParams& params, std::uint64_t seed,
          const RunOptions& options) {
    validate(scenario);

    DeviceConfig cfg;
    cfg.plant = params;
    cfg.battery = options.battery;
    cfg.firmware.limits = options.limits;
    cfg.firmware.secret = scenario.secret;
    cfg.initial_soc = scenario.initial_soc;
    cfg.ambient = scenario.ambient;
    cfg.seed = seed;
    Device device(cfg);

    const auto ticks = static_cast<std::uint64_t>(std::llround(scenario.duration * options.limits.tick_rate));
    const int substeps = static_cast<int>(std::lround(options.limits.tick_period() / Device::kPlantDt));

    Trace trace;
    trace.rows.reserve(ticks);
    std::size_t next = 0;
    std::uint64_t step = 0;
    for (std::uint64_t k = 0; k < ticks; ++k) {
        for (int j = 0; j < substeps; ++j, ++step) {
            const double now = static_cast<double>(step) * Device::kPlantDt;
            while (next < scenario.events.size() && scenario.events[next].at <= now + 1e-9) {
                apply(device, scenario.events[next++]);
            }
            if (j == 0) {
                TickOutput out = device.control_tick();
                if (options.observer) {
                    options.observer(device, out);
                }
                trace.rows.push_back(std::move(out.row));
            }
            device.substep();
        }
    }
    return trace;
}

std::vector<firmware::AnomalyCode> unexpected_anomalies(const Scenario& scenario, const Trace& trace) {
    std::vector<firmware::AnomalyCode> out;
    for (const auto& row : trace.rows) {
        for (auto code : row.anomalies) {
            if (std::find(scenario.expect.begin(), scenario.expect.end(), code) == scenario.expect.end()) {
                out.push_back(code);
            }
        }
    }
    return out;
}

}  // namespace padtwin
