// padtwin: command-line front end for the heating-pad twin.
//
//   padtwin simulate --scenario s.scn --params plant.default.params --seed 1 --out trace.csv
//   padtwin summarize --trace trace.csv --json
//   padtwin calibrate --targets calibration.targets --out plant.params
//   padtwin bridge --listen 127.0.0.1:7420 --params plant.default.params --secret s

#include "padtwin/bridge.hpp"
#include "padtwin/calibration.hpp"
#include "padtwin/harness.hpp"
#include "padtwin/params_io.hpp"
#include "padtwin/scenario.hpp"
#include "padtwin/trace.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <cstdio>
#include <iostream>
#include <set>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitError = 2;

using padtwin::firmware::AnomalyCode;

void print_human(const padtwin::TraceSummary& s) {
    const auto show = [](const char* name, const std::optional<double>& v, const char* unit) {
        if (v) {
            std::printf("%-24s %.3f %s\n", name, *v, unit);
        } else {
            std::printf("%-24s n/a\n", name);
        }
    };
    show("rise_time", s.rise_time, "s");
    show("ripple_sd", s.ripple_sd, "C");
    std::printf("%-24s %.3f C\n", "max_coil", s.max_coil);
    show("runtime_to_empty", s.runtime_to_empty, "s");
    show("heating_life", s.heating_life, "s");
    show("settled_coil", s.settled_coil, "C");
    show("settled_skin", s.settled_skin, "C");
    show("settled_skin_estimate", s.settled_skin_estimate, "C");
    std::printf("%-24s", "anomalies");
    for (auto code : s.anomalies) {
        std::printf(" %s", padtwin::firmware::to_string(code).c_str());
    }
    std::printf("\n");
}

int report_unexpected(const std::vector<AnomalyCode>& found, const std::set<AnomalyCode>& expected) {
    int unexpected = 0;
    for (auto code : found) {
        if (!expected.contains(code)) {
            std::fprintf(stderr, "unexpected anomaly: %s\n", padtwin::firmware::to_string(code).c_str());
            ++unexpected;
        }
    }
    return unexpected == 0 ? kExitOk : kExitUnexpected;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Digital twin of a three-zone wearable heating pad"};
    app.require_subcommand(1);

    std::string scenario_path, params_path = "plant.default.params", out_path, trace_path;
    std::uint64_t seed = 1;
    bool json = false, print_summary = false;

    auto* simulate = app.add_subcommand("simulate", "Run a scenario and write its trace");
    simulate->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
    simulate->add_option("--params", params_path, "Plant parameter file")->check(CLI::ExistingFile);
    simulate->add_option("--seed", seed, "Sensor noise seed");
    simulate->add_option("--out", out_path, "Trace CSV (stdout if omitted)");
    simulate->add_flag("--summary", print_summary, "Print the JSON summary to stdout");

    std::vector<std::string> expect_names;
    auto* summarize = app.add_subcommand("summarize", "Summary statistics of a trace");
    summarize->add_option("--trace", trace_path, "Trace CSV")->required()->check(CLI::ExistingFile);
    summarize->add_flag("--json", json, "JSON output");
    summarize->add_option("--scenario", scenario_path, "Take expected anomalies from this scenario")
        ->check(CLI::ExistingFile);
    summarize->add_option("--expect", expect_names, "Expected anomaly names");

    std::string targets_path;
    auto* calibrate = app.add_subcommand("calibrate", "Fit plant parameters to the heating targets");
    calibrate->add_option("--targets", targets_path, "Calibration targets file")->check(CLI::ExistingFile);
    calibrate->add_option("--out", out_path, "Parameter file to write")->required();

    padtwin::BridgeConfig bridge_cfg;
    std::string listen = "127.0.0.1:7420";
    auto* bridge = app.add_subcommand("bridge", "Host one live device over TCP and WebSocket");
    bridge->add_option("--listen", listen, "host:port");
    bridge->add_option("--params", params_path, "Plant parameter file")->check(CLI::ExistingFile);
    bridge->add_option("--secret", bridge_cfg.secret, "Device secret")->required();
    bridge->add_option("--time-scale", bridge_cfg.time_scale, "Simulated seconds per wall second")
        ->check(CLI::Range(1.0, 1000.0));
    bridge->add_option("--scenario", scenario_path, "Fault overlay: inject and set_ambient events")
        ->check(CLI::ExistingFile);
    bridge->add_option("--seed", seed, "Sensor noise seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitError;
    }

    try {
        if (*simulate) {
            const auto scenario = padtwin::load_scenario(scenario_path);
            const auto params = padtwin::load_plant_params(params_path);
            const auto trace = padtwin::run(scenario, params, seed);
            if (out_path.empty()) {
                padtwin::write_csv(std::cout, trace);
            } else {
                padtwin::save_csv(out_path, trace);
            }
            if (print_summary) {
                std::cout << padtwin::summary_json(padtwin::summarize(trace)) << '\n';
            }
            const auto unexpected = padtwin::unexpected_anomalies(scenario, trace);
            return report_unexpected(unexpected, {});
        }
        if (*summarize) {
            const auto trace = padtwin::load_csv(trace_path);
            const auto summary = padtwin::summarize(trace);
            if (json) {
                std::cout << padtwin::summary_json(summary) << '\n';
            } else {
                print_human(summary);
            }
            std::set<AnomalyCode> expected;
            if (!scenario_path.empty()) {
                const auto scenario = padtwin::load_scenario(scenario_path);
                expected.insert(scenario.expect.begin(), scenario.expect.end());
            }
            for (const auto& name : expect_names) {
                const auto code = padtwin::firmware::parse_anomaly(name);
                if (!code) {
                    std::fprintf(stderr, "unknown anomaly name: %s\n", name.c_str());
                    return kExitError;
                }
                expected.insert(*code);
            }
            return report_unexpected(summary.anomalies, expected);
        }
        if (*calibrate) {
            const auto targets = targets_path.empty() ? padtwin::CalibrationTargets{}
                                                      : padtwin::load_calibration_targets(targets_path);
            try {
                const auto r = padtwin::calibrate(targets);
                char header[256];
                std::snprintf(header, sizeof header,
                              "Calibrated plant parameters (padtwin calibrate).\n"
                              "rise %.1f s, full-power peak %.2f C, coil-skin offset %.2f C",
                              *r.rise_time, r.peak, r.steady_offset);
                padtwin::save_plant_params(out_path, r.params, header);
                std::printf("%s\nevaluations %d\n", header, r.evaluations);
                return kExitOk;
            } catch (const padtwin::CalibrationError& e) {
                const auto& b = e.best();
                std::fprintf(stderr, "%s\nbest: rise %s s, peak %.3f C, offset %.3f C after %d evaluations\n",
                             e.what(), b.rise_time ? std::to_string(*b.rise_time).c_str() : "none", b.peak,
                             b.steady_offset, b.evaluations);
                return kExitError;
            }
        }
        if (*bridge) {
            const auto colon = listen.rfind(':');
            if (colon == std::string::npos) {
                std::fprintf(stderr, "--listen expects host:port\n");
                return kExitError;
            }
            bridge_cfg.host = listen.substr(0, colon);
            const std::string port_text = listen.substr(colon + 1);
            unsigned port = 0;
            const auto [end, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
            if (ec != std::errc{} || end != port_text.data() + port_text.size() || port > 65535) {
                std::fprintf(stderr, "--listen: bad port '%s'\n", port_text.c_str());
                return kExitError;
            }
            bridge_cfg.port = static_cast<std::uint16_t>(port);
            bridge_cfg.device.plant = padtwin::load_plant_params(params_path);
            bridge_cfg.device.seed = seed;
            if (!scenario_path.empty()) {
                bridge_cfg.overlay = padtwin::load_scenario(scenario_path);
            }
            padtwin::BridgeService service(bridge_cfg);
            service.start();
            std::fprintf(stderr, "bridge listening on %s:%u (raw TCP, or WebSocket at /device)\n",
                         bridge_cfg.host.c_str(), static_cast<unsigned>(service.port()));
            service.run_until_signal();
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitOk;
}
