#pragma once

// Hosts one simulated device in wall-clock time and exposes its frame stream.
//
// A single listening port carries two bindings. A client whose first bytes are
// an HTTP request is upgraded to a WebSocket at /device and exchanges one frame
// per binary message. Any other client, including one that stays silent past
// sniff_timeout, gets the raw byte stream. Only one client is served at a time;
// others receive Nack(Busy) and are closed.
//
// The simulation thread owns the device. The I/O thread owns the sockets. They
// exchange bytes and connection events through queues only.

#include "padtwin/device.hpp"
#include "padtwin/scenario.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace padtwin {

struct BridgeConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 7420;       // 0 picks a free port
    std::string secret;
    double time_scale = 1.0;         // simulated seconds per wall second
    DeviceConfig device;             // the secret above overrides device.firmware.secret
    std::optional<Scenario> overlay; // inject and set_ambient events, by simulated time
    std::chrono::milliseconds sniff_timeout{200};
};

// Throws std::invalid_argument.
void validate(const BridgeConfig& config);

struct BridgeStatus {
    double sim_time = 0.0;
    std::uint64_t ticks = 0;
    std::string mode;
    ZoneDuty duty{};
    ZoneTemps coil{};
    double soc = 0.0;
    bool link = false;            // what the firmware saw on the last tick
    std::uint64_t refused = 0;    // clients turned away as busy
};

class BridgeService {
public:
    explicit BridgeService(BridgeConfig config);
    ~BridgeService();

    BridgeService(const BridgeService&) = delete;
    BridgeService& operator=(const BridgeService&) = delete;

    // Binds and starts both threads. Throws on an unusable endpoint.
    void start();
    // Port actually bound; valid after start().
    std::uint16_t port() const;
    // Safe from any thread except a signal handler.
    void stop();
    // Blocks until stop() has completed.
    void wait();
    // start() unless already started, then block until SIGINT or SIGTERM.
    void run_until_signal();

    BridgeStatus status() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace padtwin
