#pragma once

// Framed app <-> device codec.
//
// Frame layout (all multi-byte fields big-endian):
//
//   +------+--------+----------+-------------------+-----------+
//   | 0xA5 | length | msg_type | payload[length]   | crc16     |
//   +------+--------+----------+-------------------+-----------+
//
// length counts payload bytes only (0..64). crc16 is CRC-16/CCITT-FALSE over
// length, msg_type and payload. See docs/protocol.md for worked examples.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace padtwin::protocol {

inline constexpr std::uint8_t kSync = 0xA5;
inline constexpr std::size_t kMaxPayload = 64;
inline constexpr std::size_t kHeaderSize = 3;   // sync, length, type
inline constexpr std::size_t kCrcSize = 2;
inline constexpr std::size_t kMaxFrame = kHeaderSize + kMaxPayload + kCrcSize;
inline constexpr std::size_t kMaxSecret = 32;

enum class MsgType : std::uint8_t {
    Auth = 0x01,
    AuthResult = 0x02,
    SetLevel = 0x03,
    StartHeat = 0x04,
    StopHeat = 0x05,
    SetTimer = 0x06,
    ResetLatch = 0x07,
    Ping = 0x08,
    Pong = 0x09,
    Telemetry = 0x0A,
    Anomaly = 0x0B,
    Nack = 0x0C,
};

// Reasons carried by Nack. Values are part of the wire contract.
enum class NackReason : std::uint8_t {
    NotAuthenticated = 1,
    WrongMode = 2,
    LockedOut = 3,
    BatteryLow = 4,
    Latched = 5,
    BadArgument = 6,
    Busy = 7,
};

struct Auth {
    std::string secret;
    bool operator==(const Auth&) const = default;
};
struct AuthResult {
    bool ok = false;
    bool operator==(const AuthResult&) const = default;
};
struct SetLevel {
    std::uint8_t level = 0;  // 0 low, 1 medium, 2 high
    bool operator==(const SetLevel&) const = default;
};
struct StartHeat {
    bool operator==(const StartHeat&) const = default;
};
struct StopHeat {
    bool operator==(const StopHeat&) const = default;
};
struct SetTimer {
    std::uint8_t minutes = 0;  // 0 clears the timer
    bool operator==(const SetTimer&) const = default;
};
struct ResetLatch {
    bool operator==(const ResetLatch&) const = default;
};
struct Ping {
    bool operator==(const Ping&) const = default;
};
struct Pong {
    bool operator==(const Pong&) const = default;
};

// Temperatures are signed centi-degrees Celsius.
struct Telemetry {
    std::array<std::int16_t, 3> zone_centi{};
    std::int16_t skin_centi = 0;
    std::uint8_t soc_percent = 0;
    std::uint8_t mode = 0;       // low nibble: mode code, bits 4-5: heat level
    std::uint8_t duty_bits = 0;  // bit i set when zone i is powered
    bool operator==(const Telemetry&) const = default;
};
struct Anomaly {
    std::uint8_t code = 0;
    bool operator==(const Anomaly&) const = default;
};
struct Nack {
    std::uint8_t reason = 0;
    bool operator==(const Nack&) const = default;
};
// Any msg_type this codec does not know. Payload is kept verbatim.
struct Unknown {
    std::uint8_t type = 0;
    std::vector<std::uint8_t> payload;
    bool operator==(const Unknown&) const = default;
};

using Message = std::variant<Auth, AuthResult, SetLevel, StartHeat, StopHeat, SetTimer, ResetLatch,
                             Ping, Pong, Telemetry, Anomaly, Nack, Unknown>;

using Bytes = std::vector<std::uint8_t>;

class EncodeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data);

std::uint8_t type_code(const Message& msg);
std::string describe(const Message& msg);

Bytes encode(const Message& msg);
void encode_into(const Message& msg, Bytes& out);

// Lossless for -273.00..327.67 C; values outside are saturated.
std::int16_t to_centi(double celsius);
double from_centi(std::int16_t centi);

struct DecodeStats {
    std::size_t frames = 0;
    std::size_t crc_failures = 0;     // dropped frames
    std::size_t malformed = 0;        // CRC ok but payload invalid for its type
    std::size_t skipped_bytes = 0;    // bytes discarded while hunting for sync
    bool operator==(const DecodeStats&) const = default;
};

struct DecodeResult {
    std::vector<Message> messages;
    Bytes remainder;
    DecodeStats stats;
};

// Stateless decode of a byte stream. A trailing partial frame is returned as
// remainder; prepend it to the next chunk.
DecodeResult decode(std::span<const std::uint8_t> stream);

// Incremental decoder owning its remainder buffer.
class StreamDecoder {
public:
    std::vector<Message> feed(std::span<const std::uint8_t> chunk);

    const DecodeStats& stats() const noexcept { return stats_; }
    std::size_t buffered() const noexcept { return buffer_.size(); }
    // Drops a partially received frame, e.g. when the peer goes away.
    void discard_partial() noexcept { buffer_.clear(); }

private:
    Bytes buffer_;
    DecodeStats stats_;
};

}  // namespace padtwin::protocol
