#include "padtwin/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace padtwin::protocol {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

void put_s16(Bytes& out, std::int16_t v) {
    const auto u = static_cast<std::uint16_t>(v);
    out.push_back(static_cast<std::uint8_t>(u >> 8));
    out.push_back(static_cast<std::uint8_t>(u & 0xFF));
}

std::int16_t get_s16(std::span<const std::uint8_t> p, std::size_t at) {
    return static_cast<std::int16_t>(static_cast<std::uint16_t>((p[at] << 8) | p[at + 1]));
}

Bytes payload_of(const Message& msg) {
    return std::visit(
        Overloaded{
            [](const Auth& m) {
                if (m.secret.size() > kMaxSecret) {
                    throw EncodeError("auth secret longer than 32 bytes");
                }
                return Bytes(m.secret.begin(), m.secret.end());
            },
            [](const AuthResult& m) { return Bytes{static_cast<std::uint8_t>(m.ok ? 1 : 0)}; },
            [](const SetLevel& m) {
                if (m.level > 2) {
                    throw EncodeError("heat level code must be 0..2");
                }
                return Bytes{m.level};
            },
            [](const SetTimer& m) { return Bytes{m.minutes}; },
            [](const Telemetry& m) {
                Bytes p;
                p.reserve(11);
                for (auto z : m.zone_centi) {
                    put_s16(p, z);
                }
                put_s16(p, m.skin_centi);
                p.push_back(m.soc_percent);
                p.push_back(m.mode);
                p.push_back(m.duty_bits);
                return p;
            },
            [](const Anomaly& m) { return Bytes{m.code}; },
            [](const Nack& m) { return Bytes{m.reason}; },
            [](const Unknown& m) {
                if (m.payload.size() > kMaxPayload) {
                    throw EncodeError("payload longer than 64 bytes");
                }
                return m.payload;
            },
            [](const auto&) { return Bytes{}; },
        },
        msg);
}

// Returns false when the payload is not valid for a known type.
bool parse_payload(std::uint8_t type, std::span<const std::uint8_t> p, Message& out) {
    const auto need = [&](std::size_t n) { return p.size() == n; };
    switch (static_cast<MsgType>(type)) {
    case MsgType::Auth:
        if (p.size() > kMaxSecret) return false;
        out = Auth{std::string(p.begin(), p.end())};
        return true;
    case MsgType::AuthResult:
        if (!need(1) || p[0] > 1) return false;
        out = AuthResult{p[0] == 1};
        return true;
    case MsgType::SetLevel:
        if (!need(1) || p[0] > 2) return false;
        out = SetLevel{p[0]};
        return true;
    case MsgType::StartHeat:
        if (!need(0)) return false;
        out = StartHeat{};
        return true;
    case MsgType::StopHeat:
        if (!need(0)) return false;
        out = StopHeat{};
        return true;
    case MsgType::SetTimer:
        if (!need(1)) return false;
        out = SetTimer{p[0]};
        return true;
    case MsgType::ResetLatch:
        if (!need(0)) return false;
        out = ResetLatch{};
        return true;
    case MsgType::Ping:
        if (!need(0)) return false;
        out = Ping{};
        return true;
    case MsgType::Pong:
        if (!need(0)) return false;
        out = Pong{};
        return true;
    case MsgType::Telemetry: {
        if (!need(11)) return false;
        Telemetry t;
        for (std::size_t i = 0; i < 3; ++i) {
            t.zone_centi[i] = get_s16(p, 2 * i);
        }
        t.skin_centi = get_s16(p, 6);
        t.soc_percent = p[8];
        t.mode = p[9];
        t.duty_bits = p[10];
        out = t;
        return true;
    }
    case MsgType::Anomaly:
        if (!need(1)) return false;
        out = Anomaly{p[0]};
        return true;
    case MsgType::Nack:
        if (!need(1)) return false;
        out = Nack{p[0]};
        return true;
    }
    out = Unknown{type, Bytes(p.begin(), p.end())};
    return true;
}

enum class Scan { Frame, Corrupt, Malformed, NeedMore };

// Tries to read one frame starting at stream[pos] == kSync.
Scan try_frame(std::span<const std::uint8_t> stream, std::size_t pos, Message& out,
               std::size_t& frame_len) {
    const std::size_t avail = stream.size() - pos;
    if (avail < 2) {
        return Scan::NeedMore;
    }
    const std::size_t length = stream[pos + 1];
    if (length > kMaxPayload) {
        return Scan::Corrupt;
    }
    frame_len = kHeaderSize + length + kCrcSize;
    if (avail < frame_len) {
        return Scan::NeedMore;
    }
    const auto body = stream.subspan(pos + 1, 2 + length);
    const std::uint16_t crc = crc16_ccitt_false(body);
    const std::uint16_t wire = static_cast<std::uint16_t>((stream[pos + 3 + length] << 8) |
                                                          stream[pos + 4 + length]);
    if (crc != wire) {
        return Scan::Corrupt;
    }
    const std::uint8_t type = stream[pos + 2];
    if (!parse_payload(type, stream.subspan(pos + 3, length), out)) {
        return Scan::Malformed;
    }
    return Scan::Frame;
}

}  // namespace

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data) {
    std::uint16_t crc = 0xFFFF;
    for (std::uint8_t byte : data) {
        crc ^= static_cast<std::uint16_t>(byte) << 8;
        for (int bit = 0; bit < 8; ++bit) {
            crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                                 : static_cast<std::uint16_t>(crc << 1);
        }
    }
    return crc;
}

std::uint8_t type_code(const Message& msg) {
    return std::visit(
        Overloaded{
            [](const Auth&) { return std::uint8_t(MsgType::Auth); },
            [](const AuthResult&) { return std::uint8_t(MsgType::AuthResult); },
            [](const SetLevel&) { return std::uint8_t(MsgType::SetLevel); },
            [](const StartHeat&) { return std::uint8_t(MsgType::StartHeat); },
            [](const StopHeat&) { return std::uint8_t(MsgType::StopHeat); },
            [](const SetTimer&) { return std::uint8_t(MsgType::SetTimer); },
            [](const ResetLatch&) { return std::uint8_t(MsgType::ResetLatch); },
            [](const Ping&) { return std::uint8_t(MsgType::Ping); },
            [](const Pong&) { return std::uint8_t(MsgType::Pong); },
            [](const Telemetry&) { return std::uint8_t(MsgType::Telemetry); },
            [](const Anomaly&) { return std::uint8_t(MsgType::Anomaly); },
            [](const Nack&) { return std::uint8_t(MsgType::Nack); },
            [](const Unknown& u) { return u.type; },
        },
        msg);
}

std::string describe(const Message& msg) {
    std::ostringstream os;
    std::visit(Overloaded{
                   [&](const Auth& m) { os << "Auth(" << m.secret.size() << " bytes)"; },
                   [&](const AuthResult& m) { os << "AuthResult(" << (m.ok ? "ok" : "denied") << ")"; },
                   [&](const SetLevel& m) { os << "SetLevel(" << int(m.level) << ")"; },
                   [&](const StartHeat&) { os << "StartHeat"; },
                   [&](const StopHeat&) { os << "StopHeat"; },
                   [&](const SetTimer& m) { os << "SetTimer(" << int(m.minutes) << ")"; },
                   [&](const ResetLatch&) { os << "ResetLatch"; },
                   [&](const Ping&) { os << "Ping"; },
                   [&](const Pong&) { os << "Pong"; },
                   [&](const Telemetry& m) {
                       os << "Telemetry(" << m.zone_centi[0] << "," << m.zone_centi[1] << ","
                          << m.zone_centi[2] << " skin=" << m.skin_centi
                          << " soc=" << int(m.soc_percent) << " mode=" << int(m.mode)
                          << " duty=" << int(m.duty_bits) << ")";
                   },
                   [&](const Anomaly& m) { os << "Anomaly(" << int(m.code) << ")"; },
                   [&](const Nack& m) { os << "Nack(" << int(m.reason) << ")"; },
                   [&](const Unknown& m) {
                       os << "Unknown(type=" << int(m.type) << ", " << m.payload.size() << " bytes)";
                   },
               },
               msg);
    return os.str();
}

void encode_into(const Message& msg, Bytes& out) {
    const Bytes payload = payload_of(msg);
    if (payload.size() > kMaxPayload) {
        throw EncodeError("payload longer than 64 bytes");
    }
    const std::size_t start = out.size();
    out.push_back(kSync);
    out.push_back(static_cast<std::uint8_t>(payload.size()));
    out.push_back(type_code(msg));
    out.insert(out.end(), payload.begin(), payload.end());
    const auto body = std::span<const std::uint8_t>(out).subspan(start + 1, 2 + payload.size());
    const std::uint16_t crc = crc16_ccitt_false(body);
    out.push_back(static_cast<std::uint8_t>(crc >> 8));
    out.push_back(static_cast<std::uint8_t>(crc & 0xFF));
}

Bytes encode(const Message& msg) {
    Bytes out;
    out.reserve(kMaxFrame);
    encode_into(msg, out);
    return out;
}

std::int16_t to_centi(double celsius) {
    if (std::isnan(celsius)) {
        return -27300;
    }
    const double c = std::round(celsius * 100.0);
    return static_cast<std::int16_t>(std::clamp(c, -27300.0, 32767.0));
}

double from_centi(std::int16_t centi) { return static_cast<double>(centi) / 100.0; }

DecodeResult decode(std::span<const std::uint8_t> stream) {
    DecodeResult result;
    std::size_t pos = 0;
    while (pos < stream.size()) {
        if (stream[pos] != kSync) {
            ++result.stats.skipped_bytes;
            ++pos;
            continue;
        }
        Message msg;
        std::size_t frame_len = 0;
        switch (try_frame(stream, pos, msg, frame_len)) {
        case Scan::Frame:
            result.messages.push_back(std::move(msg));
            ++result.stats.frames;
            pos += frame_len;
            break;
        case Scan::Malformed:
            ++result.stats.malformed;
            pos += frame_len;
            break;
        case Scan::Corrupt:
            // The length byte may itself be damaged, so resume one byte later.
            ++result.stats.crc_failures;
            ++pos;
            break;
        case Scan::NeedMore:
            result.remainder.assign(stream.begin() + static_cast<std::ptrdiff_t>(pos), stream.end());
            return result;
        }
    }
    return result;
}

std::vector<Message> StreamDecoder::feed(std::span<const std::uint8_t> chunk) {
    buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
    DecodeResult r = decode(buffer_);
    stats_.frames += r.stats.frames;
    stats_.crc_failures += r.stats.crc_failures;
    stats_.malformed += r.stats.malformed;
    stats_.skipped_bytes += r.stats.skipped_bytes;
    buffer_ = std::move(r.remainder);
    return std::move(r.messages);
}

}  // namespace padtwin::protocol
