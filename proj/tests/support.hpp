#pragma once

// Test-side oracles shared by the protocol tests and the acceptance run.

#include "padtwin/protocol.hpp"

#include <array>
#include <random>
#include <span>

namespace padtwin::oracle {

using namespace padtwin::protocol;

// Independent table-driven CRC-16/CCITT-FALSE, used as the oracle.
struct CrcTable {
    std::array<std::uint16_t, 256> t{};
    CrcTable() {
        for (unsigned i = 0; i < 256; ++i) {
            std::uint16_t c = static_cast<std::uint16_t>(i << 8);
            for (int b = 0; b < 8; ++b) {
                c = (c & 0x8000) ? static_cast<std::uint16_t>((c << 1) ^ 0x1021) : static_cast<std::uint16_t>(c << 1);
            }
            t[i] = c;
        }
    }
    std::uint16_t operator()(std::span<const std::uint8_t> d) const {
        std::uint16_t crc = 0xFFFF;
        for (auto b : d) {
            crc = static_cast<std::uint16_t>((crc << 8) ^ t[((crc >> 8) ^ b) & 0xFF]);
        }
        return crc;
    }
};

inline Message random_message(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> kind(0, 12);
    std::uniform_int_distribution<int> byte(0, 255);
    auto u8 = [&] { return static_cast<std::uint8_t>(byte(rng)); };
    auto s16 = [&] { return static_cast<std::int16_t>(std::uniform_int_distribution<int>(-32768, 32767)(rng)); };
    switch (kind(rng)) {
    case 0: {
        std::string s(std::uniform_int_distribution<std::size_t>(0, kMaxSecret)(rng), '\0');
        for (auto& c : s) c = static_cast<char>(u8());
        return Auth{s};
    }
    case 1: return AuthResult{(u8() & 1) != 0};
    case 2: return SetLevel{static_cast<std::uint8_t>(u8() % 3)};
    case 3: return StartHeat{};
    case 4: return StopHeat{};
    case 5: return SetTimer{u8()};
    case 6: return ResetLatch{};
    case 7: return Ping{};
    case 8: return Pong{};
    case 9: return Telemetry{{s16(), s16(), s16()}, s16(), u8(), u8(), u8()};
    case 10: return Anomaly{u8()};
    case 11: return Nack{u8()};
    default: {
        std::uint8_t type = 0;
        do {
            type = u8();
        } while (type >= 0x01 && type <= 0x0C);
        Bytes p(std::uniform_int_distribution<std::size_t>(0, kMaxPayload)(rng));
        for (auto& b : p) b = u8();
        return Unknown{type, p};
    }
    }
}

}  // namespace padtwin::oracle
