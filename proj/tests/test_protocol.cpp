#include "padtwin/protocol.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <array>
#include <random>

using namespace padtwin::protocol;

namespace {

using padtwin::oracle::random_message;

const padtwin::oracle::CrcTable oracle_crc;

Bytes ascii(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace

TEST(Crc, CheckValueMatchesOracle) {
    const auto data = ascii("123456789");
    EXPECT_EQ(oracle_crc(data), 0x29B1);
    EXPECT_EQ(crc16_ccitt_false(data), 0x29B1);
}

TEST(Crc, AgreesWithTableOracleOnRandomInput) {
    std::mt19937_64 rng(7);
    for (int n = 0; n < 2000; ++n) {
        Bytes d(rng() % 100);
        for (auto& b : d) b = static_cast<std::uint8_t>(rng());
        ASSERT_EQ(crc16_ccitt_false(d), oracle_crc(d));
    }
    EXPECT_EQ(crc16_ccitt_false({}), 0xFFFF);
}

TEST(Encode, PingFrameBytes) {
    const Bytes f = encode(Ping{});
    ASSERT_EQ(f.size(), 5u);
    EXPECT_EQ(f[0], 0xA5);
    EXPECT_EQ(f[1], 0x00);
    EXPECT_EQ(f[2], 0x08);
    const std::uint16_t crc = oracle_crc(Bytes{0x00, 0x08});
    EXPECT_EQ(f[3], crc >> 8);
    EXPECT_EQ(f[4], crc & 0xFF);
}

TEST(Encode, TypeCodesAreTheWireContract) {
    EXPECT_EQ(type_code(Auth{}), 0x01);
    EXPECT_EQ(type_code(AuthResult{}), 0x02);
    EXPECT_EQ(type_code(SetLevel{}), 0x03);
    EXPECT_EQ(type_code(StartHeat{}), 0x04);
    EXPECT_EQ(type_code(StopHeat{}), 0x05);
    EXPECT_EQ(type_code(SetTimer{}), 0x06);
    EXPECT_EQ(type_code(ResetLatch{}), 0x07);
    EXPECT_EQ(type_code(Ping{}), 0x08);
    EXPECT_EQ(type_code(Pong{}), 0x09);
    EXPECT_EQ(type_code(Telemetry{}), 0x0A);
    EXPECT_EQ(type_code(Anomaly{}), 0x0B);
    EXPECT_EQ(type_code(Nack{}), 0x0C);
    EXPECT_EQ(type_code(Unknown{0x42, {}}), 0x42);
}

TEST(Encode, TelemetryLayoutIsBigEndian) {
    Telemetry t{{5200, -27300, 32767}, 4200, 87, 0x23, 0x05};
    const Bytes f = encode(t);
    const Bytes expected_body{0x0B, 0x0A, 0x14, 0x50, 0x95, 0x5C, 0x7F, 0xFF, 0x10, 0x68, 0x57, 0x23, 0x05};
    ASSERT_EQ(f.size(), 3u + 11u + 2u);
    EXPECT_EQ(Bytes(f.begin() + 1, f.end() - 2), expected_body);
    const std::uint16_t crc = oracle_crc(expected_body);
    EXPECT_EQ(f[14], crc >> 8);
    EXPECT_EQ(f[15], crc & 0xFF);
}

TEST(Encode, RejectsOversizePayloads) {
    EXPECT_THROW(encode(Auth{std::string(33, 'x')}), EncodeError);
    EXPECT_NO_THROW(encode(Auth{std::string(32, 'x')}));
    EXPECT_THROW(encode(SetLevel{3}), EncodeError);
    EXPECT_THROW(encode(Unknown{0x40, Bytes(65, 0)}), EncodeError);
    EXPECT_EQ(encode(Unknown{0x40, Bytes(64, 0)}).size(), kMaxFrame);
}

TEST(Encode, IsDeterministic) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        const Message m = random_message(rng);
        ASSERT_EQ(encode(m), encode(m));
    }
}

TEST(RoundTrip, HundredThousandGeneratedMessages) {
    std::mt19937_64 rng(20240501);
    for (int i = 0; i < 100000; ++i) {
        const Message m = random_message(rng);
        const Bytes f = encode(m);
        ASSERT_LE(f.size(), kMaxFrame);
        const DecodeResult r = decode(f);
        ASSERT_EQ(r.messages.size(), 1u) << describe(m);
        ASSERT_EQ(r.messages[0], m) << describe(m);
        ASSERT_TRUE(r.remainder.empty());
    }
}

TEST(Decode, BackToBackFrames) {
    Bytes s = encode(Ping{});
    encode_into(SetTimer{8}, s);
    const auto r = decode(s);
    ASSERT_EQ(r.messages.size(), 2u);
    EXPECT_EQ(r.messages[0], Message(Ping{}));
    EXPECT_EQ(r.messages[1], Message(SetTimer{8}));
    EXPECT_TRUE(r.remainder.empty());
}

TEST(Decode, SingleBitFlipIsDroppedAndCounted) {
    const Bytes good = encode(Telemetry{{5000, 5100, 5200}, 4100, 90, 3, 7});
    for (std::size_t byte = 3; byte < good.size() - 2; ++byte) {
        for (int bit = 0; bit < 8; ++bit) {
            Bytes bad = good;
            bad[byte] ^= static_cast<std::uint8_t>(1u << bit);
            const auto r = decode(bad);
            EXPECT_TRUE(r.messages.empty());
            EXPECT_EQ(r.stats.crc_failures, 1u);
        }
    }
}

TEST(Decode, UnknownTypeIsExplicit) {
    const Bytes f = encode(Unknown{0x7E, {1, 2, 3}});
    const auto r = decode(f);
    ASSERT_EQ(r.messages.size(), 1u);
    const auto* u = std::get_if<Unknown>(&r.messages[0]);
    ASSERT_NE(u, nullptr);
    EXPECT_EQ(u->type, 0x7E);
    EXPECT_EQ(u->payload, (Bytes{1, 2, 3}));
}

TEST(Decode, KnownTypeWithBadPayloadIsMalformed) {
    // SetLevel(7) with a valid CRC.
    Bytes f{kSync, 0x01, 0x03, 0x07};
    const auto crc = oracle_crc(Bytes{0x01, 0x03, 0x07});
    f.push_back(static_cast<std::uint8_t>(crc >> 8));
    f.push_back(static_cast<std::uint8_t>(crc & 0xFF));
    encode_into(Ping{}, f);
    const auto r = decode(f);
    ASSERT_EQ(r.messages.size(), 1u);
    EXPECT_EQ(r.messages[0], Message(Ping{}));
    EXPECT_EQ(r.stats.malformed, 1u);
}

TEST(Decode, PartialTrailingFrameIsRemainder) {
    Bytes s = encode(Ping{});
    const Bytes second = encode(Anomaly{2});
    s.insert(s.end(), second.begin(), second.begin() + 3);
    const auto r = decode(s);
    ASSERT_EQ(r.messages.size(), 1u);
    EXPECT_EQ(r.remainder, Bytes(second.begin(), second.begin() + 3));
}

TEST(Decode, ResyncAfterCorruptPrefix) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 2000; ++trial) {
        Bytes s(rng() % 200);
        for (auto& b : s) b = static_cast<std::uint8_t>(rng());
        const Message m = random_message(rng);
        const Bytes frame = encode(m);
        // Enough trailing frames that any spurious length in the prefix runs out.
        s.insert(s.end(), frame.begin(), frame.end());
        for (int k = 0; k < 3; ++k) encode_into(Pong{}, s);
        Bytes pad(kMaxFrame, 0x00);
        s.insert(s.end(), pad.begin(), pad.end());
        const auto r = decode(s);
        // The intact frame is found unless the random prefix happened to
        // contain a frame that swallows part of it, which the CRC makes rare.
        const auto hit = std::find(r.messages.begin(), r.messages.end(), m);
        ASSERT_NE(hit, r.messages.end()) << "trial " << trial;
    }
}

TEST(Decode, SplitStreamMatchesUnsplit) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        Bytes s;
        for (int k = 0; k < 20; ++k) {
            encode_into(random_message(rng), s);
            if (rng() % 4 == 0) {
                s.push_back(static_cast<std::uint8_t>(rng()));  // line noise between frames
            }
        }
        if (rng() % 2 == 0 && !s.empty()) {
            s[rng() % s.size()] ^= 0x10;
        }
        const auto whole = decode(s);

        StreamDecoder d;
        std::vector<Message> pieces;
        std::size_t pos = 0;
        while (pos < s.size()) {
            const std::size_t n = std::min<std::size_t>(s.size() - pos, 1 + rng() % 40);
            auto got = d.feed(std::span(s).subspan(pos, n));
            pieces.insert(pieces.end(), got.begin(), got.end());
            pos += n;
        }
        ASSERT_EQ(pieces, whole.messages) << "trial " << trial;
        EXPECT_EQ(d.buffered(), whole.remainder.size());
        EXPECT_EQ(d.stats(), whole.stats);
    }
}

TEST(Decode, EveryByteBoundaryOfOneStream) {
    Bytes s;
    encode_into(Auth{"padtwin"}, s);
    encode_into(Telemetry{{1, 2, 3}, 4, 5, 6, 7}, s);
    encode_into(Nack{3}, s);
    const auto whole = decode(s);
    for (std::size_t cut = 0; cut <= s.size(); ++cut) {
        StreamDecoder d;
        auto a = d.feed(std::span(s).first(cut));
        auto b = d.feed(std::span(s).subspan(cut));
        a.insert(a.end(), b.begin(), b.end());
        ASSERT_EQ(a, whole.messages) << "cut at " << cut;
    }
}

TEST(Decode, OneMebibyteOfNoiseDoesNotCrash) {
    std::mt19937_64 rng(99);
    Bytes noise(1u << 20);
    for (auto& b : noise) b = static_cast<std::uint8_t>(rng());
    // Bias toward the sync byte so the frame parser is exercised, not just the hunt.
    for (std::size_t i = 0; i < noise.size(); i += 1 + rng() % 64) noise[i] = kSync;
    const auto r = decode(noise);
    EXPECT_LE(r.remainder.size(), kMaxFrame);
    EXPECT_GT(r.stats.crc_failures, 0u);

    StreamDecoder d;
    std::size_t pos = 0;
    while (pos < noise.size()) {
        const std::size_t n = std::min<std::size_t>(noise.size() - pos, 1 + rng() % 4096);
        d.feed(std::span(noise).subspan(pos, n));
        ASSERT_LE(d.buffered(), kMaxFrame);
        pos += n;
    }
}

TEST(Centi, LosslessOverTheDocumentedRange) {
    for (int c = -27300; c <= 32767; ++c) {
        const double celsius = c / 100.0;
        ASSERT_EQ(to_centi(celsius), c);
        ASSERT_NEAR(from_centi(to_centi(celsius)), celsius, 0.005);
    }
    EXPECT_EQ(to_centi(-300.0), -27300);
    EXPECT_EQ(to_centi(400.0), 32767);
    EXPECT_EQ(to_centi(std::nan("")), -27300);
}
