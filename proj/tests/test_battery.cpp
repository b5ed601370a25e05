#include "padtwin/battery.hpp"
#include "padtwin/params_io.hpp"
#include "padtwin/physics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace padtwin;

TEST(Ocv, Breakpoints) {
    EXPECT_DOUBLE_EQ(ocv(1.0), 4.2);
    EXPECT_DOUBLE_EQ(ocv(0.1), 3.7);
    EXPECT_DOUBLE_EQ(ocv(0.0), 3.3);
    EXPECT_NEAR(ocv(0.55), 3.95, 1e-12);  // halfway along the upper segment
    EXPECT_NEAR(ocv(0.05), 3.5, 1e-12);
    EXPECT_THROW(ocv(-0.01), std::domain_error);
    EXPECT_THROW(ocv(1.01), std::domain_error);
}

TEST(Ocv, MonotoneAndContinuous) {
    double prev = ocv(0.0);
    for (int i = 1; i <= 10000; ++i) {
        const double v = ocv(i / 10000.0);
        ASSERT_GT(v, prev);
        ASSERT_LT(v - prev, 1e-3);
        prev = v;
    }
}

TEST(Draw, CoulombCounting) {
    BatteryState s = battery_at(1.0);
    s = draw(s, 1.0, 3600.0);  // 1 A for an hour
    EXPECT_NEAR(s.charge, 1200.0, 1e-9);
    EXPECT_NEAR(s.soc, 1200.0 / 2200.0, 1e-12);
    EXPECT_NEAR(s.terminal_voltage, ocv(s.soc) - 0.05, 1e-12);
    EXPECT_FALSE(s.overcurrent);
    EXPECT_FALSE(s.depleted);
}

TEST(Draw, OneCDischargeEmptiesInAnHour) {
    const BatteryState s = draw(battery_at(1.0), 2.2, 3600.0);
    EXPECT_NEAR(s.charge, 0.0, 1e-9);
    EXPECT_NEAR(s.soc, 0.0, 1e-12);
}

TEST(Draw, VoltageStaysInBand) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> amps(0.0, 6.0);
    BatteryState s = battery_at(1.0);
    while (!s.depleted) {
        s = draw(s, amps(rng), 1.0);
        ASSERT_GE(s.terminal_voltage, kMinTerminalVoltage);
        ASSERT_LE(s.terminal_voltage, kMaxTerminalVoltage);
        ASSERT_LE(s.current, 5.0);
    }
}

TEST(Draw, ChargeRemovedEqualsIntegratedCurrent) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> amps(0.0, 5.0);
    BatteryState s = battery_at(1.0);
    double mah = 0.0;
    for (int k = 0; k < 5000; ++k) {
        const double a = amps(rng);
        s = draw(s, a, 0.1);
        mah += a * 0.1 / 3.6;
    }
    EXPECT_NEAR(2200.0 - s.charge, mah, 1e-6);
}

TEST(Draw, OvercurrentIsRefused) {
    const BatteryState s0 = battery_at(0.8);
    const BatteryState s1 = draw(s0, 6.0, 1.0);
    EXPECT_TRUE(s1.overcurrent);
    EXPECT_DOUBLE_EQ(s1.current, 0.010);
    EXPECT_NEAR(s0.charge - s1.charge, 0.010 / 3.6, 1e-12);
    EXPECT_FALSE(draw(s1, 1.0, 1.0).overcurrent);  // clears on the next normal draw
    EXPECT_FALSE(draw(s0, 5.0, 1.0).overcurrent);  // the limit itself is allowed
}

TEST(Draw, DepletionClampsAtZero) {
    BatteryState s = battery_at(0.001);
    s = draw(s, 4.0, 60.0);
    EXPECT_EQ(s.charge, 0.0);
    EXPECT_EQ(s.soc, 0.0);
    EXPECT_TRUE(s.depleted);
    EXPECT_EQ(s.current, 0.0);
    EXPECT_GE(s.terminal_voltage, kMinTerminalVoltage);
    EXPECT_THROW(draw(s, -1.0, 1.0), std::domain_error);
    EXPECT_THROW(draw(s, 1.0, 0.0), std::domain_error);
}

TEST(LoadedVoltage, SatisfiesTheCircuitEquation) {
    const BatteryParams p;
    for (double soc : {1.0, 0.7, 0.3, 0.12}) {
        const BatteryState s = battery_at(soc);
        for (double g : {0.0, 1.0 / 2.7, 2.0 / 2.7, 3.0 / 2.7}) {
            const double v = loaded_voltage(s, g);
            const double current = v * g + p.quiescent_current;
            EXPECT_NEAR(v, ocv(soc) - current * p.internal_resistance, 1e-12);
        }
    }
    BatteryState dead = battery_at(0.0);
    EXPECT_EQ(loaded_voltage(dead, 1.0), 0.0);
}

TEST(LoadedVoltage, FullLoadSagAndCurrent) {
    const PlantParams plant = load_plant_params(PADTWIN_SOURCE_DIR "/plant.default.params");
    const BatteryState full = battery_at(1.0);
    const double v = heater_voltage(full, {1, 1, 1}, plant, {});
    // Hand value: G = 3/2.7 = 1.1111 S; V = (4.2 - 0.0005) / (1 + 0.05 * 1.1111) = 3.9786 V.
    EXPECT_NEAR(v, 3.9786, 5e-4);
    EXPECT_NEAR(v * 3 / 2.7, 4.42, 0.01);
    EXPECT_NEAR(heater_power(full, {1, 1, 1}, plant, {}), 17.59, 0.01);
    EXPECT_LT(v * 3 / 2.7 + 0.01, 5.0);
}

TEST(Physics, OvercurrentStepGivesTheHeaterNothing) {
    PlantParams plant = load_plant_params(PADTWIN_SOURCE_DIR "/plant.default.params");
    BatteryParams tight;
    tight.max_current = 1.0;
    PhysicsState s{equilibrium_state(plant, 30.0), battery_at(1.0, tight)};
    const PhysicsState n = advance_physics(s, {1, 1, 1}, plant, tight, 0.1);
    EXPECT_TRUE(n.battery.overcurrent);
    EXPECT_EQ(n.plant.zone_coil_temp, s.plant.zone_coil_temp);
}

TEST(Physics, FullPowerRuntimeNearHalfAnHour) {
    const PlantParams plant = load_plant_params(PADTWIN_SOURCE_DIR "/plant.default.params");
    PhysicsState s{equilibrium_state(plant, 30.0), battery_at(1.0)};
    double t = 0.0;
    while (!s.battery.depleted && t < 7200.0) {
        s = advance_physics(s, {1, 1, 1}, plant, {}, 0.1);
        t += 0.1;
    }
    EXPECT_TRUE(s.battery.depleted);
    EXPECT_GE(t, 1440.0);
    EXPECT_LE(t, 2160.0);
}

TEST(Physics, QuiescentDrainPerDay) {
    const BatteryState s = draw(battery_at(1.0), 0.010, 3600.0 * 24);
    EXPECT_NEAR(2200.0 - s.charge, 240.0, 1e-9);
}
