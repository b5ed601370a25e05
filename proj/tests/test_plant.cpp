#include "padtwin/params_io.hpp"
#include "padtwin/physics.hpp"
#include "padtwin/plant.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace padtwin;

namespace {

PlantParams defaults() { return load_plant_params(PADTWIN_SOURCE_DIR "/plant.default.params"); }

double hottest_node(const PlantState& s) {
    const double c = *std::max_element(s.zone_coil_temp.begin(), s.zone_coil_temp.end());
    const double p = *std::max_element(s.zone_pad_temp.begin(), s.zone_pad_temp.end());
    return std::max({c, p, s.skin_temp});
}

PlantState random_warm_state(const PlantParams& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> warm(30.0, 60.0);
    PlantState s = equilibrium_state(p, 30.0);
    for (std::size_t i = 0; i < kZones; ++i) {
        s.zone_coil_temp[i] = warm(rng);
        s.zone_pad_temp[i] = warm(rng);
    }
    s.skin_temp = skin_temperature(s.zone_pad_temp, s.ambient_temp, p);
    return s;
}

}  // namespace

TEST(Nichrome, ResistanceOfOneCoil) {
    // 36 AWG: d = 0.127 mm; NiCr 80/20 resistivity 1.10e-6 ohm m; 16 cm.
    const double d = 1.27e-4, len = 0.16, rho = 1.10e-6;
    const double area = 3.14159265358979 * d * d / 4.0;  // 1.2668e-8 m^2
    const double oracle = rho * len / area;              // 13.894 ohm
    EXPECT_NEAR(oracle, 13.89, 0.01);
    EXPECT_NEAR(nichrome_resistance(d, len, rho), oracle, 1e-9);
    EXPECT_NEAR(nichrome_resistance(d, len, rho) / 3.0, 4.63, 0.01);
}

TEST(Nichrome, LinearInLengthInverseSquareInDiameter) {
    const double r = nichrome_resistance(1.27e-4, 0.16, 1.10e-6);
    EXPECT_DOUBLE_EQ(nichrome_resistance(1.27e-4, 0.32, 1.10e-6), 2.0 * r);
    EXPECT_NEAR(nichrome_resistance(2.54e-4, 0.16, 1.10e-6), r / 4.0, 1e-12);
}

TEST(Nichrome, RejectsNonPositiveInputs) {
    EXPECT_THROW(nichrome_resistance(0.0, 0.16, 1.1e-6), std::domain_error);
    EXPECT_THROW(nichrome_resistance(1e-4, -1.0, 1.1e-6), std::domain_error);
    EXPECT_THROW(nichrome_resistance(1e-4, 0.16, 0.0), std::domain_error);
}

TEST(ElectricalPower, HandArithmetic) {
    EXPECT_NEAR(electrical_power(1.0, 4.2, 4.65), 3.79, 0.005);  // 17.64 / 4.65
    EXPECT_NEAR(electrical_power(0.5, 3.7, 4.65), 1.47, 0.005);  // 0.5 * 13.69 / 4.65
    EXPECT_EQ(electrical_power(0.0, 4.2, 4.65), 0.0);
    EXPECT_THROW(electrical_power(1.0, 4.2, 0.0), std::domain_error);
    EXPECT_THROW(electrical_power(1.0, 4.2, -1.0), std::domain_error);
}

TEST(Params, DefaultFileIsValidAndWithinCurrentLimit) {
    const PlantParams p = defaults();
    EXPECT_NO_THROW(validate(p));
    EXPECT_LE(full_load_current(p, 4.2), 5.0);
    EXPECT_GT(p.coil_heat_capacity, 0);
    EXPECT_GT(p.inter_zone_conductance, 0);
}

TEST(Params, ValidationRejectsBadValues) {
    PlantParams p = defaults();
    p.pad_heat_capacity = 0;
    EXPECT_THROW(validate(p), std::invalid_argument);
    p = defaults();
    p.coil_resistance = 2.0;  // 3 * 4.2 / 2 = 6.3 A
    EXPECT_THROW(validate(p), std::invalid_argument);
    p = defaults();
    p.loss_to_ambient_conductance = -1;
    EXPECT_THROW(validate(p), std::invalid_argument);
}

TEST(Params, FileRoundTripIsExact) {
    const PlantParams p = defaults();
    std::istringstream in(format_plant_params(p, "header line"));
    EXPECT_EQ(plant_params_from(parse_key_values(in, "mem")), p);
}

TEST(Params, UnknownOrMissingKeysAreRejected) {
    std::istringstream extra(format_plant_params(defaults(), "") + "bogus = 1\n");
    EXPECT_THROW(plant_params_from(parse_key_values(extra, "mem")), ConfigError);
    std::istringstream dup("ambient = 1\nambient = 2\n");
    EXPECT_THROW(parse_key_values(dup, "mem"), ConfigError);
    std::istringstream missing("ambient = 30\n");
    EXPECT_THROW(plant_params_from(parse_key_values(missing, "mem")), ConfigError);
}

TEST(Step, EquilibriumIsAFixedPoint) {
    const PlantParams p = defaults();
    const PlantState s0 = equilibrium_state(p, 30.0);
    const PlantState s1 = step(s0, p, {0, 0, 0}, 4.2, 0.1);
    EXPECT_EQ(s1.zone_coil_temp, s0.zone_coil_temp);
    EXPECT_EQ(s1.zone_pad_temp, s0.zone_pad_temp);
    EXPECT_DOUBLE_EQ(s1.skin_temp, s0.skin_temp);
    EXPECT_DOUBLE_EQ(s1.time, 0.1);
}

TEST(Step, RejectsOutOfRangeInputs) {
    const PlantParams p = defaults();
    const PlantState s = equilibrium_state(p, 30.0);
    EXPECT_THROW(step(s, p, {0, 0, 0}, 4.2, 0.0), std::invalid_argument);
    EXPECT_THROW(step(s, p, {0, 0, 0}, 4.2, 0.6), std::invalid_argument);
    EXPECT_THROW(step(s, p, {0, 1.5, 0}, 4.2, 0.1), std::invalid_argument);
    EXPECT_THROW(step(s, p, {0, 0, 0}, 4.3, 0.1), std::invalid_argument);
    PlantState bad = s;
    bad.zone_pad_temp[1] = std::nan("");
    EXPECT_THROW(step(bad, p, {0, 0, 0}, 4.2, 0.1), PlantError);
    bad = s;
    bad.zone_coil_temp[2] = INFINITY;
    EXPECT_THROW(step(bad, p, {0, 0, 0}, 4.2, 0.1), PlantError);
}

TEST(Step, FullPowerFromAFullCellReaches55InAboutNinetySeconds) {
    const PlantParams p = defaults();
    PhysicsState s{equilibrium_state(p, 30.0), battery_at(1.0)};
    double crossing = -1;
    for (int k = 0; k < 3000 && crossing < 0; ++k) {
        s = advance_physics(s, {1, 1, 1}, p, {}, 0.1);
        if (s.plant.zone_coil_temp[0] >= 55.0) crossing = s.plant.time;
    }
    EXPECT_GE(crossing, 81.0);
    EXPECT_LE(crossing, 99.0);
}

TEST(Step, StiffSupplyHitsTheCapFarSooner) {
    // The curve approaches 55 C asymptotically, so the 5 % extra voltage of an
    // unloaded cell moves the crossing a long way.
    const PlantParams p = defaults();
    PlantState s = equilibrium_state(p, 30.0);
    double crossing = -1;
    for (int k = 0; k < 3000 && crossing < 0; ++k) {
        s = step(s, p, {1, 1, 1}, 4.2, 0.1);
        if (s.zone_coil_temp[0] >= 55.0) crossing = s.time;
    }
    EXPECT_GT(crossing, 0.0);
    EXPECT_LT(crossing, 81.0);
}

TEST(Properties, EnergyBalancePerStep) {
    const PlantParams p = defaults();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> duty(0.0, 1.0), volts(0.0, 4.2);
    for (int trial = 0; trial < 2000; ++trial) {
        const PlantState s = random_warm_state(p, rng);
        const ZoneDuty d{duty(rng), duty(rng), duty(rng)};
        const double v = volts(rng);
        const double dt = 0.1;
        const PlantState n = step(s, p, d, v, dt);
        double e_in = 0;
        for (double x : d) e_in += x * v * v / p.coil_resistance * dt;
        const double lost = p.loss_to_ambient_conductance * (s.skin_temp - s.ambient_temp) * dt;
        const double gained = stored_heat(n, p) - stored_heat(s, p);
        ASSERT_LE(gained, e_in + 1e-9);
        ASSERT_NEAR(gained + lost, e_in, 1e-9 + 1e-9 * e_in);
    }
}

TEST(Properties, StoredHeatMatchesInputAsDtShrinks) {
    // From ambient, over a short burst the loss term is second order in time.
    const PlantParams p = defaults();
    for (double dt : {0.01, 0.001}) {
        PlantState s = equilibrium_state(p, 30.0);
        const double horizon = 0.5;
        const int n = static_cast<int>(std::lround(horizon / dt));
        double e_in = 0;
        for (int k = 0; k < n; ++k) {
            s = step(s, p, {1, 1, 1}, 4.2, dt);
            e_in += 3 * 4.2 * 4.2 / p.coil_resistance * dt;
        }
        EXPECT_NEAR(stored_heat(s, p) / e_in, 1.0, 0.01) << "dt " << dt;
    }
}

TEST(Properties, MonotoneHeatup) {
    const PlantParams p = defaults();
    PlantState s = equilibrium_state(p, 30.0);
    for (int k = 0; k < 6000; ++k) {
        const PlantState n = step(s, p, {1, 1, 1}, 4.0, 0.1);
        for (std::size_t i = 0; i < kZones; ++i) {
            ASSERT_GE(n.zone_coil_temp[i], s.zone_coil_temp[i] - 1e-12) << "step " << k;
        }
        s = n;
    }
}

TEST(Properties, CoolingIsStrictAndConvergesToAmbient) {
    const PlantParams p = defaults();
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        PlantState s = random_warm_state(p, rng);
        for (int k = 0; k < 200; ++k) {
            const PlantState n = step(s, p, {0, 0, 0}, 0.0, 0.1);
            ASSERT_LT(hottest_node(n), hottest_node(s)) << "trial " << trial << " step " << k;
            s = n;
        }
        for (int k = 0; k < 20000; ++k) {
            s = step(s, p, {0, 0, 0}, 0.0, 0.1);
        }
        EXPECT_NEAR(hottest_node(s), 30.0, 1e-3);
    }
}

TEST(Properties, DeterministicTrajectories) {
    const PlantParams p = defaults();
    PlantState a = equilibrium_state(p, 30.0), b = a;
    NoiseRng ra(42), rb(42);
    for (int k = 0; k < 5000; ++k) {
        const ZoneDuty d{double(k % 3 == 0), double(k % 5 != 0), 1.0};
        a = step(a, p, d, 4.1, 0.1);
        b = step(b, p, d, 4.1, 0.1);
        ASSERT_EQ(a, b);
        ASSERT_EQ(thermistor_read(a, k % 3, {}, p, ra), thermistor_read(b, k % 3, {}, p, rb));
    }
}

TEST(Properties, HalvingDtMovesThe90sTemperatureLittle) {
    const PlantParams p = defaults();
    auto at90 = [&](double dt) {
        PlantState s = equilibrium_state(p, 30.0);
        const int n = static_cast<int>(std::lround(90.0 / dt));
        for (int k = 0; k < n; ++k) s = step(s, p, {1, 1, 1}, 4.2, dt);
        return s.zone_coil_temp[1];
    };
    EXPECT_LT(std::abs(at90(0.1) - at90(0.05)), 0.5);
    EXPECT_LT(std::abs(at90(0.05) - at90(0.025)), 0.5);
}

TEST(Thermistor, NoiselessPassthrough) {
    PlantParams p = defaults();
    p.sensor_noise_sd = 0.0;
    PlantState s = equilibrium_state(p, 30.0);
    s.zone_coil_temp = {41.5, 47.25, 50.0};
    NoiseRng rng(1);
    for (std::size_t z = 0; z < kZones; ++z) {
        EXPECT_EQ(thermistor_read(s, z, {}, p, rng), s.zone_coil_temp[z]);
    }
}

TEST(Thermistor, FaultOverlays) {
    PlantParams p = defaults();
    p.sensor_noise_sd = 0.0;
    PlantState s = equilibrium_state(p, 30.0);
    s.zone_coil_temp = {50.0, 50.0, 50.0};
    s.time = 100.0;
    NoiseRng rng(1);
    EXPECT_EQ(thermistor_read(s, 1, SensorFault::stuck(1, 30.0, 10.0), p, rng), 30.0);
    EXPECT_EQ(thermistor_read(s, 0, SensorFault::stuck(1, 30.0, 10.0), p, rng), 50.0);  // other zone
    EXPECT_EQ(thermistor_read(s, 1, SensorFault::stuck(1, 30.0, 150.0), p, rng), 50.0);  // not yet
    EXPECT_DOUBLE_EQ(thermistor_read(s, 2, SensorFault::drift(2, 0.1, 40.0), p, rng), 56.0);
    EXPECT_EQ(thermistor_read(s, 0, SensorFault::open_circuit(0, 0.0), p, rng), -273.0);
    EXPECT_THROW(thermistor_read(s, 3, {}, p, rng), std::out_of_range);
}

TEST(Thermistor, NoiseHasConfiguredSpread) {
    const PlantParams p = defaults();
    const PlantState s = equilibrium_state(p, 30.0);
    NoiseRng rng(9);
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
        const double e = thermistor_read(s, 0, {}, p, rng) - 30.0;
        sum += e;
        sq += e * e;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.005);
    EXPECT_NEAR(std::sqrt(sq / n), p.sensor_noise_sd, 0.005);
}

TEST(Thermistor, FaultsDoNotShiftTheNoiseStream) {
    const PlantParams p = defaults();
    PlantState s = equilibrium_state(p, 30.0);
    NoiseRng a(5), b(5);
    thermistor_read(s, 0, SensorFault::open_circuit(0, 0.0), p, a);
    thermistor_read(s, 0, {}, p, b);
    EXPECT_EQ(thermistor_read(s, 1, {}, p, a), thermistor_read(s, 1, {}, p, b));
}
