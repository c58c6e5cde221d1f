#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rfaffect/synth.hpp"

using namespace rfaffect;

TEST_CASE("body_motion reproduces a clean sinusoid") {
    const double amp = 0.004, freq = 0.25, rate = 50.0, phase = 0.8;
    TimeSeries m = body_motion({{amp, freq, phase}}, 0.0, 0.0, rate, 20.0, 1);
    REQUIRE(m.size() == 1000);
    REQUIRE(m.sample_rate == rate);
    for (std::size_t i = 0; i < m.size(); ++i) {
        double expect = amp * std::sin(phase + 2.0 * M_PI * freq * static_cast<double>(i) / rate);
        REQUIRE(m.samples[i] == Catch::Approx(expect).margin(1e-12));
    }
}

TEST_CASE("body_motion sums components and is seed-deterministic") {
    std::vector<MotionComponent> comps{{0.005, 0.2, 0.0}, {0.0005, 1.2, 0.3}};
    TimeSeries a = body_motion(comps, 0.05, 0.0002, 50.0, 30.0, 42);
    TimeSeries b = body_motion(comps, 0.05, 0.0002, 50.0, 30.0, 42);
    TimeSeries c = body_motion(comps, 0.05, 0.0002, 50.0, 30.0, 43);
    REQUIRE(a.samples == b.samples);
    REQUIRE(a.samples != c.samples);
}

TEST_CASE("phase model slope matches -2*w0/c") {
    RadarConfig rc;
    rc.noise_std = 0.0;
    rc.phase_offset = 0.25;
    TimeSeries motion = body_motion({{0.005, 0.2, 0.0}}, 0.0, 0.0, 50.0, 30.0, 7);
    TimeSeries phase = simulate_rf_phase(motion, rc, 7);

    // Least-squares slope of phase against displacement.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(motion.size());
    for (std::size_t i = 0; i < motion.size(); ++i) {
        sx += motion.samples[i];
        sy += phase.samples[i];
        sxx += motion.samples[i] * motion.samples[i];
        sxy += motion.samples[i] * phase.samples[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double expected = -2.0 * (2.0 * M_PI * rc.carrier_frequency) / 299792458.0;
    REQUIRE(slope == Catch::Approx(expected).epsilon(1e-9));
    double intercept = (sy - slope * sx) / n;
    REQUIRE(intercept == Catch::Approx(0.25).margin(1e-9));
}

TEST_CASE("noise-free phase correlates perfectly with motion") {
    RadarConfig rc;
    rc.noise_std = 0.0;
    TimeSeries motion = body_motion({{0.005, 0.2, 0.4}, {0.0005, 1.3, 0.0}}, 0.0, 0.0, 50.0,
                                    40.0, 3);
    TimeSeries phase = simulate_rf_phase(motion, rc, 3);
    REQUIRE(oracle::pearson(motion.samples, phase.samples) < -0.999999);
}

TEST_CASE("5 mm of chest motion at 5.8 GHz swings the phase by 1.2156 rad") {
    RadarConfig rc;
    rc.carrier_frequency = 5.8e9;
    rc.noise_std = 0.0;
    TimeSeries motion = body_motion({{0.005, 0.2, 0.0}}, 0.0, 0.0, 50.0, 30.0, 1);
    TimeSeries phase = simulate_rf_phase(motion, rc, 1);
    auto [mn, mx] = std::minmax_element(phase.samples.begin(), phase.samples.end());
    double measured = (*mx - *mn) / 2.0;
    double expected = 2.0 * (2.0 * M_PI * 5.8e9) * 0.005 / 299792458.0;
    REQUIRE(measured == Catch::Approx(expected).epsilon(5e-4));
    REQUIRE(expected == Catch::Approx(1.2156).epsilon(1e-4));
}

TEST_CASE("phase model rejects nonphysical setups") {
    RadarConfig rc;
    TimeSeries too_big({0.0, 0.4}, 50.0);
    REQUIRE_THROWS_AS(simulate_rf_phase(too_big, rc, 1), std::invalid_argument);
    rc.reflection_magnitude = 1.5;
    TimeSeries ok({0.0, 0.001}, 50.0);
    REQUIRE_THROWS_AS(simulate_rf_phase(ok, rc, 1), std::invalid_argument);
}

TEST_CASE("synthetic ecg puts unit bumps at the configured rhythm") {
    const double hr = 70.0, rate = 250.0;
    TimeSeries ecg = synthesize_ecg(hr, 0.0, rate, 30.0, 5);
    REQUIRE(ecg.sample_rate == rate);
    std::vector<double> peak_times;
    for (std::size_t i = 1; i + 1 < ecg.size(); ++i)
        if (ecg.samples[i] > 0.5 && ecg.samples[i] >= ecg.samples[i - 1] &&
            ecg.samples[i] > ecg.samples[i + 1])
            peak_times.push_back(ecg.time_at(i));
    const double rr = 60.0 / hr;
    REQUIRE(peak_times.size() == static_cast<std::size_t>((30.0 - 0.4) / rr) + 1);
    for (std::size_t i = 1; i < peak_times.size(); ++i)
        REQUIRE(peak_times[i] - peak_times[i - 1] == Catch::Approx(rr).margin(1.0 / rate));
    REQUIRE(*std::max_element(ecg.samples.begin(), ecg.samples.end()) ==
            Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("default profiles cover each emotion exactly once") {
    auto profiles = default_profiles();
    REQUIRE(profiles.size() == emotion_names().size());
    std::vector<bool> seen(profiles.size(), false);
    for (const auto& p : profiles) {
        REQUIRE(p.label >= 0);
        REQUIRE(p.label < static_cast<int>(profiles.size()));
        REQUIRE_FALSE(seen[static_cast<std::size_t>(p.label)]);
        seen[static_cast<std::size_t>(p.label)] = true;
        REQUIRE(p.breathing.amplitude > 0.0);
        REQUIRE(p.heartbeat.frequency > p.breathing.frequency);
    }
}

TEST_CASE("generate_dataset yields subjects x emotions labeled samples") {
    RadarConfig rc;
    rc.duration = 20.0;
    LabeledDataset ds = generate_dataset(default_profiles(), 3, rc, 11, true, 250.0);
    REQUIRE(ds.size() == 12);
    std::vector<int> per_class(4, 0);
    for (const auto& s : ds.samples) {
        ++per_class[static_cast<std::size_t>(s.label)];
        REQUIRE(s.rf.size() == 1000);
        REQUIRE(s.ecg.has_value());
        REQUIRE(s.ecg->sample_rate == 250.0);
    }
    for (int c : per_class)
        REQUIRE(c == 3);
    REQUIRE(ds.samples[0].id == "s00_relax");
    REQUIRE(ds.samples[5].id == "s01_scary");

    LabeledDataset again = generate_dataset(default_profiles(), 3, rc, 11, true, 250.0);
    for (std::size_t i = 0; i < ds.size(); ++i)
        REQUIRE(ds.samples[i].rf.samples == again.samples[i].rf.samples);
    LabeledDataset other = generate_dataset(default_profiles(), 3, rc, 12, true, 250.0);
    REQUIRE(ds.samples[0].rf.samples != other.samples[0].rf.samples);

    LabeledDataset no_ecg = generate_dataset(default_profiles(), 2, rc, 11, false);
    REQUIRE_FALSE(no_ecg.samples[0].ecg.has_value());
}

TEST_CASE("seed derivation separates streams") {
    REQUIRE(seedmix::derive(1, 2) != seedmix::derive(1, 3));
    REQUIRE(seedmix::derive(1, 2, 3) != seedmix::derive(1, 2, 4));
    REQUIRE(seedmix::derive(1, 2, 3, 4) != seedmix::derive(1, 2, 3, 5));
    REQUIRE(seedmix::derive(1, 2) == seedmix::derive(1, 2));
    std::uint64_t s = 9;
    std::uint64_t a = seedmix::next(s);
    std::uint64_t b = seedmix::next(s);
    REQUIRE(a != b);
}
