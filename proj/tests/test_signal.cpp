#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "rfaffect/signal.hpp"
#include "rfaffect/time_series.hpp"

using namespace rfaffect;

namespace {

TimeSeries sine(double freq, double rate, double duration, double amp = 1.0) {
    std::size_t n = static_cast<std::size_t>(duration * rate);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = amp * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / rate);
    return TimeSeries(std::move(v), rate);
}

double mid_amplitude(const TimeSeries& ts) {
    std::size_t a = ts.size() / 4, b = 3 * ts.size() / 4;
    double peak = 0.0;
    for (std::size_t i = a; i < b; ++i)
        peak = std::max(peak, std::abs(ts.samples[i]));
    return peak;
}

}  // namespace

TEST_CASE("resample at the source rate reproduces the samples") {
    TimeSeries ts = sine(1.3, 50.0, 4.0);
    TimeSeries out = resample(ts, 50.0);
    REQUIRE(out.size() == ts.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        REQUIRE(out.samples[i] == Catch::Approx(ts.samples[i]).margin(1e-12));
}

TEST_CASE("resample tracks the underlying waveform") {
    TimeSeries ts = sine(1.0, 50.0, 10.0);
    TimeSeries out = resample(ts, 154.0);
    REQUIRE(out.sample_rate == 154.0);
    // Linear interpolation error bound for 1 Hz at 50 Hz is ~2e-3.
    for (std::size_t i = 0; i < out.size(); ++i) {
        double t = static_cast<double>(i) / 154.0;
        REQUIRE(out.samples[i] == Catch::Approx(std::sin(2.0 * M_PI * t)).margin(5e-3));
    }
}

TEST_CASE("resample keeps the time extent") {
    TimeSeries ts = sine(2.0, 50.0, 6.0);
    TimeSeries out = resample(ts, 13.0);
    REQUIRE(std::abs(out.span() - ts.span()) <= 1.0 / 13.0);
    REQUIRE(out.start_time == ts.start_time);
}

TEST_CASE("resample_to_length is exact on ramps and preserves endpoints") {
    std::vector<double> ramp{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<double> out = resample_to_length(ramp, 19);
    REQUIRE(out.size() == 19);
    REQUIRE(out.front() == 0.0);
    REQUIRE(out.back() == 9.0);
    for (std::size_t i = 0; i < out.size(); ++i)
        REQUIRE(out[i] == Catch::Approx(9.0 * static_cast<double>(i) / 18.0).margin(1e-12));
    REQUIRE(resample_to_length(std::vector<double>{4.0}, 5) ==
            std::vector<double>{4.0, 4.0, 4.0, 4.0, 4.0});
    REQUIRE_THROWS_AS(resample_to_length({}, 3), std::invalid_argument);
}

TEST_CASE("bandpass leaves the passband center untouched") {
    TimeSeries ts = sine(1.0, 50.0, 40.0);
    TimeSeries out = butterworth_bandpass(ts, 0.5, 2.0, 4);
    double expected = butterworth_bandpass_gain(1.0, 0.5, 2.0, 4, 50.0);
    REQUIRE(expected > 0.95);
    REQUIRE(mid_amplitude(out) == Catch::Approx(expected).epsilon(0.02));
}

TEST_CASE("bandpass attenuation follows the analytic response") {
    for (double f : {0.2, 3.5, 6.0}) {
        TimeSeries ts = sine(f, 50.0, 60.0);
        TimeSeries out = butterworth_bandpass(ts, 0.5, 2.0, 4);
        double expected = butterworth_bandpass_gain(f, 0.5, 2.0, 4, 50.0);
        REQUIRE(mid_amplitude(out) ==
                Catch::Approx(expected).epsilon(0.05).margin(expected * 0.05 + 2e-4));
    }
}

TEST_CASE("analytic gain is exactly one half at the prewarped band edges") {
    for (int order : {2, 4, 6}) {
        REQUIRE(butterworth_bandpass_gain(0.5, 0.5, 2.0, order, 50.0) ==
                Catch::Approx(0.5).margin(1e-12));
        REQUIRE(butterworth_bandpass_gain(2.0, 0.5, 2.0, order, 50.0) ==
                Catch::Approx(0.5).margin(1e-12));
    }
}

TEST_CASE("filtering is zero-phase in the passband") {
    TimeSeries ts = sine(1.0, 50.0, 40.0);
    TimeSeries out = butterworth_bandpass(ts, 0.5, 2.0, 4);
    double g = butterworth_bandpass_gain(1.0, 0.5, 2.0, 4, 50.0);
    // Sample-wise match to the scaled input implies no phase shift.
    for (std::size_t i = ts.size() / 4; i < 3 * ts.size() / 4; ++i)
        REQUIRE(out.samples[i] == Catch::Approx(g * ts.samples[i]).margin(0.02));
}

TEST_CASE("normalize zscore and minmax") {
    TimeSeries ts({1.0, 2.0, 4.0, 8.0, 1.0}, 10.0);
    TimeSeries z = normalize(ts, NormalizationMethod::zscore);
    double mean = 0.0;
    for (double v : z.samples)
        mean += v;
    mean /= static_cast<double>(z.size());
    REQUIRE(mean == Catch::Approx(0.0).margin(1e-12));
    double ss = 0.0;
    for (double v : z.samples)
        ss += (v - mean) * (v - mean);
    REQUIRE(std::sqrt(ss / static_cast<double>(z.size() - 1)) == Catch::Approx(1.0).margin(1e-12));

    TimeSeries m = normalize(ts, NormalizationMethod::minmax);
    REQUIRE(*std::min_element(m.samples.begin(), m.samples.end()) == 0.0);
    REQUIRE(*std::max_element(m.samples.begin(), m.samples.end()) == 1.0);

    TimeSeries flat({3.0, 3.0, 3.0}, 10.0);
    REQUIRE_THROWS_AS(normalize(flat, NormalizationMethod::zscore), std::domain_error);
    REQUIRE_THROWS_AS(normalize(flat, NormalizationMethod::minmax), std::domain_error);
}

TEST_CASE("crop_tail keeps the end of the recording") {
    TimeSeries ts = sine(1.0, 10.0, 12.0);
    TimeSeries out = crop_tail(ts, 5.0);
    REQUIRE(out.size() == 50);
    REQUIRE(out.sample_rate == 10.0);
    REQUIRE(out.start_time == Catch::Approx(7.0));
    for (std::size_t i = 0; i < out.size(); ++i)
        REQUIRE(out.samples[i] == ts.samples[ts.size() - 50 + i]);
    REQUIRE_THROWS_AS(crop_tail(ts, 13.0), std::invalid_argument);
    REQUIRE_THROWS_AS(crop_tail(ts, 0.0), std::invalid_argument);
}

TEST_CASE("detrend removes a linear ramp") {
    std::vector<double> v(200);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = 3.0 + 0.25 * static_cast<double>(i);
    TimeSeries out = detrend(TimeSeries(std::move(v), 50.0));
    for (double s : out.samples)
        REQUIRE(s == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("detrend preserves the residual around the trend") {
    TimeSeries ts = sine(1.0, 50.0, 8.0);
    for (std::size_t i = 0; i < ts.size(); ++i)
        ts.samples[i] += 5.0 - 0.1 * static_cast<double>(i);
    TimeSeries out = detrend(ts);
    TimeSeries pure = sine(1.0, 50.0, 8.0);
    // A pure sine has a small least-squares slope of its own; detrending the
    // sum must match detrending the sine alone.
    TimeSeries ref = detrend(pure);
    for (std::size_t i = 0; i < out.size(); ++i)
        REQUIRE(out.samples[i] == Catch::Approx(ref.samples[i]).margin(1e-9));
}

TEST_CASE("time series csv round-trips bit-exactly") {
    namespace fs = std::filesystem;
    TimeSeries ts({0.1, -2.5e-7, 3.141592653589793, 12345.6789, -1.0 / 3.0}, 123.456, 0.5);
    fs::path tmp = fs::temp_directory_path() / "rfaffect_ts_roundtrip.csv";
    write_time_series_csv(ts, tmp.string());
    TimeSeries back = read_time_series_csv(tmp.string());
    REQUIRE(back.size() == ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i)
        REQUIRE(back.samples[i] == ts.samples[i]);
    REQUIRE(back.sample_rate == Catch::Approx(ts.sample_rate).epsilon(1e-12));
    REQUIRE(back.start_time == Catch::Approx(ts.start_time).margin(1e-12));
    fs::remove(tmp);
}
