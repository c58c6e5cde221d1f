#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "rfaffect/features.hpp"
#include "rfaffect/synth.hpp"
#include "rfaffect/transform.hpp"

using namespace rfaffect;

TEST_CASE("permutation entropy of a monotone series is zero") {
    TimeSeries ts({1, 2, 3, 4, 5, 6, 7, 8}, 10.0);
    for (int order = 2; order <= 4; ++order)
        REQUIRE(permutation_entropy(ts, order, 1) == 0.0);
}

TEST_CASE("permutation entropy matches hand-enumerated patterns") {
    // Pairs: up, up, down, down -> two patterns, each p = 1/2.
    TimeSeries updown({1, 2, 3, 2, 1}, 10.0);
    REQUIRE(permutation_entropy(updown, 2, 1) == Catch::Approx(1.0).margin(1e-12));

    // Triples: (1,2,3)->012, (2,3,2)->021 via stable ties, (3,2,1)->210.
    // Three distinct patterns, once each: H = ln3 / ln3! = ln3/ln6.
    REQUIRE(permutation_entropy(updown, 3, 1) ==
            Catch::Approx(std::log(3.0) / std::log(6.0)).margin(1e-12));

    // Constant series: ties resolve stably to one pattern.
    TimeSeries flat({5, 5, 5, 5, 5, 5}, 10.0);
    REQUIRE(permutation_entropy(flat, 3, 1) == 0.0);

    // Delay 2 skips the sawtooth: subsampled pairs all ascend.
    TimeSeries saw({1, 3, 2, 4, 3, 5}, 10.0);
    REQUIRE(permutation_entropy(saw, 2, 2) == 0.0);
}

TEST_CASE("permutation entropy validates arguments") {
    TimeSeries ts({1, 2, 3, 4, 5, 6}, 10.0);
    REQUIRE_THROWS_AS(permutation_entropy(ts, 1, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(permutation_entropy(ts, 8, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(permutation_entropy(ts, 3, 0), std::invalid_argument);
    TimeSeries tiny({1, 2, 3}, 10.0);
    REQUIRE_THROWS_AS(permutation_entropy(tiny, 4, 1), std::invalid_argument);
}

TEST_CASE("band power integrates the spectrum piecewise-linearly") {
    PowerSpectrum ps;
    ps.frequencies = {0, 1, 2, 3, 4};
    ps.power = {0, 2, 4, 2, 0};
    REQUIRE(band_power(ps, 1.0, 3.0) == Catch::Approx(3.0 + 3.0).margin(1e-12));
    // Fractional edges: [1.5, 2.5] spans two half-segments.
    double left = 0.5 * (3.0 + 4.0) * 0.5;
    double right = 0.5 * (4.0 + 3.0) * 0.5;
    REQUIRE(band_power(ps, 1.5, 2.5) == Catch::Approx(left + right).margin(1e-12));
}

TEST_CASE("band power is additive across adjacent bands") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(400);
    for (auto& x : v)
        x = g(rng);
    PowerSpectrum ps = periodogram(TimeSeries(std::move(v), 50.0));
    double whole = band_power(ps, 0.4, 7.7);
    double parts = band_power(ps, 0.4, 2.3) + band_power(ps, 2.3, 5.0) + band_power(ps, 5.0, 7.7);
    REQUIRE(std::abs(whole - parts) <= 1e-9);
}

TEST_CASE("band power flags out-of-range requests") {
    PowerSpectrum ps;
    ps.frequencies = {0, 1, 2};
    ps.power = {1, 1, 1};
    bool oor = false;
    REQUIRE(band_power(ps, 5.0, 9.0, &oor) == 0.0);
    REQUIRE(oor);
    oor = true;
    band_power(ps, 0.5, 1.5, &oor);
    REQUIRE_FALSE(oor);
}

TEST_CASE("moments match the direct population formulas") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(2.0, 3.0);
    std::vector<double> v(257);
    for (auto& x : v)
        x = g(rng);
    oracle::MomentSet want = oracle::moments(v);
    Moments got = moments(TimeSeries(v, 10.0));
    REQUIRE(got.variance == Catch::Approx(want.variance).epsilon(1e-12));
    REQUIRE(got.skewness == Catch::Approx(want.skewness).margin(1e-12));
    REQUIRE(got.kurtosis == Catch::Approx(want.kurtosis).epsilon(1e-12));
    REQUIRE_THROWS_AS(moments(TimeSeries({4, 4, 4, 4}, 10.0)), std::domain_error);
}

TEST_CASE("gaussian kurtosis is reported non-excess") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(200000);
    for (auto& x : v)
        x = g(rng);
    Moments m = moments(TimeSeries(std::move(v), 10.0));
    REQUIRE(m.kurtosis == Catch::Approx(3.0).margin(0.1));
}

TEST_CASE("rf feature vector carries the seven named parameters") {
    REQUIRE(rf_feature_names() ==
            std::vector<std::string>{"permutation_entropy", "bp_0.15_2", "bp_2_4", "bp_4_8",
                                     "variance", "skewness", "kurtosis"});
    TimeSeries ts = body_motion({{1.0, 0.5, 0.1}, {0.2, 3.0, 0.9}}, 0.0, 0.05, 50.0, 30.0, 9);
    FeatureVector fv = rf_feature_vector(ts);
    REQUIRE(fv.names == rf_feature_names());
    REQUIRE(fv.values.size() == 7);

    REQUIRE(fv.values[0] == permutation_entropy(ts, 3, 1));
    PowerSpectrum ps = periodogram(ts);
    REQUIRE(fv.values[1] == Catch::Approx(band_power(ps, 0.15, 2.0)).margin(1e-15));
    REQUIRE(fv.values[2] == Catch::Approx(band_power(ps, 2.0, 4.0)).margin(1e-15));
    REQUIRE(fv.values[3] == Catch::Approx(band_power(ps, 4.0, 8.0)).margin(1e-15));
    oracle::MomentSet want = oracle::moments(ts.samples);
    REQUIRE(fv.values[4] == Catch::Approx(want.variance).epsilon(1e-12));
    REQUIRE(fv.values[5] == Catch::Approx(want.skewness).margin(1e-12));
    REQUIRE(fv.values[6] == Catch::Approx(want.kurtosis).epsilon(1e-12));
}

TEST_CASE("r-peak detection recovers the programmed rhythm") {
    for (double hr : {55.0, 70.0, 85.0, 100.0}) {
        TimeSeries ecg = synthesize_ecg(hr, 0.0, 250.0, 60.0, 21);
        IbiSeries ibi = detect_r_peaks(ecg);
        REQUIRE(ibi.beat_times.size() == ibi.rr_intervals.size() + 1);
        REQUIRE(ibi.rr_intervals.size() >= 40 * hr / 60.0 - 3);
        const double rr_true = 60.0 / hr;
        for (double rr : ibi.rr_intervals)
            REQUIRE(rr == Catch::Approx(rr_true).margin(1.0 / 250.0 + 1e-9));
    }
}

TEST_CASE("r-peak detection survives rhythm jitter") {
    TimeSeries ecg = synthesize_ecg(80.0, 0.03, 250.0, 60.0, 4);
    IbiSeries ibi = detect_r_peaks(ecg);
    double mean_rr = 0.0;
    for (double rr : ibi.rr_intervals)
        mean_rr += rr;
    mean_rr /= static_cast<double>(ibi.rr_intervals.size());
    REQUIRE(mean_rr == Catch::Approx(60.0 / 80.0).margin(0.02));
}

TEST_CASE("r-peak detection rejects unusable input") {
    TimeSeries shorty = synthesize_ecg(70.0, 0.0, 250.0, 2.0, 1);
    REQUIRE_THROWS_AS(detect_r_peaks(shorty), std::invalid_argument);
    TimeSeries flat(std::vector<double>(2500, 0.5), 250.0);
    REQUIRE_THROWS(detect_r_peaks(flat));
}

TEST_CASE("ibi feature registry holds exactly 81 named entries") {
    TimeSeries ecg = synthesize_ecg(75.0, 0.04, 250.0, 120.0, 8);
    FeatureVector fv = ibi_features(detect_r_peaks(ecg));
    REQUIRE(fv.values.size() == 81);
    REQUIRE(fv.names.size() == 81);
    std::set<std::string> unique(fv.names.begin(), fv.names.end());
    REQUIRE(unique.size() == 81);
    for (double v : fv.values)
        REQUIRE(std::isfinite(v));
}

TEST_CASE("ibi features refuse short recordings") {
    IbiSeries few;
    few.rr_intervals = {0.8, 0.8, 0.8};
    few.beat_times = {0.4, 1.2, 2.0, 2.8};
    REQUIRE_THROWS_AS(ibi_features(few), std::invalid_argument);
}

TEST_CASE("ibi validate checks consistency") {
    IbiSeries good;
    good.beat_times = {0.5};
    for (int i = 0; i < 12; ++i) {
        good.rr_intervals.push_back(0.8);
        good.beat_times.push_back(good.beat_times.back() + 0.8);
    }
    REQUIRE_NOTHROW(validate(good));
    IbiSeries bad = good;
    bad.rr_intervals[3] = 5.0;
    REQUIRE_THROWS(validate(bad));
    IbiSeries skewed = good;
    skewed.beat_times[4] += 0.2;
    REQUIRE_THROWS(validate(skewed));
}

TEST_CASE("sample entropy matches a direct template count") {
    // Smooth oscillation plus mild noise, so length-3 template matches exist.
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g(0.0, 0.1);
    std::vector<double> x(60);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::sin(2.0 * M_PI * static_cast<double>(i) / 16.0) + g(rng);
    double sd = std::sqrt(oracle::moments(x).variance);
    double r = 0.25 * sd;

    auto count = [&](std::size_t m) {
        std::size_t c = 0;
        for (std::size_t i = 0; i + m < x.size(); ++i)
            for (std::size_t j = i + 1; j + m < x.size(); ++j) {
                double d = 0.0;
                for (std::size_t k = 0; k <= m; ++k)
                    d = std::max(d, std::abs(x[i + k] - x[j + k]));
                if (d <= r)
                    ++c;
            }
        return static_cast<double>(c);
    };
    double want = -std::log(count(2) / count(1));
    REQUIRE(ibidetail::sample_entropy(x, r) == Catch::Approx(want).margin(1e-12));

    // With no template matches at a vanishing radius the convention is 0.
    REQUIRE(ibidetail::sample_entropy(x, 1e-15) == 0.0);
}

TEST_CASE("equal-frequency discretization balances bin counts") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::vector<double> x(64);
    for (auto& v : x)
        v = u(rng);
    std::vector<int> bins = mrmrdetail::discretize(x, 8);
    std::vector<int> counts(8, 0);
    for (int b : bins) {
        REQUIRE(b >= 0);
        REQUIRE(b < 8);
        ++counts[static_cast<std::size_t>(b)];
    }
    for (int c : counts)
        REQUIRE(c == 8);
}

TEST_CASE("mutual information matches the histogram oracle") {
    std::mt19937_64 rng(37);
    std::uniform_int_distribution<int> u(0, 3);
    std::vector<int> a(200), b(200);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = u(rng);
        b[i] = (u(rng) < 2) ? a[i] : u(rng);  // partially dependent
    }
    REQUIRE(mrmrdetail::mutual_information(a, b, 4, 4) ==
            Catch::Approx(oracle::mutual_information(a, b)).margin(1e-12));
}

TEST_CASE("mrmr keeps the informative pair and drops the duplicate") {
    // f0 carries the label, f1 duplicates f0, f2 is independent noise.
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> lab(0, 3);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t n = 120;
    std::vector<std::vector<double>> x(n, std::vector<double>(3));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = lab(rng);
        x[i][0] = static_cast<double>(y[i]);
        x[i][1] = static_cast<double>(y[i]);
        x[i][2] = g(rng);
    }
    std::vector<int> picked = mrmr_select(x, y, 2);
    REQUIRE(picked == std::vector<int>{0, 2});
}

TEST_CASE("mrmr prefers the lowest index among exact ties") {
    std::mt19937_64 rng(43);
    std::uniform_int_distribution<int> lab(0, 1);
    const std::size_t n = 64;
    std::vector<std::vector<double>> x(n, std::vector<double>(2));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = lab(rng);
        x[i][0] = static_cast<double>(y[i]);
        x[i][1] = static_cast<double>(y[i]);
    }
    REQUIRE(mrmr_select(x, y, 1) == std::vector<int>{0});
}

TEST_CASE("permutation_entropy_vec agrees with the series version") {
    std::mt19937_64 rng(47);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(100);
    for (auto& v : x)
        v = g(rng);
    REQUIRE(permutation_entropy_vec(x, 3, 1) ==
            permutation_entropy(TimeSeries(x, 4.0), 3, 1));
}
