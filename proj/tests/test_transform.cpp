#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "rfaffect/fft.hpp"
#include "rfaffect/transform.hpp"

using namespace rfaffect;

namespace {

TimeSeries sine(double freq, double rate, double duration, double amp = 1.0) {
    std::size_t n = static_cast<std::size_t>(duration * rate);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = amp * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / rate);
    return TimeSeries(std::move(v), rate);
}

}  // namespace

TEST_CASE("fft matches the direct dft for many lengths") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t n : {2u, 3u, 5u, 7u, 8u, 12u, 13u, 16u, 31u, 60u, 64u, 100u, 127u, 128u,
                          243u, 256u}) {
        std::vector<std::complex<double>> x(n);
        for (auto& v : x)
            v = {u(rng), u(rng)};
        std::vector<std::complex<double>> want = oracle::dft(x);
        std::vector<std::complex<double>> got = x;
        fft(got);
        for (std::size_t k = 0; k < n; ++k)
            REQUIRE(std::abs(got[k] - want[k]) <= 1e-9);
    }
}

TEST_CASE("inverse fft undoes the forward transform") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t n : {4u, 9u, 50u, 128u}) {
        std::vector<std::complex<double>> x(n);
        for (auto& v : x)
            v = {u(rng), u(rng)};
        std::vector<std::complex<double>> y = x;
        fft(y);
        fft(y, true);
        for (std::size_t k = 0; k < n; ++k)
            REQUIRE(std::abs(y[k] - x[k]) <= 1e-12);
    }
}

TEST_CASE("periodogram satisfies parseval") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(500);
    for (auto& x : v)
        x = g(rng);
    TimeSeries ts(std::move(v), 50.0);
    PowerSpectrum ps = periodogram(ts);
    const double df = ps.frequencies[1] - ps.frequencies[0];
    double integral = 0.0;
    for (double p : ps.power)
        integral += p * df;
    double mean_power = 0.0;
    for (double x : ts.samples)
        mean_power += x * x;
    mean_power /= static_cast<double>(ts.size());
    REQUIRE(integral == Catch::Approx(mean_power).epsilon(1e-6));
}

TEST_CASE("periodogram concentrates a sine at its frequency") {
    TimeSeries ts = sine(2.0, 50.0, 20.0);
    PowerSpectrum ps = periodogram(ts);
    std::size_t best = 0;
    for (std::size_t i = 1; i < ps.power.size(); ++i)
        if (ps.power[i] > ps.power[best])
            best = i;
    REQUIRE(ps.frequencies[best] == Catch::Approx(2.0).margin(0.051));
}

TEST_CASE("fft_magnitude has one-sided length") {
    TimeSeries ts = sine(1.0, 50.0, 4.0);
    std::vector<double> mag = fft_magnitude(ts);
    REQUIRE(mag.size() == ts.size() / 2 + 1);
}

TEST_CASE("cwt ridge sits at the tone's pseudo-frequency") {
    TimeSeries ts = sine(1.0, 50.0, 30.0);
    const int n_scales = 24;
    Scaleogram sg = cwt_morlet(ts, n_scales, 0.3, 3.0);
    REQUIRE(static_cast<int>(sg.magnitudes.size()) == n_scales);
    REQUIRE(sg.magnitudes[0].size() == ts.size());
    REQUIRE(std::is_sorted(sg.scales.begin(), sg.scales.end()));

    // Row with the largest mid-signal energy.
    std::size_t mid_a = ts.size() / 4, mid_b = 3 * ts.size() / 4;
    int ridge = 0;
    double best = -1.0;
    for (int s = 0; s < n_scales; ++s) {
        double e = 0.0;
        for (std::size_t t = mid_a; t < mid_b; ++t)
            e += sg.magnitudes[static_cast<std::size_t>(s)][t];
        if (e > best) {
            best = e;
            ridge = s;
        }
    }
    double f_ridge = cwtdetail::pseudo_frequency(sg.scales[static_cast<std::size_t>(ridge)]);
    // Log-spaced grid: the ridge must land within one scale step of 1 Hz.
    double step = std::log(3.0 / 0.3) / static_cast<double>(n_scales - 1);
    REQUIRE(std::abs(std::log(f_ridge / 1.0)) <= step + 1e-12);
}

TEST_CASE("cwt rejects out-of-range requests") {
    TimeSeries ts = sine(1.0, 50.0, 4.0);
    REQUIRE_THROWS_AS(cwt_morlet(ts, 8, 2.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(cwt_morlet(ts, 1, 0.5, 2.0), std::invalid_argument);
    REQUIRE_THROWS_AS(cwt_morlet(ts, 8, 0.5, 30.0), std::invalid_argument);
}

TEST_CASE("block_average computes plain block means") {
    Matrix m{{1, 2, 3, 4}, {5, 6, 7, 8}};
    Matrix out = block_average(m, 1, 2);
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].size() == 2);
    REQUIRE(out[0][0] == Catch::Approx((1 + 2 + 5 + 6) / 4.0));
    REQUIRE(out[0][1] == Catch::Approx((3 + 4 + 7 + 8) / 4.0));
}

TEST_CASE("block_average handles non-divisible shapes") {
    Matrix m{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
    Matrix out = block_average(m, 2, 2);
    REQUIRE(out.size() == 2);
    REQUIRE(out[0].size() == 2);
    double total_in = 0, total_out_weighted = 0;
    for (const auto& row : m)
        for (double v : row)
            total_in += v;
    (void)total_in;
    // Every input cell belongs to exactly one block; block means stay within
    // the input range.
    for (const auto& row : out)
        for (double v : row) {
            REQUIRE(v >= 1.0);
            REQUIRE(v <= 9.0);
            total_out_weighted += v;
        }
}

TEST_CASE("minmax01 maps onto the unit interval") {
    Matrix m{{2, 4}, {6, 10}};
    Matrix out = minmax01(m);
    REQUIRE(out[0][0] == 0.0);
    REQUIRE(out[1][1] == 1.0);
    REQUIRE(out[0][1] == Catch::Approx(0.25));
    Matrix flat{{3, 3}, {3, 3}};
    Matrix z = minmax01(flat);
    for (const auto& row : z)
        for (double v : row)
            REQUIRE(v == 0.0);
}

TEST_CASE("scaleogram_resize yields a unit-scaled image of the right shape") {
    TimeSeries ts = sine(1.0, 50.0, 20.0);
    Scaleogram sg = cwt_morlet(ts, 16, 0.3, 3.0);
    Matrix img = scaleogram_resize(sg, 12, 12);
    REQUIRE(img.size() == 12);
    double mn = 1e300, mx = -1e300;
    for (const auto& row : img) {
        REQUIRE(row.size() == 12);
        for (double v : row) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
    }
    REQUIRE(mn == 0.0);
    REQUIRE(mx == 1.0);
}

TEST_CASE("scaleogram pgm export is readable") {
    namespace fs = std::filesystem;
    TimeSeries ts = sine(1.0, 50.0, 10.0);
    Scaleogram sg = cwt_morlet(ts, 8, 0.5, 2.0);
    fs::path pgm = fs::temp_directory_path() / "rfaffect_test_sg.pgm";
    fs::path csv = fs::temp_directory_path() / "rfaffect_test_sg_scales.csv";
    write_scaleogram_pgm(sg, pgm.string(), csv.string());

    std::ifstream is(pgm);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    is >> magic >> w >> h >> maxval;
    REQUIRE(magic == "P2");
    REQUIRE(w == static_cast<int>(ts.size()));
    REQUIRE(h == 8);
    REQUIRE(maxval == 65535);
    long count = 0;
    int v;
    while (is >> v) {
        REQUIRE(v >= 0);
        REQUIRE(v <= 65535);
        ++count;
    }
    REQUIRE(count == static_cast<long>(w) * h);

    std::ifstream cs(csv);
    std::string header;
    std::getline(cs, header);
    REQUIRE(header == "scale_s,pseudo_freq_hz");
    int rows = 0;
    std::string line;
    while (std::getline(cs, line))
        if (!line.empty())
            ++rows;
    REQUIRE(rows == 8);
    fs::remove(pgm);
    fs::remove(csv);
}
