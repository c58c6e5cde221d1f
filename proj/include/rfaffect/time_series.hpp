#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfaffect {

/// Uniformly sampled real-valued signal. Units of `samples` depend on the
/// producer (radians for RF phase, millivolts for ECG).
struct TimeSeries {
    std::vector<double> samples;
    double sample_rate = 1.0;  // Hz
    double start_time = 0.0;   // seconds

    TimeSeries() = default;
    TimeSeries(std::vector<double> s, double rate, double t0 = 0.0)
        : samples(std::move(s)), sample_rate(rate), start_time(t0) {}

    std::size_t size() const { return samples.size(); }

    // Each sample owns one sample period.
    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

    // Time span between first and last sample instants.
    double span() const {
        return samples.empty() ? 0.0 : static_cast<double>(samples.size() - 1) / sample_rate;
    }

    double time_at(std::size_t i) const { return start_time + static_cast<double>(i) / sample_rate; }
};

inline void validate(const TimeSeries& ts) {
    if (ts.samples.empty())
        throw std::invalid_argument("TimeSeries: empty sample vector");
    if (!(ts.sample_rate > 0.0) || !std::isfinite(ts.sample_rate))
        throw std::invalid_argument("TimeSeries: sample_rate must be positive and finite");
    for (double v : ts.samples)
        if (!std::isfinite(v))
            throw std::invalid_argument("TimeSeries: non-finite sample");
}

namespace detail {
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

/// CSV format: header `time,value`, one row per sample. Values are written
/// with enough digits to round-trip exactly.
inline void write_time_series_csv(const TimeSeries& ts, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    out << "time,value\n";
    for (std::size_t i = 0; i < ts.samples.size(); ++i)
        out << detail::format_g17(ts.time_at(i)) << ',' << detail::format_g17(ts.samples[i]) << '\n';
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

/// Reads `time,value` CSV. The sample rate is inferred from the first two
/// timestamps and every later step is checked for uniformity (1e-6 relative).
inline TimeSeries read_time_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty file: " + path);
    if (line.rfind("time,value", 0) != 0)
        throw std::runtime_error(path + ": expected header 'time,value'");
    std::vector<double> times, values;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error(path + ": malformed row '" + line + "'");
        times.push_back(std::stod(line.substr(0, comma)));
        values.push_back(std::stod(line.substr(comma + 1)));
    }
    if (times.size() < 2)
        throw std::runtime_error(path + ": need at least 2 samples to infer rate");
    double dt = times[1] - times[0];
    if (!(dt > 0.0))
        throw std::runtime_error(path + ": non-increasing timestamps");
    for (std::size_t i = 1; i + 1 < times.size(); ++i) {
        double step = times[i + 1] - times[i];
        if (std::abs(step - dt) > 1e-6 * std::abs(dt))
            throw std::runtime_error(path + ": non-uniform sampling at row " + std::to_string(i + 1));
    }
    TimeSeries ts(std::move(values), 1.0 / dt, times[0]);
    validate(ts);
    return ts;
}

}  // namespace rfaffect
