#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfaffect/dataset.hpp"
#include "rfaffect/time_series.hpp"

namespace rfaffect {

constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// One quasi-periodic term of the body-motion model f(t) = sum A_i sin(w_i t + phi_i).
struct MotionComponent {
    double amplitude = 0.0;  // meters
    double frequency = 0.0;  // Hz
    double phase = 0.0;      // radians
};

struct RadarConfig {
    double carrier_frequency = 5.8e9;    // Hz
    double static_distance = 0.30;       // meters, antenna to chest
    double reflection_magnitude = 1.0;   // |Gamma_0| in (0,1]
    double phase_offset = 0.0;           // radians, C_0 and phi_0 folded together
    double noise_std = 0.05;             // radians
    double sample_rate = 50.0;           // Hz
    double duration = 150.0;             // seconds
};

struct EmotionProfile {
    int label = 0;  // emotion index
    MotionComponent breathing;
    MotionComponent heartbeat;
    double hr_variability = 0.0;    // per-cycle frequency jitter fraction
    double motion_noise_std = 0.0;  // meters
    double burst_rate = 0.0;        // transient motion bursts per second (0 = none)
};

namespace seedmix {

// splitmix64; stable cross-platform seed derivation
inline std::uint64_t next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                            std::uint64_t c = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = next(s);
    s ^= a * 0xff51afd7ed558ccdULL;
    h ^= next(s);
    s ^= b * 0xc4ceb9fe1a85ec53ULL;
    h ^= next(s);
    s ^= c * 0x2545f4914f6cdd1dULL;
    h ^= next(s);
    return h;
}

}  // namespace seedmix

/// Sum of quasi-periodic components with per-cycle frequency jitter plus
/// Gaussian displacement noise. Each component's instantaneous frequency is
/// redrawn once per completed cycle from a seeded RNG.
inline TimeSeries body_motion(const std::vector<MotionComponent>& components, double jitter,
                              double noise_std, double rate, double duration,
                              std::uint64_t seed) {
    if (components.empty())
        throw std::invalid_argument("body_motion: empty component list");
    if (!(duration > 0.0) || !(rate > 0.0))
        throw std::invalid_argument("body_motion: rate and duration must be positive");
    const auto n = static_cast<std::size_t>(std::llround(duration * rate));
    std::vector<double> out(n, 0.0);
    for (std::size_t ci = 0; ci < components.size(); ++ci) {
        const auto& comp = components[ci];
        if (comp.amplitude < 0.0 || !(comp.frequency > 0.0))
            throw std::invalid_argument("body_motion: component needs amplitude >= 0, frequency > 0");
        std::mt19937_64 rng(seedmix::derive(seed, 0x10, ci));
        std::normal_distribution<double> gauss(0.0, 1.0);
        double phase = comp.phase;
        double next_redraw = 2.0 * M_PI;
        double freq = comp.frequency;
        if (jitter > 0.0)
            freq = std::max(0.05 * comp.frequency, comp.frequency * (1.0 + jitter * gauss(rng)));
        const double dt = 1.0 / rate;
        double accumulated = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] += comp.amplitude * std::sin(phase);
            phase += 2.0 * M_PI * freq * dt;
            accumulated += 2.0 * M_PI * freq * dt;
            if (jitter > 0.0 && accumulated >= next_redraw) {
                next_redraw += 2.0 * M_PI;
                freq = std::max(0.05 * comp.frequency,
                                comp.frequency * (1.0 + jitter * gauss(rng)));
            }
        }
    }
    if (noise_std > 0.0) {
        std::mt19937_64 rng(seedmix::derive(seed, 0x20));
        std::normal_distribution<double> gauss(0.0, noise_std);
        for (auto& v : out)
            v += gauss(rng);
    }
    return TimeSeries(std::move(out), rate);
}

/// The radar phase model: Phi(t) = C0 - (2/c) * w0 * f(t) for chest
/// displacement f(t) in meters, plus additive Gaussian phase noise whose
/// scale grows as the reflection magnitude shrinks.
inline TimeSeries simulate_rf_phase(const TimeSeries& motion, const RadarConfig& cfg,
                                    std::uint64_t seed) {
    validate(motion);
    if (!(cfg.carrier_frequency > 0.0) || !(cfg.static_distance > 0.0))
        throw std::invalid_argument("simulate_rf_phase: carrier and distance must be positive");
    if (!(cfg.reflection_magnitude > 0.0 && cfg.reflection_magnitude <= 1.0))
        throw std::invalid_argument("simulate_rf_phase: reflection magnitude must be in (0,1]");
    if (cfg.noise_std < 0.0)
        throw std::invalid_argument("simulate_rf_phase: noise_std must be >= 0");
    for (double m : motion.samples)
        if (std::abs(m) >= cfg.static_distance)
            throw std::invalid_argument("simulate_rf_phase: motion amplitude exceeds static distance");

    const double omega0 = 2.0 * M_PI * cfg.carrier_frequency;
    const double gain = -(2.0 / kSpeedOfLight) * omega0;
    std::vector<double> out(motion.samples.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = cfg.phase_offset + gain * motion.samples[i];
    if (cfg.noise_std > 0.0) {
        std::mt19937_64 rng(seedmix::derive(seed, 0x30));
        std::normal_distribution<double> gauss(0.0, cfg.noise_std / cfg.reflection_magnitude);
        for (auto& v : out)
            v += gauss(rng);
    }
    return TimeSeries(std::move(out), motion.sample_rate, motion.start_time);
}

/// Desk-scale ECG stand-in: a train of Gaussian-bump QRS complexes. RR
/// intervals are 60/mean_hr + N(0, hrv_std^2), clamped positive; the R-peak
/// bump amplitude is 1.0.
inline TimeSeries synthesize_ecg(double mean_hr, double hrv_std, double rate, double duration,
                                 std::uint64_t seed) {
    if (!(mean_hr >= 30.0 && mean_hr <= 220.0))
        throw std::invalid_argument("synthesize_ecg: mean_hr must be in [30, 220] bpm");
    if (!(rate >= 100.0))
        throw std::invalid_argument("synthesize_ecg: rate must be >= 100 Hz");
    if (!(duration > 0.0) || hrv_std < 0.0)
        throw std::invalid_argument("synthesize_ecg: bad duration or hrv_std");

    std::mt19937_64 rng(seedmix::derive(seed, 0x40));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> beats;
    double t = 0.4;  // fixed first-beat offset
    while (t < duration) {
        beats.push_back(t);
        double rr = 60.0 / mean_hr + (hrv_std > 0.0 ? hrv_std * gauss(rng) : 0.0);
        t += std::max(0.25, rr);
    }
    const auto n = static_cast<std::size_t>(std::llround(duration * rate));
    std::vector<double> out(n, 0.0);
    const double sigma = 0.012;  // QRS bump width, seconds
    const double support = 5.0 * sigma;
    for (double tb : beats) {
        auto i0 = static_cast<std::ptrdiff_t>(std::floor((tb - support) * rate));
        auto i1 = static_cast<std::ptrdiff_t>(std::ceil((tb + support) * rate));
        for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, i0);
             i <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, i1); ++i) {
            double dt = static_cast<double>(i) / rate - tb;
            out[static_cast<std::size_t>(i)] += std::exp(-dt * dt / (2.0 * sigma * sigma));
        }
    }
    return TimeSeries(std::move(out), rate);
}

/// Default emotion profiles. Breathing depth/rate and heart-rate statistics
/// shift with affective state; these parameter values are tuned by hand to
/// be separable but overlapping.
inline std::vector<EmotionProfile> default_profiles() {
    auto mk = [](Emotion e, double ba, double bf, double hr_bpm, double jit, double noise,
                 double bursts) {
        EmotionProfile p;
        p.label = static_cast<int>(e);
        p.breathing = {ba, bf, 0.0};
        p.heartbeat = {0.0005, hr_bpm / 60.0, 0.0};
        p.hr_variability = jit;
        p.motion_noise_std = noise;
        p.burst_rate = bursts;
        return p;
    };
    return {
        mk(Emotion::relax, 0.0060, 0.20, 65.0, 0.02, 0.00015, 0.0),
        mk(Emotion::scary, 0.0040, 0.35, 95.0, 0.10, 0.00025, 0.0),
        mk(Emotion::disgust, 0.0050, 0.28, 80.0, 0.05, 0.00020, 0.08),
        mk(Emotion::joy, 0.0050, 0.30, 85.0, 0.05, 0.00020, 0.0),
    };
}

namespace synthdetail {

/// Expands a heartbeat fundamental into a 3-term harmonic series; the chest
/// thump is pulse-like rather than sinusoidal, which puts class-dependent
/// energy into the 2-4 and 4-8 Hz bands.
inline void push_heartbeat(std::vector<MotionComponent>& comps, const MotionComponent& heart) {
    comps.push_back(heart);
    comps.push_back({heart.amplitude * 0.35, heart.frequency * 2.0, heart.phase + 0.7});
    comps.push_back({heart.amplitude * 0.12, heart.frequency * 3.0, heart.phase + 1.9});
}

inline void add_bursts(TimeSeries& motion, double burst_rate, std::uint64_t seed) {
    if (burst_rate <= 0.0)
        return;
    std::mt19937_64 rng(seedmix::derive(seed, 0x50));
    const double duration = motion.duration();
    std::uniform_real_distribution<double> when(0.05 * duration, 0.95 * duration);
    std::uniform_real_distribution<double> amp(0.001, 0.0025);
    const auto n_bursts = static_cast<std::size_t>(std::llround(burst_rate * duration));
    const double width = 0.4;  // seconds
    for (std::size_t b = 0; b < n_bursts; ++b) {
        double tc = when(rng);
        double a = amp(rng);
        for (std::size_t i = 0; i < motion.samples.size(); ++i) {
            double dt = motion.time_at(i) - tc;
            if (std::abs(dt) < 4.0 * width)
                motion.samples[i] += a * std::exp(-dt * dt / (2.0 * width * width));
        }
    }
}

}  // namespace synthdetail

/// One RF-phase recording per (subject, emotion), with per-subject parameter
/// perturbations so subjects differ, plus an optional paired synthetic ECG.
inline LabeledDataset generate_dataset(const std::vector<EmotionProfile>& profiles,
                                       int n_subjects, const RadarConfig& cfg,
                                       std::uint64_t seed, bool with_ecg = true,
                                       double ecg_rate = 250.0) {
    if (n_subjects < 2)
        throw std::invalid_argument("generate_dataset: need at least 2 subjects");
    if (profiles.empty())
        throw std::invalid_argument("generate_dataset: no profiles");
    for (std::size_t i = 0; i < profiles.size(); ++i)
        for (std::size_t j = i + 1; j < profiles.size(); ++j)
            if (profiles[i].label == profiles[j].label)
                throw std::invalid_argument("generate_dataset: duplicate labels in profiles");

    LabeledDataset ds;
    for (int subj = 0; subj < n_subjects; ++subj) {
        std::mt19937_64 srng(seedmix::derive(seed, 0x60, static_cast<std::uint64_t>(subj)));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double breath_amp_f = 0.85 + 0.30 * u(srng);
        const double breath_freq_f = 0.94 + 0.12 * u(srng);
        const double heart_amp_f = 0.85 + 0.30 * u(srng);
        const double heart_freq_f = 0.95 + 0.10 * u(srng);
        const double breath_phase = 2.0 * M_PI * u(srng);
        const double heart_phase = 2.0 * M_PI * u(srng);

        for (const auto& prof : profiles) {
            const auto label = static_cast<std::uint64_t>(prof.label);
            std::vector<MotionComponent> comps;
            comps.push_back({prof.breathing.amplitude * breath_amp_f,
                             prof.breathing.frequency * breath_freq_f,
                             prof.breathing.phase + breath_phase});
            MotionComponent heart{prof.heartbeat.amplitude * heart_amp_f,
                                  prof.heartbeat.frequency * heart_freq_f,
                                  prof.heartbeat.phase + heart_phase};
            synthdetail::push_heartbeat(comps, heart);

            const std::uint64_t motion_seed =
                seedmix::derive(seed, 0x70, static_cast<std::uint64_t>(subj), label);
            TimeSeries motion = body_motion(comps, prof.hr_variability, prof.motion_noise_std,
                                            cfg.sample_rate, cfg.duration, motion_seed);
            synthdetail::add_bursts(motion, prof.burst_rate, motion_seed);

            Sample s;
            s.subject = subj;
            s.label = prof.label;
            char idbuf[32];
            std::snprintf(idbuf, sizeof(idbuf), "s%02d_%s", subj,
                          emotion_names()[static_cast<std::size_t>(prof.label)].c_str());
            s.id = idbuf;
            s.rf = simulate_rf_phase(motion, cfg,
                                     seedmix::derive(seed, 0x80, static_cast<std::uint64_t>(subj), label));
            if (with_ecg) {
                const double hr_bpm = heart.frequency * 60.0;
                const double hrv_std = prof.hr_variability * 60.0 / hr_bpm;
                s.ecg = synthesize_ecg(hr_bpm, hrv_std, ecg_rate, cfg.duration,
                                       seedmix::derive(seed, 0x90, static_cast<std::uint64_t>(subj), label));
            }
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

}  // namespace rfaffect
