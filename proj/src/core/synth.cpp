#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"

namespace evad {

const char* anomaly_kind_name(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::temperature_spike: return "temperature_spike";
        case AnomalyKind::power_oscillation: return "power_oscillation";
        case AnomalyKind::truncated_session: return "truncated_session";
        case AnomalyKind::power_dropout: return "power_dropout";
    }
    return "unknown";
}

std::optional<AnomalyKind> anomaly_kind_from_name(std::string_view name) {
    if (name == "temperature_spike") return AnomalyKind::temperature_spike;
    if (name == "power_oscillation") return AnomalyKind::power_oscillation;
    if (name == "truncated_session") return AnomalyKind::truncated_session;
    if (name == "power_dropout") return AnomalyKind::power_dropout;
    return std::nullopt;
}

std::string default_target_hint(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::temperature_spike: return "T_kurt";
        case AnomalyKind::power_oscillation: return "P_absdiff";
        case AnomalyKind::truncated_session: return "duration_s";
        case AnomalyKind::power_dropout: return "P_min";
    }
    return {};
}

const std::vector<std::string>& expected_feature_set(AnomalyKind kind) {
    static const std::vector<std::string> spike = {"T_kurt", "T_npeaks", "T_std", "T_max"};
    static const std::vector<std::string> oscillation = {"P_absdiff", "P_npeaks", "P_std",
                                                         "P_corrlag"};
    static const std::vector<std::string> truncated = {"duration_s", "E_mean", "co2_kg",
                                                       "P_npeaks", "T_npeaks"};
    static const std::vector<std::string> dropout = {"P_min", "P_std", "P_skew", "P_kurt"};
    switch (kind) {
        case AnomalyKind::temperature_spike: return spike;
        case AnomalyKind::power_oscillation: return oscillation;
        case AnomalyKind::truncated_session: return truncated;
        case AnomalyKind::power_dropout: return dropout;
    }
    return spike;
}

std::vector<AnomalySpec> default_anomaly_mix() {
    std::vector<AnomalySpec> mix;
    for (auto kind : {AnomalyKind::temperature_spike, AnomalyKind::power_oscillation,
                      AnomalyKind::truncated_session, AnomalyKind::power_dropout}) {
        mix.push_back({kind, default_target_hint(kind), 1.0});
    }
    return mix;
}

namespace {

constexpr Timestamp kUsPerSecond = 1'000'000;
constexpr Timestamp kPeriod = 30 * kUsPerSecond;
// Window the generated corpus lives in: 2022-01-01 .. 2024-06-01 UTC.
constexpr Timestamp kWindowStart = 1'640'995'200LL * kUsPerSecond;
constexpr std::int64_t kWindowSeconds = 76'032'000;

struct Profile {
    std::vector<double> power;
    std::vector<double> temperature;
    std::size_t ramp_end = 0;
    std::size_t taper_start = 0;
};

Profile nominal_profile(Rng& rng, std::size_t n_samples) {
    Profile p;
    p.power.resize(n_samples);
    p.temperature.resize(n_samples);

    // Segment geometry, noise floors and taper depth all vary session to
    // session, so the nominal population spans a wide range of shape
    // statistics and no single profile constant becomes a tell.
    const double ramp_frac = rng.uniform(0.10, 0.22);
    const double taper_frac = rng.uniform(0.68, 0.88);
    p.ramp_end = std::max<std::size_t>(
        2, static_cast<std::size_t>(static_cast<double>(n_samples) * ramp_frac));
    p.taper_start = std::min(n_samples - 2,
                             std::max(p.ramp_end + 2, static_cast<std::size_t>(
                                                          static_cast<double>(n_samples) * taper_frac)));

    const double plateau = rng.uniform(7.0, 22.0);
    const double start_power = 2.0;
    const double taper_rate = rng.uniform(0.8, 1.5);
    const double t0 = rng.uniform(5.0, 30.0);
    const double drift = rng.uniform(-2.0, 2.0);
    const double warm_gain = rng.uniform(2.0, 4.5) * plateau / 22.0;
    const double power_noise = rng.uniform(0.08, 0.25);
    const double temp_noise = rng.uniform(0.08, 0.45);
    // Ambient weather front: a smooth step of a few degrees somewhere in the
    // session.
    const double front_amp = rng.uniform(-3.0, 3.0);
    const double front_pos = rng.uniform(0.2, 0.8) * static_cast<double>(n_samples);
    const double front_scale = rng.uniform(0.03, 0.08) * static_cast<double>(n_samples);

    const double droop_end = plateau * 0.97;
    for (std::size_t i = 0; i < n_samples; ++i) {
        double base;
        if (i < p.ramp_end) {
            base = start_power + (plateau - start_power) * static_cast<double>(i) /
                                     static_cast<double>(p.ramp_end);
        } else if (i < p.taper_start) {
            const double frac = static_cast<double>(i - p.ramp_end) /
                                static_cast<double>(p.taper_start - p.ramp_end);
            base = plateau + (droop_end - plateau) * frac;
        } else {
            const double frac = static_cast<double>(i - p.taper_start) /
                                static_cast<double>(n_samples - p.taper_start);
            base = droop_end * std::exp(-taper_rate * frac);
        }
        p.power[i] = std::max(0.0, base + power_noise * rng.normal());

        const double x = static_cast<double>(i) / static_cast<double>(n_samples - 1);
        const double front =
            front_amp / (1.0 + std::exp(-(static_cast<double>(i) - front_pos) / front_scale));
        p.temperature[i] = t0 + drift * x + warm_gain * (1.0 - std::exp(-3.0 * x)) + front +
                           temp_noise * rng.normal();
    }
    return p;
}

void inject(const AnomalySpec& spec, Rng& rng, Profile& p) {
    const std::size_t n = p.power.size();
    const std::size_t plateau_len = p.taper_start - p.ramp_end;
    switch (spec.kind) {
        case AnomalyKind::temperature_spike: {
            // Bipolar transient: one hot sample and one equally cold one a few
            // samples later. Fattens the tails on both sides, so kurtosis,
            // spread and extremes move while the third moment cancels.
            const std::size_t pos = p.ramp_end + rng.below(std::max<std::size_t>(1, plateau_len));
            const double amp = spec.magnitude * rng.uniform(12.0, 16.0);
            const std::size_t gap = 2 + rng.below(4);
            if (pos < n) p.temperature[pos] += amp;
            if (pos + gap < n) p.temperature[pos + gap] -= amp;
            break;
        }
        case AnomalyKind::power_oscillation: {
            const double amp = spec.magnitude * rng.uniform(3.0, 5.0);
            for (std::size_t i = p.ramp_end; i < p.taper_start; ++i) {
                p.power[i] = std::max(0.0, p.power[i] + ((i - p.ramp_end) % 2 ? -amp : amp));
            }
            break;
        }
        case AnomalyKind::truncated_session: {
            // Cut mid-plateau so the kept prefix still looks like a healthy
            // recharge that stopped early: the duration, energy and CO2
            // metadata carry the deviation, not the signal shape.
            const double frac = std::clamp(0.35 / spec.magnitude, 0.0, 0.6);
            const std::size_t keep = std::max<std::size_t>(
                3, static_cast<std::size_t>(std::llround(static_cast<double>(n) * frac)));
            p.power.resize(std::min(n, keep));
            p.temperature.resize(std::min(n, keep));
            break;
        }
        case AnomalyKind::power_dropout: {
            const std::size_t len = std::max<std::size_t>(
                3, static_cast<std::size_t>(std::llround(
                       static_cast<double>(n) * std::min(0.4, 0.25 * spec.magnitude))));
            const std::size_t span = plateau_len > len ? plateau_len - len : 1;
            const std::size_t start = p.ramp_end + rng.below(span);
            for (std::size_t i = start; i < std::min(n, start + len); ++i) {
                p.power[i] = std::max(0.0, 0.05 + 0.02 * rng.normal());
            }
            break;
        }
    }
}

double trapezoid_energy_kwh(const std::vector<double>& power) {
    double kw_seconds = 0.0;
    const double dt = static_cast<double>(kPeriod) / kUsPerSecond;
    for (std::size_t i = 1; i < power.size(); ++i) {
        kw_seconds += 0.5 * (power[i] + power[i - 1]) * dt;
    }
    return kw_seconds / 3600.0;
}

}  // namespace

SynthResult synth_generate(std::int64_t n_sessions, double contamination,
                           std::span<const AnomalySpec> anomalies, std::uint64_t seed) {
    if (n_sessions < 1) throw ValidationError("synth_generate: n_sessions must be >= 1");
    if (!(contamination > 0.0 && contamination < 1.0))
        throw ValidationError("synth_generate: contamination must be in (0, 1)");
    if (contamination * static_cast<double>(n_sessions) < 1.0)
        throw ValidationError("synth_generate: contamination * n_sessions must be >= 1");
    if (anomalies.empty()) throw ValidationError("synth_generate: anomaly list is empty");
    for (const auto& a : anomalies) {
        if (!(a.magnitude > 0.0)) throw ValidationError("synth_generate: magnitude must be > 0");
    }

    const auto n = static_cast<std::size_t>(n_sessions);
    const auto n_anomalous = static_cast<std::size_t>(
        std::llround(contamination * static_cast<double>(n_sessions)));

    // Pick which sessions get an anomaly: partial Fisher-Yates over [0, n).
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng plan(derive_seed(seed, SeedStream::synth_plan, 0));
    std::vector<const AnomalySpec*> assignment(n, nullptr);
    for (std::size_t i = 0; i < n_anomalous; ++i) {
        const std::size_t j = i + plan.below(n - i);
        std::swap(idx[i], idx[j]);
        assignment[idx[i]] = &anomalies[i % anomalies.size()];
    }

    SynthResult result;
    result.sessions.reserve(n);
    result.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, SeedStream::synth_session, i));
        const std::size_t n_samples = 160 + rng.below(81);
        const Timestamp start =
            kWindowStart + static_cast<Timestamp>(rng.below(kWindowSeconds)) * kUsPerSecond;
        char sid[24], st[8];
        std::snprintf(sid, sizeof(sid), "S%06zu", i);
        std::snprintf(st, sizeof(st), "ST%02llu", static_cast<unsigned long long>(1 + rng.below(8)));
        const double co2_factor = rng.uniform(0.23, 0.27);

        Profile profile = nominal_profile(rng, n_samples);
        const AnomalySpec* spec = assignment[i];
        if (spec != nullptr) inject(*spec, rng, profile);

        SessionRecord rec;
        rec.session_id = sid;
        rec.station_id = st;
        rec.start_time = start;
        const std::size_t kept = profile.power.size();
        rec.power.values = std::move(profile.power);
        rec.temperature.values = std::move(profile.temperature);
        rec.power.timestamps.resize(kept);
        for (std::size_t k = 0; k < kept; ++k) {
            rec.power.timestamps[k] = start + static_cast<Timestamp>(k) * kPeriod;
        }
        rec.temperature.timestamps = rec.power.timestamps;
        rec.end_time = rec.power.timestamps.back() + kPeriod;
        rec.energy_kwh = trapezoid_energy_kwh(rec.power.values);
        rec.co2_kg = rec.energy_kwh * co2_factor;

        GroundTruthLabel label;
        label.session_id = rec.session_id;
        label.is_anomaly = spec != nullptr;
        if (spec != nullptr) label.injected = *spec;

        result.sessions.push_back(std::move(rec));
        result.labels.push_back(std::move(label));
    }
    return result;
}

void write_labels_csv(std::span<const GroundTruthLabel> labels, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "session_id,label,kind,magnitude,target_feature_hint\n";
    for (const auto& l : labels) {
        out << csv_join({csv_escape(l.session_id), l.is_anomaly ? "1" : "0",
                         l.injected ? anomaly_kind_name(l.injected->kind) : "",
                         l.injected ? format_double(l.injected->magnitude) : "",
                         l.injected ? csv_escape(l.injected->target_feature_hint) : ""})
            << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace evad
