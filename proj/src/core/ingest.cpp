#include "core/ingest.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "core/csv.hpp"
#include "core/errors.hpp"

namespace evad {

namespace {

const std::vector<std::string> kMetaHeader = {"session_id", "station_id", "start_time",
                                              "end_time",   "energy_kwh", "co2_kg"};
const std::vector<std::string> kSignalsHeader = {"session_id", "timestamp", "power_kw",
                                                 "temperature_c"};

struct MetaRow {
    std::string station_id;
    Timestamp start = 0;
    Timestamp end = 0;
    double energy = 0.0;
    double co2 = 0.0;
};

// Per-session signal accumulator. Rows may interleave across sessions but
// must be in timestamp order within one session.
struct SignalAcc {
    SignalSeries power;
    SignalSeries temperature;
    Timestamp last = std::numeric_limits<Timestamp>::min();
    bool first = true;
    bool malformed = false;
    bool disorder = false;
    bool non_finite = false;
};

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

// Inner join without the empty-intersection throw; parse_sessions maps the
// empty case to a drop reason instead.
std::pair<SignalSeries, SignalSeries> join_on_timestamps(const SignalSeries& a,
                                                         const SignalSeries& b) {
    SignalSeries ja, jb;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a.timestamps[i] < b.timestamps[j]) {
            ++i;
        } else if (a.timestamps[i] > b.timestamps[j]) {
            ++j;
        } else {
            ja.timestamps.push_back(a.timestamps[i]);
            ja.values.push_back(a.values[i]);
            jb.timestamps.push_back(b.timestamps[j]);
            jb.values.push_back(b.values[j]);
            ++i;
            ++j;
        }
    }
    return {std::move(ja), std::move(jb)};
}

void check_series_valid(const SignalSeries& s, const char* name) {
    if (s.timestamps.size() != s.values.size())
        throw ValidationError(std::string(name) + ": timestamp/value length mismatch");
    for (std::size_t i = 1; i < s.timestamps.size(); ++i) {
        if (s.timestamps[i] <= s.timestamps[i - 1])
            throw ValidationError(std::string(name) + ": timestamps not strictly increasing");
    }
}

}  // namespace

std::pair<SignalSeries, SignalSeries> align_signals(const SignalSeries& power,
                                                    const SignalSeries& temperature) {
    check_series_valid(power, "power");
    check_series_valid(temperature, "temperature");
    auto joined = join_on_timestamps(power, temperature);
    if (joined.first.size() == 0) throw ValidationError("empty intersection");
    return joined;
}

ParseResult parse_sessions(const std::string& meta_path, const std::string& signals_path) {
    ParseResult result;
    std::unordered_set<std::string> dead;  // sessions already reported

    auto drop = [&](const std::string& id, const char* reason) {
        if (!dead.insert(id).second) return;
        result.dropped.push_back({id, reason});
    };

    // Metadata pass.
    std::ifstream meta_in(meta_path, std::ios::binary);
    if (!meta_in) throw IoError("cannot open " + meta_path);
    CsvReader meta_csv(meta_in);
    std::vector<std::string> fields;
    if (!meta_csv.next(fields) || fields != kMetaHeader)
        throw FormatError(meta_path + ": malformed header");

    std::vector<std::string> order;
    std::unordered_map<std::string, MetaRow> meta;
    std::unordered_set<std::string> seen;
    while (meta_csv.next(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
        const std::string id = fields[0];
        if (id.empty()) {
            drop(id, drop_reason::missing_metadata_field);
            continue;
        }
        if (!seen.insert(id).second)
            throw FormatError(meta_path + ": duplicate session_id: " + id);
        order.push_back(id);
        if (fields.size() != 6) {
            drop(id, drop_reason::missing_metadata_field);
            continue;
        }
        bool missing = false;
        for (const auto& f : fields)
            if (f.empty()) missing = true;
        if (missing) {
            drop(id, drop_reason::missing_metadata_field);
            continue;
        }
        const auto start = parse_rfc3339(fields[2]);
        const auto end = parse_rfc3339(fields[3]);
        const auto energy = parse_double(fields[4]);
        const auto co2 = parse_double(fields[5]);
        if (!start || !end || !energy || !co2) {
            drop(id, drop_reason::invalid_metadata);
            continue;
        }
        if (!std::isfinite(*energy) || !std::isfinite(*co2)) {
            drop(id, drop_reason::non_finite_value);
            continue;
        }
        if (*energy < 0.0 || *co2 < 0.0 || *end <= *start) {
            drop(id, drop_reason::invalid_metadata);
            continue;
        }
        meta.emplace(id, MetaRow{fields[1], *start, *end, *energy, *co2});
    }

    // Signals pass.
    std::ifstream sig_in(signals_path, std::ios::binary);
    if (!sig_in) throw IoError("cannot open " + signals_path);
    CsvReader sig_csv(sig_in);
    if (!sig_csv.next(fields) || fields != kSignalsHeader)
        throw FormatError(signals_path + ": malformed header");

    std::unordered_map<std::string, SignalAcc> signals;
    std::vector<std::string> orphan_order;  // signal rows without a metadata row
    while (sig_csv.next(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        const std::string& id = fields[0];
        if (id.empty()) continue;  // unattributable row
        auto [it, inserted] = signals.try_emplace(id);
        SignalAcc& acc = it->second;
        if (inserted && !seen.contains(id)) orphan_order.push_back(id);
        if (fields.size() != 4) {
            acc.malformed = true;
            continue;
        }
        const auto ts = parse_rfc3339(fields[1]);
        if (!ts) {
            acc.malformed = true;
            continue;
        }
        if (!acc.first && *ts <= acc.last) acc.disorder = true;
        acc.first = false;
        acc.last = *ts;
        if (!fields[2].empty()) {
            const auto p = parse_double(fields[2]);
            if (!p) {
                acc.malformed = true;
            } else {
                if (!std::isfinite(*p)) acc.non_finite = true;
                acc.power.timestamps.push_back(*ts);
                acc.power.values.push_back(*p);
            }
        }
        if (!fields[3].empty()) {
            const auto t = parse_double(fields[3]);
            if (!t) {
                acc.malformed = true;
            } else {
                if (!std::isfinite(*t)) acc.non_finite = true;
                acc.temperature.timestamps.push_back(*ts);
                acc.temperature.values.push_back(*t);
            }
        }
    }

    // Assembly, in metadata file order.
    for (const auto& id : order) {
        if (dead.contains(id)) continue;
        const MetaRow& m = meta.at(id);
        auto it = signals.find(id);
        if (it == signals.end()) {
            drop(id, drop_reason::missing_signal);
            continue;
        }
        const SignalAcc& acc = it->second;
        if (acc.malformed) {
            drop(id, drop_reason::invalid_signal);
            continue;
        }
        if (acc.disorder) {
            drop(id, drop_reason::timestamp_disorder);
            continue;
        }
        if (acc.non_finite) {
            drop(id, drop_reason::non_finite_value);
            continue;
        }
        if (acc.power.size() == 0 || acc.temperature.size() == 0) {
            drop(id, drop_reason::missing_signal);
            continue;
        }
        auto joined = join_on_timestamps(acc.power, acc.temperature);
        if (joined.first.size() == 0) {
            drop(id, drop_reason::empty_intersection);
            continue;
        }
        if (joined.first.size() < 3) {
            drop(id, drop_reason::too_short);
            continue;
        }
        SessionRecord rec;
        rec.session_id = id;
        rec.station_id = m.station_id;
        rec.start_time = m.start;
        rec.end_time = m.end;
        rec.energy_kwh = m.energy;
        rec.co2_kg = m.co2;
        rec.power = std::move(joined.first);
        rec.temperature = std::move(joined.second);
        result.sessions.push_back(std::move(rec));
    }

    for (const auto& id : orphan_order) drop(id, drop_reason::missing_metadata);

    return result;
}

void write_sessions_csv(std::span<const SessionRecord> sessions, const std::string& meta_path,
                        const std::string& signals_path) {
    auto meta_out = open_out(meta_path);
    meta_out << csv_join(kMetaHeader) << '\n';
    for (const auto& s : sessions) {
        meta_out << csv_join({csv_escape(s.session_id), csv_escape(s.station_id),
                              format_rfc3339(s.start_time), format_rfc3339(s.end_time),
                              format_double(s.energy_kwh), format_double(s.co2_kg)})
                 << '\n';
    }
    if (!meta_out) throw IoError("write failed: " + meta_path);

    auto sig_out = open_out(signals_path);
    sig_out << csv_join(kSignalsHeader) << '\n';
    for (const auto& s : sessions) {
        // Union of the two grids; a missing sample leaves the cell empty.
        std::size_t i = 0, j = 0;
        const auto& p = s.power;
        const auto& t = s.temperature;
        while (i < p.size() || j < t.size()) {
            Timestamp ts;
            bool has_p = false, has_t = false;
            if (i < p.size() && (j >= t.size() || p.timestamps[i] <= t.timestamps[j])) {
                ts = p.timestamps[i];
                has_p = true;
                if (j < t.size() && t.timestamps[j] == ts) has_t = true;
            } else {
                ts = t.timestamps[j];
                has_t = true;
            }
            sig_out << csv_join({csv_escape(s.session_id), format_rfc3339(ts),
                                 has_p ? format_double(p.values[i]) : std::string(),
                                 has_t ? format_double(t.values[j]) : std::string()})
                    << '\n';
            if (has_p) ++i;
            if (has_t) ++j;
        }
    }
    if (!sig_out) throw IoError("write failed: " + signals_path);
}

void write_drop_report(std::span<const DropReport> dropped, const std::string& path) {
    auto out = open_out(path);
    for (const auto& d : dropped) {
        out << "{\"session_id\":" << nlohmann::json(d.session_id).dump()
            << ",\"reason\":" << nlohmann::json(d.reason).dump() << "}\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace evad
