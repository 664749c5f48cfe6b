// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#include "handover.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace railbeam {

using nlohmann::json;

std::string to_string(HandoverMode m) {
    switch (m) {
    case HandoverMode::traditional: return "traditional";
    case HandoverMode::ai_option1: return "ai_option1";
    case HandoverMode::ai_option2: return "ai_option2";
    }
    return "?";
}

HandoverMode handover_mode_from_string(const std::string& s) {
    if (s == "traditional") return HandoverMode::traditional;
    if (s == "ai_option1") return HandoverMode::ai_option1;
    if (s == "ai_option2") return HandoverMode::ai_option2;
    throw ValidationError("unknown handover mode '" + s + "'");
}

void HandoverConfig::validate() const {
    if (!(qin_db > qout_db)) throw ValidationError("handover config: qin must exceed qout");
    for (double d : {ttt_s, prep_delay_s, exec_interruption_s, t310_s, pingpong_window_s, reestablish_delay_s})
        if (!(d >= 0.0)) throw ValidationError("handover config: durations must be >= 0");
    if (!(tick_s > 0.0)) throw ValidationError("handover config: tick must be > 0");
    if (std::isnan(a3_offset_db)) throw ValidationError("handover config: a3 offset is NaN");
}

std::size_t HandoverConfig::ticks(double seconds) const {
    if (std::isinf(seconds)) return static_cast<std::size_t>(-1) / 2;
    return static_cast<std::size_t>(std::llround(seconds / tick_s));
}

HandoverConfig handover_config_from_json(const json& j) {
    HandoverConfig c;
    try {
        c.a3_offset_db = j.value("a3_offset_db", c.a3_offset_db);
        c.ttt_s = j.value("ttt_s", c.ttt_s);
        c.prep_delay_s = j.value("prep_delay_s", c.prep_delay_s);
        c.exec_interruption_s = j.value("exec_interruption_s", c.exec_interruption_s);
        c.qout_db = j.value("qout_db", c.qout_db);
        c.qin_db = j.value("qin_db", c.qin_db);
        c.t310_s = j.value("t310_s", c.t310_s);
        c.pingpong_window_s = j.value("pingpong_window_s", c.pingpong_window_s);
        c.reestablish_delay_s = j.value("reestablish_delay_s", c.reestablish_delay_s);
        c.tick_s = j.value("tick_s", c.tick_s);
        if (j.contains("mode")) c.mode = handover_mode_from_string(j.at("mode").get<std::string>());
    } catch (const json::exception& e) {
        throw ValidationError(std::string("handover config: ") + e.what());
    }
    c.validate();
    return c;
}

json to_json(const HandoverConfig& c) {
    return {{"a3_offset_db", c.a3_offset_db},
            {"ttt_s", c.ttt_s},
            {"prep_delay_s", c.prep_delay_s},
            {"exec_interruption_s", c.exec_interruption_s},
            {"qout_db", c.qout_db},
            {"qin_db", c.qin_db},
            {"t310_s", c.t310_s},
            {"pingpong_window_s", c.pingpong_window_s},
            {"reestablish_delay_s", c.reestablish_delay_s},
            {"tick_s", c.tick_s},
            {"mode", to_string(c.mode)}};
}

namespace {

constexpr const char* kEventNames[] = {"a3_start", "a3_cancel", "ho_command", "ho_success",
                                       "hof",      "rlf",       "reestablish", "pingpong"};
constexpr const char* kHofNames[] = {"none", "too_late", "too_early", "wrong_cell"};

void emit(UeConnState& s, std::size_t t, EventKind k, int serving, int target, HofKind h = HofKind::none) {
    s.log.events.push_back({t, k, serving, target, h});
}

void reset_timers(UeConnState& s) {
    std::fill(s.a3_since.begin(), s.a3_since.end(), -1L);
}

int strongest(std::span<const double> l3) {
    return static_cast<int>(std::max_element(l3.begin(), l3.end()) - l3.begin());
}

void command(UeConnState& s, const HandoverConfig& cfg, std::size_t t, int target) {
    emit(s, t, EventKind::ho_command, s.serving, target);
    s.phase = Phase::preparing;
    s.target = target;
    s.phase_end = t + cfg.ticks(cfg.prep_delay_s);
    reset_timers(s);
}

void enter_recovery(UeConnState& s, const HandoverConfig& cfg, std::size_t t) {
    s.phase = Phase::rlf_recovery;
    s.phase_end = t + cfg.ticks(cfg.reestablish_delay_s);
    s.t310_since = -1;
    s.target = -1;
    reset_timers(s);
}

/// Measured A3 bookkeeping; returns the neighbours whose dwell reached TTT.
std::vector<int> update_a3(UeConnState& s, const HandoverConfig& cfg, std::span<const double> l3, std::size_t t) {
    std::vector<int> ready;
    const std::size_t ttt = cfg.ticks(cfg.ttt_s);
    for (std::size_t n = 0; n < l3.size(); ++n) {
        if (static_cast<int>(n) == s.serving) continue;
        const bool cond = l3[n] > l3[static_cast<std::size_t>(s.serving)] + cfg.a3_offset_db;
        long& since = s.a3_since[n];
        if (cond && since < 0) {
            since = static_cast<long>(t);
            emit(s, t, EventKind::a3_start, s.serving, static_cast<int>(n));
        } else if (!cond && since >= 0) {
            since = -1;
            emit(s, t, EventKind::a3_cancel, s.serving, static_cast<int>(n));
        }
        if (since >= 0 && t - static_cast<std::size_t>(since) >= ttt) ready.push_back(static_cast<int>(n));
    }
    return ready;
}

/// Neighbours meeting the A3 condition in every forecast row, best first
/// by mean predicted L3 (ties to the lowest index).
int forecast_target(const UeConnState& s, const HandoverConfig& cfg, const CellForecast& f,
                    std::span<const double> l3) {
    std::vector<std::span<const double>> rows;
    rows.push_back(f.current.empty() ? l3 : std::span<const double>(f.current));
    for (const auto& r : f.future) rows.push_back(r);
    for (const auto& r : rows)
        if (r.size() != l3.size()) throw ValidationError("forecast row has the wrong cell count");
    int best = -1;
    double best_mean = -INFINITY;
    const auto sv = static_cast<std::size_t>(s.serving);
    for (std::size_t n = 0; n < l3.size(); ++n) {
        if (n == sv) continue;
        bool ok = true;
        double mean = 0.0;
        for (const auto& r : rows) {
            ok = ok && r[n] > r[sv] + cfg.a3_offset_db;
            mean += r[n];
        }
        mean /= static_cast<double>(rows.size());
        if (ok && mean > best_mean) {
            best = static_cast<int>(n);
            best_mean = mean;
        }
    }
    return best;
}

} // namespace

std::string to_string(EventKind k) { return kEventNames[static_cast<int>(k)]; }
std::string to_string(HofKind k) { return kHofNames[static_cast<int>(k)]; }

EventKind event_kind_from_string(const std::string& s) {
    for (int i = 0; i < 8; ++i)
        if (s == kEventNames[i]) return static_cast<EventKind>(i);
    throw ValidationError("unknown event kind '" + s + "'");
}

HofKind hof_kind_from_string(const std::string& s) {
    for (int i = 0; i < 4; ++i)
        if (s == kHofNames[i]) return static_cast<HofKind>(i);
    throw ValidationError("unknown HOF kind '" + s + "'");
}

std::string HandoverLog::to_csv() const {
    std::ostringstream os;
    os << "t_s,kind,serving,target,hof\n";
    for (const auto& e : events) {
        os << static_cast<double>(e.t) * tick_s << ',' << to_string(e.kind) << ',' << e.serving << ',' << e.target
           << ',' << (e.kind == EventKind::hof ? to_string(e.hof) : "") << '\n';
    }
    return os.str();
}

std::size_t HandoverLog::count(EventKind k) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [k](const Event& e) { return e.kind == k; }));
}

UeConnState initial_state(std::size_t n_cells, int serving, const HandoverConfig& cfg) {
    cfg.validate();
    if (n_cells == 0 || serving < 0 || static_cast<std::size_t>(serving) >= n_cells)
        throw ValidationError("initial serving cell out of range");
    UeConnState s;
    s.serving = serving;
    s.a3_since.assign(n_cells, -1);
    s.ai_since.assign(n_cells, -1);
    s.log.tick_s = cfg.tick_s;
    return s;
}

void detect_rlf(UeConnState& s, const HandoverConfig& cfg, double serving_sinr, std::size_t t) {
    if (s.phase != Phase::connected && s.phase != Phase::preparing) return;
    if (serving_sinr < cfg.qout_db) {
        if (s.t310_since < 0) s.t310_since = static_cast<long>(t);
    } else if (serving_sinr > cfg.qin_db) {
        s.t310_since = -1;
    }
    if (s.t310_since >= 0 && t + 1 - static_cast<std::size_t>(s.t310_since) >= cfg.ticks(cfg.t310_s)) {
        if (s.phase == Phase::preparing) emit(s, t, EventKind::hof, s.serving, s.target, HofKind::too_late);
        emit(s, t, EventKind::rlf, s.serving, -1);
        enter_recovery(s, cfg, t);
    }
}

void step(UeConnState& s, const HandoverConfig& cfg, std::span<const double> l3, std::span<const double> sinr,
          std::size_t t, const CellForecast* forecast) {
    if (l3.size() != s.a3_since.size() || sinr.size() != s.a3_since.size())
        throw ValidationError("step: l3/sinr must cover all " + std::to_string(s.a3_since.size()) + " cells");
    const double qout = cfg.qout_db;
    auto sv = [&] { return static_cast<std::size_t>(s.serving); };

    // A prepared command waits while the serving link is below qout; it is
    // retransmitted until the UE decodes it or T310 expires (too_late).
    if (s.phase == Phase::preparing && t >= s.phase_end && sinr[sv()] >= qout) {
        s.phase = Phase::executing;
        s.phase_end = t + cfg.ticks(cfg.exec_interruption_s);
        s.t310_since = -1;
    }
    if (s.phase == Phase::executing && t >= s.phase_end) {
        const auto tg = static_cast<std::size_t>(s.target);
        if (sinr[tg] < qout) {
            emit(s, t, EventKind::hof, s.serving, s.target, HofKind::too_early);
            enter_recovery(s, cfg, t);
        } else {
            emit(s, t, EventKind::ho_success, s.serving, s.target);
            if (s.last_source == s.target && s.last_success >= 0 &&
                t - static_cast<std::size_t>(s.last_success) <= cfg.ticks(cfg.pingpong_window_s))
                emit(s, t, EventKind::pingpong, s.target, s.serving);
            s.last_source = s.serving;
            s.last_success = static_cast<long>(t);
            s.serving = s.target;
            s.target = -1;
            s.phase = Phase::connected;
            s.t310_since = -1;
            reset_timers(s);
            std::fill(s.ai_since.begin(), s.ai_since.end(), -1L);
        }
    }
    if (s.phase == Phase::rlf_recovery && t >= s.phase_end) {
        s.serving = strongest(l3);
        emit(s, t, EventKind::reestablish, s.serving, -1);
        s.phase = Phase::connected;
        s.last_source = -1;
        s.last_success = -1;
        reset_timers(s);
        std::fill(s.ai_since.begin(), s.ai_since.end(), -1L);
    }

    detect_rlf(s, cfg, sinr[sv()], t);
    if (s.phase != Phase::connected) return;

    const std::vector<int> ready = update_a3(s, cfg, l3, t);
    if (cfg.mode == HandoverMode::traditional) {
        if (ready.empty()) return;
        int best = ready.front();
        for (int n : ready)
            if (l3[static_cast<std::size_t>(n)] > l3[static_cast<std::size_t>(best)]) best = n;
        command(s, cfg, t, best);
        return;
    }
    if (!forecast) throw ValidationError("AI handover mode needs a forecast every tick");
    const int target = forecast_target(s, cfg, *forecast, l3);
    if (cfg.mode == HandoverMode::ai_option1) {
        if (target >= 0) command(s, cfg, t, target);
        return;
    }
    // ai_option2: the forecast must keep pointing at the same target for half a TTT.
    for (std::size_t n = 0; n < s.ai_since.size(); ++n)
        if (static_cast<int>(n) != target) s.ai_since[n] = -1;
    if (target < 0) return;
    long& since = s.ai_since[static_cast<std::size_t>(target)];
    if (since < 0) since = static_cast<long>(t);
    if (t - static_cast<std::size_t>(since) >= cfg.ticks(cfg.ttt_s / 2)) {
        std::fill(s.ai_since.begin(), s.ai_since.end(), -1L);
        command(s, cfg, t, target);
    }
}

std::vector<HandoverOutcome> classify_hof(const HandoverLog& log, const HandoverConfig& cfg) {
    const auto& ev = log.events;
    for (std::size_t i = 1; i < ev.size(); ++i)
        if (ev[i].t < ev[i - 1].t) throw InvariantError("malformed log: events are not time-ordered");
    const std::size_t window = cfg.ticks(cfg.pingpong_window_s);
    std::vector<HandoverOutcome> out;
    std::set<int> pending;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        const Event& e = ev[i];
        switch (e.kind) {
        case EventKind::a3_start: pending.insert(e.target); break;
        case EventKind::a3_cancel: pending.erase(e.target); break;
        case EventKind::ho_success:
        case EventKind::reestablish: pending.clear(); break;
        case EventKind::rlf:
            if (!pending.empty()) out.push_back({e.t, e.serving, *pending.begin(), HofKind::too_late});
            pending.clear();
            break;
        case EventKind::ho_command: {
            pending.clear();
            std::size_t j = i + 1;
            while (j < ev.size() && ev[j].kind != EventKind::ho_success && ev[j].kind != EventKind::hof) {
                if (ev[j].kind == EventKind::ho_command)
                    throw InvariantError("malformed log: ho_command at tick " + std::to_string(e.t) +
                                         " overlaps another command");
                ++j;
            }
            if (j == ev.size())
                throw InvariantError("malformed log: ho_command at tick " + std::to_string(e.t) + " has no outcome");
            HandoverOutcome o{e.t, e.serving, e.target, HofKind::none};
            if (ev[j].kind == EventKind::hof) {
                o.kind = ev[j].hof == HofKind::none ? HofKind::too_late : ev[j].hof;
            } else {
                for (std::size_t k = j + 1; k < ev.size() && ev[k].t - ev[j].t <= window; ++k) {
                    if (ev[k].kind == EventKind::rlf) {
                        o.kind = HofKind::too_early;
                        break;
                    }
                    if (ev[k].kind == EventKind::ho_success) {
                        if (ev[k].target != e.serving && ev[k].target != e.target) o.kind = HofKind::wrong_cell;
                        break;
                    }
                    if (ev[k].kind == EventKind::reestablish || ev[k].kind == EventKind::hof) break;
                }
            }
            out.push_back(o);
            break;
        }
        default: break;
        }
    }
    return out;
}

json KpiReport::to_json() const {
    return {{"ho_commands", ho_commands},
            {"ho_success", ho_success},
            {"hof_events", hof_events},
            {"hof", hof},
            {"too_late", too_late},
            {"too_early", too_early},
            {"wrong_cell", wrong_cell},
            {"rlf", rlf},
            {"pingpong", pingpong},
            {"hof_rate", hof_rate},
            {"rlf_rate", rlf_rate},
            {"pingpong_rate", pingpong_rate},
            {"mean_interruption_ms", mean_interruption_ms},
            {"max_interruption_ms", max_interruption_ms},
            {"duration_s", duration_s},
            {"degenerate", degenerate},
            {"definitions", {{"rlf_rate", kRlfRateDefinition}, {"hof_rate", kHofRateDefinition}}}};
}

KpiReport kpis(const HandoverLog& log, const HandoverConfig& cfg) {
    KpiReport r;
    r.duration_s = static_cast<double>(log.n_ticks) * log.tick_s;
    if (log.events.empty()) {
        r.degenerate = true;
        return r;
    }
    r.ho_commands = log.count(EventKind::ho_command);
    r.ho_success = log.count(EventKind::ho_success);
    r.hof_events = log.count(EventKind::hof);
    if (r.ho_commands != r.ho_success + r.hof_events)
        throw InvariantError("conservation violated: " + std::to_string(r.ho_commands) + " commands vs " +
                             std::to_string(r.ho_success) + " successes + " + std::to_string(r.hof_events) + " HOFs");
    for (const auto& o : classify_hof(log, cfg)) {
        switch (o.kind) {
        case HofKind::none: ++r.classified_success; break;
        case HofKind::too_late: ++r.too_late; break;
        case HofKind::too_early: ++r.too_early; break;
        case HofKind::wrong_cell: ++r.wrong_cell; break;
        }
    }
    r.hof = r.too_late + r.too_early + r.wrong_cell;
    r.rlf = log.count(EventKind::rlf);
    r.pingpong = log.count(EventKind::pingpong);
    auto ratio = [](std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
    r.hof_rate = ratio(r.hof, r.hof + r.classified_success);
    r.rlf_rate = ratio(r.rlf, r.rlf + r.ho_success);
    r.pingpong_rate = ratio(r.pingpong, r.ho_success);

    // Data interruption: the execution gap for successful handovers, and
    // failure-to-reestablishment time otherwise.
    std::vector<double> gaps;
    long failure = -1;
    for (const auto& e : log.events) {
        if (e.kind == EventKind::ho_success) gaps.push_back(cfg.exec_interruption_s * 1e3);
        if ((e.kind == EventKind::rlf || (e.kind == EventKind::hof && e.hof == HofKind::too_early)) && failure < 0)
            failure = static_cast<long>(e.t);
        if (e.kind == EventKind::reestablish && failure >= 0) {
            gaps.push_back(static_cast<double>(e.t - static_cast<std::size_t>(failure)) * log.tick_s * 1e3);
            failure = -1;
        }
    }
    for (double g : gaps) {
        r.mean_interruption_ms += g;
        r.max_interruption_ms = std::max(r.max_interruption_ms, g);
    }
    r.interruptions = gaps.size();
    if (!gaps.empty()) r.mean_interruption_ms /= static_cast<double>(gaps.size());
    return r;
}

ForecastFn oracle_forecast(const MeasurementTrace& trace, std::size_t horizon) {
    return [&trace, horizon](std::size_t k) {
        const std::size_t last = trace.n_instances() - 1;
        CellForecast f;
        const auto cur = trace.l3_at(std::min(k, last));
        f.current.assign(cur.begin(), cur.end());
        for (std::size_t h = 1; h <= horizon; ++h) {
            const auto r = trace.l3_at(std::min(k + h, last));
            f.future.emplace_back(r.begin(), r.end());
        }
        return f;
    };
}

HandoverLog simulate(const MeasurementTrace& trace, const HandoverConfig& cfg_in, const ForecastFn& forecast) {
    HandoverConfig cfg = cfg_in;
    cfg.tick_s = trace.slot_duration_s;
    cfg.validate();
    if (trace.n_instances() == 0 || trace.n_cells == 0) throw ValidationError("simulate: empty trace");
    if (cfg.mode != HandoverMode::traditional && !forecast)
        throw ValidationError("simulate: " + to_string(cfg.mode) + " needs a predictor");
    UeConnState s = initial_state(trace.n_cells, strongest(trace.l3_at(0)), cfg);
    CellForecast f;
    std::size_t f_instance = static_cast<std::size_t>(-1);
    for (std::size_t slot = 0; slot < trace.n_slots; ++slot) {
        const std::size_t k = std::min(slot / trace.meas_period, trace.n_instances() - 1);
        if (cfg.mode != HandoverMode::traditional && k != f_instance) {
            f = forecast(k);
            f_instance = k;
        }
        step(s, cfg, trace.l3_at(k), trace.sinr_at(slot), slot, cfg.mode == HandoverMode::traditional ? nullptr : &f);
    }
    // A handover still in flight when the trace ends has no outcome; drop it.
    if (s.phase == Phase::preparing || s.phase == Phase::executing) {
        for (auto it = s.log.events.rbegin(); it != s.log.events.rend(); ++it)
            if (it->kind == EventKind::ho_command) {
                s.log.events.erase(std::next(it).base());
                break;
            }
    }
    s.log.n_ticks = trace.n_slots;
    s.log.tick_s = trace.slot_duration_s;
    return s.log;
}

} // namespace railbeam
