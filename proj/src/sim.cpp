#include <hsps/sim.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <hsps/errors.hpp>
#include <hsps/stats.hpp>

namespace hsps {

namespace {

enum Purpose : std::uint64_t {
    PairsStream = 1,
    RouteStream = 2,
    DarkStream = 3,
    SignalStream = 4,
    GateStream = 5,
    IdlerStream = 6,
    PulseStream = 7,
};

std::string fmt(double x)
{
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

void require_unit(double x, const char* name, bool allow_zero)
{
    const bool ok = allow_zero ? (x >= 0 && x <= 1) : (x > 0 && x <= 1);
    if (!ok) {
        throw InputError(std::string(name) + " must lie in " + (allow_zero ? "[0, 1]" : "(0, 1]")
                         + ", got " + fmt(x));
    }
}

void require_nonnegative(double x, const char* name)
{
    if (!std::isfinite(x) || x < 0) {
        throw InputError(std::string(name) + " must be finite and >= 0, got " + fmt(x));
    }
}

TimePs at_least_one_ps(double seconds) { return std::max<TimePs>(to_ps(seconds), 1); }

} // namespace

void SimConfig::validate() const
{
    if (pump_mode == PumpMode::CW) {
        require_nonnegative(pair_rate, "pair_rate");
    } else {
        require_nonnegative(mean_pairs_per_pulse, "mean_pairs_per_pulse");
        if (!(pulse_rate > 0) || !std::isfinite(pulse_rate)) {
            throw InputError("pulse_rate must be positive, got " + fmt(pulse_rate));
        }
    }
    require_unit(gamma_s, "gamma_s", true);
    require_unit(gamma_i, "gamma_i", true);
    require_unit(gamma_c, "gamma_c", true);
    constexpr double slack = 1e-12;
    if (gamma_c > std::min(gamma_s, gamma_i) + slack) {
        throw InputError("gamma_c = " + fmt(gamma_c) + " exceeds min(gamma_s, gamma_i) = "
                         + fmt(std::min(gamma_s, gamma_i)));
    }
    if (gamma_s + gamma_i - gamma_c > 1 + slack) {
        throw InputError("gamma_s + gamma_i - gamma_c = " + fmt(gamma_s + gamma_i - gamma_c)
                         + " exceeds 1");
    }
    require_unit(zeta, "zeta", false);
    require_unit(delta_s, "delta_s", false);
    require_unit(delta_i, "delta_i", false);
    require_unit(eta_s, "eta_s", false);
    require_unit(eta_i, "eta_i", false);
    require_nonnegative(dark_rate_s, "dark_rate_s");
    require_nonnegative(dark_rate_i, "dark_rate_i");
    require_nonnegative(dead_time_signal, "dead_time_signal");
    require_nonnegative(dead_time_generator, "dead_time_generator");
    require_nonnegative(holdoff_idler, "holdoff_idler");
    require_nonnegative(jitter, "jitter");
    if (!(gate_period > 0) || !std::isfinite(gate_period)) {
        throw InputError("gate_period must be positive, got " + fmt(gate_period));
    }
    require_nonnegative(gate_delay, "gate_delay");
    require_nonnegative(idler_delay, "idler_delay");
    require_nonnegative(gate_rise_time, "gate_rise_time");
    if (gate_rise_time > gate_period / 2) {
        throw InputError("gate_rise_time must not exceed half the gate period");
    }
    require_nonnegative(random_gate_rate, "random_gate_rate");
    if (!(duration > 0) || !std::isfinite(duration)) {
        throw InputError("duration must be positive, got " + fmt(duration));
    }
    if (duration * 1e12 > 9e18) throw InputError("duration too long for picosecond timestamps");
    if (!(event_budget > 0)) throw InputError("event_budget must be positive");
}

double SimConfig::mean_pair_rate() const
{
    return pump_mode == PumpMode::CW ? pair_rate : mean_pairs_per_pulse * pulse_rate;
}

DerivedRates SimConfig::expected_rates() const
{
    DerivedRates d;
    d.pair_rate = mean_pair_rate();
    d.signal_fiber_rate = gamma_s * zeta * delta_s * d.pair_rate;
    d.idler_fiber_rate = gamma_i * delta_i * d.pair_rate;
    d.correlated_rate = gamma_c * zeta * delta_s * delta_i * d.pair_rate;
    // Photons from other pairs in a gate that follows its herald.
    d.accidental_mean = gate_period * d.idler_fiber_rate;
    return d;
}

SystemParams SimConfig::system_params() const
{
    SystemParams p;
    p.eta_s = eta_s;
    p.eta_i = eta_i;
    p.delta_s = delta_s;
    p.delta_i = delta_i;
    p.zeta = zeta;
    p.gate_period = gate_period;
    p.dead_time_signal = dead_time_signal;
    p.dead_time_generator = dead_time_generator;
    p.holdoff_idler = holdoff_idler;
    return p;
}

SimConfig reference_sim_config()
{
    SimConfig c;
    c.pump_mode = PumpMode::CW;
    c.pair_rate = 1340e3;
    c.zeta = 0.5;
    c.delta_s = 0.54;
    c.delta_i = 0.63;
    // Couplings that reproduce R_s = 147e3, R_i = 615e3, R_c = 71e3 at this pair rate.
    c.gamma_s = 147e3 / (c.zeta * c.delta_s * c.pair_rate);
    c.gamma_i = 615e3 / (c.delta_i * c.pair_rate);
    c.gamma_c = 71e3 / (c.zeta * c.delta_s * c.delta_i * c.pair_rate);
    c.eta_s = 0.60;
    c.eta_i = 0.18;
    c.dark_rate_s = 90;
    // 40 dark clicks/s at 81e3 gates/s of 10 ns.
    c.gate_period = 10e-9;
    c.dark_rate_i = -std::log1p(-40.0 / 81e3) / c.gate_period;
    c.dead_time_signal = 50e-9;
    c.dead_time_generator = 130e-9;
    c.holdoff_idler = 10e-6;
    c.idler_delay = 50e-9;
    c.center_gate();
    c.duration = 10;
    c.seed = 20261016;
    return c;
}

std::vector<Pair> generate_pairs(const SimConfig& config, TimeWindow window, Rng& rng, std::uint64_t first_id)
{
    std::vector<Pair> pairs;
    if (window.end <= window.begin) return pairs;
    std::uint64_t id = first_id;

    if (config.pump_mode == PumpMode::CW) {
        const double rate = config.pair_rate;
        if (!(rate > 0)) return pairs;
        const double span = (window.end - window.begin) * 1e-12;
        pairs.reserve(static_cast<std::size_t>(rate * span * 1.01 + 16));
        double x = 0;
        for (;;) {
            x += rng.exponential(rate);
            if (x >= span) break;
            const TimePs t = window.begin + static_cast<TimePs>(std::llround(x * 1e12));
            if (t >= window.end) break;
            pairs.push_back({t, id++});
        }
        return pairs;
    }

    const double mu = config.mean_pairs_per_pulse;
    if (!(mu > 0)) return pairs;
    const double period_ps = 1e12 / config.pulse_rate;
    const double nonempty = mu / (1 + mu);
    const auto pulse_time = [&](std::int64_t k) {
        return static_cast<TimePs>(std::llround(static_cast<double>(k) * period_ps));
    };
    auto k = static_cast<std::int64_t>(std::ceil(static_cast<double>(window.begin) / period_ps));
    while (pulse_time(k - 1) >= window.begin) --k;
    while (pulse_time(k) < window.begin) ++k;
    for (;;) {
        k += static_cast<std::int64_t>(rng.geometric(nonempty));
        const TimePs t = pulse_time(k);
        if (t >= window.end) break;
        // Bose-Einstein count conditioned on n >= 1 is 1 + Bose-Einstein.
        const std::uint64_t n = 1 + rng.geometric(1 / (1 + mu));
        for (std::uint64_t j = 0; j < n; ++j) pairs.push_back({t, id++});
        ++k;
    }
    return pairs;
}

Routing route_pair(const SimConfig& config, Rng& rng)
{
    const double u = rng.uniform();
    Routing r;
    if (u < config.gamma_c) {
        r = {true, true};
    } else if (u < config.gamma_s) {
        r = {true, false};
    } else if (u < config.gamma_s + config.gamma_i - config.gamma_c) {
        r = {false, true};
    }
    if (r.signal) r.signal = rng.bernoulli(config.zeta) && rng.bernoulli(config.delta_s);
    if (r.idler) r.idler = rng.bernoulli(config.delta_i);
    return r;
}

namespace {

struct RoutingTally
{
    TimeWindow owned;
    std::uint64_t pairs = 0;
    std::uint64_t signal = 0;
    std::uint64_t idler = 0;
    std::uint64_t both = 0;
};

void add_poisson_events(std::vector<TimeTag>& out, double rate, TimeWindow w, EventTag tag, Rng& rng)
{
    if (!(rate > 0) || w.end <= w.begin) return;
    const double span = (w.end - w.begin) * 1e-12;
    double x = 0;
    for (;;) {
        x += rng.exponential(rate);
        if (x >= span) break;
        const TimePs t = w.begin + static_cast<TimePs>(std::llround(x * 1e12));
        if (t >= w.end) break;
        out.push_back({t, tag, no_pair});
    }
}

EventStream build_stream(const SimConfig& config, std::span<const Pair> pairs, TimeWindow window,
                         Rng& route_rng, Rng& dark_rng, RoutingTally* tally)
{
    EventStream s;
    const TimePs idler_delay = to_ps(config.idler_delay);
    s.events.reserve(pairs.size() / 2 + 16);
    for (const Pair& p : pairs) {
        const Routing r = route_pair(config, route_rng);
        if (r.signal) s.events.push_back({p.time, EventTag::SignalPhoton, p.id});
        if (r.idler) s.events.push_back({p.time + idler_delay, EventTag::IdlerPhoton, p.id});
        if (tally && p.time >= tally->owned.begin && p.time < tally->owned.end) {
            ++tally->pairs;
            tally->signal += r.signal;
            tally->idler += r.idler;
            tally->both += r.signal && r.idler;
        }
    }
    add_poisson_events(s.events, config.dark_rate_s, window, EventTag::SignalDark, dark_rng);
    // Idler darks must cover every gate that can open for heralds in the window.
    const TimeWindow idler_window{window.begin,
                                  window.end + to_ps(config.gate_delay + config.gate_period) + idler_delay};
    add_poisson_events(s.events, config.dark_rate_i, idler_window, EventTag::IdlerDark, dark_rng);
    std::sort(s.events.begin(), s.events.end(), [](const TimeTag& a, const TimeTag& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.tag != b.tag) return a.tag < b.tag;
        return a.pair_id < b.pair_id;
    });
    return s;
}

std::vector<Herald> generator_filter(std::span<const Herald> triggers, const SimConfig& config)
{
    std::vector<Herald> heralds;
    heralds.reserve(triggers.size());
    const TimePs dead = at_least_one_ps(config.dead_time_generator);
    for (const Herald& h : triggers) {
        if (heralds.empty() || h.time >= heralds.back().time + dead) heralds.push_back(h);
    }
    return heralds;
}

} // namespace

EventStream build_event_stream(const SimConfig& config, std::span<const Pair> pairs, TimeWindow window,
                               Rng& route_rng, Rng& dark_rng)
{
    return build_stream(config, pairs, window, route_rng, dark_rng, nullptr);
}

SignalDetection detect_signal(const EventStream& stream, const SimConfig& config, Rng& rng)
{
    std::vector<Herald> candidates;
    const double jitter_ps = config.jitter * 1e12;
    for (const TimeTag& e : stream.events) {
        if (e.tag == EventTag::SignalPhoton) {
            if (!rng.bernoulli(config.eta_s)) continue;
        } else if (e.tag != EventTag::SignalDark) {
            continue;
        }
        TimePs t = e.time;
        if (jitter_ps > 0) t += static_cast<TimePs>(std::llround(jitter_ps * rng.normal()));
        candidates.push_back({t, e.pair_id});
    }
    if (jitter_ps > 0) {
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Herald& a, const Herald& b) { return a.time < b.time; });
    }

    SignalDetection out;
    std::vector<Herald> clicks;
    clicks.reserve(candidates.size());
    const TimePs dead = at_least_one_ps(config.dead_time_signal);
    for (const Herald& c : candidates) {
        if (clicks.empty() || c.time >= clicks.back().time + dead) clicks.push_back(c);
    }
    out.clicks.reserve(clicks.size());
    for (const Herald& c : clicks) out.clicks.push_back(c.time);
    out.heralds = generator_filter(clicks, config);
    return out;
}

std::vector<Herald> random_gates(const SimConfig& config, TimeWindow window, Rng& rng)
{
    std::vector<TimeTag> train;
    add_poisson_events(train, config.random_gate_rate, window, EventTag::SignalDark, rng);
    std::vector<Herald> triggers;
    triggers.reserve(train.size());
    for (const TimeTag& t : train) triggers.push_back({t.time, no_pair});
    return generator_filter(triggers, config);
}

std::vector<GateRecord> gate_idler(std::span<const Herald> heralds, const EventStream& stream,
                                   const SimConfig& config, Rng& rng, IdlerState& state)
{
    std::vector<TimeTag> idler;
    for (const TimeTag& e : stream.events) {
        if (e.tag == EventTag::IdlerPhoton || e.tag == EventTag::IdlerDark) idler.push_back(e);
    }

    const TimePs delay = to_ps(config.gate_delay);
    const TimePs width = to_ps(config.gate_period);
    const TimePs holdoff = to_ps(config.holdoff_idler);
    const double rise_ps = config.gate_rise_time * 1e12;
    const auto ramp = [&](TimePs offset) {
        if (rise_ps <= 0) return 1.0;
        const double u = static_cast<double>(offset);
        return std::clamp(std::min(u / rise_ps, (static_cast<double>(width) - u) / rise_ps), 0.0, 1.0);
    };

    std::vector<GateRecord> records;
    records.reserve(heralds.size());
    const auto by_time = [](const TimeTag& e, TimePs t) { return e.time < t; };
    for (const Herald& h : heralds) {
        GateRecord g;
        g.gate_open = h.time + delay;
        g.gate_close = g.gate_open + width;
        const auto lo = std::lower_bound(idler.begin(), idler.end(), g.gate_open, by_time);
        const auto hi = std::lower_bound(lo, idler.end(), g.gate_close, by_time);

        g.armed = g.gate_open >= state.blind_until;
        for (auto it = lo; it != hi; ++it) {
            if (it->tag == EventTag::IdlerPhoton) {
                ++g.photon_count_in_fiber;
                if (h.pair_id != no_pair && it->pair_id == h.pair_id) g.contains_twin = true;
                if (g.armed && rng.bernoulli(config.eta_i * ramp(it->time - g.gate_open))) g.click = true;
            } else if (g.armed) {
                g.click = true;
            }
        }
        if (g.click) state.blind_until = g.gate_open + holdoff;
        records.push_back(g);
    }
    return records;
}

void GateTally::add(const GateRecord& r)
{
    const auto n = static_cast<std::size_t>(r.photon_count_in_fiber);
    if (histogram.size() <= n) histogram.resize(n + 1, 0);
    ++histogram[n];
    ++gates;
    if (r.armed) {
        ++armed_gates;
        clicks += r.click;
    }
    twin_gates += r.contains_twin;
}

void GateTally::merge(const GateTally& other)
{
    if (histogram.size() < other.histogram.size()) histogram.resize(other.histogram.size(), 0);
    for (std::size_t n = 0; n < other.histogram.size(); ++n) histogram[n] += other.histogram[n];
    gates += other.gates;
    armed_gates += other.armed_gates;
    clicks += other.clicks;
    twin_gates += other.twin_gates;
}

double GateStatistics::p(int n) const
{
    return n >= 0 && static_cast<std::size_t>(n) < probability.size() ? probability[static_cast<std::size_t>(n)] : 0.0;
}

double GateStatistics::se(int n) const
{
    return n >= 0 && static_cast<std::size_t>(n) < probability_se.size() ? probability_se[static_cast<std::size_t>(n)]
                                                                         : 0.0;
}

double binomial_se(double p, double n)
{
    if (!(n > 0)) return std::numeric_limits<double>::infinity();
    return std::sqrt(std::max(0.0, p * (1 - p)) / n);
}

double g2_standard_error(double p_ge1, double p_ge2, double gates)
{
    if (!(p_ge1 > 0) || !(gates > 0)) return std::numeric_limits<double>::infinity();
    const double var1 = p_ge1 * (1 - p_ge1) / gates;
    const double var2 = p_ge2 * (1 - p_ge2) / gates;
    const double cov = p_ge2 * (1 - p_ge1) / gates;
    const double d2 = 2 / (p_ge1 * p_ge1);
    const double d1 = -4 * p_ge2 / (p_ge1 * p_ge1 * p_ge1);
    return std::sqrt(std::max(0.0, d2 * d2 * var2 + d1 * d1 * var1 + 2 * d1 * d2 * cov));
}

GateStatistics estimate_statistics(const GateTally& tally)
{
    if (tally.gates == 0) throw EmptyReportError("no gates to estimate statistics from");
    GateStatistics s;
    s.gates = tally.gates;
    s.histogram = tally.histogram;
    const double n = static_cast<double>(tally.gates);
    for (const std::uint64_t count : tally.histogram) {
        const double p = static_cast<double>(count) / n;
        s.probability.push_back(p);
        s.probability_se.push_back(binomial_se(p, n));
    }
    const std::uint64_t zero = tally.histogram.empty() ? 0 : tally.histogram[0];
    const std::uint64_t one = tally.histogram.size() > 1 ? tally.histogram[1] : 0;
    s.p_at_least_one = static_cast<double>(tally.gates - zero) / n;
    s.p_at_least_two = static_cast<double>(tally.gates - zero - one) / n;
    if (s.p_at_least_one > 0) {
        s.g2_zero = 2 * s.p_at_least_two / (s.p_at_least_one * s.p_at_least_one);
    } else {
        s.g2_zero = std::numeric_limits<double>::quiet_NaN();
    }
    s.g2_zero_se = g2_standard_error(s.p_at_least_one, s.p_at_least_two, n);
    s.twin_fraction = static_cast<double>(tally.twin_gates) / n;
    return s;
}

GateStatistics estimate_statistics(std::span<const GateRecord> records)
{
    GateTally tally;
    for (const GateRecord& r : records) tally.add(r);
    return estimate_statistics(tally);
}

double SimReport::click_probability() const
{
    return tally.armed_gates > 0 ? static_cast<double>(tally.clicks) / static_cast<double>(tally.armed_gates) : 0.0;
}

namespace {

struct SegmentPlan
{
    std::vector<TimePs> bounds;  // size = segments + 1
    TimePs warmup = 0;
    TimePs lookahead = 0;
};

SegmentPlan plan_segments(const SimConfig& c)
{
    SegmentPlan plan;
    const double warmup = std::max({10 * c.holdoff_idler, 100 * c.dead_time_signal,
                                    100 * c.dead_time_generator, 1e-6})
                        + std::max(0.0, c.idler_delay - c.gate_delay) + 6 * c.jitter;
    const double lookahead =
        std::max(0.0, c.gate_delay + c.gate_period - c.idler_delay) + 6 * c.jitter + 1e-9;
    plan.warmup = to_ps(warmup);
    plan.lookahead = to_ps(lookahead);

    // About a million generated events per segment keeps memory bounded.
    const double event_rate = c.mean_pair_rate() + c.dark_rate_s + c.dark_rate_i
                            + c.random_gate_rate;
    double length = event_rate > 0 ? 1e6 / event_rate : c.duration;
    length = std::max(length, 20 * warmup);
    const auto segments = static_cast<std::size_t>(std::max(1.0, std::ceil(c.duration / length)));
    const TimePs total = to_ps(c.duration);
    for (std::size_t k = 0; k <= segments; ++k) {
        plan.bounds.push_back(static_cast<TimePs>(
            std::llround(static_cast<double>(total) * static_cast<double>(k) / static_cast<double>(segments))));
    }
    return plan;
}

struct SegmentResult
{
    SimReport report;
    std::vector<GateRecord> records;
};

SegmentResult run_segment(const SimConfig& c, const SegmentPlan& plan, std::size_t k, bool keep_records,
                          std::atomic<std::uint64_t>& generated)
{
    const TimeWindow owned{plan.bounds[k], plan.bounds[k + 1]};
    const TimeWindow window{owned.begin - plan.warmup, owned.end + plan.lookahead};

    Rng pair_rng(c.seed, k, PairsStream);
    Rng route_rng(c.seed, k, RouteStream);
    Rng dark_rng(c.seed, k, DarkStream);
    Rng signal_rng(c.seed, k, SignalStream);
    Rng gate_rng(c.seed, k, GateStream);
    Rng idler_rng(c.seed, k, IdlerStream);

    const std::vector<Pair> pairs = generate_pairs(c, window, pair_rng, static_cast<std::uint64_t>(k) << 40);
    const std::uint64_t total = generated.fetch_add(pairs.size()) + pairs.size();
    if (static_cast<double>(total) > c.event_budget) {
        throw EventBudgetError("event budget of " + fmt(c.event_budget) + " pairs exceeded", total);
    }

    RoutingTally routing{owned};
    const EventStream stream = build_stream(c, pairs, window, route_rng, dark_rng, &routing);
    const SignalDetection detection = detect_signal(stream, c, signal_rng);
    const std::vector<Herald> heralds =
        c.gating == GatingMode::Heralded ? detection.heralds : random_gates(c, window, gate_rng);
    IdlerState state;
    const std::vector<GateRecord> gates = gate_idler(heralds, stream, c, idler_rng, state);

    SegmentResult out;
    SimReport& r = out.report;
    r.pairs = routing.pairs;
    r.signal_fiber_photons = routing.signal;
    r.idler_fiber_photons = routing.idler;
    r.correlated_pairs = routing.both;
    const auto in_owned = [&](TimePs t) { return t >= owned.begin && t < owned.end; };
    for (const TimePs t : detection.clicks) r.signal_clicks += in_owned(t);
    for (std::size_t g = 0; g < heralds.size(); ++g) {
        if (!in_owned(heralds[g].time)) continue;
        ++r.heralds;
        r.tally.add(gates[g]);
        if (keep_records) out.records.push_back(gates[g]);
    }
    return out;
}

std::vector<SegmentResult> run_all(const SimConfig& c, bool keep_records)
{
    c.validate();
    const double expected = c.mean_pair_rate() * c.duration;
    if (expected > c.event_budget) {
        throw EventBudgetError("run would generate about " + fmt(expected) + " pairs, above the event budget of "
                                   + fmt(c.event_budget),
                               0);
    }
    const SegmentPlan plan = plan_segments(c);
    const std::size_t segments = plan.bounds.size() - 1;
    std::vector<SegmentResult> results(segments);
    std::vector<std::exception_ptr> errors(segments);
    std::atomic<std::uint64_t> generated{0};
    std::atomic<std::size_t> next{0};

    const auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= segments) return;
            try {
                results[k] = run_segment(c, plan, k, keep_records, generated);
            } catch (...) {
                errors[k] = std::current_exception();
                next.store(segments);
            }
        }
    };

    unsigned threads = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, segments));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

SimConfig with_seed(SimConfig c, std::uint64_t run)
{
    std::uint64_t state = c.seed ^ (run * 0x9e3779b97f4a7c15ULL);
    c.seed = splitmix64(state);
    return c;
}

} // namespace

SimReport simulate(const SimConfig& config)
{
    const std::vector<SegmentResult> parts = run_all(config, false);
    SimReport r;
    r.duration = config.duration;
    for (const SegmentResult& p : parts) {
        r.pairs += p.report.pairs;
        r.signal_fiber_photons += p.report.signal_fiber_photons;
        r.idler_fiber_photons += p.report.idler_fiber_photons;
        r.correlated_pairs += p.report.correlated_pairs;
        r.signal_clicks += p.report.signal_clicks;
        r.heralds += p.report.heralds;
        r.tally.merge(p.report.tally);
    }
    if (r.tally.gates > 0) r.statistics = estimate_statistics(r.tally);
    return r;
}

std::vector<GateRecord> simulate_gates(const SimConfig& config)
{
    std::vector<GateRecord> records;
    for (SegmentResult& p : run_all(config, true)) {
        records.insert(records.end(), p.records.begin(), p.records.end());
    }
    return records;
}

EventStream simulate_event_stream(const SimConfig& config)
{
    config.validate();
    const double expected = config.mean_pair_rate() * config.duration;
    if (expected > config.event_budget) {
        throw EventBudgetError("run would generate about " + fmt(expected) + " pairs, above the event budget", 0);
    }
    const TimeWindow window{0, to_ps(config.duration)};
    Rng pair_rng(config.seed, 0, PairsStream);
    Rng route_rng(config.seed, 0, RouteStream);
    Rng dark_rng(config.seed, 0, DarkStream);
    const std::vector<Pair> pairs = generate_pairs(config, window, pair_rng);
    EventStream s = build_event_stream(config, pairs, window, route_rng, dark_rng);
    std::erase_if(s.events, [&](const TimeTag& e) { return e.time >= window.end; });
    return s;
}

void write_timetags(const EventStream& stream, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    for (const TimeTag& e : stream.events) {
        unsigned char rec[9];
        const auto t = static_cast<std::uint64_t>(e.time);
        for (int b = 0; b < 8; ++b) rec[b] = static_cast<unsigned char>(t >> (8 * b));
        rec[8] = static_cast<unsigned char>(e.tag);
        out.write(reinterpret_cast<const char*>(rec), sizeof rec);
    }
    if (!out) throw ComputationError("failed writing time tags to '" + path + "'");
}

EventStream read_timetags(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    EventStream s;
    unsigned char rec[9];
    while (in.read(reinterpret_cast<char*>(rec), sizeof rec)) {
        std::uint64_t t = 0;
        for (int b = 0; b < 8; ++b) t |= static_cast<std::uint64_t>(rec[b]) << (8 * b);
        if (rec[8] > 3) throw SchemaError(0, "unknown time-tag code " + std::to_string(rec[8]));
        s.events.push_back({static_cast<TimePs>(t), static_cast<EventTag>(rec[8]), no_pair});
    }
    if (in.gcount() != 0) throw SchemaError(0, "truncated time-tag record at end of '" + path + "'");
    return s;
}

SimulatedMeasurement simulate_measurements(const SimConfig& config)
{
    config.validate();
    SimulatedMeasurement out;
    out.truth = config.expected_rates();
    out.system = config.system_params();

    SimConfig heralded = with_seed(config, 1);
    heralded.gating = GatingMode::Heralded;
    out.heralded = simulate(heralded);
    const double r0 = out.heralded.heralding_rate();
    if (!(r0 > 0)) throw ComputationError("heralded run produced no armed gates");

    SimConfig random = with_seed(config, 2);
    random.gating = GatingMode::Random;
    random.random_gate_rate = out.heralded.herald_rate();
    out.random = simulate(random);

    SimConfig multimode = with_seed(config, 3);
    multimode.gamma_s = 1;
    multimode.gamma_i = 0;
    multimode.gamma_c = 0;
    multimode.gating = GatingMode::Random;
    multimode.random_gate_rate = 0;
    const SimReport mm = simulate(multimode);

    SimConfig dark = with_seed(config, 4);
    dark.pair_rate = 0;
    dark.mean_pairs_per_pulse = 0;
    dark.gating = GatingMode::Random;
    dark.random_gate_rate = out.heralded.herald_rate();
    const SimReport dk = simulate(dark);

    MeasuredRates& m = out.measured;
    m.signal_multimode = mm.signal_click_rate();
    m.signal_singlemode = out.heralded.signal_click_rate();
    m.heralding_rate = r0;
    m.heralded_clicks = out.heralded.click_rate();
    m.random_gate_clicks = r0 * out.random.click_probability();
    m.signal_dark = dk.signal_click_rate();
    m.idler_dark = r0 * dk.click_probability();
    return out;
}

std::vector<DelayScanPoint> delay_scan(const SimConfig& config, std::span<const double> delays)
{
    std::vector<DelayScanPoint> points;
    for (const double d : delays) {
        SimConfig c = config;
        c.gate_delay = d;
        const SimReport r = simulate(c);
        DelayScanPoint p;
        p.gate_delay = d;
        p.click_rate = r.click_rate();
        p.click_rate_se = std::sqrt(static_cast<double>(r.tally.clicks)) / r.duration;
        p.armed_gates = r.tally.armed_gates;
        points.push_back(p);
    }
    return points;
}

std::vector<PumpSweepPoint> sweep_pump_power(const SimConfig& config, std::span<const double> scales)
{
    std::vector<PumpSweepPoint> points;
    for (const double s : scales) {
        if (!(s > 0) || !std::isfinite(s)) throw InputError("pump scale must be positive, got " + fmt(s));
        SimConfig c = config;
        c.pair_rate *= s;
        c.mean_pairs_per_pulse *= s;
        c.gating = GatingMode::Heralded;
        const SimReport h = simulate(c);

        SimConfig rc = with_seed(c, 2);
        rc.gating = GatingMode::Random;
        rc.random_gate_rate = h.herald_rate();
        const SimReport r = simulate(rc);

        PumpSweepPoint p;
        p.scale = s;
        p.pair_rate = c.mean_pair_rate();
        p.heralding_rate = h.heralding_rate();
        p.b0 = c.gate_period * p.heralding_rate;
        p.signal_rate = h.signal_click_rate();
        p.heralded_click_rate = h.click_rate();
        p.random_click_rate = p.heralding_rate * r.click_probability();
        const double nan = std::numeric_limits<double>::quiet_NaN();
        p.g2_zero = h.statistics ? h.statistics->g2_zero : nan;
        p.g2_zero_se = h.statistics ? h.statistics->g2_zero_se : nan;

        const DerivedRates e = c.expected_rates();
        if (e.signal_fiber_rate > 0) {
            const double p_cor = e.correlated_rate / e.signal_fiber_rate;
            const double b = std::max(0.0, c.gate_period * (e.idler_fiber_rate - p_cor * p.heralding_rate));
            p.g2_model = p_cor > 0 || b > 0 ? g2_zero({p_cor, b, OriginalDistribution::Poisson}) : nan;
        } else {
            p.g2_model = nan;
        }
        points.push_back(p);
    }
    return points;
}

GateStatistics pulse_photon_statistics(const SimConfig& config, std::uint64_t pulses)
{
    config.validate();
    if (config.pump_mode != PumpMode::Pulsed) throw InputError("pulse statistics need a pulsed pump");
    if (pulses == 0) throw EmptyReportError("no pulses requested");
    Rng rng(config.seed, 0, PulseStream);
    const double mu = config.mean_pairs_per_pulse;
    GateTally tally;
    tally.histogram.assign(1, 0);
    tally.gates = pulses;
    if (!(mu > 0)) {
        tally.histogram[0] = pulses;
        return estimate_statistics(tally);
    }
    const double nonempty = mu / (1 + mu);
    std::uint64_t k = 0;
    while (k < pulses) {
        const std::uint64_t skip = rng.geometric(nonempty);
        if (skip >= pulses - k) {
            tally.histogram[0] += pulses - k;
            break;
        }
        tally.histogram[0] += skip;
        k += skip;
        const std::uint64_t n = 1 + rng.geometric(1 / (1 + mu));
        std::size_t idlers = 0;
        for (std::uint64_t j = 0; j < n; ++j) idlers += route_pair(config, rng).idler;
        if (tally.histogram.size() <= idlers) tally.histogram.resize(idlers + 1, 0);
        ++tally.histogram[idlers];
        ++k;
    }
    return estimate_statistics(tally);
}

} // namespace hsps
