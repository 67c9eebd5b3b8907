#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <hsps/errors.hpp>
#include <hsps/sim.hpp>
#include <hsps/stats.hpp>
#include <hsps/validation.hpp>

using namespace hsps;

namespace {

// |observed - expected| within k standard errors.
bool within(double observed, double expected, double se, double k = 3)
{
    return std::abs(observed - expected) <= k * se;
}

SimConfig short_reference(double duration = 0.2)
{
    SimConfig c = reference_sim_config();
    c.duration = duration;
    return c;
}

} // namespace

TEST_SUITE("sim") {

TEST_CASE("random streams are reproducible and keyed by stream and purpose")
{
    Rng a(42, 3, 1), b(42, 3, 1), c(42, 4, 1), d(42, 3, 2);
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
    CHECK(x != d.next());

    Rng r(5);
    double sum_u = 0, sum_e = 0, sum_g = 0, sum_n = 0, sum_n2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        CHECK_FALSE((u < 0 || u >= 1));
        sum_u += u;
        sum_e += r.exponential(2.0);
        sum_g += static_cast<double>(r.geometric(0.25));
        const double z = r.normal();
        sum_n += z;
        sum_n2 += z * z;
    }
    CHECK(within(sum_u / n, 0.5, std::sqrt(1.0 / 12 / n), 4));
    CHECK(within(sum_e / n, 0.5, 0.5 / std::sqrt(n), 4));
    CHECK(within(sum_g / n, 3.0, std::sqrt(0.75) / 0.25 / std::sqrt(n), 4));
    CHECK(within(sum_n / n, 0.0, 1 / std::sqrt(n), 4));
    CHECK(within(sum_n2 / n, 1.0, std::sqrt(2.0 / n), 4));
}

TEST_CASE("CW pairs form a Poisson process")
{
    SimConfig c;
    c.pair_rate = 1e6;
    Rng rng(9, 0, 1);
    const TimeWindow w{0, to_ps(0.1)};
    const auto pairs = generate_pairs(c, w, rng, 100);
    const double expected = 1e5;
    CHECK(within(static_cast<double>(pairs.size()), expected, std::sqrt(expected), 4));
    CHECK(std::is_sorted(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.time < b.time; }));
    CHECK(pairs.front().id == 100);
    CHECK(pairs.back().id == 100 + pairs.size() - 1);
    CHECK(pairs.front().time >= w.begin);
    CHECK(pairs.back().time < w.end);
}

TEST_CASE("pulsed pairs sit on the pulse grid and are thermal per pulse")
{
    SimConfig c;
    c.pump_mode = PumpMode::Pulsed;
    c.mean_pairs_per_pulse = 0.3;
    c.pulse_rate = 100e6;
    Rng rng(4, 0, 1);
    const auto pairs = generate_pairs(c, {0, to_ps(1e-3)}, rng);
    for (const auto& p : pairs) CHECK(p.time % 10000 == 0);

    // Unheralded per-pulse counts of thermal light: g2 = 2.
    c.gamma_s = c.gamma_i = c.gamma_c = 1;
    c.seed = 31;
    const GateStatistics s = pulse_photon_statistics(c, 2000000);
    CHECK(within(s.g2_zero, 2.0, s.g2_zero_se));
    CHECK(within(s.p(0), 1 / 1.3, s.se(0)));
}

TEST_CASE("dead times: no click closer than the dead time, click rate below its inverse")
{
    SimConfig c = short_reference(0.05);
    c.pair_rate = 2e7;  // saturating
    c.validate();
    Rng pair_rng(1, 0, 1), route(1, 0, 2), dark(1, 0, 3), det(1, 0, 4);
    const TimeWindow w{0, to_ps(c.duration)};
    const auto pairs = generate_pairs(c, w, pair_rng);
    const EventStream stream = build_event_stream(c, pairs, w, route, dark);
    const SignalDetection d = detect_signal(stream, c, det);
    REQUIRE(d.clicks.size() > 1000);
    for (std::size_t i = 1; i < d.clicks.size(); ++i) CHECK_FALSE(d.clicks[i] - d.clicks[i - 1] < to_ps(c.dead_time_signal));
    for (std::size_t i = 1; i < d.heralds.size(); ++i) {
        CHECK_FALSE(d.heralds[i].time - d.heralds[i - 1].time < to_ps(c.dead_time_generator));
    }
    CHECK(static_cast<double>(d.clicks.size()) / c.duration <= 1 / c.dead_time_signal);
}

TEST_CASE("photons arriving together give one click")
{
    SimConfig c;
    c.pump_mode = PumpMode::Pulsed;
    c.mean_pairs_per_pulse = 3;
    c.pulse_rate = 1e6;
    c.duration = 1e-3;
    Rng pair_rng(2, 0, 1), route(2, 0, 2), dark(2, 0, 3), det(2, 0, 4);
    const TimeWindow w{0, to_ps(c.duration)};
    const auto pairs = generate_pairs(c, w, pair_rng);
    const EventStream stream = build_event_stream(c, pairs, w, route, dark);
    const SignalDetection d = detect_signal(stream, c, det);
    CHECK(d.clicks.size() <= 1000);
    CHECK(d.clicks.size() > 700);  // 1 - P(0) = 0.75 of the pulses carry photons
    CHECK(std::adjacent_find(d.clicks.begin(), d.clicks.end()) == d.clicks.end());
}

TEST_CASE("determinism and thread-count invariance")
{
    SimConfig c = short_reference(0.1);
    c.threads = 1;
    const SimReport a = simulate(c);
    const SimReport b = simulate(c);
    c.threads = 3;
    const SimReport t = simulate(c);
    for (const SimReport* r : {&b, &t}) {
        CHECK(r->pairs == a.pairs);
        CHECK(r->signal_clicks == a.signal_clicks);
        CHECK(r->heralds == a.heralds);
        CHECK(r->tally.histogram == a.tally.histogram);
        CHECK(r->tally.clicks == a.tally.clicks);
        CHECK(r->tally.armed_gates == a.tally.armed_gates);
    }
    c.seed += 1;
    CHECK(simulate(c).pairs != a.pairs);
}

TEST_CASE("fiber rates reproduce the configured coupling products")
{
    const SimConfig c = short_reference(1.0);
    const SimReport r = simulate(c);
    const DerivedRates e = c.expected_rates();
    const auto se = [&](std::uint64_t n) { return std::sqrt(static_cast<double>(n)) / r.duration; };
    CHECK(within(r.pair_rate(), c.pair_rate, se(r.pairs)));
    CHECK(within(r.signal_fiber_rate(), e.signal_fiber_rate, se(r.signal_fiber_photons)));
    CHECK(within(r.idler_fiber_rate(), e.idler_fiber_rate, se(r.idler_fiber_photons)));
    CHECK(within(r.correlated_rate(), e.correlated_rate, se(r.correlated_pairs)));
    // The calibrated generator dead time brings the heralding rate near 81e3 /s.
    CHECK(r.heralding_rate() == doctest::Approx(81e3).epsilon(0.01));
}

TEST_CASE("random gating sees Poisson statistics of the idler fiber")
{
    SimConfig c = short_reference(0.5);
    c.gating = GatingMode::Random;
    c.random_gate_rate = 81e3;
    c.holdoff_idler = 0;
    c.dark_rate_i = 0;
    const SimReport r = simulate(c);
    const double mean = c.eta_i * c.gate_period * c.expected_rates().idler_fiber_rate;
    const double p = -std::expm1(-mean);
    CHECK(within(r.click_probability(), p, binomial_se(p, static_cast<double>(r.tally.armed_gates))));
    REQUIRE(r.statistics);
    CHECK(r.statistics->twin_fraction == 0.0);
}

TEST_CASE("hold-off blinds the detector after a click")
{
    SimConfig c = short_reference(0.05);
    c.holdoff_idler = 20e-6;
    const auto gates = simulate_gates(c);
    TimePs last_click = std::numeric_limits<TimePs>::min() / 2;
    std::size_t disarmed = 0;
    for (const auto& g : gates) {
        if (!g.armed) {
            ++disarmed;
            CHECK_FALSE(g.click);
            CHECK(g.gate_open - last_click < to_ps(c.holdoff_idler));
        }
        if (g.click) {
            CHECK(g.gate_open - last_click >= to_ps(c.holdoff_idler));
            last_click = g.gate_open;
        }
    }
    CHECK(disarmed > 0);
}

TEST_CASE("delay scan: rectangular peak as wide as the gate")
{
    std::vector<double> delays;
    for (int ns = 40; ns <= 58; ++ns) delays.push_back(ns * 1e-9);
    const auto peak_bins = [&](double gate, double& total) {
        SimConfig c = short_reference(0.05);
        c.gate_period = gate;
        c.jitter = 0;
        const auto scan = delay_scan(c, delays);
        const double floor = scan.front().click_rate;
        int bins = 0;
        total = 0;
        for (const auto& p : scan) {
            total += p.click_rate;
            if (p.click_rate > 10 * floor) ++bins;
        }
        return bins;
    };
    double total2 = 0, total4 = 0;
    // The twin arrives 50 ns after the herald: a gate opening at d sees it for d in (50 - gate, 50].
    CHECK(peak_bins(2e-9, total2) == 2);
    CHECK(peak_bins(4e-9, total4) == 4);
    CHECK(total4 > total2);
}

TEST_CASE("time-tag files round-trip")
{
    SimConfig c = short_reference(1e-3);
    const EventStream s = simulate_event_stream(c);
    REQUIRE(!s.events.empty());
    const auto path = std::filesystem::temp_directory_path() / "hsps_timetags_test.bin";
    write_timetags(s, path.string());
    CHECK(std::filesystem::file_size(path) == 9 * s.events.size());
    const EventStream back = read_timetags(path.string());
    REQUIRE(back.events.size() == s.events.size());
    for (std::size_t i = 0; i < s.events.size(); ++i) {
        CHECK(back.events[i].time == s.events[i].time);
        CHECK(back.events[i].tag == s.events[i].tag);
    }
    std::filesystem::remove(path);
}

TEST_CASE("event budget is enforced before any work")
{
    SimConfig c = short_reference(10);
    c.event_budget = 1e6;
    try {
        simulate(c);
        FAIL("expected EventBudgetError");
    } catch (const EventBudgetError& e) {
        CHECK(e.generated() == 0);
    }
}

TEST_CASE("configuration validation")
{
    SimConfig c = reference_sim_config();
    c.gamma_c = 0.5;
    CHECK_THROWS_AS(c.validate(), InputError);
    c = reference_sim_config();
    c.gamma_s = 0.9;
    c.gamma_i = 0.9;
    c.gamma_c = 0.7;
    CHECK_THROWS_AS(c.validate(), InputError);
    c = reference_sim_config();
    c.duration = -1;
    CHECK_THROWS_AS(c.validate(), InputError);
    c = reference_sim_config();
    c.eta_i = 1.5;
    CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("empty gate sets are reported, not divided by zero")
{
    CHECK_THROWS_AS(estimate_statistics(GateTally{}), EmptyReportError);
}

TEST_CASE("g2 standard error matches a direct delta-method evaluation")
{
    const double p1 = 0.5, p2 = 0.01, n = 1e6;
    // Gradient (-4 p2 / p1^3, 2 / p1^2) with the multinomial covariance.
    const double g1 = -4 * p2 / (p1 * p1 * p1), g2 = 2 / (p1 * p1);
    const double var = g1 * g1 * p1 * (1 - p1) / n + g2 * g2 * p2 * (1 - p2) / n + 2 * g1 * g2 * p2 * (1 - p1) / n;
    CHECK(g2_standard_error(p1, p2, n) == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
}

TEST_CASE("ideal-chain matrix point agrees with the closed forms")
{
    const MatrixPoint m = run_matrix_point(0.5, 0.7, 2e5, 77);
    CHECK(m.gates >= 200000);
    for (const auto& c : m.checks) {
        CAPTURE(c.name);
        CAPTURE(c.z);
        CHECK(c.pass());
    }
}

TEST_CASE("random gating of an uncorrelated source at b = 3 matches the Poisson-tail g2")
{
    SimConfig c = matrix_config(0.0, 3.0, 2e5, 123);
    c.gating = GatingMode::Random;
    c.random_gate_rate = 1e7;  // 5e6 gates/s behind the one-gate dead time
    c.duration = 0.025;
    c.event_budget = 2 * c.pair_rate * c.duration;
    const SimReport r = simulate(c);
    REQUIRE(r.statistics);
    const GatedStatisticsInput in{0.0, 3.0, OriginalDistribution::Poisson};
    CAPTURE(r.statistics->g2_zero);
    CHECK(r.statistics->gates > 100000);
    CHECK(within(r.statistics->g2_zero, g2_zero(in), r.statistics->g2_zero_se));
}

TEST_CASE("pump sweep: g2 grows with the pump and follows the model curve")
{
    SimConfig c = short_reference(0.5);
    const std::vector<double> scales{0.125, 0.5, 1, 2, 4, 8};
    const auto points = sweep_pump_power(c, scales);
    REQUIRE(points.size() == scales.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        CAPTURE(points[i].scale);
        CAPTURE(points[i].g2_zero);
        CAPTURE(points[i].g2_model);
        CHECK(within(points[i].g2_zero, points[i].g2_model, points[i].g2_zero_se));
        if (i > 0) {
            CHECK(points[i].g2_zero > points[i - 1].g2_zero);
            CHECK(points[i].b0 > points[i - 1].b0);
        }
    }
}

TEST_CASE("exact binomial deviate")
{
    CHECK(binomial_equivalent_z(500, 1000, 0.5) == 0.0);
    // One event where 0.02 are expected: the tail 1 - e^-0.02 doubled.
    const double z = binomial_equivalent_z(1, 1000000, 2e-8);
    CHECK(z > 1.9);
    CHECK(z < 2.2);
    // Large counts approach the normal deviate.
    const ZCheck c = make_count_check("x", 5300, 10000, 0.5);
    CHECK(*c.exact_z == doctest::Approx(c.z).epsilon(0.03));
    CHECK(std::isinf(binomial_equivalent_z(1, 10, 0.0)));
}

} // TEST_SUITE
