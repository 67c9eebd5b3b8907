#include <doctest.h>

#include <cmath>
#include <random>

#include <hsps/errors.hpp>
#include <hsps/inference.hpp>

#include "oracles.hpp"

using namespace hsps;

namespace {

MeasuredRates golden_measured()
{
    MeasuredRates m;
    m.signal_multimode = 218e3;
    m.signal_singlemode = 88e3;
    m.heralding_rate = 81e3;
    m.heralded_clicks = 7200;
    m.random_gate_clicks = 130;
    m.signal_dark = 90;
    m.idler_dark = 40;
    return m;
}

SystemParams golden_system()
{
    SystemParams p;
    p.eta_s = 0.60;
    p.eta_i = 0.18;
    p.delta_s = 0.54;
    p.delta_i = 0.63;
    p.zeta = 0.5;
    p.gate_period = 10e-9;
    return p;
}

std::string stage_of(const MeasuredRates& m, const SystemParams& p)
{
    try {
        characterize(m, p);
    } catch (const StageError& e) {
        return e.stage();
    }
    return "";
}

// Forward model: detector-level rates produced by given fiber rates.
MeasuredRates forward(const DerivedRates& t, const SystemParams& p, double R0, double dark_s, double dark_i)
{
    MeasuredRates m;
    m.signal_multimode = p.eta_s * p.zeta * p.delta_s * t.pair_rate + dark_s;
    m.signal_singlemode = p.eta_s * t.signal_fiber_rate + dark_s;
    m.heralding_rate = R0;
    m.signal_dark = dark_s;
    m.idler_dark = dark_i;
    m.random_gate_clicks = R0 * (1 - (1 - dark_i / R0) * std::exp(-p.eta_i * p.gate_period * t.idler_fiber_rate));
    const double b = p.gate_period * (t.idler_fiber_rate - t.correlated_rate * R0 / t.signal_fiber_rate);
    const double twin = p.eta_i * t.correlated_rate / t.signal_fiber_rate;
    m.heralded_clicks = R0 * (1 - (1 - twin) * (1 - dark_i / R0) * std::exp(-p.eta_i * b));
    return m;
}

} // namespace

TEST_SUITE("inference") {

TEST_CASE("reference measurement reproduces the frozen high-precision values")
{
    const Characterization c = characterize(golden_measured(), golden_system());
    namespace g = oracle::golden;
    CHECK(c.rates.pair_rate == doctest::Approx(g::R_p).epsilon(1e-12));
    CHECK(c.rates.signal_fiber_rate == doctest::Approx(g::R_s).epsilon(1e-12));
    CHECK(c.rates.idler_fiber_rate == doctest::Approx(g::R_i).epsilon(1e-11));
    CHECK(c.rates.correlated_rate == doctest::Approx(g::R_c).epsilon(1e-10));
    CHECK(c.rates.accidental_mean == doctest::Approx(g::b).epsilon(1e-9));
    CHECK(c.coupling.signal_coupling == doctest::Approx(g::gamma_s).epsilon(1e-12));
    CHECK(c.coupling.idler_coupling == doctest::Approx(g::gamma_i).epsilon(1e-11));
    CHECK(c.coupling.pair_coupling == doctest::Approx(g::gamma_c).epsilon(1e-10));
    CHECK(c.coupling.idler_given_signal == doctest::Approx(g::mu_i_given_s).epsilon(1e-10));
    CHECK(c.coupling.signal_given_idler == doctest::Approx(g::mu_s_given_i).epsilon(1e-10));
    CHECK(c.p_zero == doctest::Approx(g::P0).epsilon(1e-10));
    CHECK(c.mu_her == doctest::Approx(g::P1).epsilon(1e-10));
    CHECK(c.p_at_least_two == doctest::Approx(g::P_ge2).epsilon(1e-8));
    CHECK(c.g2_zero == doctest::Approx(g::g2).epsilon(1e-8));
    CHECK(c.coupling.venn_consistent());
    CHECK(c.warnings.empty());
}

TEST_CASE("g2 from rates is identical to the gated-statistics g2")
{
    const Characterization c = characterize(golden_measured(), golden_system(), {1.0, false});
    const double g2 = g2_zero({c.rates.p_cor(), c.rates.accidental_mean, OriginalDistribution::Poisson});
    CHECK(std::abs(g2_zero_from_rates(c.rates) - g2) < 1e-12);
}

TEST_CASE("correlated-rate solution satisfies the click equation")
{
    const MeasuredRates m = golden_measured();
    const SystemParams p = golden_system();
    const double Rs = infer_signal_fiber_rate(m, p);
    const double Ri = infer_idler_fiber_rate(m, p);
    const CorrelatedRateSolution s = solve_correlated_rate(m, p, Rs, Ri);
    const double target = m.heralded_clicks / m.heralding_rate;
    CHECK(std::abs(heralded_click_probability(m, p, Rs, Ri, s.rate) - target) / target < 1e-12);
    CHECK(s.relative_residual < 1e-12);
}

TEST_CASE("property: forward model then inversion recovers the fiber rates")
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0, 1);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        SystemParams p;
        p.eta_s = 0.3 + 0.7 * u(gen);
        p.eta_i = 0.05 + 0.9 * u(gen);
        p.delta_s = 0.3 + 0.7 * u(gen);
        p.delta_i = 0.3 + 0.7 * u(gen);
        p.zeta = 0.2 + 0.8 * u(gen);
        p.gate_period = (2 + 18 * u(gen)) * 1e-9;
        const double gs = 0.1 + 0.8 * u(gen);
        const double gi = 0.1 + 0.8 * u(gen);
        const double lo = std::max(0.0, gs + gi - 1);
        const double gc = lo + (std::min(gs, gi) - lo) * (0.05 + 0.95 * u(gen));
        DerivedRates t;
        t.pair_rate = std::pow(10.0, 4 + 3 * u(gen));
        t.signal_fiber_rate = gs * p.zeta * p.delta_s * t.pair_rate;
        t.idler_fiber_rate = gi * p.delta_i * t.pair_rate;
        t.correlated_rate = gc * p.zeta * p.delta_s * p.delta_i * t.pair_rate;
        const double R0 = 0.9 * p.eta_s * t.signal_fiber_rate;
        const double b = p.gate_period * (t.idler_fiber_rate - t.correlated_rate * R0 / t.signal_fiber_rate);
        if (b < 0 || R0 * p.gate_period > 0.5) continue;
        const MeasuredRates m = forward(t, p, R0, 100 * u(gen), 0.01 * R0 * u(gen));
        if (m.random_gate_clicks >= R0) continue;
        CAPTURE(trial);
        const Characterization c = characterize(m, p, {1.0, false});
        CHECK(c.rates.pair_rate == doctest::Approx(t.pair_rate).epsilon(1e-9));
        CHECK(c.rates.signal_fiber_rate == doctest::Approx(t.signal_fiber_rate).epsilon(1e-9));
        CHECK(c.rates.idler_fiber_rate == doctest::Approx(t.idler_fiber_rate).epsilon(1e-7));
        CHECK(c.rates.correlated_rate == doctest::Approx(t.correlated_rate).epsilon(1e-7));
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("monotonicity of R_i in r_i and of R_c in r_c")
{
    const SystemParams p = golden_system();
    MeasuredRates m = golden_measured();
    double previous = -1;
    for (double ri = 40; ri < 2000; ri *= 1.3) {
        m.random_gate_clicks = ri;
        const double Ri = infer_idler_fiber_rate(m, p);
        CHECK(Ri > previous);
        previous = Ri;
    }
    m = golden_measured();
    const double Rs = infer_signal_fiber_rate(m, p);
    const double Ri = infer_idler_fiber_rate(m, p);
    previous = -1;
    // Starts above the dark + accidental floor of about 130 /s.
    for (double rc = 200; rc < 9000; rc += 400) {
        m.heralded_clicks = rc;
        const double Rc = solve_correlated_rate(m, p, Rs, Ri).rate;
        CHECK(Rc > previous);
        previous = Rc;
    }
}

TEST_CASE("dark-count floor gives exactly zero rates")
{
    const SystemParams p = golden_system();
    MeasuredRates m = golden_measured();
    m.random_gate_clicks = m.idler_dark;
    CHECK(infer_idler_fiber_rate(m, p) == 0.0);
    m = golden_measured();
    m.signal_multimode = m.signal_dark;
    CHECK(infer_pair_rate(m, p) == 0.0);
}

TEST_CASE("dead-time correction")
{
    CHECK(dead_time_correction(88e3, 0) == 1.0);
    CHECK(dead_time_correction(1e6, 100e-9) == doctest::Approx(1 / 0.9).epsilon(1e-15));
    CHECK_THROWS_AS(dead_time_correction(1e7, 100e-9), SaturationError);
    SystemParams p = golden_system();
    p.dead_time_signal = 50e-9;
    const double alpha = 1 / (1 - 88e3 * 50e-9);
    CHECK(infer_signal_fiber_rate(golden_measured(), p) == doctest::Approx((88e3 * alpha - 90) / 0.6).epsilon(1e-14));
}

TEST_CASE("input validation rejects inconsistent rates")
{
    MeasuredRates m = golden_measured();
    m.heralded_clicks = 9e4;
    CHECK_THROWS_AS(m.validate(), InputError);
    m = golden_measured();
    m.heralding_rate = 9e4;
    CHECK_THROWS_AS(m.validate(), InputError);
    m = golden_measured();
    m.signal_dark = -1;
    CHECK_THROWS_AS(m.validate(), InputError);
    SystemParams p = golden_system();
    p.eta_i = 0;
    CHECK_THROWS_AS(p.validate(), InputError);
    p = golden_system();
    p.gate_period = 0;
    CHECK_THROWS_AS(characterize(golden_measured(), p), InputError);
}

TEST_CASE("pipeline failures carry the stage label")
{
    const SystemParams p = golden_system();
    MeasuredRates m = golden_measured();
    m.random_gate_clicks = 30;
    CHECK(stage_of(m, p) == "idler-rate");

    SystemParams saturated = p;
    saturated.dead_time_signal = 20e-6;
    CHECK(stage_of(golden_measured(), saturated) == "signal-rates");

    // Idler coupling above one: Venn constraints fail and nothing is clamped.
    SystemParams lossy = p;
    lossy.delta_i = 0.2;
    try {
        characterize(golden_measured(), lossy);
        FAIL("expected a coupling failure");
    } catch (const StageError& e) {
        CHECK(e.stage() == "coupling");
        CHECK(std::string(e.what()).find("gamma_i=") != std::string::npos);
    }
}

TEST_CASE("uncertainty follows Poisson counting and scales as 1/sqrt(T)")
{
    const Characterization one = characterize(golden_measured(), golden_system(), {1.0, true});
    const Characterization hundred = characterize(golden_measured(), golden_system(), {100.0, true});
    for (const auto& name : characterize_quantity_names()) {
        CAPTURE(name);
        REQUIRE(one.uncertainty.count(name) == 1);
        CHECK(hundred.uncertainty.at(name) == doctest::Approx(one.uncertainty.at(name) / 10).epsilon(1e-3));
    }
    // R_s depends on r_s and r_s^d only: sigma^2 = (r_s + r_s^d) / (T eta_s^2).
    CHECK(one.uncertainty.at("R_s") == doctest::Approx(std::sqrt(88e3 + 90) / 0.6).epsilon(1e-6));
}

TEST_CASE("regime warning for long coherence times")
{
    SystemParams p = golden_system();
    p.coherence_time = 5e-9;
    const Characterization c = characterize(golden_measured(), p, {1.0, false});
    REQUIRE(c.warnings.size() == 1);
    CHECK(c.warnings[0].find("coherence time") != std::string::npos);
}

TEST_CASE("small-b and coupling forms approximate the full g2")
{
    const Characterization c = characterize(golden_measured(), golden_system(), {1.0, false});
    CHECK(c.g2_small_b == doctest::Approx(c.g2_zero).epsilon(0.02));
    CHECK(c.g2_couplings == doctest::Approx(c.g2_zero).epsilon(0.02));
}

} // TEST_SUITE
