#include <hsps/validation.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>

#include <hsps/stats.hpp>

namespace hsps {

ZCheck make_check(std::string name, double observed, double expected, double se)
{
    ZCheck c{std::move(name), observed, expected, se, 0, std::nullopt};
    const double diff = observed - expected;
    if (se > 0) {
        c.z = diff / se;
    } else {
        c.z = diff == 0 ? 0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    return c;
}

double binomial_equivalent_z(std::uint64_t count, std::uint64_t trials, double p)
{
    const double k = static_cast<double>(count);
    const double n = static_cast<double>(trials);
    const double mean = n * p;
    if (k == mean) return 0;
    if (p <= 0 || p >= 1) return std::copysign(std::numeric_limits<double>::infinity(), k - mean);
    const boost::math::binomial_distribution<double> law(n, p);
    // One tail at the observed count, doubled.
    const double tail = k > mean ? boost::math::cdf(boost::math::complement(law, k - 1)) : boost::math::cdf(law, k);
    const double two_sided = std::min(1.0, 2 * tail);
    if (two_sided >= 1) return 0;
    const boost::math::normal_distribution<double> unit;
    const double z = two_sided > 0 ? boost::math::quantile(boost::math::complement(unit, two_sided / 2))
                                   : std::numeric_limits<double>::infinity();
    return std::copysign(z, k - mean);
}

ZCheck make_count_check(std::string name, std::uint64_t count, std::uint64_t trials, double p)
{
    const double n = static_cast<double>(trials);
    ZCheck c = make_check(std::move(name), static_cast<double>(count) / n, p, binomial_se(p, n));
    c.exact_z = binomial_equivalent_z(count, trials, p);
    return c;
}

SimConfig matrix_config(double p_cor, double b, double min_gates, std::uint64_t seed)
{
    SimConfig c;
    c.pump_mode = PumpMode::CW;
    c.gamma_s = 0.5;
    c.gamma_i = 0.5;
    c.gamma_c = 0.5 * p_cor;
    c.zeta = c.delta_s = c.delta_i = 1;
    c.eta_s = c.eta_i = 1;
    c.gate_period = 10e-9;
    // R_i = gamma_i R_p = b / gate.
    c.pair_rate = b / (c.gamma_i * c.gate_period);
    c.dead_time_generator = c.gate_period;
    c.idler_delay = 0;
    c.gate_delay = 0;
    c.seed = seed;
    const double signal_rate = c.gamma_s * c.pair_rate;
    const double herald_rate = signal_rate / (1 + signal_rate * c.dead_time_generator);
    // Heralds behind a dead time are more regular than Poisson; 6 sigma is ample.
    c.duration = (min_gates + 6 * std::sqrt(min_gates) + 100) / herald_rate;
    c.event_budget = std::max(c.event_budget, 2 * c.pair_rate * c.duration);
    return c;
}

std::vector<std::pair<double, double>> default_matrix()
{
    std::vector<std::pair<double, double>> m;
    for (const double p : {0.0, 0.5, 1.0}) {
        for (const double b : {0.005, 0.1, 0.7, 3.0}) m.emplace_back(p, b);
    }
    return m;
}

MatrixPoint run_matrix_point(double p_cor, double b, double min_gates, std::uint64_t seed)
{
    const SimConfig config = matrix_config(p_cor, b, min_gates, seed);
    const SimReport report = simulate(config);
    MatrixPoint point{p_cor, b, report.tally.gates, {}};
    const GateStatistics s = estimate_statistics(report.tally);
    const double n = static_cast<double>(s.gates);
    const GatedStatisticsInput in{p_cor, b, OriginalDistribution::Poisson};
    for (int k = 0; k <= 3; ++k) {
        const auto count = k < static_cast<int>(s.histogram.size()) ? s.histogram[static_cast<std::size_t>(k)] : 0;
        point.checks.push_back(
            make_count_check("P(" + std::to_string(k) + ")", count, s.gates, exact_count_probability(in, k)));
    }
    const double p1 = heralded_tail(in, 1);
    const double p2 = heralded_tail(in, 2);
    point.checks.push_back(make_check("g2(0)", s.g2_zero, g2_zero(in), g2_standard_error(p1, p2, n)));
    return point;
}

std::vector<ZCheck> run_round_trip(const SimConfig& config)
{
    const SimulatedMeasurement sim = simulate_measurements(config);
    const Characterization c =
        characterize(sim.measured, sim.system, {.integration_time = config.duration, .propagate_uncertainty = true});
    const DerivedRates& t = sim.truth;
    const double gs = t.signal_fiber_rate / (config.zeta * config.delta_s * t.pair_rate);
    const double gi = t.idler_fiber_rate / (config.delta_i * t.pair_rate);
    const double gc = t.correlated_rate / (config.zeta * config.delta_s * config.delta_i * t.pair_rate);
    const auto se = [&](const char* name) { return c.uncertainty.at(name); };
    return {
        make_check("R_p", c.rates.pair_rate, t.pair_rate, se("R_p")),
        make_check("R_s", c.rates.signal_fiber_rate, t.signal_fiber_rate, se("R_s")),
        make_check("R_i", c.rates.idler_fiber_rate, t.idler_fiber_rate, se("R_i")),
        make_check("R_c", c.rates.correlated_rate, t.correlated_rate, se("R_c")),
        make_check("gamma_s", c.coupling.signal_coupling, gs, se("gamma_s")),
        make_check("gamma_i", c.coupling.idler_coupling, gi, se("gamma_i")),
        make_check("gamma_c", c.coupling.pair_coupling, gc, se("gamma_c")),
    };
}

} // namespace hsps
