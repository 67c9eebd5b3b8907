#include <hsps/inference.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

#include <hsps/roots.hpp>

namespace hsps {

namespace {

std::string fmt(double x)
{
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

void require_rate(double x, const char* name)
{
    if (!std::isfinite(x) || x < 0) {
        throw InputError(std::string(name) + " must be a finite rate >= 0, got " + fmt(x));
    }
}

void require_probability(double x, const char* name)
{
    if (!(x > 0 && x <= 1)) {
        throw InputError(std::string(name) + " must lie in (0, 1], got " + fmt(x));
    }
}

void require_time(double x, const char* name)
{
    if (!std::isfinite(x) || x < 0) {
        throw InputError(std::string(name) + " must be a finite time >= 0, got " + fmt(x));
    }
}

} // namespace

void MeasuredRates::validate() const
{
    require_rate(signal_multimode, "r_p");
    require_rate(signal_singlemode, "r_s");
    require_rate(heralding_rate, "R0");
    require_rate(heralded_clicks, "r_c");
    require_rate(random_gate_clicks, "r_i");
    require_rate(signal_dark, "r_s_dark");
    require_rate(idler_dark, "r_i_dark");
    if (!(heralding_rate > 0)) throw InputError("R0 must be positive");
    if (heralded_clicks > heralding_rate) {
        throw InputError("r_c = " + fmt(heralded_clicks) + " exceeds R0 = " + fmt(heralding_rate)
                         + " (at most one click per gate)");
    }
    if (random_gate_clicks >= heralding_rate) {
        throw InputError("r_i = " + fmt(random_gate_clicks) + " must stay below R0 = "
                         + fmt(heralding_rate));
    }
    if (idler_dark >= heralding_rate) {
        throw InputError("r_i_dark = " + fmt(idler_dark) + " must stay below R0 = "
                         + fmt(heralding_rate));
    }
    if (heralding_rate > signal_singlemode) {
        throw InputError("R0 = " + fmt(heralding_rate) + " exceeds r_s = " + fmt(signal_singlemode)
                         + " (every herald needs a signal click)");
    }
}

void SystemParams::validate() const
{
    require_probability(eta_s, "eta_s");
    require_probability(eta_i, "eta_i");
    require_probability(delta_s, "delta_s");
    require_probability(delta_i, "delta_i");
    require_probability(zeta, "zeta");
    if (!(gate_period > 0) || !std::isfinite(gate_period)) {
        throw InputError("gate_period must be positive, got " + fmt(gate_period));
    }
    require_time(dead_time_signal, "dead_time_signal");
    require_time(dead_time_generator, "dead_time_generator");
    require_time(holdoff_idler, "holdoff_idler");
    require_time(coherence_time, "coherence_time");
}

std::vector<std::string> SystemParams::regime_warnings() const
{
    std::vector<std::string> w;
    if (coherence_time > gate_period / 10) {
        w.push_back("coherence time " + fmt(coherence_time) + " s is not << gate period "
                    + fmt(gate_period) + " s; Poisson photon statistics within the gate are not justified");
    }
    return w;
}

bool CouplingSet::venn_consistent(double slack) const
{
    const double lo = std::min(signal_coupling, idler_coupling);
    return signal_coupling >= 0 && idler_coupling >= 0 && pair_coupling >= 0
        && pair_coupling <= lo + slack
        && signal_coupling + idler_coupling - pair_coupling <= 1 + slack;
}

InconsistentCouplingError::InconsistentCouplingError(const std::string& message, const CouplingSet& v)
    : ComputationError(message + " (gamma_s=" + fmt(v.signal_coupling) + ", gamma_i="
                       + fmt(v.idler_coupling) + ", gamma_c=" + fmt(v.pair_coupling)
                       + ", mu_i|s=" + fmt(v.idler_given_signal) + ", mu_s|i="
                       + fmt(v.signal_given_idler) + ")")
    , values_(v)
{}

double dead_time_correction(double rate, double dead_time)
{
    if (!(rate >= 0) || !(dead_time >= 0)) {
        throw DomainError("dead-time correction needs rate >= 0 and dead time >= 0");
    }
    const double load = rate * dead_time;
    if (load >= 1) {
        throw SaturationError("detector saturated: rate * dead_time = " + fmt(load) + " >= 1");
    }
    return 1 / (1 - load);
}

double infer_pair_rate(const MeasuredRates& m, const SystemParams& p)
{
    const double numerator =
        m.signal_multimode * dead_time_correction(m.signal_multimode, p.dead_time_signal) - m.signal_dark;
    if (numerator < 0) {
        throw BelowDarkFloorError("multimode signal rate " + fmt(m.signal_multimode)
                                  + " is below the dark floor " + fmt(m.signal_dark));
    }
    return numerator / (p.eta_s * p.zeta * p.delta_s);
}

double infer_signal_fiber_rate(const MeasuredRates& m, const SystemParams& p)
{
    const double numerator =
        m.signal_singlemode * dead_time_correction(m.signal_singlemode, p.dead_time_signal) - m.signal_dark;
    if (numerator < 0) {
        throw BelowDarkFloorError("single-mode signal rate " + fmt(m.signal_singlemode)
                                  + " is below the dark floor " + fmt(m.signal_dark));
    }
    return numerator / p.eta_s;
}

double infer_idler_fiber_rate(const MeasuredRates& m, const SystemParams& p)
{
    const double r0 = m.heralding_rate;
    if (!(r0 > 0)) throw DomainError("R0 must be positive");
    if (m.random_gate_clicks >= r0) {
        throw SaturationError("randomly gated clicks r_i = " + fmt(m.random_gate_clicks)
                              + " saturate the gate rate R0 = " + fmt(r0));
    }
    if (m.random_gate_clicks < m.idler_dark) {
        throw BelowDarkFloorError("randomly gated clicks r_i = " + fmt(m.random_gate_clicks)
                                  + " fall below the idler dark rate " + fmt(m.idler_dark)
                                  + " (negative photon rate)");
    }
    const double log_ratio = std::log1p(-m.idler_dark / r0) - std::log1p(-m.random_gate_clicks / r0);
    return log_ratio / (p.eta_i * p.gate_period);
}

double accidental_mean(double idler_fiber_rate, double correlated_rate, double signal_fiber_rate,
                       double heralding_rate, double gate_period)
{
    const double heralded_twins =
        signal_fiber_rate > 0 ? correlated_rate * heralding_rate / signal_fiber_rate : 0.0;
    return gate_period * (idler_fiber_rate - heralded_twins);
}

double heralded_click_probability(const MeasuredRates& m, const SystemParams& p,
                                  double signal_fiber_rate, double idler_fiber_rate,
                                  double correlated_rate)
{
    const double twin = signal_fiber_rate > 0 ? p.eta_i * correlated_rate / signal_fiber_rate : 0.0;
    const double b = accidental_mean(idler_fiber_rate, correlated_rate, signal_fiber_rate,
                                     m.heralding_rate, p.gate_period);
    const double no_dark = 1 - m.idler_dark / m.heralding_rate;
    return 1 - (1 - twin) * no_dark * std::exp(-p.eta_i * b);
}

CorrelatedRateSolution solve_correlated_rate(const MeasuredRates& m, const SystemParams& p,
                                             double signal_fiber_rate, double idler_fiber_rate)
{
    if (!(m.heralding_rate > 0)) throw DomainError("R0 must be positive");
    const double target = m.heralded_clicks / m.heralding_rate;
    const auto residual = [&](double rc) {
        return heralded_click_probability(m, p, signal_fiber_rate, idler_fiber_rate, rc) - target;
    };
    const auto relative = [&](double r) { return target > 0 ? std::abs(r) / target : std::abs(r); };

    // Probabilities are O(1); below this the residual is rounding noise.
    constexpr double snap = 1e-15;

    const double upper = std::min(signal_fiber_rate, idler_fiber_rate);
    const double f0 = residual(0.0);
    if (std::abs(f0) <= snap) return {0.0, relative(f0), 0};
    if (!(upper > 0)) {
        throw InconsistentMeasurementsError(
            "no correlated light possible (R_s or R_i is zero) but r_c/R0 = " + fmt(target)
            + " differs from the dark-plus-accidental click probability " + fmt(f0 + target));
    }
    if (f0 > 0) {
        throw InconsistentMeasurementsError(
            "heralded click probability r_c/R0 = " + fmt(target)
            + " is below the uncorrelated (dark + accidental) level " + fmt(f0 + target));
    }
    const double fu = residual(upper);
    if (fu < 0) {
        throw InconsistentMeasurementsError(
            "heralded click probability r_c/R0 = " + fmt(target)
            + " exceeds the model maximum " + fmt(fu + target) + " reached at R_c = min(R_s, R_i)");
    }

    const auto root = roots::brent(residual, 0.0, upper,
                                   {.x_tolerance = 1e-10,
                                    .f_tolerance = 1e-13 * std::max(target, std::numeric_limits<double>::min()),
                                    .max_iterations = 200});
    return {root.x, relative(root.fx), root.iterations};
}

CouplingSet coupling_efficiencies(const DerivedRates& d, const SystemParams& p)
{
    if (!(d.pair_rate > 0 && d.signal_fiber_rate > 0 && d.idler_fiber_rate > 0)
        || !(d.correlated_rate >= 0)) {
        throw ComputationError("coupling efficiencies need positive R_p, R_s, R_i (got R_p="
                               + fmt(d.pair_rate) + ", R_s=" + fmt(d.signal_fiber_rate)
                               + ", R_i=" + fmt(d.idler_fiber_rate) + ")");
    }
    CouplingSet c;
    c.signal_coupling = d.signal_fiber_rate / (p.zeta * p.delta_s * d.pair_rate);
    c.idler_coupling = d.idler_fiber_rate / (p.delta_i * d.pair_rate);
    c.pair_coupling = d.correlated_rate / (p.zeta * p.delta_s * p.delta_i * d.pair_rate);
    c.idler_given_signal = d.correlated_rate / d.signal_fiber_rate;
    c.signal_given_idler = d.correlated_rate / d.idler_fiber_rate;
    if (!c.venn_consistent()) {
        throw InconsistentCouplingError("coupling efficiencies violate the Venn constraints", c);
    }
    return c;
}

double g2_zero_from_rates(const DerivedRates& d)
{
    if (!(d.signal_fiber_rate > 0)) throw DomainError("g2 from rates needs R_s > 0");
    const double miss = 1 - d.correlated_rate / d.signal_fiber_rate;
    const double b = d.accidental_mean;
    const double em1 = std::expm1(-b);  // e^-b - 1
    const double p1 = 1 - miss * (1 + em1);
    const double p2 = -em1 - miss * b * std::exp(-b);
    if (!(p1 > 0)) throw UndefinedStatisticError("g2(0) undefined: P(m>=1) = 0");
    return 2 * p2 / (p1 * p1);
}

double g2_zero_small_b(const DerivedRates& d)
{
    if (!(d.correlated_rate > 0)) throw DomainError("small-b approximation needs R_c > 0");
    return 2 * d.accidental_mean * d.signal_fiber_rate / d.correlated_rate;
}

double g2_zero_from_couplings(const CouplingSet& c, double pair_rate, double heralding_rate,
                              const SystemParams& p)
{
    if (!(c.pair_coupling > 0)) throw DomainError("coupling form of g2 needs gamma_c > 0");
    return 2 * p.gate_period
         * (c.signal_coupling * c.idler_coupling / c.pair_coupling * pair_rate - heralding_rate);
}

double heralded_single_photon_probability(const DerivedRates& d)
{
    if (!(d.signal_fiber_rate > 0)) throw DomainError("mu_her needs R_s > 0");
    const double pc = d.correlated_rate / d.signal_fiber_rate;
    const double b = d.accidental_mean;
    return ((1 - pc) * b + pc) * std::exp(-b);
}

const std::vector<std::string>& characterize_quantity_names()
{
    static const std::vector<std::string> names = {
        "R_p",     "R_s",     "R_i",         "R_c",         "b",
        "gamma_s", "gamma_i", "gamma_c",     "mu_i_given_s", "mu_s_given_i",
        "P0",      "mu_her",  "P_ge1",       "P_ge2",        "g2_zero",
    };
    return names;
}

double Characterization::quantity(const std::string& name) const
{
    if (name == "R_p") return rates.pair_rate;
    if (name == "R_s") return rates.signal_fiber_rate;
    if (name == "R_i") return rates.idler_fiber_rate;
    if (name == "R_c") return rates.correlated_rate;
    if (name == "b") return rates.accidental_mean;
    if (name == "gamma_s") return coupling.signal_coupling;
    if (name == "gamma_i") return coupling.idler_coupling;
    if (name == "gamma_c") return coupling.pair_coupling;
    if (name == "mu_i_given_s") return coupling.idler_given_signal;
    if (name == "mu_s_given_i") return coupling.signal_given_idler;
    if (name == "P0") return p_zero;
    if (name == "mu_her") return mu_her;
    if (name == "P_ge1") return p_at_least_one;
    if (name == "P_ge2") return p_at_least_two;
    if (name == "g2_zero") return g2_zero;
    throw DomainError("unknown quantity '" + name + "'");
}

namespace {

template <class F>
auto stage(const char* label, F&& f)
{
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(label, e.what());
    }
}

// Pipeline without uncertainty propagation.
Characterization evaluate(const MeasuredRates& m, const SystemParams& p)
{
    Characterization out;
    DerivedRates& d = out.rates;

    stage("signal-rates", [&] {
        d.pair_rate = infer_pair_rate(m, p);
        d.signal_fiber_rate = infer_signal_fiber_rate(m, p);
        return 0;
    });
    d.idler_fiber_rate = stage("idler-rate", [&] { return infer_idler_fiber_rate(m, p); });
    stage("correlated-rate", [&] {
        d.correlated_rate = solve_correlated_rate(m, p, d.signal_fiber_rate, d.idler_fiber_rate).rate;
        d.accidental_mean = accidental_mean(d.idler_fiber_rate, d.correlated_rate,
                                            d.signal_fiber_rate, m.heralding_rate, p.gate_period);
        if (d.accidental_mean < 0) {
            throw InconsistentMeasurementsError("negative accidental mean b = " + fmt(d.accidental_mean));
        }
        return 0;
    });
    out.coupling = stage("coupling", [&] { return coupling_efficiencies(d, p); });
    stage("statistics", [&] {
        const GatedStatisticsInput in{d.p_cor(), d.accidental_mean, OriginalDistribution::Poisson};
        out.distribution = photon_number_distribution(in);
        out.p_zero = exact_count_probability(in, 0);
        out.mu_her = heralded_single_photon_probability(d);
        out.p_at_least_one = heralded_tail(in, 1);
        out.p_at_least_two = heralded_tail(in, 2);
        out.g2_zero = g2_zero_from_rates(d);
        out.g2_small_b = d.correlated_rate > 0 ? g2_zero_small_b(d) : std::numeric_limits<double>::infinity();
        out.g2_couplings = out.coupling.pair_coupling > 0
                             ? g2_zero_from_couplings(out.coupling, d.pair_rate, m.heralding_rate, p)
                             : std::numeric_limits<double>::infinity();
        out.b0 = p.gate_period * m.heralding_rate;
        return 0;
    });
    return out;
}

std::vector<double> quantities(const Characterization& c)
{
    std::vector<double> v;
    for (const auto& name : characterize_quantity_names()) v.push_back(c.quantity(name));
    return v;
}

std::map<std::string, double> propagate(const MeasuredRates& m, const SystemParams& p,
                                        const Characterization& nominal, double integration_time,
                                        std::vector<std::string>& warnings)
{
    using Field = double MeasuredRates::*;
    static constexpr std::array<Field, 7> fields = {
        &MeasuredRates::signal_multimode, &MeasuredRates::signal_singlemode,
        &MeasuredRates::heralding_rate,   &MeasuredRates::heralded_clicks,
        &MeasuredRates::random_gate_clicks, &MeasuredRates::signal_dark,
        &MeasuredRates::idler_dark,
    };
    const auto& names = characterize_quantity_names();
    const std::vector<double> base = quantities(nominal);
    std::vector<double> variance(names.size(), 0.0);

    const auto try_eval = [&](const MeasuredRates& mm) -> std::optional<std::vector<double>> {
        try {
            return quantities(evaluate(mm, p));
        } catch (const Error&) {
            return std::nullopt;
        }
    };

    bool incomplete = false;
    for (const Field f : fields) {
        const double x = m.*f;
        const double sigma = std::sqrt(x / integration_time);
        if (!(sigma > 0)) continue;
        const double h = 1e-3 * sigma;

        MeasuredRates up = m, down = m;
        up.*f = x + h;
        down.*f = x - h;
        const auto fu = try_eval(up);
        const auto fd = x - h >= 0 ? try_eval(down) : std::nullopt;

        for (std::size_t k = 0; k < names.size(); ++k) {
            double slope;
            if (fu && fd) {
                slope = ((*fu)[k] - (*fd)[k]) / (2 * h);
            } else if (fu) {
                slope = ((*fu)[k] - base[k]) / h;
            } else if (fd) {
                slope = (base[k] - (*fd)[k]) / h;
            } else {
                incomplete = true;
                continue;
            }
            variance[k] += slope * slope * sigma * sigma;
        }
    }
    if (incomplete) warnings.push_back("uncertainty propagation incomplete: pipeline fails next to the nominal point");

    std::map<std::string, double> out;
    for (std::size_t k = 0; k < names.size(); ++k) out[names[k]] = std::sqrt(variance[k]);
    return out;
}

} // namespace

Characterization characterize(const MeasuredRates& m, const SystemParams& p, const CharacterizeOptions& opts)
{
    m.validate();
    p.validate();
    if (!(opts.integration_time > 0)) throw InputError("integration time must be positive");

    Characterization out = evaluate(m, p);
    out.warnings = p.regime_warnings();
    if (opts.propagate_uncertainty) {
        out.uncertainty = stage("uncertainty", [&] {
            return propagate(m, p, out, opts.integration_time, out.warnings);
        });
    }
    return out;
}

} // namespace hsps
