#pragma once

// Inversion of detector-level count rates into photon rates inside the
// fibers, coupling efficiencies and the heralded photon statistics.

#include <map>
#include <string>
#include <vector>

#include <hsps/errors.hpp>
#include <hsps/stats.hpp>

namespace hsps {

/// Raw detector rates, all in counts per second.
struct MeasuredRates
{
    /// Signal detected through a multimode fiber (r_p).
    double signal_multimode = 0;
    /// Signal detected through the single-mode fiber (r_s).
    double signal_singlemode = 0;
    /// Gate (herald) rate delivered to the idler detector (R0).
    double heralding_rate = 0;
    /// Idler clicks in heralded gates (r_c).
    double heralded_clicks = 0;
    /// Idler clicks under random gating at the same gate rate (r_i).
    double random_gate_clicks = 0;
    /// Signal detector dark rate (r_s^d).
    double signal_dark = 0;
    /// Idler dark clicks per second at gate rate heralding_rate (r_i^d).
    double idler_dark = 0;

    /// Throws InputError on negative rates or r_c > R0, r_i >= R0, R0 > r_s,
    /// r_i^d >= R0.
    void validate() const;
};

/// Setup parameters, measured independently of the count rates. Times in seconds.
struct SystemParams
{
    double eta_s = 1;    ///< signal detector efficiency
    double eta_i = 1;    ///< idler detector efficiency
    double delta_s = 1;  ///< signal arm transmission
    double delta_i = 1;  ///< idler arm transmission
    double zeta = 1;     ///< filter bandwidth matching factor
    double gate_period = 10e-9;
    double dead_time_signal = 0;
    double dead_time_generator = 0;
    double holdoff_idler = 10e-6;
    /// Only used for the regime check, never in a formula.
    double coherence_time = 0;

    void validate() const;
    /// Non-fatal notes about the validity regime of the Poisson model.
    std::vector<std::string> regime_warnings() const;
};

/// Photon rates inside the fibers (per second) and the accidental mean per gate.
struct DerivedRates
{
    double pair_rate = 0;          ///< R_p, pairs generated within the filter band
    double signal_fiber_rate = 0;  ///< R_s
    double idler_fiber_rate = 0;   ///< R_i
    double correlated_rate = 0;    ///< R_c, pairs with both photons in their fibers
    double accidental_mean = 0;    ///< b

    /// R_c / R_s, the probability that a herald's twin is in the idler fiber.
    double p_cor() const { return signal_fiber_rate > 0 ? correlated_rate / signal_fiber_rate : 0; }
};

struct CouplingSet
{
    double signal_coupling = 0;     ///< gamma_s
    double idler_coupling = 0;      ///< gamma_i
    double pair_coupling = 0;       ///< gamma_c
    double idler_given_signal = 0;  ///< mu_{i|s}
    double signal_given_idler = 0;  ///< mu_{s|i}

    /// Venn constraints: gamma_c <= min(gamma_s, gamma_i), gamma_s + gamma_i - gamma_c <= 1.
    bool venn_consistent(double slack = 1e-12) const;
};

class InconsistentCouplingError : public ComputationError
{
public:
    InconsistentCouplingError(const std::string& message, const CouplingSet& values);
    const CouplingSet& values() const noexcept { return values_; }

private:
    CouplingSet values_;
};

/// Non-paralyzable dead-time correction 1 / (1 - rate * dead_time).
double dead_time_correction(double rate, double dead_time);

/// R_p = (r_p alpha - r_s^d) / (eta_s zeta delta_s).
double infer_pair_rate(const MeasuredRates& m, const SystemParams& p);

/// R_s = (r_s alpha - r_s^d) / eta_s.
double infer_signal_fiber_rate(const MeasuredRates& m, const SystemParams& p);

/// R_i from randomly gated clicks, assuming Poisson photon numbers in the gate.
double infer_idler_fiber_rate(const MeasuredRates& m, const SystemParams& p);

/// Accidental mean per heralded gate, b = gate (R_i - R_c R0 / R_s).
double accidental_mean(double idler_fiber_rate, double correlated_rate, double signal_fiber_rate,
                       double heralding_rate, double gate_period);

/// Heralded click probability predicted by the gated click model for a given R_c.
double heralded_click_probability(const MeasuredRates& m, const SystemParams& p,
                                  double signal_fiber_rate, double idler_fiber_rate,
                                  double correlated_rate);

struct CorrelatedRateSolution
{
    double rate = 0;
    /// |model - r_c/R0| relative to r_c/R0 (absolute when r_c = 0).
    double relative_residual = 0;
    int iterations = 0;
};

/// Solves the implicit heralded-click equation for R_c with Brent's method
/// over [0, min(R_s, R_i)].
CorrelatedRateSolution solve_correlated_rate(const MeasuredRates& m, const SystemParams& p,
                                             double signal_fiber_rate, double idler_fiber_rate);

/// gamma_s, gamma_i, gamma_c and the conditional coincidences. Throws
/// InconsistentCouplingError (never clamps) when the Venn constraints fail.
CouplingSet coupling_efficiencies(const DerivedRates& d, const SystemParams& p);

/// Full g2(0) from rates, with P(m>=1) = 1 - (1 - R_c/R_s) e^-b and
/// P(m>=2) = 1 - [1 + (1 - R_c/R_s) b] e^-b.
double g2_zero_from_rates(const DerivedRates& d);

/// Small-b approximation 2 b R_s / R_c.
double g2_zero_small_b(const DerivedRates& d);

/// Approximation in terms of coupling efficiencies:
/// 2 gate (gamma_s gamma_i / gamma_c R_p - R0). Not an identity.
double g2_zero_from_couplings(const CouplingSet& c, double pair_rate, double heralding_rate,
                              const SystemParams& p);

/// Probability of exactly one photon per heralded gate,
/// ((1 - R_c/R_s) b + R_c/R_s) e^-b.
double heralded_single_photon_probability(const DerivedRates& d);

struct CharacterizeOptions
{
    /// Counting time behind each measured rate, seconds.
    double integration_time = 1.0;
    bool propagate_uncertainty = true;
};

struct Characterization
{
    DerivedRates rates;
    CouplingSet coupling;
    PhotonNumberDistribution distribution;
    double p_zero = 0;
    double mu_her = 0;
    double p_at_least_one = 0;
    double p_at_least_two = 0;
    double g2_zero = 0;
    double g2_small_b = 0;
    double g2_couplings = 0;
    double b0 = 0;
    /// One-sigma estimates keyed by quantity name (see characterize_quantity_names()).
    std::map<std::string, double> uncertainty;
    std::vector<std::string> warnings;

    /// Value of a named quantity, as used by the uncertainty map.
    double quantity(const std::string& name) const;
};

/// Names of the scalar outputs reported by characterize, in report order.
const std::vector<std::string>& characterize_quantity_names();

/// Runs the whole inversion. Input validation failures surface as InputError;
/// failures inside the pipeline are rethrown as StageError naming the stage.
///
/// Uncertainties assume Poisson counting on every raw rate over
/// integration_time and propagate to first order through a central-difference
/// Jacobian of the full pipeline. They are an estimate of counting noise only.
Characterization characterize(const MeasuredRates& m, const SystemParams& p,
                              const CharacterizeOptions& opts = {});

} // namespace hsps
