#pragma once

// Photon-number statistics of a conditionally gated (heralded) source.
//
// A heralded gate holds the true twin photon with probability p_cor on top of
// an independent population of accidental photons with mean b. The accidental
// population follows the source's original distribution: Poisson for a
// continuously pumped source whose coherence time is much shorter than the
// gate, single-mode thermal (Bose-Einstein) for a short-pulse pump.

#include <optional>
#include <span>
#include <vector>

namespace hsps {

enum class OriginalDistribution { Poisson, Thermal };

struct GatedStatisticsInput
{
    /// Probability that the heralded twin is inside the gate.
    double p_cor = 1.0;
    /// Mean accidental photon number per gate.
    double b = 0.0;
    OriginalDistribution original = OriginalDistribution::Poisson;

    /// Throws DomainError unless 0 <= p_cor <= 1 and b >= 0 (both finite).
    void validate() const;
};

/// Exact count probabilities P(n), n = 0..n_max(), plus the mass beyond n_max.
struct PhotonNumberDistribution
{
    std::vector<double> probabilities;
    double residual_tail = 0.0;

    int n_max() const { return static_cast<int>(probabilities.size()) - 1; }
    double operator[](int n) const { return probabilities.at(static_cast<std::size_t>(n)); }

    /// P(m >= k) summed from the stored probabilities plus the residual tail.
    double tail(int k) const;
    double mean() const;
    double variance() const;
};

/// Dimensionless heralding load b0 = gate_period * heralding_rate.
class HeraldingLoad
{
public:
    HeraldingLoad(double gate_period, double heralding_rate);

    static HeraldingLoad from_b0(double b0, double gate_period);

    double gate_period() const { return gate_period_; }
    double heralding_rate() const { return heralding_rate_; }
    double b0() const { return b0_; }

private:
    double gate_period_;
    double heralding_rate_;
    double b0_;
};

double poisson_pmf(double mean, int n);
double thermal_pmf(double mean, int n);

/// P(n >= k) for a Poisson count with the given mean.
double poisson_tail(double mean, int k);

/// P(n >= k) for a single-mode thermal count: (mean / (1 + mean))^k.
double thermal_tail(double mean, int k);

/// Dispatches to poisson_tail / thermal_tail.
double accidental_tail(OriginalDistribution dist, double mean, int k);

/// P(m >= k) = p_cor P_acc(n >= k-1) + (1 - p_cor) P_acc(n >= k). Returns 1 for k = 0.
double heralded_tail(const GatedStatisticsInput& in, int k);

/// P(n) = P(m >= n) - P(m >= n+1), evaluated without the subtraction.
double exact_count_probability(const GatedStatisticsInput& in, int n);

/// Count distribution truncated once the remaining tail drops below tail_cutoff.
PhotonNumberDistribution photon_number_distribution(const GatedStatisticsInput& in,
                                                    double tail_cutoff = 1e-15);

/// g2(0) = 2 P(m >= 2) / P(m >= 1)^2. Throws UndefinedStatisticError when P(m >= 1) = 0.
double g2_zero(const GatedStatisticsInput& in);

/// 2 (1 - exp(-b)): the p_cor = 1 Poisson case in closed form.
double g2_zero_ideal_cw(double b);

/// b = b0 / (1 - b0) - p_cor b0, with the total rate taken equal in both arms.
/// Throws DivergenceError for b0 >= 1.
double b_from_b0(const HeraldingLoad& load, double p_cor);

/// Heralding load at which the CW source turns Poissonian (g2(0) = 1), by
/// bisection on (1e-6, 1 - 1e-6) to |g2 - 1| < 1e-9.
double find_poisson_crossing(double p_cor);

/// <n> = b + p_cor.
double mean_photon_number(const GatedStatisticsInput& in);

/// g2(0) = 1 + (variance - mean) / mean^2.
double g2_from_moments(double mean, double variance);

/// Thermal per-pulse mean for a pulsed source whose heralding probability per
/// pulse equals b0 (ideal heralding, one pulse per gate): mu / (1 + mu) = b0.
double pulsed_mean_per_pulse(double b0);

struct G2CurvePoint
{
    double b0 = 0;
    double heralding_rate = 0;
    /// Empty when b0 >= 1 (diverged).
    std::optional<double> g2_cw;
    std::optional<double> g2_random;
    std::optional<double> g2_pulsed;
    /// Lossy CW curve for a supplied p_cor, when requested.
    std::optional<double> g2_model;

    bool diverged() const { return !g2_cw.has_value(); }
};

/// One point of the curves below at the given load.
G2CurvePoint g2_curve_point(const HeraldingLoad& load, std::optional<double> model_p_cor = std::nullopt);

/// g2(0) versus heralding load for three sources at equal heralding rate:
///  - CW heralded (Poisson accidentals, p_cor = 1, b from b_from_b0),
///  - a Poisson source gated at random (p_cor = 0, b = b0 / (1 - b0)),
///  - a pulsed thermal source with one pulse per gate period (p_cor = 1,
///    thermal accidentals with mean pulsed_mean_per_pulse(b0)). Conditioning a
///    Bose-Einstein count on n >= 1 leaves n - 1 Bose-Einstein with the same
///    mean, so the accidental mean per heralded gate is the per-pulse mean.
/// With model_p_cor set, g2_model holds the CW curve for that p_cor.
std::vector<G2CurvePoint> g2_curves(double gate_period, std::span<const double> heralding_rates,
                                    std::optional<double> model_p_cor = std::nullopt);

} // namespace hsps
