#include <hsps/stats.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <hsps/errors.hpp>
#include <hsps/roots.hpp>

namespace hsps {

namespace {

// Neumaier-compensated running sum.
class CompensatedSum
{
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            c_ += (sum_ - t) + x;
        } else {
            c_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + c_; }

private:
    double sum_ = 0;
    double c_ = 0;
};

void require_mean(double mean, const char* what)
{
    if (!std::isfinite(mean) || mean < 0) {
        throw DomainError(std::string(what) + ": mean must be finite and >= 0, got "
                          + std::to_string(mean));
    }
}

void require_count(int k, const char* what)
{
    if (k < 0) {
        throw DomainError(std::string(what) + ": count must be >= 0, got " + std::to_string(k));
    }
}

} // namespace

void GatedStatisticsInput::validate() const
{
    if (!(p_cor >= 0 && p_cor <= 1)) {
        throw DomainError("p_cor must lie in [0, 1], got " + std::to_string(p_cor));
    }
    require_mean(b, "accidental mean b");
}

double PhotonNumberDistribution::tail(int k) const
{
    if (k <= 0) return 1.0;
    CompensatedSum s;
    s.add(residual_tail);
    for (int n = n_max(); n >= k; --n) s.add(probabilities[static_cast<std::size_t>(n)]);
    return s.value();
}

double PhotonNumberDistribution::mean() const
{
    CompensatedSum s;
    for (std::size_t n = 0; n < probabilities.size(); ++n) s.add(static_cast<double>(n) * probabilities[n]);
    return s.value();
}

double PhotonNumberDistribution::variance() const
{
    const double mu = mean();
    CompensatedSum s;
    for (std::size_t n = 0; n < probabilities.size(); ++n) {
        const double d = static_cast<double>(n) - mu;
        s.add(d * d * probabilities[n]);
    }
    return s.value();
}

HeraldingLoad::HeraldingLoad(double gate_period, double heralding_rate)
    : gate_period_(gate_period)
    , heralding_rate_(heralding_rate)
    , b0_(gate_period * heralding_rate)
{
    if (!(gate_period > 0) || !std::isfinite(gate_period)) {
        throw DomainError("gate period must be positive, got " + std::to_string(gate_period));
    }
    if (!(heralding_rate >= 0) || !std::isfinite(heralding_rate)) {
        throw DomainError("heralding rate must be >= 0, got " + std::to_string(heralding_rate));
    }
}

HeraldingLoad HeraldingLoad::from_b0(double b0, double gate_period)
{
    HeraldingLoad load(gate_period, b0 / gate_period);
    load.b0_ = b0;
    return load;
}

double poisson_pmf(double mean, int n)
{
    require_mean(mean, "poisson_pmf");
    require_count(n, "poisson_pmf");
    if (mean == 0) return n == 0 ? 1.0 : 0.0;
    return std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
}

double thermal_pmf(double mean, int n)
{
    require_mean(mean, "thermal_pmf");
    require_count(n, "thermal_pmf");
    if (mean == 0) return n == 0 ? 1.0 : 0.0;
    return std::pow(mean / (1 + mean), n) / (1 + mean);
}

double poisson_tail(double mean, int k)
{
    require_mean(mean, "poisson_tail");
    require_count(k, "poisson_tail");
    if (k == 0) return 1.0;
    if (mean == 0) return 0.0;
    if (k == 1) return -std::expm1(-mean);

    if (mean < k) {
        // Upper tail is small: sum it directly so tiny tails keep full relative precision.
        CompensatedSum s;
        double term = poisson_pmf(mean, k);
        for (int j = k; term > 0; ++j) {
            s.add(term);
            if (term < std::numeric_limits<double>::epsilon() * 1e-2 * s.value()) break;
            term *= mean / (j + 1);
        }
        return std::min(1.0, s.value());
    }

    CompensatedSum lower;
    double term = std::exp(-mean);
    for (int j = 0; j < k; ++j) {
        lower.add(term);
        term *= mean / (j + 1);
    }
    return std::clamp(1.0 - lower.value(), 0.0, 1.0);
}

double thermal_tail(double mean, int k)
{
    require_mean(mean, "thermal_tail");
    require_count(k, "thermal_tail");
    if (k == 0) return 1.0;
    return std::pow(mean / (1 + mean), k);
}

double accidental_tail(OriginalDistribution dist, double mean, int k)
{
    return dist == OriginalDistribution::Poisson ? poisson_tail(mean, k) : thermal_tail(mean, k);
}

double heralded_tail(const GatedStatisticsInput& in, int k)
{
    in.validate();
    require_count(k, "heralded_tail");
    // Degenerate: the total probability.
    if (k == 0) return 1.0;
    return in.p_cor * accidental_tail(in.original, in.b, k - 1)
         + (1 - in.p_cor) * accidental_tail(in.original, in.b, k);
}

double exact_count_probability(const GatedStatisticsInput& in, int n)
{
    in.validate();
    require_count(n, "exact_count_probability");
    const auto pmf = [&](int j) {
        if (j < 0) return 0.0;
        return in.original == OriginalDistribution::Poisson ? poisson_pmf(in.b, j)
                                                            : thermal_pmf(in.b, j);
    };
    return in.p_cor * pmf(n - 1) + (1 - in.p_cor) * pmf(n);
}

PhotonNumberDistribution photon_number_distribution(const GatedStatisticsInput& in, double tail_cutoff)
{
    in.validate();
    PhotonNumberDistribution dist;
    for (int n = 0;; ++n) {
        dist.probabilities.push_back(exact_count_probability(in, n));
        const double remaining = heralded_tail(in, n + 1);
        if (remaining < tail_cutoff) {
            dist.residual_tail = remaining;
            break;
        }
        if (n > 100000) {
            throw ComputationError("photon-number distribution did not converge (mean too large)");
        }
    }
    return dist;
}

double g2_zero(const GatedStatisticsInput& in)
{
    const double p1 = heralded_tail(in, 1);
    if (!(p1 > 0)) {
        throw UndefinedStatisticError("g2(0) undefined: no photon can be present in the gate");
    }
    const double p2 = heralded_tail(in, 2);
    return 2 * p2 / (p1 * p1);
}

double g2_zero_ideal_cw(double b)
{
    require_mean(b, "g2_zero_ideal_cw");
    return 2 * -std::expm1(-b);
}

double b_from_b0(const HeraldingLoad& load, double p_cor)
{
    const double b0 = load.b0();
    if (!(p_cor >= 0 && p_cor <= 1)) {
        throw DomainError("p_cor must lie in [0, 1], got " + std::to_string(p_cor));
    }
    if (b0 < 0) throw DomainError("b0 must be >= 0, got " + std::to_string(b0));
    if (b0 >= 1) {
        throw DivergenceError("b0 = " + std::to_string(b0) + " >= 1: accidental mean diverges");
    }
    // b0/(1-b0) >= b0 >= p_cor b0, so the result is non-negative up to rounding.
    return std::max(0.0, b0 / (1 - b0) - p_cor * b0);
}

double find_poisson_crossing(double p_cor)
{
    if (!(p_cor >= 0 && p_cor <= 1)) {
        throw DomainError("crossing search needs 0 <= p_cor <= 1, got " + std::to_string(p_cor));
    }
    constexpr double gate = 1.0; // b0 is dimensionless; any gate period works
    const auto excess = [&](double b0) {
        const double b = b_from_b0(HeraldingLoad::from_b0(b0, gate), p_cor);
        return g2_zero({p_cor, b, OriginalDistribution::Poisson}) - 1.0;
    };
    try {
        return roots::bisect(excess, 1e-6, 1 - 1e-6, {.f_tolerance = 1e-9, .max_iterations = 200}).x;
    } catch (const NoCrossingError&) {
        throw NoCrossingError("g2(0) does not cross 1 for b0 in (1e-6, 1 - 1e-6) at p_cor = "
                              + std::to_string(p_cor));
    }
}

double mean_photon_number(const GatedStatisticsInput& in)
{
    in.validate();
    return in.b + in.p_cor;
}

double g2_from_moments(double mean, double variance)
{
    if (!(mean > 0)) throw DomainError("g2 from moments needs mean > 0");
    return 1 + (variance - mean) / (mean * mean);
}

double pulsed_mean_per_pulse(double b0)
{
    if (b0 < 0) throw DomainError("b0 must be >= 0");
    if (b0 >= 1) throw DivergenceError("heralding probability per pulse must be < 1");
    return b0 / (1 - b0);
}

G2CurvePoint g2_curve_point(const HeraldingLoad& load, std::optional<double> model_p_cor)
{
    G2CurvePoint pt;
    pt.b0 = load.b0();
    pt.heralding_rate = load.heralding_rate();
    if (pt.b0 >= 1) return pt;
    pt.g2_cw = g2_zero({1.0, b_from_b0(load, 1.0), OriginalDistribution::Poisson});
    const double b_random = b_from_b0(load, 0.0);
    // Limit b -> 0 of a randomly gated Poisson source.
    pt.g2_random = b_random > 0 ? g2_zero({0.0, b_random, OriginalDistribution::Poisson}) : 1.0;
    pt.g2_pulsed = g2_zero({1.0, pulsed_mean_per_pulse(pt.b0), OriginalDistribution::Thermal});
    if (model_p_cor) {
        const double b = b_from_b0(load, *model_p_cor);
        pt.g2_model = *model_p_cor > 0 || b > 0 ? g2_zero({*model_p_cor, b, OriginalDistribution::Poisson}) : 1.0;
    }
    return pt;
}

std::vector<G2CurvePoint> g2_curves(double gate_period, std::span<const double> heralding_rates,
                                    std::optional<double> model_p_cor)
{
    std::vector<G2CurvePoint> out;
    out.reserve(heralding_rates.size());
    for (const double rate : heralding_rates) out.push_back(g2_curve_point(HeraldingLoad(gate_period, rate), model_p_cor));
    return out;
}

} // namespace hsps
