#pragma once

// Statistical comparison of the simulator against the closed forms and of the
// inference pipeline against simulated measurements.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <hsps/sim.hpp>

namespace hsps {

struct ZCheck
{
    std::string name;
    double observed = 0;
    double expected = 0;
    double standard_error = 0;
    double z = 0;
    /// For count fractions: the normal deviate with the same two-sided tail
    /// probability as the observed count under the exact binomial law. Judges
    /// the check in place of z, which is meaningless when the expected count
    /// is far below one.
    std::optional<double> exact_z;

    double decisive_z() const { return exact_z.value_or(z); }
    bool pass(double limit = 3.0) const { return std::abs(decisive_z()) < limit; }
};

/// z = (observed - expected) / se; 0 when both agree exactly and se = 0.
ZCheck make_check(std::string name, double observed, double expected, double se);

/// Check of a fraction count / trials against probability p, with the
/// binomial standard error at p and the exact binomial tail.
ZCheck make_count_check(std::string name, std::uint64_t count, std::uint64_t trials, double p);

/// Two-sided exact binomial tail of `count` under Binomial(trials, p),
/// expressed as a signed standard normal deviate.
double binomial_equivalent_z(std::uint64_t count, std::uint64_t trials, double p);

/// Ideal chain whose heralded gates hold the twin with probability p_cor and
/// Poisson accidentals of mean b exactly: twin at the gate opening, generator
/// dead time equal to the gate, unit efficiencies, no darks. The duration is
/// chosen to give at least min_gates gates.
SimConfig matrix_config(double p_cor, double b, double min_gates, std::uint64_t seed);

struct MatrixPoint
{
    double p_cor = 0;
    double b = 0;
    std::uint64_t gates = 0;
    std::vector<ZCheck> checks;  ///< P(0)..P(3) and g2(0)
};

/// Default grid: p_cor in {0, 0.5, 1} times b in {0.005, 0.1, 0.7, 3}.
std::vector<std::pair<double, double>> default_matrix();

MatrixPoint run_matrix_point(double p_cor, double b, double min_gates, std::uint64_t seed);

/// Simulates the measurement set for the configuration, runs characterize with
/// integration time equal to the simulated duration, and compares R_p, R_s,
/// R_i, R_c and the three couplings with the configured values using the
/// propagated counting uncertainties.
std::vector<ZCheck> run_round_trip(const SimConfig& config);

} // namespace hsps
