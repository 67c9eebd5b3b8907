#pragma once

// Reference values computed outside the library. Tail probabilities come from
// Boost's regularized incomplete gamma function and direct series; the frozen
// constants were evaluated once at 40-digit precision (mpmath) from the
// defining formulas and are not regenerated by the code under test.

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

namespace oracle {

/// P(n >= k) for Poisson(mean): the regularized lower incomplete gamma P(k, mean).
inline double poisson_tail(double mean, int k)
{
    if (k <= 0) return 1.0;
    if (mean == 0) return 0.0;
    return boost::math::gamma_p(static_cast<double>(k), mean);
}

/// P(n >= k) for a Bose-Einstein count by summing the pmf directly.
inline double thermal_tail(double mean, int k)
{
    if (k <= 0) return 1.0;
    double below = 0;
    for (int n = 0; n < k; ++n) below += std::pow(mean, n) / std::pow(1 + mean, n + 1);
    return 1 - below;
}

/// Heralded tail written out for the Poisson case.
inline double heralded_poisson_tail(double p_cor, double b, int k)
{
    return p_cor * poisson_tail(b, k - 1) + (1 - p_cor) * poisson_tail(b, k);
}

// Reference measurement: r_p = 218e3, r_s = 88e3, R0 = 81e3, r_c = 7200,
// r_i = 130, dark 90 and 40 per second, eta 0.60/0.18, delta 0.54/0.63,
// zeta 0.5, 10 ns gate. The correlated rate solves the click equation with
// an arbitrary-precision root finder.
namespace golden {
inline constexpr double R_p = 1345123.4567901235;
inline constexpr double R_s = 146516.66666666667;
inline constexpr double R_i = 617932.46190257696;
inline constexpr double R_c = 71214.368440138988;
inline constexpr double b = 0.0057856244363172319;
inline constexpr double gamma_s = 0.40342343169198293;
inline constexpr double gamma_i = 0.72918598859597247;
inline constexpr double gamma_c = 0.31124412848528111;
inline constexpr double mu_i_given_s = 0.48604960828214529;
inline constexpr double mu_s_given_i = 0.11524620056514627;
inline constexpr double P0 = 0.51098545305382639;
inline constexpr double P1 = 0.48620199692787015;
inline constexpr double P_ge2 = 0.0028125500183034641;
inline constexpr double g2 = 0.023522674196668088;
} // namespace golden

// Heralding loads where the CW curve crosses g2 = 1.
inline constexpr double crossing_p1 = 0.55523594284744759;
inline constexpr double crossing_p05 = 0.41571059051606461;
inline constexpr double crossing_p1em6 = 0.00014320465327549802;

struct G2Point
{
    double p_cor;
    double b;
    double g2;
};

// g2 = 2 P(m>=2) / P(m>=1)^2 over the validation grid.
inline constexpr G2Point g2_table[] = {
    {0, 0.005, 1.001666665277779},    {0, 0.1, 1.0333222261891539},
    {0, 0.7, 1.2295878439259371},     {0, 3, 1.7739453599701533},
    {0.5, 0.005, 0.019801899523438079}, {0.5, 0.1, 0.33297647832404672},
    {0.5, 0.7, 1.1666284757734904},   {0.5, 3, 1.8416118903838251},
    {1, 0.005, 0.0099750416146353733}, {1, 0.1, 0.19032516392808085},
    {1, 0.7, 1.006829392417181},      {1, 3, 1.9004258632642721},
};

// p_cor = 0.3, accidental mean 0.4: P(0..3) for both original distributions.
inline constexpr double poisson_p03_b04[] = {0.46922403222494751, 0.38878562670067079, 0.11797632810227252,
                                             0.021092737448588117};
inline constexpr double thermal_p03_b04[] = {0.5, 0.35714285714285714, 0.10204081632653061,
                                             0.029154518950437318};
inline constexpr double thermal_p03_b04_g2 = 1.1428571428571429;

} // namespace oracle
