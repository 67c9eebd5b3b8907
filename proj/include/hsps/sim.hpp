#pragma once

// Event-level Monte Carlo of a heralded source and its detection chain:
// pair generation, fiber coupling, signal detection with dead time, the
// gate generator, and a gated idler detector with hold-off.
//
// Times are integer picoseconds inside the simulator and seconds in the
// configuration. A run is split into fixed segments, each simulated as an
// independent trajectory with its own random streams and a warm-up margin
// that brings dead-time and hold-off state to steady state before counting
// starts. Segment layout depends only on the configuration, so results are
// identical for any thread count.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <hsps/inference.hpp>
#include <hsps/rng.hpp>

namespace hsps {

enum class PumpMode { CW, Pulsed };
enum class GatingMode { Heralded, Random };

struct SimConfig
{
    PumpMode pump_mode = PumpMode::CW;
    /// CW pair rate within the filter band, pairs/s.
    double pair_rate = 0;
    /// Pulsed: mean pairs per pulse (Bose-Einstein) and pulse repetition rate.
    double mean_pairs_per_pulse = 0;
    double pulse_rate = 100e6;

    double gamma_s = 1;
    double gamma_i = 1;
    double gamma_c = 1;
    /// Probability that the signal photon passes the signal filter.
    double zeta = 1;
    double delta_s = 1;
    double delta_i = 1;

    double eta_s = 1;
    double eta_i = 1;
    /// Signal detector dark count rate, 1/s.
    double dark_rate_s = 0;
    /// Idler dark count rate while the detector is gated on, 1/s.
    double dark_rate_i = 0;
    double dead_time_signal = 0;
    double dead_time_generator = 0;
    double holdoff_idler = 0;
    /// Gaussian timing jitter (standard deviation) of signal clicks, s.
    double jitter = 0;

    double gate_period = 10e-9;
    /// Gate opens this long after the herald.
    double gate_delay = 45e-9;
    /// Idler photons reach the idler detector this long after pair creation
    /// (the signal photon arrives at creation time).
    double idler_delay = 50e-9;
    /// Linear efficiency ramp at both gate edges; 0 for a rectangular gate.
    double gate_rise_time = 0;

    GatingMode gating = GatingMode::Heralded;
    /// Gate rate of the independent Poisson train used for random gating, 1/s.
    double random_gate_rate = 0;

    double duration = 1;
    std::uint64_t seed = 1;
    /// Upper bound on generated pairs for one run.
    double event_budget = 2e9;
    /// Worker threads; 0 picks the hardware concurrency.
    unsigned threads = 0;

    /// Throws InputError on out-of-range parameters or violated Venn constraints.
    void validate() const;

    /// Places the gate so the twin photon sits in its middle.
    void center_gate() { gate_delay = idler_delay - gate_period / 2; }

    /// Expected rates in the fibers: R_s = gamma_s zeta delta_s R_p,
    /// R_i = gamma_i delta_i R_p, R_c = gamma_c zeta delta_s delta_i R_p.
    DerivedRates expected_rates() const;

    /// Mean pairs per second, for either pump mode.
    double mean_pair_rate() const;

    /// Setup parameters seen by the inference pipeline.
    SystemParams system_params() const;
};

/// Parameters of the operating point reported in the reference measurement:
/// the pair rate and couplings are the rates inferred there, the generator
/// dead time is calibrated so the heralding rate reproduces the reported one.
SimConfig reference_sim_config();

using TimePs = std::int64_t;

inline TimePs to_ps(double seconds) { return static_cast<TimePs>(std::llround(seconds * 1e12)); }

struct TimeWindow
{
    TimePs begin = 0;
    TimePs end = 0;
};

struct Pair
{
    TimePs time = 0;
    std::uint64_t id = 0;
};

/// Pair creation times in [begin, end), sorted. CW: homogeneous Poisson
/// process. Pulsed: Bose-Einstein count per pulse, all pairs at the pulse time.
/// Ids are first_id, first_id + 1, ...
std::vector<Pair> generate_pairs(const SimConfig& config, TimeWindow window, Rng& rng,
                                 std::uint64_t first_id = 0);

struct Routing
{
    bool signal = false;  ///< signal photon reaches the signal detector fiber end
    bool idler = false;   ///< idler photon reaches the idler detector fiber end
};

/// Categorical coupling (both / signal only / idler only / neither) followed by
/// the signal filter and the arm transmissions.
Routing route_pair(const SimConfig& config, Rng& rng);

enum class EventTag : std::uint8_t {
    SignalPhoton = 0,
    IdlerPhoton = 1,
    SignalDark = 2,
    IdlerDark = 3,
};

inline constexpr std::uint64_t no_pair = std::numeric_limits<std::uint64_t>::max();

struct TimeTag
{
    TimePs time = 0;
    EventTag tag = EventTag::SignalPhoton;
    /// Creating pair, or no_pair for dark counts.
    std::uint64_t pair_id = no_pair;
};

/// Photon arrivals at both fiber ends plus dark counts, sorted by time.
/// Idler dark counts form a continuous Poisson process; they only matter when
/// they fall inside an open gate.
struct EventStream
{
    std::vector<TimeTag> events;
};

/// Routes the pairs and merges in dark counts over the window.
EventStream build_event_stream(const SimConfig& config, std::span<const Pair> pairs, TimeWindow window,
                               Rng& route_rng, Rng& dark_rng);

struct Herald
{
    TimePs time = 0;
    std::uint64_t pair_id = no_pair;
};

struct SignalDetection
{
    std::vector<TimePs> clicks;
    std::vector<Herald> heralds;
};

/// Signal detector (efficiency, jitter, non-paralyzable dead time) followed by
/// the gate generator with its own dead time. Photons arriving together give
/// one click.
SignalDetection detect_signal(const EventStream& stream, const SimConfig& config, Rng& rng);

/// Independent Poisson gate train at random_gate_rate, passed through the
/// generator dead time.
std::vector<Herald> random_gates(const SimConfig& config, TimeWindow window, Rng& rng);

struct GateRecord
{
    TimePs gate_open = 0;
    TimePs gate_close = 0;
    /// Idler photons at the detector inside the gate.
    int photon_count_in_fiber = 0;
    bool contains_twin = false;
    bool click = false;
    /// False when the gate fell into the hold-off after an earlier click.
    bool armed = true;
};

/// Carries the idler detector's hold-off between calls.
struct IdlerState
{
    TimePs blind_until = std::numeric_limits<TimePs>::min();
};

/// One gate per herald. Overlapping gates are treated independently; the
/// hold-off blinds the detector for holdoff_idler after the opening of a gate
/// that clicked.
std::vector<GateRecord> gate_idler(std::span<const Herald> heralds, const EventStream& stream,
                                   const SimConfig& config, Rng& rng, IdlerState& state);

/// Counts accumulated over gates.
struct GateTally
{
    /// histogram[n] = gates holding n idler photons.
    std::vector<std::uint64_t> histogram;
    std::uint64_t gates = 0;
    std::uint64_t armed_gates = 0;
    std::uint64_t clicks = 0;
    std::uint64_t twin_gates = 0;

    void add(const GateRecord& record);
    void merge(const GateTally& other);
};

struct GateStatistics
{
    std::uint64_t gates = 0;
    std::vector<std::uint64_t> histogram;
    std::vector<double> probability;
    std::vector<double> probability_se;
    double p_at_least_one = 0;
    double p_at_least_two = 0;
    double g2_zero = 0;
    /// Delta-method standard error from the multinomial covariance; infinite
    /// when no gate held a photon.
    double g2_zero_se = 0;
    double twin_fraction = 0;

    /// P(n), zero beyond the histogram.
    double p(int n) const;
    double se(int n) const;
};

/// Binomial standard error of a fraction estimated from n trials.
double binomial_se(double p, double n);

/// Standard error of 2 P(>=2) / P(>=1)^2 from the multinomial covariance of the
/// two nested tail fractions, evaluated at the given probabilities.
double g2_standard_error(double p_ge1, double p_ge2, double gates);

/// Throws EmptyReportError when there are no gates.
GateStatistics estimate_statistics(std::span<const GateRecord> records);
GateStatistics estimate_statistics(const GateTally& tally);

struct SimReport
{
    double duration = 0;
    std::uint64_t pairs = 0;
    std::uint64_t signal_fiber_photons = 0;
    std::uint64_t idler_fiber_photons = 0;
    std::uint64_t correlated_pairs = 0;
    std::uint64_t signal_clicks = 0;
    std::uint64_t heralds = 0;
    GateTally tally;
    /// Empty when no gate was opened.
    std::optional<GateStatistics> statistics;

    double signal_click_rate() const { return signal_clicks / duration; }   ///< r_s
    /// Rate of gates reaching an armed idler detector (R0).
    double heralding_rate() const { return tally.armed_gates / duration; }
    double herald_rate() const { return heralds / duration; }
    double click_rate() const { return tally.clicks / duration; }           ///< r_c
    /// Clicks per armed gate.
    double click_probability() const;
    double pair_rate() const { return pairs / duration; }
    double signal_fiber_rate() const { return signal_fiber_photons / duration; }
    double idler_fiber_rate() const { return idler_fiber_photons / duration; }
    double correlated_rate() const { return correlated_pairs / duration; }
};

/// Runs the full chain. Throws EventBudgetError when the run would generate
/// more pairs than config.event_budget.
SimReport simulate(const SimConfig& config);

/// Records of every gate opened in [0, duration), for small runs and tests.
std::vector<GateRecord> simulate_gates(const SimConfig& config);

/// Full event stream of [0, duration) for export; single trajectory.
EventStream simulate_event_stream(const SimConfig& config);

/// Little-endian records of a 64-bit picosecond timestamp and an 8-bit tag.
void write_timetags(const EventStream& stream, const std::string& path);
EventStream read_timetags(const std::string& path);

/// The measurement set an experimenter would record: heralded run, randomly
/// gated run, multimode signal run, and dark runs, each over config.duration.
struct SimulatedMeasurement
{
    MeasuredRates measured;
    SystemParams system;
    DerivedRates truth;
    SimReport heralded;
    SimReport random;
};

SimulatedMeasurement simulate_measurements(const SimConfig& config);

struct DelayScanPoint
{
    double gate_delay = 0;
    double click_rate = 0;
    double click_rate_se = 0;
    std::uint64_t armed_gates = 0;
};

/// Heralded click rate versus gate delay. Every point reuses the same seed, so
/// pairs and signal clicks are common to all delays.
std::vector<DelayScanPoint> delay_scan(const SimConfig& config, std::span<const double> delays);

struct PumpSweepPoint
{
    double scale = 0;
    double pair_rate = 0;
    double b0 = 0;
    double signal_rate = 0;
    double heralding_rate = 0;
    double heralded_click_rate = 0;
    double random_click_rate = 0;
    double g2_zero = 0;
    double g2_zero_se = 0;
    /// Gated statistics with p_cor = R_c/R_s and b = gate (R_i - R_c R0 / R_s)
    /// from the configured rates and the simulated heralding rate.
    double g2_model = 0;
};

/// Reruns the heralded and randomly gated chain with the pair rate scaled.
std::vector<PumpSweepPoint> sweep_pump_power(const SimConfig& config, std::span<const double> scales);

/// Pulsed source with heralding disabled: idler photon count per pulse over
/// `pulses` consecutive pulses.
GateStatistics pulse_photon_statistics(const SimConfig& config, std::uint64_t pulses);

} // namespace hsps
