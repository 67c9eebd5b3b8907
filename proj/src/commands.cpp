#include <hsps/commands.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <hsps/errors.hpp>
#include <hsps/inference.hpp>
#include <hsps/io.hpp>
#include <hsps/sim.hpp>
#include <hsps/stats.hpp>
#include <hsps/validation.hpp>

namespace hsps::cli {

namespace fs = std::filesystem;
using io::CsvCell;
using io::CsvWriter;
using io::format_number;

namespace {

struct CommonOptions
{
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string grid;
    std::string format = "csv";
    bool quiet = false;
};

struct Context
{
    CommonOptions common;
    std::ostream& out;
    std::ostream& err;

    fs::path output_dir() const
    {
        fs::path dir = ".";
        if (!common.out.empty()) {
            dir = common.out;
        } else if (const char* env = std::getenv("HSPS_OUT_DIR"); env && *env) {
            dir = env;
        }
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec || !fs::is_directory(dir)) throw InputError("output directory " + dir.string() + " is not writable");
        return dir;
    }

    std::ostream& info() const
    {
        static std::ostream null(nullptr);
        return common.quiet ? null : out;
    }
};

// Writes the whole file at once so a failed command never leaves a partial CSV.
fs::path write_file(const Context& ctx, const std::string& name, const std::function<void(std::ostream&)>& body)
{
    std::ostringstream text;
    body(text);
    const fs::path path = ctx.output_dir() / name;
    std::ofstream file(path, std::ios::binary);
    file << text.str();
    file.close();
    if (!file) throw InputError("cannot write " + path.string());
    return path;
}

CsvCell cell(std::optional<double> x)
{
    if (!x) return std::string{};
    return *x;
}

SimConfig sim_config_or_reference(const Context& ctx)
{
    SimConfig c = ctx.common.config.empty() ? reference_sim_config() : io::load_sim_config(ctx.common.config);
    if (ctx.common.seed) c.seed = *ctx.common.seed;
    return c;
}

void apply_duration(SimConfig& c, std::optional<double> duration)
{
    if (!duration) return;
    if (!(*duration > 0) || !std::isfinite(*duration)) throw InputError("--duration must be positive");
    c.duration = *duration;
    c.validate();
}

std::vector<double> grid_or(const Context& ctx, const std::string& fallback)
{
    return io::parse_grid(ctx.common.grid.empty() ? fallback : ctx.common.grid);
}

void describe_config(CsvWriter& csv, const SimConfig& c)
{
    csv.comment(std::string("pump ") + (c.pump_mode == PumpMode::CW ? "cw" : "pulsed") + ", mean pair rate "
                + format_number(c.mean_pair_rate()) + " /s, gate " + format_number(c.gate_period * 1e9)
                + " ns, duration " + format_number(c.duration) + " s, seed " + std::to_string(c.seed));
    csv.comment("gamma_s " + format_number(c.gamma_s) + ", gamma_i " + format_number(c.gamma_i) + ", gamma_c "
                + format_number(c.gamma_c) + ", eta_s " + format_number(c.eta_s) + ", eta_i "
                + format_number(c.eta_i));
}

// characterize ---------------------------------------------------------------

struct CharacterizeArgs
{
    std::optional<double> integration_time;
    bool no_uncertainty = false;
};

int cmd_characterize(const Context& ctx, const CharacterizeArgs& args)
{
    if (ctx.common.config.empty()) throw InputError("characterize needs --config MEASUREMENT_FILE");
    io::MeasurementFile input = io::load_measurement_file(ctx.common.config);
    if (args.integration_time) {
        if (!(*args.integration_time > 0)) throw InputError("--integration-time must be positive");
        input.integration_time = *args.integration_time;
    }
    const Characterization c = characterize(input.measured, input.system,
                                            {input.integration_time, !args.no_uncertainty});
    const fs::path path = write_file(ctx, "report.txt", [&](std::ostream& os) { io::write_report(os, c, input); });

    std::ostream& os = ctx.info();
    const auto line = [&](const std::string& name, double value, const std::string& unit = "") {
        os << "  " << name << " = " << format_number(value);
        if (const auto it = c.uncertainty.find(name); it != c.uncertainty.end()) os << " +- " << format_number(it->second);
        os << unit << "\n";
    };
    os << "fiber rates\n";
    line("R_p", c.rates.pair_rate, " /s");
    line("R_s", c.rates.signal_fiber_rate, " /s");
    line("R_i", c.rates.idler_fiber_rate, " /s");
    line("R_c", c.rates.correlated_rate, " /s");
    line("b", c.rates.accidental_mean);
    os << "coupling\n";
    line("gamma_s", c.coupling.signal_coupling);
    line("gamma_i", c.coupling.idler_coupling);
    line("gamma_c", c.coupling.pair_coupling);
    line("mu_i_given_s", c.coupling.idler_given_signal);
    line("mu_s_given_i", c.coupling.signal_given_idler);
    os << "heralded statistics\n";
    line("P0", c.p_zero);
    line("mu_her", c.mu_her);
    line("P_ge2", c.p_at_least_two);
    line("g2_zero", c.g2_zero);
    for (const auto& w : c.warnings) os << "warning: " << w << "\n";
    os << "report written to " << path.string() << "\n";
    return Success;
}

// simulate -------------------------------------------------------------------

struct SimulateArgs
{
    std::optional<double> duration;
    std::string timetags;
};

int cmd_simulate(const Context& ctx, const SimulateArgs& args)
{
    SimConfig config = sim_config_or_reference(ctx);
    apply_duration(config, args.duration);
    const SimReport r = simulate(config);
    if (!r.statistics) throw EmptyReportError("no gates were opened; nothing to report");
    const GateStatistics& s = *r.statistics;

    const double T = r.duration;
    const auto rate_se = [&](std::uint64_t count) { return std::sqrt(static_cast<double>(count)) / T; };
    const DerivedRates e = config.expected_rates();
    const double p_cor = e.p_cor();
    const double b = std::max(0.0, config.gate_period * (e.idler_fiber_rate - p_cor * r.herald_rate()));
    const GatedStatisticsInput model{p_cor, b, OriginalDistribution::Poisson};

    write_file(ctx, "simulation_summary.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("Monte Carlo run of the heralded source; counts converted to rates over the run duration");
        describe_config(csv, config);
        csv.comment("value: simulated estimate; std_error: counting standard error; expected: configured value");
        csv.header({"quantity", "value", "std_error", "expected", "unit"});
        const std::string none;
        csv.row({"pair_rate", r.pair_rate(), rate_se(r.pairs), config.mean_pair_rate(), "1/s"});
        csv.row({"signal_fiber_rate", r.signal_fiber_rate(), rate_se(r.signal_fiber_photons), e.signal_fiber_rate,
                 "1/s"});
        csv.row({"idler_fiber_rate", r.idler_fiber_rate(), rate_se(r.idler_fiber_photons), e.idler_fiber_rate,
                 "1/s"});
        csv.row({"correlated_rate", r.correlated_rate(), rate_se(r.correlated_pairs), e.correlated_rate, "1/s"});
        csv.row({"signal_click_rate", r.signal_click_rate(), rate_se(r.signal_clicks), none, "1/s"});
        csv.row({"herald_rate", r.herald_rate(), rate_se(r.heralds), none, "1/s"});
        csv.row({"heralding_rate", r.heralding_rate(), rate_se(r.tally.armed_gates), none, "1/s"});
        csv.row({"heralded_click_rate", r.click_rate(), rate_se(r.tally.clicks), none, "1/s"});
        csv.row({"click_probability", r.click_probability(),
                 binomial_se(r.click_probability(), static_cast<double>(r.tally.armed_gates)), none, "1"});
        csv.row({"gates", static_cast<std::int64_t>(s.gates), none, none, "1"});
        csv.row({"twin_fraction", s.twin_fraction, binomial_se(s.twin_fraction, static_cast<double>(s.gates)),
                 p_cor, "1"});
        csv.row({"P_ge1", s.p_at_least_one, binomial_se(s.p_at_least_one, static_cast<double>(s.gates)),
                 heralded_tail(model, 1), "1"});
        csv.row({"P_ge2", s.p_at_least_two, binomial_se(s.p_at_least_two, static_cast<double>(s.gates)),
                 heralded_tail(model, 2), "1"});
        csv.row({"g2_zero", s.g2_zero, s.g2_zero_se, p_cor > 0 || b > 0 ? CsvCell{g2_zero(model)} : CsvCell{none},
                 "1"});
    });

    write_file(ctx, "simulation_distribution.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("Idler photons inside each heralded gate, before the idler detector");
        describe_config(csv, config);
        csv.comment("model: gated Poisson statistics with p_cor = R_c/R_s = " + format_number(p_cor)
                    + " and b = gate (R_i - p_cor R0) = " + format_number(b));
        csv.header({"n", "gates", "probability", "std_error", "model"});
        const int n_max = std::max<int>(3, static_cast<int>(s.histogram.size()) - 1);
        for (int n = 0; n <= n_max; ++n) {
            const auto count = n < static_cast<int>(s.histogram.size()) ? s.histogram[static_cast<std::size_t>(n)] : 0;
            csv.row({static_cast<std::int64_t>(n), static_cast<std::int64_t>(count), s.p(n), s.se(n),
                     exact_count_probability(model, n)});
        }
    });

    if (!args.timetags.empty()) write_timetags(simulate_event_stream(config), args.timetags);

    std::ostream& os = ctx.info();
    os << "gates " << s.gates << ", heralding rate " << format_number(r.heralding_rate()) << " /s\n";
    for (int n = 0; n <= 2; ++n) {
        os << "  P(" << n << ") = " << format_number(s.p(n)) << " +- " << format_number(s.se(n)) << "\n";
    }
    os << "  g2(0) = " << format_number(s.g2_zero) << " +- " << format_number(s.g2_zero_se) << "\n";
    return Success;
}

// sweep ----------------------------------------------------------------------

struct SweepArgs
{
    std::optional<double> p_cor;
    std::optional<double> gate_period_ns;
    bool pump = false;
    std::optional<double> duration;
};

int cmd_sweep_analytic(const Context& ctx, const SweepArgs& args)
{
    double gate = 10e-9;
    std::optional<double> model_p_cor = args.p_cor;
    std::optional<Characterization> measured;
    if (!ctx.common.config.empty()) {
        if (args.p_cor) throw InputError("--p-cor and a measurement --config are mutually exclusive");
        const io::MeasurementFile input = io::load_measurement_file(ctx.common.config);
        measured = characterize(input.measured, input.system, {input.integration_time, false});
        model_p_cor = measured->rates.p_cor();
        gate = input.system.gate_period;
    }
    if (model_p_cor && !(*model_p_cor >= 0 && *model_p_cor <= 1)) throw InputError("--p-cor must lie in [0, 1]");
    if (args.gate_period_ns) {
        if (!(*args.gate_period_ns > 0)) throw InputError("--gate-period must be positive");
        gate = *args.gate_period_ns * 1e-9;
    }
    const std::vector<double> grid = grid_or(ctx, "0:0.99:100");
    for (const double b0 : grid) {
        if (!(b0 >= 0) || !std::isfinite(b0)) throw InputError("heralding load b0 must be >= 0, got " + format_number(b0));
    }

    int rows_written = 0;
    write_file(ctx, "g2_vs_b0.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("g2(0) of the heralded output versus heralding load b0 = gate period x heralding rate R0");
        csv.comment("gate period " + format_number(gate * 1e9) + " ns; equal heralding rate for every source");
        csv.comment("g2_cw: CW pump, Poisson accidentals, ideal heralding (p_cor = 1)");
        csv.comment("g2_random: Poisson source gated at random (p_cor = 0)");
        csv.comment("g2_pulsed: pulsed single-mode thermal source, one pulse per gate, ideal heralding");
        if (model_p_cor) {
            csv.comment("g2_experimental_model: CW pump with p_cor = R_c/R_s = " + format_number(*model_p_cor));
        } else {
            csv.comment("g2_experimental_model: empty; pass --p-cor or a measurement file to fill it");
        }
        if (measured) {
            csv.comment("measured operating point: b0 = " + format_number(measured->b0)
                        + ", g2(0) = " + format_number(measured->g2_zero));
        }
        csv.comment("cells read 'diverged' where b0 >= 1 (the heralding rate saturates the gate)");
        csv.header({"b0", "R0", "g2_cw", "g2_random", "g2_pulsed", "g2_experimental_model"});
        for (const double b0 : grid) {
            const G2CurvePoint p = g2_curve_point(HeraldingLoad::from_b0(b0, gate), model_p_cor);
            if (p.diverged()) {
                const std::string d = "diverged";
                csv.row({b0, p.heralding_rate, d, d, d, model_p_cor ? CsvCell{d} : CsvCell{std::string{}}});
            } else {
                csv.row({b0, p.heralding_rate, cell(p.g2_cw), cell(p.g2_random), cell(p.g2_pulsed), cell(p.g2_model)});
            }
            ++rows_written;
        }
    });
    ctx.info() << "wrote " << rows_written << " rows to g2_vs_b0.csv\n";
    return Success;
}

int cmd_sweep_pump(const Context& ctx, const SweepArgs& args)
{
    SimConfig config = sim_config_or_reference(ctx);
    apply_duration(config, args.duration);
    const std::vector<double> scales = grid_or(ctx, "0.0625:8:8");
    const std::vector<PumpSweepPoint> points = sweep_pump_power(config, scales);
    write_file(ctx, "pump_sweep.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("Monte Carlo pump-power sweep: pair rate scaled by 'scale' relative to the configuration");
        describe_config(csv, config);
        csv.comment("rates in 1/s; random_click_rate: idler clicks under random gating at the heralding rate");
        csv.comment("g2_model: gated Poisson statistics with p_cor = R_c/R_s and b = gate (R_i - p_cor R0)");
        csv.header({"scale", "pair_rate", "b0", "signal_rate", "heralding_rate", "heralded_click_rate",
                    "random_click_rate", "g2_zero", "g2_zero_se", "g2_model"});
        for (const auto& p : points) {
            csv.row({p.scale, p.pair_rate, p.b0, p.signal_rate, p.heralding_rate, p.heralded_click_rate,
                     p.random_click_rate, p.g2_zero, p.g2_zero_se, p.g2_model});
        }
    });
    std::ostream& os = ctx.info();
    for (const auto& p : points) {
        os << "scale " << format_number(p.scale) << ": b0 = " << format_number(p.b0)
           << ", g2(0) = " << format_number(p.g2_zero) << " +- " << format_number(p.g2_zero_se) << "\n";
    }
    return Success;
}

// crossings ------------------------------------------------------------------

int cmd_crossings(const Context& ctx, std::vector<double> p_cor_values)
{
    if (!ctx.common.grid.empty()) p_cor_values = io::parse_grid(ctx.common.grid);
    for (const double p : p_cor_values) {
        if (!(p >= 0 && p <= 1)) throw InputError("p_cor must lie in [0, 1], got " + format_number(p));
    }
    std::ostream& os = ctx.info();
    write_file(ctx, "crossings.csv", [&](std::ostream& file) {
        CsvWriter csv(file);
        csv.comment("Heralding load at which the CW heralded output turns Poissonian (g2(0) = 1)");
        csv.comment("b0_crossing: gate period x heralding rate; b_crossing: accidental mean per gate there");
        csv.comment("status 'no-crossing': g2(0) stays >= 1 over 0 < b0 < 1");
        csv.header({"p_cor", "b0_crossing", "b_crossing", "status"});
        for (const double p : p_cor_values) {
            try {
                const double b0 = find_poisson_crossing(p);
                const double b = b_from_b0(HeraldingLoad::from_b0(b0, 1.0), p);
                csv.row({p, b0, b, std::string("ok")});
                os << "p_cor " << format_number(p) << ": b0 = " << format_number(b0) << "\n";
            } catch (const NoCrossingError&) {
                csv.row({p, std::string{}, std::string{}, std::string("no-crossing")});
                os << "p_cor " << format_number(p) << ": no crossing\n";
            }
        }
    });
    return Success;
}

// validate -------------------------------------------------------------------

struct ValidateArgs
{
    double gates = 1e6;
    std::optional<double> duration;
    bool skip_matrix = false;
    bool skip_round_trip = false;
};

int cmd_validate(const Context& ctx, const ValidateArgs& args)
{
    // Load the round-trip configuration first so a bad file fails before any simulation.
    SimConfig round_trip = sim_config_or_reference(ctx);
    apply_duration(round_trip, args.duration);
    if (!(args.gates >= 1) || !std::isfinite(args.gates)) throw InputError("--gates must be at least 1");
    const std::uint64_t base_seed = ctx.common.seed.value_or(20261016);

    struct Row
    {
        std::string group;
        double p_cor;
        double b;
        ZCheck check;
    };
    std::vector<Row> rows;
    const auto nan = std::numeric_limits<double>::quiet_NaN();

    if (!args.skip_matrix) {
        const auto matrix = default_matrix();
        for (std::size_t i = 0; i < matrix.size(); ++i) {
            const auto [p, b] = matrix[i];
            const MatrixPoint point = run_matrix_point(p, b, args.gates, base_seed + i);
            for (const auto& c : point.checks) rows.push_back({"matrix", p, b, c});
        }
    }
    if (!args.skip_round_trip) {
        for (const auto& c : run_round_trip(round_trip)) rows.push_back({"round-trip", nan, nan, c});
    }

    bool all_pass = true;
    std::ostream& os = ctx.info();
    for (const auto& r : rows) {
        all_pass = all_pass && r.check.pass();
        os << (r.check.pass() ? "PASS " : "FAIL ") << r.group;
        if (r.group == "matrix") os << " p_cor=" << format_number(r.p_cor) << " b=" << format_number(r.b);
        os << " " << r.check.name << " observed=" << format_number(r.check.observed)
           << " expected=" << format_number(r.check.expected) << " se=" << format_number(r.check.standard_error)
           << " z=" << format_number(r.check.z);
        if (r.check.exact_z) os << " exact_z=" << format_number(*r.check.exact_z);
        os << "\n";
    }
    write_file(ctx, "validation.csv", [&](std::ostream& file) {
        CsvWriter csv(file);
        csv.comment("Simulator versus closed forms (matrix) and inference versus simulated measurements (round-trip)");
        csv.comment("z = (observed - expected) / std_error; z_exact: exact binomial tail of a count fraction as a "
                    "normal deviate");
        csv.comment("a check passes when |z_exact| < 3, or |z| < 3 where z_exact is empty");
        csv.comment("matrix: ideal chain, >= " + format_number(args.gates) + " gates per point, seeds from "
                    + std::to_string(base_seed));
        if (!args.skip_round_trip) describe_config(csv, round_trip);
        csv.header({"group", "p_cor", "b", "check", "observed", "expected", "std_error", "z", "z_exact", "pass"});
        for (const auto& r : rows) {
            const bool matrix = r.group == "matrix";
            csv.row({r.group, matrix ? CsvCell{r.p_cor} : CsvCell{std::string{}},
                     matrix ? CsvCell{r.b} : CsvCell{std::string{}}, r.check.name, r.check.observed,
                     r.check.expected, r.check.standard_error, r.check.z,
                     r.check.exact_z ? CsvCell{*r.check.exact_z} : CsvCell{std::string{}}, std::int64_t{r.check.pass() ? 1 : 0}});
        }
    });
    if (!all_pass) {
        ctx.err << "validation failed: at least one check has |z| >= 3\n";
        return ValidationFailed;
    }
    os << "all " << rows.size() << " checks passed\n";
    return Success;
}

// delay-scan -----------------------------------------------------------------

int cmd_delay_scan(const Context& ctx, std::optional<double> duration)
{
    SimConfig config = sim_config_or_reference(ctx);
    apply_duration(config, duration);
    std::vector<double> delays;
    if (ctx.common.grid.empty()) {
        // Gate opening swept across the twin arrival, 1 ns steps.
        const double start = std::round((config.idler_delay - config.gate_period) * 1e9) - 5;
        const double stop = std::round(config.idler_delay * 1e9) + 5;
        delays = io::parse_grid(format_number(start) + ":" + format_number(stop) + ":"
                                + std::to_string(static_cast<int>(stop - start) + 1));
    } else {
        delays = io::parse_grid(ctx.common.grid);
    }
    for (double& d : delays) d *= 1e-9;
    const std::vector<DelayScanPoint> points = delay_scan(config, delays);
    write_file(ctx, "delay_scan.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("Heralded idler click rate versus gate delay after the herald");
        describe_config(csv, config);
        csv.comment("idler photons arrive " + format_number(config.idler_delay * 1e9)
                    + " ns after their herald's pair; gate rise time "
                    + format_number(config.gate_rise_time * 1e9) + " ns");
        csv.comment("gate_delay in ns; click_rate and std_error in 1/s");
        csv.header({"gate_delay_ns", "click_rate", "std_error", "armed_gates"});
        for (const auto& p : points) {
            csv.row({p.gate_delay * 1e9, p.click_rate, p.click_rate_se, static_cast<std::int64_t>(p.armed_gates)});
        }
    });
    ctx.info() << "wrote " << points.size() << " delays to delay_scan.csv\n";
    return Success;
}

void add_common(CLI::App* sub, CommonOptions& o, bool grid, bool seed)
{
    sub->add_option("--config", o.config, "Input file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output directory (default: $HSPS_OUT_DIR or .)");
    if (seed) sub->add_option("--seed", o.seed, "Random seed, overrides the configuration");
    if (grid) sub->add_option("--grid", o.grid, "START:STOP:STEPS, inclusive");
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv"}));
    sub->add_flag("--quiet", o.quiet, "Suppress the summary on stdout");
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Characterization and simulation of asynchronous heralded single-photon sources", "hsps"};
    app.require_subcommand(1);

    CommonOptions common;

    CharacterizeArgs characterize_args;
    auto* characterize_cmd = app.add_subcommand("characterize", "Infer fiber rates, couplings and g2(0) from a measurement file");
    add_common(characterize_cmd, common, false, false);
    characterize_cmd->add_option("--integration-time", characterize_args.integration_time,
                                 "Counting time behind each rate in seconds, overrides the file");
    characterize_cmd->add_flag("--no-uncertainty", characterize_args.no_uncertainty, "Skip uncertainty propagation");

    SimulateArgs simulate_args;
    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo run of a simulator configuration");
    add_common(simulate_cmd, common, false, true);
    simulate_cmd->add_option("--duration", simulate_args.duration, "Simulated time in seconds");
    simulate_cmd->add_option("--timetags", simulate_args.timetags,
                             "Also write the raw event stream here (held in memory; keep runs short)");

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "g2(0) versus heralding load, or a simulated pump-power sweep");
    add_common(sweep_cmd, common, true, true);
    sweep_cmd->add_option("--p-cor", sweep_args.p_cor, "Twin-in-gate probability for the model column");
    sweep_cmd->add_option("--gate-period", sweep_args.gate_period_ns, "Gate period in ns (default 10)");
    sweep_cmd->add_flag("--pump", sweep_args.pump,
                        "Simulate a pump-power sweep; --config is a simulator file and --grid lists rate scales");
    sweep_cmd->add_option("--duration", sweep_args.duration, "Simulated time per point in seconds (--pump)");

    std::vector<double> crossing_p_cor{1.0, 0.5};
    auto* crossings_cmd = app.add_subcommand("crossings", "Heralding load where the output turns Poissonian");
    add_common(crossings_cmd, common, true, false);
    crossings_cmd->add_option("--p-cor", crossing_p_cor, "Comma-separated twin-in-gate probabilities")
        ->delimiter(',');

    ValidateArgs validate_args;
    auto* validate_cmd = app.add_subcommand("validate", "Compare the simulator with the closed forms and the inversion");
    add_common(validate_cmd, common, false, true);
    validate_cmd->add_option("--gates", validate_args.gates, "Minimum gates per matrix point");
    validate_cmd->add_option("--duration", validate_args.duration, "Round-trip simulated time in seconds");
    validate_cmd->add_flag("--skip-matrix", validate_args.skip_matrix, "Skip the closed-form matrix");
    validate_cmd->add_flag("--skip-round-trip", validate_args.skip_round_trip, "Skip the inference round trip");

    std::optional<double> scan_duration;
    auto* scan_cmd = app.add_subcommand("delay-scan", "Heralded click rate versus gate delay (grid in ns)");
    add_common(scan_cmd, common, true, true);
    scan_cmd->add_option("--duration", scan_duration, "Simulated time per delay in seconds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Success : InputFailure;
    }

    Context ctx{common, out, err};
    try {
        if (*characterize_cmd) return cmd_characterize(ctx, characterize_args);
        if (*simulate_cmd) return cmd_simulate(ctx, simulate_args);
        if (*sweep_cmd) return sweep_args.pump ? cmd_sweep_pump(ctx, sweep_args) : cmd_sweep_analytic(ctx, sweep_args);
        if (*crossings_cmd) return cmd_crossings(ctx, crossing_p_cor);
        if (*validate_cmd) return cmd_validate(ctx, validate_args);
        if (*scan_cmd) return cmd_delay_scan(ctx, scan_duration);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return InputFailure;
    } catch (const ComputationError& e) {
        err << "error: " << e.what() << "\n";
        return ComputationFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return ComputationFailure;
    }
    return InputFailure;
}

} // namespace hsps::cli
