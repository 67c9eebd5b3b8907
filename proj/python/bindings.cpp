#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <hsps/errors.hpp>
#include <hsps/inference.hpp>
#include <hsps/io.hpp>
#include <hsps/sim.hpp>
#include <hsps/stats.hpp>

namespace py = pybind11;
using namespace hsps;

namespace {

py::dict gate_statistics_dict(const GateStatistics& s)
{
    py::dict d;
    d["gates"] = s.gates;
    d["histogram"] = s.histogram;
    d["probability"] = s.probability;
    d["probability_se"] = s.probability_se;
    d["p_ge1"] = s.p_at_least_one;
    d["p_ge2"] = s.p_at_least_two;
    d["g2_zero"] = s.g2_zero;
    d["g2_zero_se"] = s.g2_zero_se;
    d["twin_fraction"] = s.twin_fraction;
    return d;
}

py::dict report_dict(const SimReport& r)
{
    py::dict d;
    d["duration"] = r.duration;
    d["pair_rate"] = r.pair_rate();
    d["signal_fiber_rate"] = r.signal_fiber_rate();
    d["idler_fiber_rate"] = r.idler_fiber_rate();
    d["correlated_rate"] = r.correlated_rate();
    d["signal_click_rate"] = r.signal_click_rate();
    d["herald_rate"] = r.herald_rate();
    d["heralding_rate"] = r.heralding_rate();
    d["heralded_click_rate"] = r.click_rate();
    d["click_probability"] = r.click_probability();
    d["statistics"] = r.statistics ? py::object(gate_statistics_dict(*r.statistics)) : py::none();
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Heralded single-photon source statistics, rate inference and Monte Carlo";

    // InputError subclasses ValueError; ComputationError subclasses RuntimeError.
    static py::exception<InputError> input_error(m, "InputError", PyExc_ValueError);
    static py::exception<ComputationError> computation_error(m, "ComputationError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InputError& e) {
            py::set_error(input_error, e.what());
        } catch (const ComputationError& e) {
            py::set_error(computation_error, e.what());
        }
    });

    py::enum_<OriginalDistribution>(m, "OriginalDistribution")
        .value("POISSON", OriginalDistribution::Poisson)
        .value("THERMAL", OriginalDistribution::Thermal);

    py::class_<GatedStatisticsInput>(m, "GatedStatisticsInput")
        .def(py::init([](double p_cor, double b, OriginalDistribution original) {
                 GatedStatisticsInput in{p_cor, b, original};
                 in.validate();
                 return in;
             }),
             py::arg("p_cor"), py::arg("b"), py::arg("original") = OriginalDistribution::Poisson)
        .def_readonly("p_cor", &GatedStatisticsInput::p_cor)
        .def_readonly("b", &GatedStatisticsInput::b)
        .def_readonly("original", &GatedStatisticsInput::original);

    m.def("heralded_tail", &heralded_tail, py::arg("input"), py::arg("k"));
    m.def("count_probability", &exact_count_probability, py::arg("input"), py::arg("n"));
    m.def(
        "photon_number_distribution",
        [](const GatedStatisticsInput& in, double cutoff) {
            const PhotonNumberDistribution d = photon_number_distribution(in, cutoff);
            return py::make_tuple(d.probabilities, d.residual_tail);
        },
        py::arg("input"), py::arg("tail_cutoff") = 1e-15,
        "Returns (probabilities, residual_tail).");
    m.def("g2_zero", &g2_zero, py::arg("input"));
    m.def("g2_from_moments", &g2_from_moments, py::arg("mean"), py::arg("variance"));
    m.def("find_poisson_crossing", &find_poisson_crossing, py::arg("p_cor"));
    m.def(
        "b_from_b0", [](double b0, double p_cor) { return b_from_b0(HeraldingLoad::from_b0(b0, 1.0), p_cor); },
        py::arg("b0"), py::arg("p_cor"));
    m.def(
        "g2_curve_point",
        [](double b0, double gate_period, std::optional<double> p_cor) {
            const G2CurvePoint p = g2_curve_point(HeraldingLoad::from_b0(b0, gate_period), p_cor);
            py::dict d;
            d["b0"] = p.b0;
            d["R0"] = p.heralding_rate;
            d["g2_cw"] = p.g2_cw;
            d["g2_random"] = p.g2_random;
            d["g2_pulsed"] = p.g2_pulsed;
            d["g2_model"] = p.g2_model;
            return d;
        },
        py::arg("b0"), py::arg("gate_period") = 10e-9, py::arg("p_cor") = py::none());

    py::class_<MeasuredRates>(m, "MeasuredRates")
        .def(py::init<>())
        .def_readwrite("r_p", &MeasuredRates::signal_multimode)
        .def_readwrite("r_s", &MeasuredRates::signal_singlemode)
        .def_readwrite("R0", &MeasuredRates::heralding_rate)
        .def_readwrite("r_c", &MeasuredRates::heralded_clicks)
        .def_readwrite("r_i", &MeasuredRates::random_gate_clicks)
        .def_readwrite("r_s_dark", &MeasuredRates::signal_dark)
        .def_readwrite("r_i_dark", &MeasuredRates::idler_dark);

    py::class_<SystemParams>(m, "SystemParams")
        .def(py::init<>())
        .def_readwrite("eta_s", &SystemParams::eta_s)
        .def_readwrite("eta_i", &SystemParams::eta_i)
        .def_readwrite("delta_s", &SystemParams::delta_s)
        .def_readwrite("delta_i", &SystemParams::delta_i)
        .def_readwrite("zeta", &SystemParams::zeta)
        .def_readwrite("gate_period", &SystemParams::gate_period)
        .def_readwrite("dead_time_signal", &SystemParams::dead_time_signal)
        .def_readwrite("dead_time_generator", &SystemParams::dead_time_generator)
        .def_readwrite("holdoff_idler", &SystemParams::holdoff_idler)
        .def_readwrite("coherence_time", &SystemParams::coherence_time);

    m.def(
        "characterize",
        [](const MeasuredRates& measured, const SystemParams& system, double integration_time, bool uncertainty) {
            const Characterization c = characterize(measured, system, {integration_time, uncertainty});
            py::dict values;
            for (const auto& name : characterize_quantity_names()) values[py::str(name)] = c.quantity(name);
            py::dict d;
            d["values"] = values;
            d["uncertainty"] = c.uncertainty;
            d["distribution"] = c.distribution.probabilities;
            d["b0"] = c.b0;
            d["warnings"] = c.warnings;
            return d;
        },
        py::arg("measured"), py::arg("system"), py::arg("integration_time") = 1.0,
        py::arg("propagate_uncertainty") = true);

    m.def(
        "load_measurement_file",
        [](const std::string& path) {
            const io::MeasurementFile f = io::load_measurement_file(path);
            return py::make_tuple(f.measured, f.system, f.integration_time, f.label);
        },
        py::arg("path"), "Returns (measured, system, integration_time, label).");

    py::enum_<PumpMode>(m, "PumpMode").value("CW", PumpMode::CW).value("PULSED", PumpMode::Pulsed);
    py::enum_<GatingMode>(m, "GatingMode").value("HERALDED", GatingMode::Heralded).value("RANDOM", GatingMode::Random);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("pump_mode", &SimConfig::pump_mode)
        .def_readwrite("pair_rate", &SimConfig::pair_rate)
        .def_readwrite("mean_pairs_per_pulse", &SimConfig::mean_pairs_per_pulse)
        .def_readwrite("pulse_rate", &SimConfig::pulse_rate)
        .def_readwrite("gamma_s", &SimConfig::gamma_s)
        .def_readwrite("gamma_i", &SimConfig::gamma_i)
        .def_readwrite("gamma_c", &SimConfig::gamma_c)
        .def_readwrite("zeta", &SimConfig::zeta)
        .def_readwrite("delta_s", &SimConfig::delta_s)
        .def_readwrite("delta_i", &SimConfig::delta_i)
        .def_readwrite("eta_s", &SimConfig::eta_s)
        .def_readwrite("eta_i", &SimConfig::eta_i)
        .def_readwrite("dark_rate_s", &SimConfig::dark_rate_s)
        .def_readwrite("dark_rate_i", &SimConfig::dark_rate_i)
        .def_readwrite("dead_time_signal", &SimConfig::dead_time_signal)
        .def_readwrite("dead_time_generator", &SimConfig::dead_time_generator)
        .def_readwrite("holdoff_idler", &SimConfig::holdoff_idler)
        .def_readwrite("jitter", &SimConfig::jitter)
        .def_readwrite("gate_period", &SimConfig::gate_period)
        .def_readwrite("gate_delay", &SimConfig::gate_delay)
        .def_readwrite("idler_delay", &SimConfig::idler_delay)
        .def_readwrite("gate_rise_time", &SimConfig::gate_rise_time)
        .def_readwrite("gating", &SimConfig::gating)
        .def_readwrite("random_gate_rate", &SimConfig::random_gate_rate)
        .def_readwrite("duration", &SimConfig::duration)
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("event_budget", &SimConfig::event_budget)
        .def_readwrite("threads", &SimConfig::threads)
        .def("validate", &SimConfig::validate)
        .def("center_gate", &SimConfig::center_gate)
        .def("__str__", &io::format_sim_config);

    m.def("reference_sim_config", &reference_sim_config);
    m.def("load_sim_config", &io::load_sim_config, py::arg("path"));
    m.def(
        "simulate",
        [](const SimConfig& config) {
            SimReport r;
            {
                py::gil_scoped_release release;
                r = simulate(config);
            }
            return report_dict(r);
        },
        py::arg("config"));
}
