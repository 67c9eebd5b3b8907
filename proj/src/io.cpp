#include <hsps/io.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <hsps/errors.hpp>

namespace hsps::io {

namespace {

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool is_key_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

// Splits "1.5 ns" / "1.5ns" into number and unit.
std::pair<std::string, std::string> split_unit(const std::string& text)
{
    const std::string t = trim(text);
    std::size_t i = 0;
    while (i < t.size()) {
        const char c = t[i];
        const bool numeric = std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-';
        const bool exponent = (c == 'e' || c == 'E') && i + 1 < t.size()
                           && (std::isdigit(static_cast<unsigned char>(t[i + 1])) || t[i + 1] == '-'
                               || t[i + 1] == '+');
        if (!numeric && !exponent) break;
        ++i;
    }
    return {t.substr(0, i), trim(t.substr(i))};
}

} // namespace

KeyValueDocument KeyValueDocument::parse(std::istream& in)
{
    KeyValueDocument doc;
    std::string raw;
    std::string section;
    std::set<std::pair<std::string, std::string>> seen;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string text = raw;
        if (const auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
        if (const auto semi = text.find(';'); semi != std::string::npos) text.erase(semi);
        text = trim(text);
        if (text.empty()) continue;

        if (text.front() == '[') {
            if (text.back() != ']' || text.size() < 3) throw SchemaError(line, "malformed section header '" + text + "'");
            section = trim(text.substr(1, text.size() - 2));
            if (!std::all_of(section.begin(), section.end(), is_key_char)) {
                throw SchemaError(line, "malformed section name '" + section + "'");
            }
            for (const auto& s : doc.sections_) {
                if (s.first == section) throw SchemaError(line, "section [" + section + "] repeated");
            }
            doc.sections_.emplace_back(section, line);
            continue;
        }

        const auto eq = text.find('=');
        if (eq == std::string::npos) throw SchemaError(line, "expected 'key = value', got '" + text + "'");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty() || !std::all_of(key.begin(), key.end(), is_key_char)) {
            throw SchemaError(line, "malformed key '" + key + "'");
        }
        if (value.empty()) throw SchemaError(line, "key '" + key + "' has no value");
        if (section.empty()) throw SchemaError(line, "key '" + key + "' appears before any [section]");
        if (!seen.emplace(section, key).second) {
            throw SchemaError(line, "duplicate key '" + key + "' in [" + section + "]");
        }
        doc.entries_.push_back({section, key, value, line});
    }
    doc.last_line_ = line;
    return doc;
}

KeyValueDocument KeyValueDocument::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    try {
        return parse(in);
    } catch (const SchemaError& e) {
        throw SchemaError(e.line(), e.message(), path);
    }
}

const KeyValueEntry* KeyValueDocument::find(const std::string& section, const std::string& key) const
{
    for (const auto& e : entries_) {
        if (e.section == section && e.key == key) return &e;
    }
    return nullptr;
}

std::size_t KeyValueDocument::section_line(const std::string& section) const
{
    for (const auto& s : sections_) {
        if (s.first == section) return s.second;
    }
    return 0;
}

double parse_number(const std::string& text, std::size_t line)
{
    const std::string t = trim(text);
    double value = 0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    if (begin != end && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || t.empty()) throw SchemaError(line, "'" + t + "' is not a number");
    if (!std::isfinite(value)) throw SchemaError(line, "'" + t + "' is not finite");
    return value;
}

double parse_rate(const std::string& text, std::size_t line)
{
    const auto [number, unit] = split_unit(text);
    const double v = parse_number(number, line);
    static const std::map<std::string, double> scale = {
        {"", 1},      {"/s", 1},      {"1/s", 1},   {"s^-1", 1}, {"s-1", 1},
        {"Hz", 1},    {"cps", 1},     {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9},
    };
    const auto it = scale.find(unit);
    if (it == scale.end()) throw SchemaError(line, "unknown rate unit '" + unit + "'");
    return v * it->second;
}

double parse_time(const std::string& text, std::size_t line)
{
    const auto [number, unit] = split_unit(text);
    const double v = parse_number(number, line);
    static const std::map<std::string, double> scale = {
        {"", 1e-9}, {"ps", 1e-12}, {"ns", 1e-9}, {"us", 1e-6}, {"µs", 1e-6}, {"ms", 1e-3}, {"s", 1},
    };
    const auto it = scale.find(unit);
    if (it == scale.end()) throw SchemaError(line, "unknown time unit '" + unit + "'");
    return v * it->second;
}

namespace {

enum class Kind { Rate, Time, Number, Text, Integer };

struct Field
{
    std::string section;
    std::string key;
    Kind kind;
    bool required;
    std::function<void(double)> set_number;
    std::function<void(const std::string&)> set_text = {};
};

void apply_schema(const KeyValueDocument& doc, const std::vector<Field>& fields)
{
    std::set<std::string> sections;
    for (const auto& f : fields) sections.insert(f.section);
    for (const auto& e : doc.entries()) {
        if (!sections.count(e.section)) throw SchemaError(e.line, "unknown section [" + e.section + "]");
        const bool known = std::any_of(fields.begin(), fields.end(), [&](const Field& f) {
            return f.section == e.section && f.key == e.key;
        });
        if (!known) throw SchemaError(e.line, "unknown key '" + e.key + "' in [" + e.section + "]");
    }
    for (const auto& f : fields) {
        const KeyValueEntry* e = doc.find(f.section, f.key);
        if (!e) {
            if (f.required) {
                const std::size_t anchor = doc.section_line(f.section) ? doc.section_line(f.section) : doc.last_line();
                throw SchemaError(anchor, "missing required key '" + f.key + "' in [" + f.section + "]");
            }
            continue;
        }
        switch (f.kind) {
        case Kind::Rate: f.set_number(parse_rate(e->value, e->line)); break;
        case Kind::Time: f.set_number(parse_time(e->value, e->line)); break;
        case Kind::Number: f.set_number(parse_number(e->value, e->line)); break;
        case Kind::Integer: {
            const double v = parse_number(e->value, e->line);
            if (v < 0 || v != std::floor(v) || v > 1.8e19) {
                throw SchemaError(e->line, "'" + e->value + "' is not a non-negative integer");
            }
            f.set_number(v);
            break;
        }
        case Kind::Text: f.set_text(e->value); break;
        }
    }
}

} // namespace

MeasurementFile parse_measurement_file(const KeyValueDocument& doc)
{
    MeasurementFile f;
    MeasuredRates& m = f.measured;
    SystemParams& p = f.system;
    const auto set = [](double& target) { return [&target](double v) { target = v; }; };
    const std::vector<Field> fields = {
        {"measured", "r_p", Kind::Rate, true, set(m.signal_multimode)},
        {"measured", "r_s", Kind::Rate, true, set(m.signal_singlemode)},
        {"measured", "R0", Kind::Rate, true, set(m.heralding_rate)},
        {"measured", "r_c", Kind::Rate, true, set(m.heralded_clicks)},
        {"measured", "r_i", Kind::Rate, true, set(m.random_gate_clicks)},
        {"measured", "r_s_dark", Kind::Rate, true, set(m.signal_dark)},
        {"measured", "r_i_dark", Kind::Rate, true, set(m.idler_dark)},
        {"system", "eta_s", Kind::Number, true, set(p.eta_s)},
        {"system", "eta_i", Kind::Number, true, set(p.eta_i)},
        {"system", "delta_s", Kind::Number, true, set(p.delta_s)},
        {"system", "delta_i", Kind::Number, true, set(p.delta_i)},
        {"system", "zeta", Kind::Number, true, set(p.zeta)},
        {"system", "gate_period", Kind::Time, true, set(p.gate_period)},
        {"system", "dead_time_signal", Kind::Time, false, set(p.dead_time_signal)},
        {"system", "dead_time_generator", Kind::Time, false, set(p.dead_time_generator)},
        {"system", "holdoff_idler", Kind::Time, false, set(p.holdoff_idler)},
        {"system", "coherence_time", Kind::Time, false, set(p.coherence_time)},
        {"meta", "integration_time", Kind::Time, false, set(f.integration_time)},
        {"meta", "label", Kind::Text, false, {}, [&f](const std::string& s) { f.label = s; }},
    };
    apply_schema(doc, fields);
    f.measured.validate();
    f.system.validate();
    if (!(f.integration_time > 0)) throw InputError("integration_time must be positive");
    return f;
}

MeasurementFile load_measurement_file(const std::string& path)
{
    const KeyValueDocument doc = KeyValueDocument::load(path);
    try {
        return parse_measurement_file(doc);
    } catch (const SchemaError& e) {
        throw SchemaError(e.line(), e.message(), path);
    }
}

SimConfig parse_sim_config(const KeyValueDocument& doc)
{
    SimConfig c;
    const auto set = [](double& target) { return [&target](double v) { target = v; }; };
    bool delay_given = doc.find("gate", "delay") != nullptr;
    const std::vector<Field> fields = {
        {"source", "mode", Kind::Text, false, {},
         [&c, &doc](const std::string& s) {
             if (s == "cw") c.pump_mode = PumpMode::CW;
             else if (s == "pulsed") c.pump_mode = PumpMode::Pulsed;
             else throw SchemaError(doc.find("source", "mode")->line, "mode must be 'cw' or 'pulsed', got '" + s + "'");
         }},
        {"source", "pair_rate", Kind::Rate, false, set(c.pair_rate)},
        {"source", "mean_pairs_per_pulse", Kind::Number, false, set(c.mean_pairs_per_pulse)},
        {"source", "pulse_rate", Kind::Rate, false, set(c.pulse_rate)},
        {"coupling", "gamma_s", Kind::Number, false, set(c.gamma_s)},
        {"coupling", "gamma_i", Kind::Number, false, set(c.gamma_i)},
        {"coupling", "gamma_c", Kind::Number, false, set(c.gamma_c)},
        {"coupling", "zeta", Kind::Number, false, set(c.zeta)},
        {"coupling", "delta_s", Kind::Number, false, set(c.delta_s)},
        {"coupling", "delta_i", Kind::Number, false, set(c.delta_i)},
        {"detectors", "eta_s", Kind::Number, false, set(c.eta_s)},
        {"detectors", "eta_i", Kind::Number, false, set(c.eta_i)},
        {"detectors", "dark_rate_s", Kind::Rate, false, set(c.dark_rate_s)},
        {"detectors", "dark_rate_i", Kind::Rate, false, set(c.dark_rate_i)},
        {"detectors", "dead_time_signal", Kind::Time, false, set(c.dead_time_signal)},
        {"detectors", "dead_time_generator", Kind::Time, false, set(c.dead_time_generator)},
        {"detectors", "holdoff_idler", Kind::Time, false, set(c.holdoff_idler)},
        {"detectors", "jitter", Kind::Time, false, set(c.jitter)},
        {"gate", "period", Kind::Time, false, set(c.gate_period)},
        {"gate", "delay", Kind::Time, false, set(c.gate_delay)},
        {"gate", "idler_delay", Kind::Time, false, set(c.idler_delay)},
        {"gate", "rise_time", Kind::Time, false, set(c.gate_rise_time)},
        {"gate", "mode", Kind::Text, false, {},
         [&c, &doc](const std::string& s) {
             if (s == "heralded") c.gating = GatingMode::Heralded;
             else if (s == "random") c.gating = GatingMode::Random;
             else throw SchemaError(doc.find("gate", "mode")->line, "mode must be 'heralded' or 'random', got '" + s + "'");
         }},
        {"gate", "random_rate", Kind::Rate, false, set(c.random_gate_rate)},
        {"run", "duration", Kind::Time, false, set(c.duration)},
        // Seeds need all 64 bits, so they bypass the floating-point path.
        {"run", "seed", Kind::Text, false, {},
         [&c, &doc](const std::string& s) {
             std::uint64_t v = 0;
             const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
             if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
                 throw SchemaError(doc.find("run", "seed")->line, "seed must be an unsigned 64-bit integer");
             }
             c.seed = v;
         }},
        {"run", "event_budget", Kind::Number, false, set(c.event_budget)},
        {"run", "threads", Kind::Integer, false, [&c](double v) { c.threads = static_cast<unsigned>(v); }},
    };
    apply_schema(doc, fields);
    if (!delay_given) c.center_gate();
    c.validate();
    return c;
}

SimConfig load_sim_config(const std::string& path)
{
    const KeyValueDocument doc = KeyValueDocument::load(path);
    try {
        return parse_sim_config(doc);
    } catch (const SchemaError& e) {
        throw SchemaError(e.line(), e.message(), path);
    }
}

std::string format_number(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 9);
    std::string s(buf.data(), res.ptr);
    // Trim trailing zeros of the mantissa ("1.50000000" -> "1.5").
    const auto e = s.find('e');
    std::string mantissa = s.substr(0, e);
    const std::string exponent = e == std::string::npos ? "" : s.substr(e);
    if (mantissa.find('.') != std::string::npos) {
        while (!mantissa.empty() && mantissa.back() == '0') mantissa.pop_back();
        if (!mantissa.empty() && mantissa.back() == '.') mantissa.pop_back();
    }
    return mantissa + exponent;
}

namespace {

std::string time_text(double seconds) { return format_number(seconds * 1e9) + " ns"; }

} // namespace

std::string format_sim_config(const SimConfig& c)
{
    std::ostringstream os;
    os << "[source]\n"
       << "mode = " << (c.pump_mode == PumpMode::CW ? "cw" : "pulsed") << "\n"
       << "pair_rate = " << format_number(c.pair_rate) << " /s\n"
       << "mean_pairs_per_pulse = " << format_number(c.mean_pairs_per_pulse) << "\n"
       << "pulse_rate = " << format_number(c.pulse_rate) << " /s\n"
       << "\n[coupling]\n"
       << "gamma_s = " << format_number(c.gamma_s) << "\n"
       << "gamma_i = " << format_number(c.gamma_i) << "\n"
       << "gamma_c = " << format_number(c.gamma_c) << "\n"
       << "zeta = " << format_number(c.zeta) << "\n"
       << "delta_s = " << format_number(c.delta_s) << "\n"
       << "delta_i = " << format_number(c.delta_i) << "\n"
       << "\n[detectors]\n"
       << "eta_s = " << format_number(c.eta_s) << "\n"
       << "eta_i = " << format_number(c.eta_i) << "\n"
       << "dark_rate_s = " << format_number(c.dark_rate_s) << " /s\n"
       << "dark_rate_i = " << format_number(c.dark_rate_i) << " /s\n"
       << "dead_time_signal = " << time_text(c.dead_time_signal) << "\n"
       << "dead_time_generator = " << time_text(c.dead_time_generator) << "\n"
       << "holdoff_idler = " << time_text(c.holdoff_idler) << "\n"
       << "jitter = " << time_text(c.jitter) << "\n"
       << "\n[gate]\n"
       << "period = " << time_text(c.gate_period) << "\n"
       << "delay = " << time_text(c.gate_delay) << "\n"
       << "idler_delay = " << time_text(c.idler_delay) << "\n"
       << "rise_time = " << time_text(c.gate_rise_time) << "\n"
       << "mode = " << (c.gating == GatingMode::Heralded ? "heralded" : "random") << "\n"
       << "random_rate = " << format_number(c.random_gate_rate) << " /s\n"
       << "\n[run]\n"
       << "duration = " << format_number(c.duration) << " s\n"
       << "seed = " << c.seed << "\n"
       << "event_budget = " << format_number(c.event_budget) << "\n"
       << "threads = " << c.threads << "\n";
    return os.str();
}

void write_report(std::ostream& out, const Characterization& c, const MeasurementFile& input)
{
    const auto kv = [&](const std::string& key, double value) { out << key << " = " << format_number(value) << "\n"; };
    out << "# Heralded source characterization\n";
    if (!input.label.empty()) out << "# " << input.label << "\n";
    out << "# integration time " << format_number(input.integration_time) << " s\n";

    out << "\n[derived]\n";
    kv("R_p", c.rates.pair_rate);
    kv("R_s", c.rates.signal_fiber_rate);
    kv("R_i", c.rates.idler_fiber_rate);
    kv("R_c", c.rates.correlated_rate);
    kv("b", c.rates.accidental_mean);
    kv("b0", c.b0);
    kv("p_cor", c.rates.p_cor());

    out << "\n[coupling]\n";
    kv("gamma_s", c.coupling.signal_coupling);
    kv("gamma_i", c.coupling.idler_coupling);
    kv("gamma_c", c.coupling.pair_coupling);
    kv("mu_i_given_s", c.coupling.idler_given_signal);
    kv("mu_s_given_i", c.coupling.signal_given_idler);

    out << "\n[statistics]\n";
    kv("P0", c.p_zero);
    kv("mu_her", c.mu_her);
    kv("P_ge1", c.p_at_least_one);
    kv("P_ge2", c.p_at_least_two);
    kv("g2_zero", c.g2_zero);
    kv("g2_zero_small_b", c.g2_small_b);
    kv("g2_zero_couplings", c.g2_couplings);

    out << "\n[distribution]\n";
    for (int n = 0; n <= c.distribution.n_max(); ++n) kv("P" + std::to_string(n), c.distribution[n]);
    kv("residual_tail", c.distribution.residual_tail);

    if (!c.uncertainty.empty()) {
        out << "\n[uncertainty]\n";
        for (const auto& name : characterize_quantity_names()) {
            const auto it = c.uncertainty.find(name);
            if (it != c.uncertainty.end()) kv(name, it->second);
        }
    }

    out << "\n[warnings]\n";
    for (std::size_t i = 0; i < c.warnings.size(); ++i) out << "w" << i + 1 << " = " << c.warnings[i] << "\n";
}

void CsvWriter::comment(const std::string& text) { out_ << "# " << text << "\n"; }

namespace {

std::string csv_escape(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (const char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

} // namespace

void CsvWriter::header(const std::vector<std::string>& columns)
{
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << csv_escape(columns[i]);
    out_ << "\n";
}

void CsvWriter::row(const std::vector<CsvCell>& cells)
{
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ",";
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, double>) out_ << format_number(v);
                else if constexpr (std::is_same_v<T, std::int64_t>) out_ << v;
                else out_ << csv_escape(v);
            },
            cells[i]);
    }
    out_ << "\n";
}

std::vector<double> parse_grid(const std::string& text)
{
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw InputError("grid must be START:STOP:STEPS, got '" + text + "'");
    double start = 0, stop = 0, steps = 0;
    try {
        start = parse_number(parts[0], 0);
        stop = parse_number(parts[1], 0);
        steps = parse_number(parts[2], 0);
    } catch (const SchemaError&) {
        throw InputError("grid must be START:STOP:STEPS with numeric fields, got '" + text + "'");
    }
    if (steps < 0 || steps != std::floor(steps) || steps > 1e7) {
        throw InputError("grid STEPS must be a non-negative integer, got '" + parts[2] + "'");
    }
    const auto n = static_cast<std::size_t>(steps);
    std::vector<double> grid;
    grid.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        grid.push_back(n == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    if (n > 1) grid.back() = stop;
    return grid;
}

} // namespace hsps::io
