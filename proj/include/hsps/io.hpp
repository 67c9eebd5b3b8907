#pragma once

// Text formats: sectioned key-value files for measurements and simulator
// configuration, the characterization report, and CSV output.
//
// Key-value files look like
//
//     # comment
//     [measured]
//     r_s = 88e3 /s
//     [system]
//     gate_period = 10 ns
//
// Rates accept an optional unit (/s, 1/s, s^-1, Hz, kHz, MHz); times are in
// nanoseconds unless suffixed with ps, ns, us, ms or s.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <hsps/inference.hpp>
#include <hsps/sim.hpp>

namespace hsps::io {

struct KeyValueEntry
{
    std::string section;
    std::string key;
    std::string value;
    std::size_t line = 0;
};

class KeyValueDocument
{
public:
    /// Throws SchemaError for malformed lines, entries outside a section and
    /// duplicate keys.
    static KeyValueDocument parse(std::istream& in);
    static KeyValueDocument load(const std::string& path);

    const KeyValueEntry* find(const std::string& section, const std::string& key) const;
    /// Line of the section header, 0 when absent.
    std::size_t section_line(const std::string& section) const;
    const std::vector<KeyValueEntry>& entries() const { return entries_; }
    std::size_t last_line() const { return last_line_; }

private:
    std::vector<KeyValueEntry> entries_;
    std::vector<std::pair<std::string, std::size_t>> sections_;
    std::size_t last_line_ = 0;
};

/// Locale-independent strict number parsing; throws SchemaError.
double parse_number(const std::string& text, std::size_t line);
/// Rate in 1/s.
double parse_rate(const std::string& text, std::size_t line);
/// Time in seconds; a bare number is nanoseconds.
double parse_time(const std::string& text, std::size_t line);

struct MeasurementFile
{
    MeasuredRates measured;
    SystemParams system;
    /// Counting time behind each rate, seconds.
    double integration_time = 1.0;
    std::string label;
};

/// Throws SchemaError for missing or unknown keys and bad values, and
/// InputError when the values violate the measurement invariants.
MeasurementFile parse_measurement_file(const KeyValueDocument& doc);
MeasurementFile load_measurement_file(const std::string& path);

SimConfig parse_sim_config(const KeyValueDocument& doc);
SimConfig load_sim_config(const std::string& path);
/// Serializes every field in the format read by parse_sim_config.
std::string format_sim_config(const SimConfig& config);

/// 9 significant digits, shortest form, independent of the global locale.
std::string format_number(double x);

/// Characterization report as a sectioned key-value document.
void write_report(std::ostream& out, const Characterization& c, const MeasurementFile& input);

using CsvCell = std::variant<double, std::int64_t, std::string>;

class CsvWriter
{
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    /// Writes a '#'-prefixed metadata row.
    void comment(const std::string& text);
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<CsvCell>& cells);

private:
    std::ostream& out_;
};

/// START:STOP:STEPS, inclusive linear spacing; STEPS = 0 gives an empty grid.
std::vector<double> parse_grid(const std::string& text);

} // namespace hsps::io
