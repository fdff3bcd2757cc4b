#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tpl/analysis.hpp"
#include "tpl/calibration.hpp"
#include "tpl/cavity.hpp"
#include "tpl/integrator.hpp"

namespace tpl {

/// One `key = value` line of a configuration section.
struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

struct ConfigSection {
    std::string name;  // "model", "event", ...
    int line = 0;
    std::vector<ConfigEntry> entries;

    const ConfigEntry* find(const std::string& key) const;
    void set(const std::string& key, const std::string& value);
};

/// Sections in file order. `[[event]]` blocks appear as repeated
/// sections named "event".
struct ConfigDoc {
    std::vector<ConfigSection> sections;

    static ConfigDoc parse(const std::string& text);
    /// Dotted path: "model.field_G", "event.2.n_inj" (1-based event index).
    /// Throws InvalidInput if the section does not exist or the key is not
    /// valid for it.
    void set_path(const std::string& path, const std::string& value);
};

struct OutputSpec {
    std::vector<double> polarizer_deg{0.0};
    double settle_us = 5.0;   // analysis starts this long after the last pulse
    bool spectrum = false;
    bool lyapunov = false;

    bool operator==(const OutputSpec&) const = default;
};

struct Scenario {
    std::string name;
    ModelParams model;
    CavityGeometry geometry;
    CavityLoss loss;
    EventSchedule schedule;
    double t_end_us = 0.0;
    double sample_period_us = 0.01;
    LaserState initial;
    OutputSpec outputs;

    /// Start of the post-pulse analysis window.
    double analysis_start_us() const;
    bool operator==(const Scenario&) const = default;
};

/// Paper resonator, calibrated single-mode gain (n_on 2.2e6, unstable
/// root 2.75e5) with P = 20 /us, gamma = 5 /us, default pathways.
ModelParams paper_model();

Scenario parse_scenario(const std::string& text);
Scenario scenario_from_doc(const ConfigDoc& doc);
Scenario load_scenario(const std::string& path);
std::string serialize(const Scenario& s);
/// The `[model]` and `[pathways]` blocks alone.
std::string serialize_model(const ModelParams& p);

struct AnalysisRow {
    double polarizer_deg = 0.0;
    PeriodEstimate period;
    double modulation_depth = 0.0;
    double spectral_flatness = 0.0;
    DropTime drop;
    std::optional<LyapunovEstimate> lyapunov;
};

struct RunMetrics {
    double final_n_tot = 0.0;
    double final_inversion = 0.0;
    double window_start_us = 0.0;
    double mean_n_tot = 0.0;
    double rel_std_n_tot = 0.0;
    double mean_abs_ellipticity = 0.0;
    double output_power_w = 0.0;   // both mirrors, from the final photon number
    std::vector<AnalysisRow> rows;
};

struct RunResult {
    TimeSeries series;
    RunMetrics metrics;
    IntegrationStats stats;
};

RunMetrics analyze_series(const Scenario& s, const TimeSeries& ts);
RunResult run_scenario(const Scenario& s, const IntegratorOptions& opts = {});

/// Metric name/value pairs in a fixed order, for CSV output.
std::vector<std::pair<std::string, double>> metric_table(const RunMetrics& m);

struct ScanSpec {
    ConfigDoc base;
    std::string parameter;
    std::vector<std::string> values;
};

/// `scenario = file`, `parameter = path`, and either `values = a, b, c`
/// or `range = start, stop, count`. Relative scenario paths resolve
/// against base_dir.
ScanSpec parse_scan(const std::string& text, const std::string& base_dir = ".");

struct ScanRow {
    std::string value;
    bool ok = false;
    std::string error;
    double final_n_tot = 0.0;
    PeriodEstimate period;
    double modulation_depth = 0.0;
    double spectral_flatness = 0.0;
    DropTime drop;
};

/// Runs every point, up to `jobs` at a time. Rows follow the value order.
std::vector<ScanRow> run_scan(const ScanSpec& spec, int jobs = 1,
                              const IntegratorOptions& opts = {});

std::string scan_csv(const ScanSpec& spec, const std::vector<ScanRow>& rows);

}  // namespace tpl
