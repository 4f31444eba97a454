#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcl/common.hpp"

namespace qcl {

// ---------------------------------------------------------------------------
// configuration
//
// Plain text, one `key = value` per line grouped in [sections]:
//
//   [experiment]  name, kind
//   [physics]     hbar (comma list), N, n, potential
//   [data]        x0, xi0, sx, sxi, nodes_per_axis, span
//   [grid]        x_min, x_max, n_x, n_xi
//   [time]        T, samples, dt
//   [run]         seed, instances, output
//   [tolerances]  free-form name = value overrides
//
// Numbers are written with 17 significant digits so a parsed config writes
// back to the same text. The hash is the SHA-256 of that canonical text.

struct ExperimentConfig {
    std::string name = "unnamed";
    // toeplitz, husimi, floor, sandwich, interval, vlasov, quantum, thv, tnsv, tsl, nccs
    std::string kind = "thv";

    std::vector<double> hbars{0.25};
    int N = 1;
    int n = 1;
    std::string potential = "cos";

    double x0 = 0, xi0 = 0, sx = 0.1, sxi = 0.1;
    int nodes_per_axis = 5;
    double span = 2.0;

    double x_min = -8, x_max = 8;
    int n_x = 128;
    int n_xi = 128;

    double T = 2.0;
    int samples = 21;
    double dt = 0.01;

    std::uint64_t seed = 1;
    int instances = 1;
    std::string output;  // run directory name below the output root; defaults to name

    std::map<std::string, double> tolerances;

    double tol(const std::string& key, double fallback) const;

    void validate() const;
    std::string to_text() const;
    static ExperimentConfig from_text(const std::string& text);
    static ExperimentConfig load(const std::string& path);
    void save(const std::string& path) const;
    std::string hash() const;  // hex SHA-256 of to_text()
    bool operator==(const ExperimentConfig&) const = default;
};

std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::string& path);

// ---------------------------------------------------------------------------
// experiments

struct Check {
    std::string name;
    double value = 0;
    double limit = 0;
    bool at_most = true;  // value <= limit, otherwise value >= limit
    bool pass() const { return at_most ? value <= limit : value >= limit; }
};

struct ExperimentOutcome {
    std::vector<Check> checks;
    std::vector<std::string> files;  // relative to the run directory
    std::string metric_name;
    double metric = 0;  // scalar used by sweeps
    std::vector<std::pair<std::string, double>> extras;
    bool gronwall_failed = false;

    bool pass() const;
};

// Runs the pipeline of cfg.kind and writes its files into dir. `stage` is
// updated as the pipeline advances so a failure can be attributed.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const std::string& dir, std::string& stage);

std::vector<std::string> experiment_kinds();

// ---------------------------------------------------------------------------
// runs

struct FileRecord {
    std::string path;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    std::string name;
    std::string kind;
    std::string tag;  // bound or module tag used to order reports
    std::string config_hash;
    std::map<std::string, std::string> versions;
    double wall_clock = 0;  // seconds
    std::string directory;
    std::vector<FileRecord> files;
    std::vector<Check> checks;
    std::vector<std::pair<std::string, double>> extras;
    std::string failure_stage;  // empty on success
    std::string error;
    std::string refinement;  // verdict of the automatic rerun, empty when none ran
    std::string metric_name;
    double metric = 0;
    bool pass = false;

    std::string to_json() const;
    static RunManifest from_json(const std::string& text);
    static RunManifest load(const std::string& path);
};

// QCLAB_OUTPUT_ROOT, or ./qclab-out
std::string output_root();

// Runs into <root>/<output or name>; a failed Gronwall check triggers one
// rerun with dt halved and n_x doubled whose verdict decides the run.
RunManifest run(const ExperimentConfig& cfg, const std::string& root = output_root());

std::string kind_tag(const std::string& kind);

// ---------------------------------------------------------------------------
// sweeps

struct SweepResult {
    std::string axis;
    std::vector<double> values;
    std::vector<double> metrics;
    std::vector<RunManifest> manifests;
    double loglog_slope = 0;
    double linear_slope = 0;
    bool monotone_decreasing = false;
    std::string csv;  // combined convergence file
};

// axis is hbar, dt or n_x; runs are independent and use at most `jobs` threads
SweepResult sweep(const ExperimentConfig& cfg, const std::string& axis, const std::vector<double>& values,
                  const std::string& root = output_root(), int jobs = 1);

// least-squares slope of y against x
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// reports

struct ReportDocument {
    std::string text;
    std::string csv;
    bool all_pass = false;
};

ReportDocument report(std::vector<RunManifest> manifests);
// every manifest.json below dir
std::vector<RunManifest> collect_manifests(const std::string& dir);

// ---------------------------------------------------------------------------
// presets

std::vector<ExperimentConfig> presets();
std::optional<ExperimentConfig> find_preset(const std::string& name);

}  // namespace qcl
