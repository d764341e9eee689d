#pragma once

// Scenario front end: config loading, the grid/report/mesh/manifest file
// formats, scenario construction, verification suites, and the three
// commands (generate, verify, roundtrip) behind the command-line tool.
//
// Exit-status contract: 0 success, 2 config/input error, 3 construction
// failure, 4 verification or precondition failure, 5 roundtrip deviation
// above tolerance.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <json.hpp>

#include "ribgeo/enneper.hpp"
#include "ribgeo/grid.hpp"
#include "ribgeo/partial_tube.hpp"
#include "ribgeo/verify.hpp"

namespace ribgeo::cli {

inline constexpr const char* kToolVersion = "1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitConstruction = 3;
inline constexpr int kExitVerify = 4;
inline constexpr int kExitRoundtrip = 5;

/// Invalid or inconsistent configuration / input files.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A scenario whose construction degenerates (e.g. every node irregular).
struct ConstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parsed scenario configuration. `doc` keeps the raw JSON tree so scenario
/// builders can read their own parameter blocks.
struct ScenarioConfig {
    std::string scenario;
    std::string path;         // source file, "" when built in memory
    std::string out_prefix;   // file-name stem for emitted artifacts
    double tolerance_c = 10.0;  // C in the C*h^2 tolerance model
    std::uint64_t seed = 1;
    std::shared_ptr<const nlohmann::json> doc;

    /// Resolution lookup with the >= 8 invariant enforced.
    int resolution(const std::string& axis, int fallback) const;
    /// Parameter block accessors; missing keys fall back to the default.
    double param_number(const std::string& key, double fallback) const;
    std::string param_string(const std::string& key, const std::string& fallback) const;
    std::vector<double> param_numbers(const std::string& key, std::vector<double> fallback) const;
    std::vector<std::string> param_strings(const std::string& key,
                                           std::vector<std::string> fallback) const;
    bool param_flag(const std::string& key, bool fallback) const;
};

ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(const std::string& json_text, const std::string& origin = "");

/// FNV-1a 64 hash of a byte string, as a fixed-width hex literal.
std::string content_hash(const std::string& bytes);

// ---- file formats -------------------------------------------------------

/// Text grid format: header (dims, axes, factor partition, ambient
/// dimension, signature), then one row-major line per node with 17
/// significant digits; masked nodes serialize as "nan" tokens.
void write_grid(const std::string& path, const ImmersedGrid& f);
ImmersedGrid read_grid(const std::string& path);

/// OBJ mesh of a 2-D grid in R^3: vertices in row-major grid order (masked
/// nodes skipped), quads split along the fixed (i,j)-(i+1,j+1) diagonal.
void write_obj(const std::string& path, const ImmersedGrid& f);

/// Report records: one "check <name> max <v> rms <v> tol <v> verdict <p>"
/// line per report plus a trailing "overall" line; byte-deterministic.
std::string format_report(const std::vector<InvariantReport>& reports);
void write_report(const std::string& path, const std::vector<InvariantReport>& reports);

struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string config_hash;
    std::vector<std::pair<std::string, double>> stages;  // name, milliseconds
    std::vector<std::string> files;
    std::vector<std::int64_t> masked_nodes;
};
void write_manifest(const std::string& path, const RunManifest& manifest);

// ---- scenarios ----------------------------------------------------------

/// One constructed scenario: the primary grid plus whatever side artifacts
/// the verification suites need.
struct BuiltScenario {
    std::string name;
    ImmersedGrid f;
    std::vector<std::pair<std::string, ImmersedGrid>> extras;
    std::optional<TubeEvaluation> tube;
    std::optional<GaussTube> gauss;
    std::optional<SupportData> support;
    std::optional<EnneperTriple> triple;
    std::optional<SampledMetric> metric;
    Eigen::MatrixXd normals;  // unit normal per node when the scenario has one
    int eps = 0;              // space-form sign for the conformal scenarios
};

/// Construct the scenario named by the config. Throws ConfigError on bad
/// parameters and ConstructionError when the geometry degenerates.
BuiltScenario build_scenario(const ScenarioConfig& config);

/// Run a verification suite ("cor-rpt", "enneper", "joachimsthal",
/// "gauss-map", "polar-metric", "conformal") against a built scenario.
/// tol_scale multiplies every tolerance.
std::vector<InvariantReport> run_suite(const BuiltScenario& scenario, const std::string& suite,
                                       double tol_scale = 1.0);

// ---- commands -----------------------------------------------------------

int run_generate(const std::string& config_path, const std::string& out_dir);
int run_verify(const std::string& input_path, const std::string& suite, const std::string& out_dir,
               double tol_scale = 1.0);
int run_roundtrip(const std::string& config_path, const std::string& out_dir,
                  double tol_scale = 1.0);

}  // namespace ribgeo::cli
