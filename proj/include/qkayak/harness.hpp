#ifndef QKAYAK_HARNESS_HPP
#define QKAYAK_HARNESS_HPP

// Configuration ingestion (TOML subset), experiment orchestration, and
// persistence: CSV tables, SVG plots, and a JSON run manifest per command.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qkayak/poincare.hpp"

namespace qkayak {

// ---- minimal TOML ----------------------------------------------------------
// Supports [sections], key = value with numbers, booleans, quoted strings and
// flat arrays of numbers, plus # comments. Enough for the run configs; no
// nested tables or dates.
using TomlValue = std::variant<double, bool, std::string, std::vector<double>>;
using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;
TomlTable parse_toml(const std::string& text);

// Direct spectral input for non-LdG studies (predict only).
struct SpectralOverride {
  double a, lambda, mu;
};

struct RunConfig {
  ModelSpec model;
  IntegratorConfig integrator;
  SectionSpec section;
  std::optional<SpectralOverride> direct;
  std::string canonical_text;  // config text plus overrides, hashed for the manifest
};

RunConfig default_config();
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_text(const std::string& text);

// CLI flag overrides; keys mirror the flag names (omega, beta, b, c, tau-ldg,
// m-c, m-l, m-q, v1..v7, rel-tol, abs-tol, phi0, epsilon).
void apply_override(RunConfig& cfg, const std::string& key, double value);

// ---- formatting ------------------------------------------------------------
// Shortest round-trip decimal representation (<= 17 significant digits).
std::string format_double(double x);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  ~CsvWriter();
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::string buf_;
  std::filesystem::path path_;
  std::size_t n_cols_;
  bool open_ = true;
};

std::string fnv1a_hex(const std::string& data);

struct RunManifest {
  std::string config_hash;
  std::string command;
  std::string timestamp;  // ISO-8601 UTC
  std::string tool_version;
  std::vector<std::string> outputs;
};
void write_manifest(const std::filesystem::path& path, const RunManifest& m);

// ---- SVG plots -------------------------------------------------------------
// Director trace on the unit sphere, equirectangular projection (phi, theta).
void write_director_svg(const std::filesystem::path& path,
                        const std::vector<std::pair<double, double>>& theta_phi);
// theta vs t panel
void write_series_svg(const std::filesystem::path& path,
                      const std::vector<std::pair<double, double>>& t_theta,
                      const std::string& y_label);

// ---- commands --------------------------------------------------------------
struct CommandContext {
  RunConfig cfg;
  std::filesystem::path out_dir = ".";
  std::string command_line;
};

struct SimulateOptions {
  double beta = -1.0;  // <0: keep config value
  double t_final = 0.0;
  double theta0 = M_PI / 4.0;
  double phi_start = 0.0;
  Vec3 u0 = Vec3::Zero();  // normal offset in the section frame
  int samples = 2001;
  bool svg = false;
};

struct VerifyOrderOptions {
  std::vector<double> betas = {0.0, 1e-3, 2e-3, 4e-3, 8e-3};
  std::vector<double> thetas = {M_PI / 3.0};
};

struct SweepOptions {
  std::string parameter = "omega";  // omega | tau_ldg | b | c | beta
  double from = 0.0, to = 0.0;
  int points = 50;
  // optional second axis turns the sweep into an (omega, tau) region grid
  std::optional<std::string> parameter2;
  double from2 = 0.0, to2 = 0.0;
  int points2 = 50;
  int threads = 0;  // 0 = hardware concurrency
};

struct FloquetOptions {
  std::string kind = "tumbling";  // tumbling | kayaking | point
  double theta_guess = M_PI / 2.0;
};

int cmd_predict(const CommandContext& ctx);
int cmd_simulate(const CommandContext& ctx, const SimulateOptions& opt);
int cmd_classify(const CommandContext& ctx, const SimulateOptions& opt);
int cmd_verify_order(const CommandContext& ctx, const VerifyOrderOptions& opt);
int cmd_sweep(const CommandContext& ctx, const SweepOptions& opt);
int cmd_floquet(const CommandContext& ctx, const FloquetOptions& opt);

// Fitted slope of log(y) against log(x) by least squares.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace qkayak

#endif
