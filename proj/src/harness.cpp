#include "qkayak/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace qkayak {

// ---- TOML subset ------------------------------------------------------------

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

double parse_number(const std::string& tok, int lineno) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    throw ConfigError("config line " + std::to_string(lineno) +
                      ": cannot parse number '" + tok + "'");
  }
  return v;
}

TomlValue parse_value(const std::string& raw, int lineno) {
  const std::string v = strip(raw);
  if (v.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty value");
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') {
      throw ConfigError("config line " + std::to_string(lineno) + ": unterminated string");
    }
    return v.substr(1, v.size() - 2);
  }
  if (v.front() == '[') {
    if (v.back() != ']') {
      throw ConfigError("config line " + std::to_string(lineno) + ": unterminated array");
    }
    std::vector<double> arr;
    std::string body = v.substr(1, v.size() - 2);
    std::stringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = strip(tok);
      if (!tok.empty()) arr.push_back(parse_number(tok, lineno));
    }
    return arr;
  }
  return parse_number(v, lineno);
}

}  // namespace

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::string section;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = strip(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
      }
      section = strip(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
      }
      table[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = strip(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    table[section][key] = parse_value(line.substr(eq + 1), lineno);
  }
  return table;
}

// ---- config -----------------------------------------------------------------

namespace {

double get_num(const std::map<std::string, TomlValue>& sec, const std::string& key,
               double fallback) {
  const auto it = sec.find(key);
  if (it == sec.end()) return fallback;
  if (const double* d = std::get_if<double>(&it->second)) return *d;
  throw ConfigError("config: key '" + key + "' must be a number");
}

bool get_bool(const std::map<std::string, TomlValue>& sec, const std::string& key,
              bool fallback) {
  const auto it = sec.find(key);
  if (it == sec.end()) return fallback;
  if (const bool* b = std::get_if<bool>(&it->second)) return *b;
  throw ConfigError("config: key '" + key + "' must be a boolean");
}

std::string get_str(const std::map<std::string, TomlValue>& sec, const std::string& key,
                    const std::string& fallback) {
  const auto it = sec.find(key);
  if (it == sec.end()) return fallback;
  if (const std::string* s = std::get_if<std::string>(&it->second)) return *s;
  throw ConfigError("config: key '" + key + "' must be a string");
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  cfg.model.ldg = {1.0, 1.0, 1.0 / 30.0};
  cfg.model.omega = 0.05;
  cfg.model.beta = 5e-3;
  cfg.model.align = ThreeTermAlignment::beris_edwards();
  cfg.canonical_text = "<defaults>";
  return cfg;
}

RunConfig config_from_text(const std::string& text) {
  const TomlTable t = parse_toml(text);
  for (const auto& [name, sec] : t) {
    if (name != "model" && name != "alignment" && name != "integrator" &&
        name != "section") {
      throw ConfigError("config: unknown section [" + name + "]");
    }
    (void)sec;
  }
  RunConfig cfg = default_config();
  cfg.canonical_text = text;
  if (const auto it = t.find("model"); it != t.end()) {
    const auto& m = it->second;
    cfg.model.ldg.b = get_num(m, "b", cfg.model.ldg.b);
    cfg.model.ldg.c = get_num(m, "c", cfg.model.ldg.c);
    cfg.model.ldg.tau = get_num(m, "tau_ldg", cfg.model.ldg.tau);
    cfg.model.omega = get_num(m, "omega", cfg.model.omega);
    cfg.model.beta = get_num(m, "beta", cfg.model.beta);
    if (m.count("lambda") || m.count("mu")) {
      if (!m.count("lambda") || !m.count("mu") || !m.count("a")) {
        throw ConfigError("config: direct spectral input needs lambda, mu and a");
      }
      cfg.direct = SpectralOverride{get_num(m, "a", 0.0), get_num(m, "lambda", 0.0),
                                    get_num(m, "mu", 0.0)};
    }
  }
  if (const auto it = t.find("alignment"); it != t.end()) {
    const auto& al = it->second;
    const std::string family = get_str(al, "family", "beris-edwards");
    if (family == "beris-edwards") {
      cfg.model.align = ThreeTermAlignment::beris_edwards();
    } else if (family == "olmsted-goldbart") {
      cfg.model.align = ThreeTermAlignment::olmsted_goldbart();
    } else if (family == "three-term") {
      cfg.model.align = ThreeTermAlignment{get_num(al, "m_c", 0.0),
                                           get_num(al, "m_l", 0.0),
                                           get_num(al, "m_q", 0.0)};
    } else if (family == "seven-term") {
      SevenTermAlignment s;
      for (int i = 0; i < 7; ++i) {
        s.v[i] = get_num(al, "v" + std::to_string(i + 1), 0.0);
      }
      cfg.model.align = s;
    } else {
      throw ConfigError("config: unknown alignment family '" + family + "'");
    }
  }
  if (const auto it = t.find("integrator"); it != t.end()) {
    const auto& in = it->second;
    cfg.integrator.rel_tol = get_num(in, "rel_tol", cfg.integrator.rel_tol);
    cfg.integrator.abs_tol = get_num(in, "abs_tol", cfg.integrator.abs_tol);
    cfg.integrator.max_step = get_num(in, "max_step", cfg.integrator.max_step);
    cfg.integrator.dense_output = get_bool(in, "dense_output", true);
    if (!(cfg.integrator.rel_tol > 0.0) || !(cfg.integrator.abs_tol > 0.0)) {
      throw ConfigError("config: integrator tolerances must be positive");
    }
  }
  if (const auto it = t.find("section"); it != t.end()) {
    const auto& se = it->second;
    cfg.section.phi0 = get_num(se, "phi0", cfg.section.phi0);
    cfg.section.epsilon = get_num(se, "epsilon", cfg.section.epsilon);
    if (!(cfg.section.epsilon > 0.0)) {
      throw ConfigError("config: section epsilon must be positive");
    }
  }
  if (!(cfg.model.omega > 0.0)) throw ConfigError("config: omega must be positive");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& key, double value) {
  const auto need_three_term = [&]() -> ThreeTermAlignment& {
    if (!std::holds_alternative<ThreeTermAlignment>(cfg.model.align)) {
      throw ConfigError("override --" + key +
                        " conflicts with the seven-term alignment family");
    }
    return std::get<ThreeTermAlignment>(cfg.model.align);
  };
  const auto need_seven_term = [&]() -> SevenTermAlignment& {
    if (!std::holds_alternative<SevenTermAlignment>(cfg.model.align)) {
      cfg.model.align = SevenTermAlignment{};
    }
    return std::get<SevenTermAlignment>(cfg.model.align);
  };
  if (key == "omega") {
    cfg.model.omega = value;
  } else if (key == "beta") {
    cfg.model.beta = value;
  } else if (key == "b") {
    cfg.model.ldg.b = value;
  } else if (key == "c") {
    cfg.model.ldg.c = value;
  } else if (key == "tau-ldg") {
    cfg.model.ldg.tau = value;
  } else if (key == "m-c") {
    need_three_term().m_c = value;
  } else if (key == "m-l") {
    need_three_term().m_l = value;
  } else if (key == "m-q") {
    need_three_term().m_q = value;
  } else if (key.size() == 2 && key[0] == 'v' && key[1] >= '1' && key[1] <= '7') {
    need_seven_term().v[key[1] - '1'] = value;
  } else if (key == "rel-tol") {
    cfg.integrator.rel_tol = value;
  } else if (key == "abs-tol") {
    cfg.integrator.abs_tol = value;
  } else if (key == "phi0") {
    cfg.section.phi0 = value;
  } else if (key == "epsilon") {
    cfg.section.epsilon = value;
  } else {
    throw ConfigError("unknown override key '" + key + "'");
  }
  cfg.canonical_text += "\n--" + key + "=" + format_double(value);
}

// ---- formatting -------------------------------------------------------------

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& header)
    : path_(path), n_cols_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += header[i];
  }
  buf_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != n_cols_) {
    throw NumericalError("CsvWriter: row width does not match header");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += cells[i];
  }
  buf_ += '\n';
}

void CsvWriter::close() {
  if (!open_) return;
  std::ofstream out(path_, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path_.string() + "'");
  out << buf_;
  open_ = false;
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
  }
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  nlohmann::json j;
  j["config_hash"] = m.config_hash;
  j["command"] = m.command;
  j["timestamp"] = m.timestamp;
  j["tool_version"] = m.tool_version;
  j["outputs"] = m.outputs;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

namespace {

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest make_manifest(const CommandContext& ctx,
                          const std::vector<std::string>& outputs) {
  return {fnv1a_hex(ctx.cfg.canonical_text), ctx.command_line, iso_timestamp(),
          kToolVersion, outputs};
}

std::string fmt(double x) { return format_double(x); }
std::string fmt(bool b) { return b ? "1" : "0"; }

}  // namespace

// ---- SVG --------------------------------------------------------------------

namespace {

void write_svg_polyline(std::string& svg,
                        const std::vector<std::pair<double, double>>& pts) {
  svg += "  <polyline fill=\"none\" stroke=\"#1f6feb\" stroke-width=\"1\" points=\"";
  for (const auto& [x, y] : pts) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x, y);
    svg += buf;
  }
  svg += "\"/>\n";
}

}  // namespace

void write_director_svg(const std::filesystem::path& path,
                        const std::vector<std::pair<double, double>>& theta_phi) {
  const double w = 720, h = 360, margin = 40;
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(int(w + 2 * margin)) + "\" height=\"" +
         std::to_string(int(h + 2 * margin)) + "\">\n";
  svg += "  <rect x=\"40\" y=\"40\" width=\"720\" height=\"360\" fill=\"white\" "
         "stroke=\"#444\"/>\n";
  // equator line (theta = pi/2)
  svg += "  <line x1=\"40\" y1=\"220\" x2=\"760\" y2=\"220\" stroke=\"#bbb\" "
         "stroke-dasharray=\"4 4\"/>\n";
  std::vector<std::pair<double, double>> seg;
  double last_phi = -1.0;
  for (const auto& [theta, phi] : theta_phi) {
    const double x = margin + w * phi / (2.0 * M_PI);
    const double y = margin + h * theta / M_PI;
    if (!seg.empty() && std::abs(phi - last_phi) > M_PI) {  // wrap in phi
      write_svg_polyline(svg, seg);
      seg.clear();
    }
    seg.push_back({x, y});
    last_phi = phi;
  }
  if (!seg.empty()) write_svg_polyline(svg, seg);
  svg += "  <text x=\"400\" y=\"430\" text-anchor=\"middle\" font-size=\"13\">"
         "director azimuth phi (0 .. 2pi)</text>\n";
  svg += "  <text x=\"16\" y=\"220\" transform=\"rotate(-90 16 220)\" "
         "text-anchor=\"middle\" font-size=\"13\">polar angle theta (0 .. pi)</text>\n";
  svg += "</svg>\n";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << svg;
}

void write_series_svg(const std::filesystem::path& path,
                      const std::vector<std::pair<double, double>>& t_series,
                      const std::string& y_label) {
  if (t_series.empty()) return;
  const double w = 720, h = 280, margin = 40;
  double t_min = t_series.front().first, t_max = t_series.back().first;
  double y_min = 1e300, y_max = -1e300;
  for (const auto& [t, y] : t_series) {
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  }
  if (y_max - y_min < 1e-12) {
    y_max += 1.0;
    y_min -= 1.0;
  }
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(int(w + 2 * margin)) + "\" height=\"" +
         std::to_string(int(h + 2 * margin)) + "\">\n";
  svg += "  <rect x=\"40\" y=\"40\" width=\"720\" height=\"280\" fill=\"white\" "
         "stroke=\"#444\"/>\n";
  std::vector<std::pair<double, double>> seg;
  for (const auto& [t, y] : t_series) {
    const double x = margin + w * (t - t_min) / (t_max - t_min);
    const double yy = margin + h * (1.0 - (y - y_min) / (y_max - y_min));
    seg.push_back({x, yy});
  }
  write_svg_polyline(svg, seg);
  svg += "  <text x=\"400\" y=\"350\" text-anchor=\"middle\" font-size=\"13\">t</text>\n";
  svg += "  <text x=\"16\" y=\"180\" transform=\"rotate(-90 16 180)\" "
         "text-anchor=\"middle\" font-size=\"13\">" + y_label + "</text>\n";
  svg += "</svg>\n";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << svg;
}

// ---- commands ---------------------------------------------------------------

namespace {

SpectralData spectral_of(const RunConfig& cfg) {
  if (cfg.direct) {
    return spectral_quantities(cfg.direct->lambda, cfg.direct->mu, cfg.model.omega,
                               cfg.direct->a);
  }
  const Equilibrium eq = ldg_equilibrium(cfg.model.ldg);
  return spectral_quantities(eq.lambda, eq.mu, cfg.model.omega, eq.a);
}

std::string region_verdict_str(RegionVerdict v) {
  switch (v) {
    case RegionVerdict::yes:
      return "1";
    case RegionVerdict::no:
      return "0";
    default:
      return "no_equilibrium";
  }
}

}  // namespace

int cmd_predict(const CommandContext& ctx) {
  const SpectralData sp = spectral_of(ctx.cfg);
  const BifCoefficients bc = lambda_coeffs(ctx.cfg.model.align, sp.a);
  const KayakPrediction pred = kayak_exists(sp, bc);
  const std::vector<BifZero> zeros = find_zeros(bc, sp);
  // the Prop-7.14 cross-check applies to the Landau-de Gennes route only
  RegionReport region;
  if (!ctx.cfg.direct) {
    region = ldg_region_check(ctx.cfg.model.ldg.b, ctx.cfg.model.ldg.c,
                              ctx.cfg.model.omega);
  }

  std::filesystem::create_directories(ctx.out_dir);
  {
    CsvWriter csv(ctx.out_dir / "predict.csv",
                  {"b", "c", "tau_ldg", "omega_per_time", "beta", "a", "lambda",
                   "mu", "tau_lambda", "tau_mu", "rho", "Lambda0", "Lambda2",
                   "k_value", "kayak_exists", "kayak_stable", "kayak_marginal",
                   "theta_kayak_rad", "region_b_lt_4c", "region_omega_admitted",
                   "region_tau_lo", "region_tau_hi", "region_disagreements",
                   "physical_a_lt_1_3"});
    csv.row({fmt(ctx.cfg.model.ldg.b), fmt(ctx.cfg.model.ldg.c),
             fmt(ctx.cfg.model.ldg.tau), fmt(ctx.cfg.model.omega),
             fmt(ctx.cfg.model.beta), fmt(sp.a), fmt(sp.lambda), fmt(sp.mu),
             fmt(sp.tau_lambda), fmt(sp.tau_mu), fmt(sp.rho()), fmt(bc.lambda0),
             fmt(bc.lambda2), fmt((sp.lambda - sp.mu) *
                                  (4.0 * sp.omega * sp.omega - sp.lambda * sp.mu)),
             fmt(pred.exists), fmt(pred.stable), fmt(pred.marginal),
             fmt(std::min(pred.theta, M_PI - pred.theta)), fmt(region.b_lt_4c),
             fmt(region.omega_admitted), fmt(region.tau_lo), fmt(region.tau_hi),
             format_double(double(region.disagreements)), fmt(sp.a < 1.0 / 3.0)});
    csv.close();
  }
  {
    CsvWriter csv(ctx.out_dir / "predict_zeros.csv",
                  {"theta_rad", "df2_dtheta", "stable", "label"});
    for (const BifZero& z : zeros) {
      csv.row({fmt(z.theta), fmt(z.slope), fmt(z.stable), z.label});
    }
    csv.close();
  }
  {
    CsvWriter csv(ctx.out_dir / "predict_region.csv",
                  {"tau_ldg", "paper_criterion", "direct_criterion", "disagree"});
    for (const auto& row : region.rows) {
      csv.row({fmt(row.tau), region_verdict_str(row.paper),
               region_verdict_str(row.direct), fmt(row.disagree)});
    }
    csv.close();
  }
  write_manifest(ctx.out_dir / "predict_manifest.json",
                 make_manifest(ctx, {"predict.csv", "predict_zeros.csv",
                                     "predict_region.csv"}));
  return 0;
}

int cmd_simulate(const CommandContext& ctx, const SimulateOptions& opt) {
  RunConfig cfg = ctx.cfg;
  if (opt.beta >= 0.0) cfg.model.beta = opt.beta;
  const Equilibrium eq = ldg_equilibrium(cfg.model.ldg);
  const double t0_period = 2.0 * M_PI / cfg.model.omega;
  const double t_final = opt.t_final > 0.0 ? opt.t_final : 10.0 * t0_period;

  const SectionChart start{opt.theta0, opt.u0};
  QTensor q0 = section_point(start, opt.phi_start, eq.a);

  const RhsFn rhs = make_rhs_lab(cfg.model);
  DenseOutput<5> dense;
  IntegratorConfig ic = cfg.integrator;
  ic.dense_output = true;
  integrate(rhs, q0, 0.0, t_final, ic, &dense);

  std::filesystem::create_directories(ctx.out_dir);
  std::vector<std::pair<double, double>> trace, theta_series;
  {
    CsvWriter csv(ctx.out_dir / "simulate_trajectory.csv",
                  {"t", "c0", "c11", "c12", "c21", "c22", "q11", "q12", "q13",
                   "q22", "q23", "theta_rad", "phi_rad", "dist_orbit"});
    for (int i = 0; i < opt.samples; ++i) {
      const double t = t_final * i / double(opt.samples - 1);
      const QTensor q(dense.eval(std::min(t, dense.t_end())));
      const Mat3 m = q.matrix();
      double theta = std::numeric_limits<double>::quiet_NaN();
      double phi = std::numeric_limits<double>::quiet_NaN();
      double dist = std::numeric_limits<double>::quiet_NaN();
      try {
        const OrbitCoordinates oc = nearest_orbit_coordinates(q);
        theta = oc.point.theta;
        phi = oc.point.phi;
        dist = (q - orbit_point(oc.point, eq.a)).norm();
        trace.push_back({theta, phi});
        theta_series.push_back({t, theta});
      } catch (const NumericalError&) {
      }
      csv.row({fmt(t), fmt(q.coords()[0]), fmt(q.coords()[1]), fmt(q.coords()[2]),
               fmt(q.coords()[3]), fmt(q.coords()[4]), fmt(m(0, 0)), fmt(m(0, 1)),
               fmt(m(0, 2)), fmt(m(1, 1)), fmt(m(1, 2)), fmt(theta), fmt(phi),
               fmt(dist)});
    }
    csv.close();
  }

  // classification of the settled tail
  const OrbitReport rep = classify_trajectory(q0, 0.6 * t_final, cfg.model,
                                              cfg.section, cfg.integrator);
  {
    CsvWriter csv(ctx.out_dir / "simulate_report.csv",
                  {"kind", "period", "mean_polar_angle_rad", "out_of_plane_max",
                   "winding_half_turns", "stable", "marginal", "n_multipliers",
                   "note"});
    csv.row({orbit_kind_name(rep.kind), fmt(rep.period), fmt(rep.mean_polar_angle),
             fmt(rep.out_of_plane_max), std::to_string(rep.winding),
             fmt(rep.stable), fmt(rep.marginal),
             std::to_string(rep.floquet.size()), rep.note});
    csv.close();
  }

  std::vector<std::string> outputs = {"simulate_trajectory.csv",
                                      "simulate_report.csv"};
  if (opt.svg) {
    write_director_svg(ctx.out_dir / "simulate_director.svg", trace);
    write_series_svg(ctx.out_dir / "simulate_theta.svg", theta_series,
                     "polar angle theta");
    outputs.push_back("simulate_director.svg");
    outputs.push_back("simulate_theta.svg");
  }
  write_manifest(ctx.out_dir / "simulate_manifest.json", make_manifest(ctx, outputs));
  return 0;
}

int cmd_classify(const CommandContext& ctx, const SimulateOptions& opt) {
  RunConfig cfg = ctx.cfg;
  if (opt.beta >= 0.0) cfg.model.beta = opt.beta;
  const Equilibrium eq = ldg_equilibrium(cfg.model.ldg);
  const double t0_period = 2.0 * M_PI / cfg.model.omega;
  const double settle = opt.t_final > 0.0 ? opt.t_final : 20.0 * t0_period;
  const QTensor q0 = section_point({opt.theta0, opt.u0}, opt.phi_start, eq.a);
  const OrbitReport rep =
      classify_trajectory(q0, settle, cfg.model, cfg.section, cfg.integrator);

  std::filesystem::create_directories(ctx.out_dir);
  CsvWriter csv(ctx.out_dir / "classify_report.csv",
                {"kind", "period", "mean_polar_angle_rad", "out_of_plane_max",
                 "winding_half_turns", "stable", "marginal", "multiplier_abs_max",
                 "note"});
  double mmax = 0.0;
  for (const auto& m : rep.floquet) mmax = std::max(mmax, std::abs(m));
  csv.row({orbit_kind_name(rep.kind), fmt(rep.period), fmt(rep.mean_polar_angle),
           fmt(rep.out_of_plane_max), std::to_string(rep.winding), fmt(rep.stable),
           fmt(rep.marginal), fmt(mmax), rep.note});
  csv.close();
  write_manifest(ctx.out_dir / "classify_manifest.json",
                 make_manifest(ctx, {"classify_report.csv"}));
  return 0;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int cmd_verify_order(const CommandContext& ctx, const VerifyOrderOptions& opt) {
  const Equilibrium eq = ldg_equilibrium(ctx.cfg.model.ldg);
  std::filesystem::create_directories(ctx.out_dir);
  CsvWriter csv(ctx.out_dir / "verify_order.csv",
                {"theta_rad", "beta", "disp_e11", "disp_e12", "disp_normal",
                 "return_time"});
  CsvWriter slopes(ctx.out_dir / "verify_order_slopes.csv",
                   {"theta_rad", "slope_e11", "slope_normal"});
  for (const double theta : opt.thetas) {
    const FrameBasis f =
        frame_basis(SphericalPoint{theta, ctx.cfg.section.phi0}, eq.a);
    std::vector<double> betas_pos, e11_pos, nrm_pos;
    for (const double beta : opt.betas) {
      ModelSpec m = ctx.cfg.model;
      m.beta = beta;
      const ReturnResult r =
          return_map(f.Z, m, ctx.cfg.section, ctx.cfg.integrator);
      const QTensor d = r.Q - f.Z;
      const double e11 = std::abs(inner(d, f.e[1]));
      const double e12 = std::abs(inner(d, f.e[2]));
      const double nrm = std::sqrt(inner(d, f.e[0]) * inner(d, f.e[0]) +
                                   inner(d, f.e[3]) * inner(d, f.e[3]) +
                                   inner(d, f.e[4]) * inner(d, f.e[4]));
      csv.row({fmt(theta), fmt(beta), fmt(e11), fmt(e12), fmt(nrm), fmt(r.T)});
      if (beta > 0.0) {
        betas_pos.push_back(beta);
        e11_pos.push_back(e11);
        nrm_pos.push_back(nrm);
      }
    }
    slopes.row({fmt(theta), fmt(loglog_slope(betas_pos, e11_pos)),
                fmt(loglog_slope(betas_pos, nrm_pos))});
  }
  csv.close();
  slopes.close();
  write_manifest(ctx.out_dir / "verify_order_manifest.json",
                 make_manifest(ctx, {"verify_order.csv", "verify_order_slopes.csv"}));
  return 0;
}

namespace {

void set_sweep_parameter(RunConfig& cfg, const std::string& name, double value) {
  if (name == "omega") {
    cfg.model.omega = value;
  } else if (name == "tau_ldg") {
    cfg.model.ldg.tau = value;
  } else if (name == "b") {
    cfg.model.ldg.b = value;
  } else if (name == "c") {
    cfg.model.ldg.c = value;
  } else if (name == "beta") {
    cfg.model.beta = value;
  } else {
    throw ConfigError("sweep: parameter must be one of omega, tau_ldg, b, c, beta");
  }
}

template <class Fn>
void parallel_grid(int n, int threads, Fn&& fn) {
  const int nt = threads > 0 ? threads
                             : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int k = 0; k < nt; ++k) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

int cmd_sweep(const CommandContext& ctx, const SweepOptions& opt) {
  std::filesystem::create_directories(ctx.out_dir);
  if (opt.parameter2) {
    // two-parameter region grid with both verdict layers and a disagreement mask
    if (!((opt.parameter == "omega" && *opt.parameter2 == "tau_ldg") ||
          (opt.parameter == "tau_ldg" && *opt.parameter2 == "omega"))) {
      throw ConfigError("sweep: two-parameter grids support omega x tau_ldg");
    }
    const bool omega_first = opt.parameter == "omega";
    const int n1 = opt.points, n2 = opt.points2;
    struct Cell {
      double p1, p2;
      RegionVerdict paper, direct;
    };
    std::vector<Cell> cells(std::size_t(n1) * n2);
    const double b = ctx.cfg.model.ldg.b, c = ctx.cfg.model.ldg.c;
    parallel_grid(n1 * n2, opt.threads, [&](int i) {
      const int i1 = i / n2, i2 = i % n2;
      const double p1 =
          n1 > 1 ? opt.from + (opt.to - opt.from) * i1 / double(n1 - 1) : opt.from;
      const double p2 = n2 > 1
                            ? opt.from2 + (opt.to2 - opt.from2) * i2 / double(n2 - 1)
                            : opt.from2;
      const double omega = omega_first ? p1 : p2;
      const double tau = omega_first ? p2 : p1;
      cells[i] = {p1, p2, ldg_paper_criterion(b, c, tau, omega),
                  ldg_direct_criterion(b, c, tau, omega)};
    });
    CsvWriter csv(ctx.out_dir / "sweep_region.csv",
                  {opt.parameter, *opt.parameter2, "paper_criterion",
                   "direct_criterion", "disagree"});
    for (const Cell& cell : cells) {
      csv.row({fmt(cell.p1), fmt(cell.p2), region_verdict_str(cell.paper),
               region_verdict_str(cell.direct),
               fmt(cell.paper != cell.direct)});
    }
    csv.close();
    write_manifest(ctx.out_dir / "sweep_manifest.json",
                   make_manifest(ctx, {"sweep_region.csv"}));
    return 0;
  }

  struct Point {
    double value = 0.0;
    bool ok = false;
    std::string error;
    double a = 0, lambda = 0, mu = 0, rho = 0, lambda0 = 0, lambda2 = 0;
    bool exists = false, stable = false;
    double theta = 0;
    RegionVerdict paper = RegionVerdict::no;
  };
  std::vector<Point> pts(opt.points);
  parallel_grid(opt.points, opt.threads, [&](int i) {
    Point& p = pts[i];
    p.value = opt.points > 1
                  ? opt.from + (opt.to - opt.from) * i / double(opt.points - 1)
                  : opt.from;
    try {
      RunConfig cfg = ctx.cfg;
      set_sweep_parameter(cfg, opt.parameter, p.value);
      const SpectralData sp = spectral_of(cfg);
      const BifCoefficients bc = lambda_coeffs(cfg.model.align, sp.a);
      const KayakPrediction pred = kayak_exists(sp, bc);
      p.a = sp.a;
      p.lambda = sp.lambda;
      p.mu = sp.mu;
      p.rho = sp.rho();
      p.lambda0 = bc.lambda0;
      p.lambda2 = bc.lambda2;
      p.exists = pred.exists;
      p.stable = pred.stable;
      p.theta = std::min(pred.theta, M_PI - pred.theta);
      p.paper = ldg_paper_criterion(cfg.model.ldg.b, cfg.model.ldg.c,
                                    cfg.model.ldg.tau, cfg.model.omega);
      p.ok = true;
    } catch (const std::exception& e) {
      p.error = e.what();
    }
  });
  CsvWriter csv(ctx.out_dir / "sweep.csv",
                {opt.parameter, "ok", "a", "lambda", "mu", "rho", "Lambda0",
                 "Lambda2", "kayak_exists", "kayak_stable", "theta_kayak_rad",
                 "paper_criterion", "error"});
  for (const Point& p : pts) {
    std::string err = p.error;
    std::replace(err.begin(), err.end(), ',', ';');
    csv.row({fmt(p.value), fmt(p.ok), fmt(p.a), fmt(p.lambda), fmt(p.mu),
             fmt(p.rho), fmt(p.lambda0), fmt(p.lambda2), fmt(p.exists),
             fmt(p.stable), fmt(p.theta), region_verdict_str(p.paper), err});
  }
  csv.close();
  write_manifest(ctx.out_dir / "sweep_manifest.json",
                 make_manifest(ctx, {"sweep.csv"}));
  return 0;
}

int cmd_floquet(const CommandContext& ctx, const FloquetOptions& opt) {
  const RunConfig& cfg = ctx.cfg;
  const Equilibrium eq = ldg_equilibrium(cfg.model.ldg);

  double theta_guess = opt.theta_guess;
  if (opt.kind == "tumbling") {
    theta_guess = M_PI / 2.0;
  } else if (opt.kind == "kayaking") {
    const SpectralData sp = spectral_of(cfg);
    const BifCoefficients bc = lambda_coeffs(cfg.model.align, sp.a);
    const KayakPrediction pred = kayak_exists(sp, bc);
    if (!pred.exists) {
      throw DegenerateModelError(
          "floquet: no kayaking orbit predicted for this configuration");
    }
    theta_guess = pred.theta;
  } else if (opt.kind != "point") {
    throw ConfigError("floquet: kind must be tumbling, kayaking or point");
  }

  const QTensor guess = orbit_point(
      SphericalPoint{theta_guess, cfg.section.phi0}, eq.a);
  const QTensor qp = fixed_point(guess, cfg.model, cfg.section, cfg.integrator);
  const FloquetResult fl = floquet(qp, cfg.model, cfg.section, cfg.integrator);
  const OrbitReport rep = classify_periodic(qp, cfg.model, cfg.section,
                                            cfg.integrator);

  std::filesystem::create_directories(ctx.out_dir);
  {
    CsvWriter csv(ctx.out_dir / "floquet.csv",
                  {"index", "re", "im", "abs", "is_trivial"});
    for (std::size_t i = 0; i < fl.multipliers.size(); ++i) {
      csv.row({std::to_string(i), fmt(fl.multipliers[i].real()),
               fmt(fl.multipliers[i].imag()), fmt(std::abs(fl.multipliers[i])),
               fmt(int(i) == fl.trivial_index)});
    }
    csv.close();
  }
  {
    CsvWriter csv(ctx.out_dir / "floquet_report.csv",
                  {"kind", "period", "mean_polar_angle_rad", "stable", "marginal"});
    csv.row({orbit_kind_name(rep.kind), fmt(fl.period), fmt(rep.mean_polar_angle),
             fmt(fl.stable), fmt(fl.marginal)});
    csv.close();
  }
  write_manifest(ctx.out_dir / "floquet_manifest.json",
                 make_manifest(ctx, {"floquet.csv", "floquet_report.csv"}));
  return 0;
}

}  // namespace qkayak
