#include "csi/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include <json.hpp>

namespace csi {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return is;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  return os;
}

json parse_json(std::istream& is, const char* what) {
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    // e.what() carries "at line L, column C".
    throw std::invalid_argument(std::string(what) + ": " + e.what());
  }
}

// JSON has no infinity; +inf SNR is stored as the string "inf".
json snr_to_json(double snr) {
  if (std::isinf(snr) && snr > 0) return "inf";
  return snr;
}

double snr_from_json(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("snr_db: unrecognized value '" + s + "'");
  }
  return j.get<double>();
}

json points_to_json(const std::vector<Point2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.x, p.y});
  return a;
}

std::vector<Point2> points_from_json(const json& a) {
  std::vector<Point2> pts;
  for (const auto& p : a) {
    if (!p.is_array() || p.size() != 2) throw std::invalid_argument("antenna positions must be [x, y] pairs");
    pts.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return pts;
}

json phantom_to_json(const PhantomSpec& s) {
  json rings = json::array(), cylinders = json::array();
  for (const auto& r : s.rings) {
    rings.push_back({{"center", {r.center.x, r.center.y}},
                     {"inner_radius", r.inner_radius},
                     {"outer_radius", r.outer_radius},
                     {"eps_r", r.eps_r}});
  }
  for (const auto& c : s.cylinders) {
    cylinders.push_back({{"center", {c.center.x, c.center.y}}, {"radius", c.radius}, {"eps_r", c.eps_r}});
  }
  return {{"kind", to_string(s.kind)}, {"conductivity", s.conductivity}, {"rings", rings}, {"cylinders", cylinders}};
}

PhantomSpec phantom_from_json(const json& j, double frequency) {
  PhantomSpec s;
  s.kind = phantom_kind_from_string(j.at("kind").get<std::string>());
  s.conductivity = j.value("conductivity", 0.0);
  s.frequency = frequency;
  for (const auto& r : j.at("rings")) {
    const auto c = r.at("center");
    s.rings.push_back({{c.at(0).get<double>(), c.at(1).get<double>()},
                       r.at("inner_radius").get<double>(),
                       r.at("outer_radius").get<double>(),
                       r.at("eps_r").get<double>()});
  }
  for (const auto& cy : j.at("cylinders")) {
    const auto c = cy.at("center");
    s.cylinders.push_back({{c.at(0).get<double>(), c.at(1).get<double>()},
                           cy.at("radius").get<double>(),
                           cy.at("eps_r").get<double>()});
  }
  return s;
}

std::string rule_name(PreconditionerRule r) {
  return r == PreconditionerRule::gradient_balance ? "gradient_balance" : "column_balance";
}

PreconditionerRule rule_from_name(const std::string& s) {
  if (s == "gradient_balance") return PreconditionerRule::gradient_balance;
  if (s == "column_balance") return PreconditionerRule::column_balance;
  throw std::invalid_argument("unknown preconditioner rule: " + s);
}

json solver_to_json(const SolverParams& p) {
  return {{"alpha", p.alpha},
          {"psi", p.psi},
          {"delta", p.delta},
          {"mu", p.mu},
          {"rho", p.rho},
          {"lambda0", p.lambda0},
          {"gamma0", p.gamma0},
          {"max_iterations", p.max_iterations},
          {"time_budget_s", p.time_budget_s},
          {"fixed_point_tolerance", p.fixed_point_tolerance},
          {"fixed_point_cap", p.fixed_point_cap},
          {"backtrack_cap", p.backtrack_cap},
          {"stagnation_window", p.stagnation_window},
          {"stagnation_tolerance", p.stagnation_tolerance},
          {"condition_scale", p.condition_scale},
          {"shrink_first_trial", p.shrink_first_trial},
          {"preconditioner", rule_name(p.preconditioner)},
          {"precondition", p.precondition},
          {"nlw_threshold", p.nlw_threshold},
          {"divergence_factor", p.divergence_factor}};
}

// Fields missing from the file keep the values already in `p`.
void solver_from_json(const json& j, SolverParams& p) {
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("alpha", p.alpha);
  get("psi", p.psi);
  get("delta", p.delta);
  get("mu", p.mu);
  get("rho", p.rho);
  get("lambda0", p.lambda0);
  get("gamma0", p.gamma0);
  get("max_iterations", p.max_iterations);
  get("time_budget_s", p.time_budget_s);
  get("fixed_point_tolerance", p.fixed_point_tolerance);
  get("fixed_point_cap", p.fixed_point_cap);
  get("backtrack_cap", p.backtrack_cap);
  get("stagnation_window", p.stagnation_window);
  get("stagnation_tolerance", p.stagnation_tolerance);
  get("condition_scale", p.condition_scale);
  get("shrink_first_trial", p.shrink_first_trial);
  get("precondition", p.precondition);
  get("nlw_threshold", p.nlw_threshold);
  get("divergence_factor", p.divergence_factor);
  if (j.contains("preconditioner")) p.preconditioner = rule_from_name(j.at("preconditioner").get<std::string>());
}

}  // namespace

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "apasd") return Algorithm::apasd;
  if (name == "nlw") return Algorithm::nlw;
  throw std::invalid_argument("unknown algorithm: " + name);
}

std::string to_string(Algorithm algo) { return algo == Algorithm::apasd ? "apasd" : "nlw"; }

// ------------------------------------------------------------------- config

ArrayConfig ExperimentConfig::array_config() const {
  return uniform_array(array.n_t, array.n_r, array.radius, frequency, inversion.extent);
}

bool ExperimentConfig::inverse_crime() const {
  const double synth_cell = synthesis.extent / synthesis.n;
  const double inv_cell = inversion.extent / inversion.n;
  return !(synth_cell < inv_cell);
}

void ExperimentConfig::validate() const {
  make_grid(synthesis.extent, synthesis.n);
  make_grid(inversion.extent, inversion.n);
  if (std::abs(synthesis.extent - inversion.extent) > 1e-12) {
    throw std::invalid_argument("config: synthesis and inversion grids must share the extent");
  }
  if (!(frequency > 0.0)) throw std::invalid_argument("config: frequency must be positive");
  if (std::isnan(snr_db)) throw std::invalid_argument("config: snr_db is NaN");
  phantom.validate();
  if (l1 && !(*l1 > 0.0)) throw std::invalid_argument("config: l1 must be positive");
  if (!(oracle_l1_scale > 0.0)) throw std::invalid_argument("config: oracle_l1_scale must be positive");
  if (!(nlw_step_factor > 0.0) || nlw_bound_samples < 1) throw std::invalid_argument("config: invalid NLW settings");
  if (!(row_weights.state > 0.0) || !(row_weights.data > 0.0)) {
    throw std::invalid_argument("config: row weights must be positive");
  }
  array_config().validate(inversion_grid());
}

ExperimentConfig experiment_preset(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  c.solver = preset_params(name);
  c.row_weights = {1.0, kPresetDataWeight};
  if (name == "coaxial") {
    c.phantom = coaxial_phantom(c.frequency);
  } else if (name == "austria") {
    c.phantom = austria_phantom(0.0, c.frequency);
  } else {
    c.phantom = austria_phantom(0.005, c.frequency);
  }
  return c;
}

void write_config(std::ostream& os, const ExperimentConfig& c) {
  json j = {
      {"preset", c.preset},
      {"phantom", phantom_to_json(c.phantom)},
      {"synthesis_grid", {{"extent", c.synthesis.extent}, {"n", c.synthesis.n}}},
      {"inversion_grid", {{"extent", c.inversion.extent}, {"n", c.inversion.n}}},
      {"array", {{"n_t", c.array.n_t}, {"n_r", c.array.n_r}, {"radius", c.array.radius}}},
      {"frequency_hz", c.frequency},
      {"snr_db", snr_to_json(c.snr_db)},
      {"seed", c.seed},
      {"algorithm", to_string(c.algorithm)},
      {"solver", solver_to_json(c.solver)},
      {"row_weights", {{"state", c.row_weights.state}, {"data", c.row_weights.data}}},
      {"l1", c.l1 ? json(*c.l1) : json(nullptr)},
      {"oracle_l1_scale", c.oracle_l1_scale},
      {"nlw_step_factor", c.nlw_step_factor},
      {"nlw_bound_samples", c.nlw_bound_samples},
  };
  os << j.dump(2) << '\n';
}

void write_config(const std::string& path, const ExperimentConfig& c) {
  auto os = open_out(path);
  write_config(os, c);
}

ExperimentConfig read_config(std::istream& is) {
  const json j = parse_json(is, "config");
  try {
    ExperimentConfig c = experiment_preset(j.value("preset", std::string("coaxial")));
    c.frequency = j.value("frequency_hz", c.frequency);
    c.phantom.frequency = c.frequency;
    if (j.contains("phantom")) c.phantom = phantom_from_json(j.at("phantom"), c.frequency);
    if (j.contains("synthesis_grid")) {
      c.synthesis = {j["synthesis_grid"].at("extent").get<double>(), j["synthesis_grid"].at("n").get<int>()};
    }
    if (j.contains("inversion_grid")) {
      c.inversion = {j["inversion_grid"].at("extent").get<double>(), j["inversion_grid"].at("n").get<int>()};
    }
    if (j.contains("array")) {
      const auto& a = j.at("array");
      c.array = {a.value("n_t", c.array.n_t), a.value("n_r", c.array.n_r), a.value("radius", c.array.radius)};
    }
    if (j.contains("snr_db")) c.snr_db = snr_from_json(j.at("snr_db"));
    c.seed = j.value("seed", c.seed);
    if (j.contains("algorithm")) c.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    if (j.contains("solver")) solver_from_json(j.at("solver"), c.solver);
    if (j.contains("row_weights")) {
      c.row_weights = {j["row_weights"].value("state", 1.0), j["row_weights"].value("data", 1.0)};
    }
    if (j.contains("l1") && !j.at("l1").is_null()) c.l1 = j.at("l1").get<double>();
    c.oracle_l1_scale = j.value("oracle_l1_scale", c.oracle_l1_scale);
    c.nlw_step_factor = j.value("nlw_step_factor", c.nlw_step_factor);
    c.nlw_bound_samples = j.value("nlw_bound_samples", c.nlw_bound_samples);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

ExperimentConfig read_config(const std::string& path) {
  auto is = open_in(path);
  try {
    return read_config(is);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

// ------------------------------------------------------------- measurements

void write_measurements(std::ostream& os, const MeasurementSet& ms) {
  json data = json::array();
  for (Eigen::Index i = 0; i < ms.data.cols(); ++i) {
    json col = json::array();
    for (Eigen::Index m = 0; m < ms.data.rows(); ++m) {
      col.push_back({{"re", ms.data(m, i).real()}, {"im", ms.data(m, i).imag()}});
    }
    data.push_back(std::move(col));
  }
  const json j = {
      {"frequency_hz", ms.array.frequency},
      {"transmitters", points_to_json(ms.array.transmitters)},
      {"receivers", points_to_json(ms.array.receivers)},
      {"snr_db", snr_to_json(ms.snr_db)},
      {"seed", ms.seed},
      {"data", std::move(data)},
      {"synthesis_grid", {{"extent", ms.synthesis_grid.extent}, {"n", ms.synthesis_grid.n}}},
  };
  os << j.dump(1) << '\n';
}

void write_measurements(const std::string& path, const MeasurementSet& ms) {
  auto os = open_out(path);
  write_measurements(os, ms);
  if (!os) throw std::runtime_error("write failed: " + path);
}

MeasurementSet read_measurements(std::istream& is) {
  const json j = parse_json(is, "measurement set");
  try {
    MeasurementSet ms;
    ms.array.frequency = j.at("frequency_hz").get<double>();
    ms.array.transmitters = points_from_json(j.at("transmitters"));
    ms.array.receivers = points_from_json(j.at("receivers"));
    ms.snr_db = snr_from_json(j.at("snr_db"));
    ms.seed = j.at("seed").get<std::uint64_t>();
    ms.synthesis_grid = {j.at("synthesis_grid").at("extent").get<double>(),
                         j.at("synthesis_grid").at("n").get<int>()};
    const auto& data = j.at("data");
    const auto nt = static_cast<Eigen::Index>(ms.array.transmitters.size());
    const auto nr = static_cast<Eigen::Index>(ms.array.receivers.size());
    if (static_cast<Eigen::Index>(data.size()) != nt) {
      throw std::invalid_argument("measurement set: data must hold one array per transmitter");
    }
    ms.data.resize(nr, nt);
    for (Eigen::Index i = 0; i < nt; ++i) {
      if (static_cast<Eigen::Index>(data[i].size()) != nr) {
        throw std::invalid_argument("measurement set: transmitter " + std::to_string(i) +
                                    " does not have one sample per receiver");
      }
      for (Eigen::Index m = 0; m < nr; ++m) {
        ms.data(m, i) = {data[i][m].at("re").get<double>(), data[i][m].at("im").get<double>()};
      }
    }
    return ms;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("measurement set: ") + e.what());
  }
}

MeasurementSet read_measurements(const std::string& path) {
  auto is = open_in(path);
  try {
    return read_measurements(is);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------- PGM

MapPart map_part_from_string(const std::string& name) {
  if (name == "real") return MapPart::real;
  if (name == "imag") return MapPart::imag;
  if (name == "abs") return MapPart::abs;
  throw std::invalid_argument("unknown map part: " + name);
}

std::vector<std::uint8_t> render_pixels(const ContrastMap& map, MapPart part) {
  if (map.values.size() == 0) throw std::invalid_argument("render: empty map");
  const auto pick = [part](cplx v) {
    switch (part) {
      case MapPart::real: return v.real();
      case MapPart::imag: return v.imag();
      case MapPart::abs: return std::abs(v);
    }
    return 0.0;
  };
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const cplx& v : map.values) {
    lo = std::min(lo, pick(v));
    hi = std::max(hi, pick(v));
  }
  const Grid& g = map.grid;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(g.size()));
  std::size_t k = 0;
  for (int iy = g.ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const double v = pick(map.values[g.index(ix, iy)]);
      px[k++] = hi > lo ? static_cast<std::uint8_t>(std::lround(255.0 * (v - lo) / (hi - lo))) : 128;
    }
  }
  return px;
}

void write_pgm(std::ostream& os, const ContrastMap& map, MapPart part) {
  const auto px = render_pixels(map, part);
  os << "P5\n" << map.grid.nx << ' ' << map.grid.ny << "\n255\n";
  os.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

void write_pgm(const std::string& path, const ContrastMap& map, MapPart part) {
  auto os = open_out(path);
  write_pgm(os, map, part);
  if (!os) throw std::runtime_error("write failed: " + path);
}

// ------------------------------------------------------------------ runs

MeasurementSet synthesize_experiment(const ExperimentConfig& config) {
  config.validate();
  const Grid grid = config.synthesis_grid();
  const GreensOperators ops = assemble_operators(grid, config.array_config());
  const ContrastMap reference = rasterize_phantom(config.phantom, grid);
  return synthesize(ops, reference, config.snr_db, config.seed);
}

InversionSetup prepare_inversion(const ExperimentConfig& config, const MeasurementSet& ms) {
  config.validate();
  const ArrayConfig array = config.array_config();
  const auto same_points = [](const std::vector<Point2>& a, const std::vector<Point2>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (distance(a[i], b[i]) > 1e-9) return false;
    }
    return true;
  };
  if (std::abs(ms.array.frequency - array.frequency) > 1e-6 * array.frequency) {
    throw std::invalid_argument("measurement frequency differs from the configuration");
  }
  if (!same_points(ms.array.transmitters, array.transmitters) || !same_points(ms.array.receivers, array.receivers)) {
    throw std::invalid_argument("measurement antenna positions differ from the configuration");
  }
  if (ms.synthesis_grid.n != config.synthesis.n || std::abs(ms.synthesis_grid.extent - config.synthesis.extent) > 1e-12) {
    throw std::invalid_argument("measurement synthesis grid differs from the configuration");
  }

  InversionSetup s{assemble_operators(config.inversion_grid(), ms.array),
                   rasterize_phantom(config.phantom, config.synthesis_grid()), {}, 0.0};
  s.incident = incident_fields(s.ops.array, s.ops.grid);
  s.l1 = config.l1 ? *config.l1 : oracle_l1_radius(s.ops, s.reference, config.oracle_l1_scale);
  return s;
}

SolveResult run_inversion(const ExperimentConfig& config, const MeasurementSet& ms, bool track_error) {
  const InversionSetup setup = prepare_inversion(config, ms);
  const CsOperator op(setup.ops, setup.incident, ms.data, config.row_weights);
  SolverParams params = config.solver;
  params.l1_radius = setup.l1;
  std::optional<ContrastMap> ref;
  if (track_error) ref = setup.reference;

  if (config.algorithm == Algorithm::apasd) return apasd_solve(op, params, ref);

  Preconditioner precond;
  if (params.precondition) precond = build_preconditioner(op, op.zero_state(), params.preconditioner);
  const SpectralBounds b = estimate_bounds(op, setup.l1, config.nlw_bound_samples, config.seed, &precond);
  params.nlw_step = config.nlw_step_factor / (b.alpha * b.alpha);
  return nlw_solve(op, params, ref);
}

}  // namespace csi
