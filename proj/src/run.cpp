#include "fracwave/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "fracwave/analysis.hpp"
#include "fracwave/caputo.hpp"
#include "fracwave/csv.hpp"
#include "fracwave/error.hpp"
#include "fracwave/inverse.hpp"
#include "fracwave/rng.hpp"
#include "json.hpp"

namespace fracwave {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const std::vector<std::string> kInequalityColumns = {"lemma", "s",       "lambda", "lhs",    "rhs_total",
                                                     "fitted_C", "pass", "draw",   "n_cells"};

/// Collects artifacts and derived quantities while an experiment runs.
class RunContext {
 public:
  RunContext(const RunConfig& cfg, fs::path dir) : cfg_(cfg), dir_(std::move(dir)) {}

  const RunConfig& cfg() const { return cfg_; }
  json& derived() { return derived_; }

  CsvWriter open(const std::string& name, std::string_view kind, const std::vector<std::string>& columns) {
    artifacts_.insert(name);
    return CsvWriter(dir_ / name, kind, columns);
  }

  void time_stage(const std::string& stage, const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    timings_[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  std::vector<std::string> artifacts() const { return {artifacts_.begin(), artifacts_.end()}; }
  const json& timings() const { return timings_; }

 private:
  const RunConfig& cfg_;
  fs::path dir_;
  std::set<std::string> artifacts_;
  json derived_ = json::object();
  json timings_ = json::object();
};

double unit_coordinate(const Mesh& mesh, double x) {
  return (x - mesh.lower().x) / (mesh.upper().x - mesh.lower().x);
}

std::vector<double> sample_profile(const Mesh& mesh, const Profile& p) {
  return sample_space(mesh, [&](double x) { return p(unit_coordinate(mesh, x)); });
}

bool all_zero(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

Field2D source_factor_field(const RunConfig& cfg, const Mesh& mesh, const TimeGrid& grid) {
  const Profile rx = cfg.get_profile("source", "R_space", "const:1");
  const Profile rt = cfg.get_profile("source", "R_time", "const:1");
  return sample_space_time(mesh, grid,
                           [&](double x, double t) { return rx(unit_coordinate(mesh, x)) * rt(t / grid.T); });
}

SourceFactor source_factor_from_config(const RunConfig& cfg, const Problem& p) {
  SourceFactor factor;
  factor.R = source_factor_field(cfg, p.mesh, p.time);
  double r0 = INFINITY;
  for (std::size_t i = 0; i < p.node_count(); ++i) r0 = std::min(r0, std::abs(factor.R(0, i)));
  factor.r0 = cfg.get_double("source", "r0", r0);
  require(factor.r0 > 0.0, "source factor must satisfy |R(x,0)| >= r0 > 0");
  return factor;
}

ObsGeometry geometry_from_config(const RunConfig& cfg, const Problem& p) {
  const double x0 = cfg.get_double("geometry", "x0");
  const double y0 = cfg.get_double("geometry", "y0", 0.0);
  return observation_geometry(p.mesh, {x0, y0}, p.time.T);
}

/// Observation patch: gamma0 from x0 unless [geometry] patch names an endpoint.
BoundaryPatch patch_from_config(const RunConfig& cfg, const Problem& p) {
  const std::string choice = cfg.get_string("geometry", "patch", "gamma0");
  if (choice == "gamma0") return gamma0_from_x0(p.mesh, {cfg.get_double("geometry", "x0"), 0.0});
  if (choice == "left") return single_face(p.mesh, Side::Left);
  if (choice == "right") return single_face(p.mesh, Side::Right);
  if (choice == "full") return full_boundary(p.mesh);
  throw ConfigError(cfg.origin() + ": field '[geometry] patch': expected gamma0, left, right or full, got '" +
                    choice + "'");
}

CarlemanParams carleman_from_config(const RunConfig& cfg, const ObsGeometry& g) {
  return make_carleman_params(g, cfg.get_double("geometry", "lambda", 1.0),
                              cfg.get_list("geometry", "s_grid", {1.0, 2.0, 4.0, 8.0}));
}

Regularization regularization_from_config(const RunConfig& cfg) {
  Regularization reg;
  if (cfg.has("regularization", "tikhonov")) reg.tikhonov_weight = cfg.get_double("regularization", "tikhonov");
  reg.tau = cfg.get_double("regularization", "tau", reg.tau);
  reg.cap = cfg.get_int("regularization", "cap", reg.cap);
  reg.rtol = cfg.get_double("regularization", "rtol", reg.rtol);
  return reg;
}

void record_geometry(RunContext& ctx, const ObsGeometry& g, const BoundaryPatch& patch) {
  json& d = ctx.derived();
  d["d0"] = g.d0;
  d["d1"] = g.d1;
  d["T0"] = g.T0;
  d["beta"] = g.beta;
  d["gamma0_faces"] = patch.face_names();
}

void record_grid(RunContext& ctx, const Problem& p) {
  json& d = ctx.derived();
  d["n_cells"] = p.mesh.n_cells();
  d["nodes"] = p.node_count();
  d["h"] = p.mesh.spacing();
  d["dt"] = p.time.dt;
  d["steps"] = p.time.steps;
  d["levels"] = p.time.levels();
}

Problem refined(const RunConfig& cfg, const Problem& p, int factor) {
  Problem out = p;
  out.mesh = Mesh::interval(p.mesh.lower().x, p.mesh.upper().x, p.mesh.n_cells() * factor);
  RunConfig copy = cfg;
  copy.set("mesh", "n_cells", std::to_string(out.mesh.n_cells()));
  if (cfg.has("time", "dt")) copy.set("time", "dt", format_double(cfg.get_double("time", "dt") / factor));
  return problem_from_config(copy);
}

void write_field(RunContext& ctx, const std::string& name, const FieldHistory& h) {
  const int stride = std::max(1, ctx.cfg().get_int("output", "field_stride", 1));
  CsvWriter w = ctx.open(name, "field", {"t", "x", "u"});
  const auto xs = h.mesh.nodes();
  for (std::size_t l = 0; l < h.levels(); l += static_cast<std::size_t>(stride)) {
    for (std::size_t i = 0; i < h.node_count(); ++i) w.cell(h.time(l)).cell(xs[i]).cell(h.u(l, i)).end_row();
  }
  w.close();
}

void write_observation(RunContext& ctx, const std::string& name, const ObservationSeries& obs) {
  CsvWriter w = ctx.open(name, "obs", {"t", "point_index", "value", "kind", "noise_level", "seed"});
  for (std::size_t l = 0; l < obs.times.size(); ++l) {
    for (std::size_t k = 0; k < obs.values.cols(); ++k) {
      w.cell(obs.times[l]).cell(k).cell(obs.values(l, k)).cell(to_string(obs.kind)).cell(obs.noise_level).cell(obs.seed);
      w.end_row();
    }
  }
  w.close();
}

void write_energy(RunContext& ctx, const FieldHistory& h, const Coefficients& k) {
  const auto E = energy_series(h, k);
  CsvWriter w = ctx.open("energy.csv", "energy", {"t", "E"});
  for (std::size_t l = 0; l < E.size(); ++l) w.cell(h.time(l)).cell(E[l]).end_row();
  w.close();
}

struct TaggedReport {
  InequalityReport report;
  int draw;
  int n_cells;
};

void write_inequalities(RunContext& ctx, const std::vector<TaggedReport>& reports) {
  CsvWriter w = ctx.open("inequalities.csv", "inequality", kInequalityColumns);
  for (const auto& tr : reports) {
    for (const auto& row : tr.report.rows) {
      w.cell(row.lemma).cell(row.s).cell(row.lambda).cell(row.lhs).cell(row.rhs_total).cell(row.fitted_C);
      w.cell(tr.report.lemma == "carleman" || tr.report.lemma == "carleman-damped" ? tr.report.pass : row.pass);
      w.cell(tr.draw).cell(tr.n_cells).end_row();
    }
  }
  w.close();
}

void write_metrics(RunContext& ctx, const std::string& name, const std::vector<std::pair<std::string, double>>& rows) {
  CsvWriter w = ctx.open(name, "metrics", {"metric", "value"});
  for (const auto& [k, v] : rows) w.cell(k).cell(v).end_row();
  w.close();
}

void write_reconstruction(RunContext& ctx, const ReconstructionResult& rec, const std::string& target,
                          const std::vector<double>& truth, const Mesh& mesh) {
  {
    CsvWriter w = ctx.open("reconstruction.csv", "reconstruction",
                           {"target", "iterations", "discrepancy", "regularization", "stopping_rule", "converged",
                            "rel_error"});
    w.cell(target).cell(rec.iterations).cell(rec.discrepancy).cell(rec.regularization).cell(rec.stopping_rule);
    w.cell(rec.converged).cell(rec.relative_error.value_or(NAN)).end_row();
    w.close();
  }
  {
    CsvWriter w = ctx.open("profile.csv", "profile", {"x", "estimate", "truth"});
    for (std::size_t i = 0; i < truth.size(); ++i) w.cell(mesh.nodes()[i]).cell(rec.estimate[i]).cell(truth[i]).end_row();
    w.close();
  }
  {
    CsvWriter w = ctx.open("residuals.csv", "residuals", {"iteration", "residual"});
    for (std::size_t k = 0; k < rec.residual_history.size(); ++k) w.cell(k).cell(rec.residual_history[k]).end_row();
    w.close();
  }
}

ObservationTemplate template_for(const RunConfig& cfg, const Problem& p) {
  ObservationTemplate t;
  t.problem = p;
  t.patch = patch_from_config(cfg, p);
  return t;
}

// ---------------------------------------------------------------------------
// Experiments

void run_forward(RunContext& ctx, const Problem& p) {
  FieldHistory h;
  ctx.time_stage("solve", [&] { h = solve_forward(p); });
  write_field(ctx, "field.csv", h);
  write_energy(ctx, h, p.coeffs);
  const BoundaryPatch patch = ctx.cfg().has("geometry", "x0") ? patch_from_config(ctx.cfg(), p) : full_boundary(p.mesh);
  write_observation(ctx, "trace.csv", neumann_trace(h, patch));
}

void run_picard(RunContext& ctx, const Problem& p) {
  const double tol = ctx.cfg().get_double("picard", "tol", 1e-10);
  const int m_max = ctx.cfg().get_int("picard", "max_iterations", 200);
  PicardResult r;
  FieldHistory stepper;
  ctx.time_stage("picard", [&] { r = solve_picard(p, tol, m_max); });
  ctx.time_stage("stepper", [&] { stepper = solve_forward(p); });
  double gap = 0.0;
  for (std::size_t k = 0; k < stepper.u.data().size(); ++k) {
    gap = std::max(gap, std::abs(stepper.u.data()[k] - r.history.u.data()[k]));
  }
  {
    CsvWriter w = ctx.open("picard.csv", "picard", {"iteration", "residual"});
    for (std::size_t k = 0; k < r.residuals.size(); ++k) w.cell(k + 1).cell(r.residuals[k]).end_row();
    w.close();
  }
  // Geometric rate from the second half of the positive residual trace.
  std::vector<double> xs, ys;
  for (std::size_t k = r.residuals.size() / 2; k < r.residuals.size(); ++k) {
    if (r.residuals[k] > 0.0) {
      xs.push_back(static_cast<double>(k));
      ys.push_back(std::log(r.residuals[k]));
    }
  }
  const double rate = xs.size() >= 2 ? std::exp(fit_line(xs, ys).slope) : 0.0;
  write_metrics(ctx, "comparison.csv",
                {{"sup_gap_vs_stepper", gap}, {"iterations", static_cast<double>(r.iterations)}, {"rate", rate}});
  write_field(ctx, "field.csv", r.history);
}

void run_energy_check(RunContext& ctx, const Problem& p) {
  std::vector<TaggedReport> reports;
  FieldHistory h;
  ctx.time_stage("base", [&] { h = solve_forward(p); });
  write_energy(ctx, h, p.coeffs);
  reports.push_back({check_energy_bounds(h, p.coeffs, p.source_values()), -1, p.mesh.n_cells()});

  const int draws = ctx.cfg().get_int("ensemble", "draws", 0);
  const bool refine = ctx.cfg().get_string("ensemble", "refine", "true") == "true";
  CsvWriter w = ctx.open("energy_refinement.csv", "energy-refinement",
                         {"draw", "en1_coarse", "en1_fine", "en2_coarse", "en2_fine", "max_ratio", "stable"});
  ctx.time_stage("ensemble", [&] {
    for (int d = 0; d < draws; ++d) {
      const std::uint64_t seed = derive_seed(ctx.cfg().seed(), static_cast<std::uint64_t>(d));
      std::vector<InequalityReport> pair;
      for (int factor : refine ? std::vector<int>{1, 2} : std::vector<int>{1}) {
        Problem q = factor == 1 ? p : refined(ctx.cfg(), p, factor);
        q.coeffs = random_coefficients(q.mesh, seed);
        q.time = make_time_grid(q.time.T, stability_dt(q.mesh, q.coeffs, ctx.cfg().get_double("time", "cfl", 0.9)));
        q.u0 = random_smooth_profile(q.mesh, derive_seed(seed, 1));
        q.u1 = random_smooth_profile(q.mesh, derive_seed(seed, 2));
        q.source = std::monostate{};
        const FieldHistory hq = solve_forward(q);
        pair.push_back(check_energy_bounds(hq, q.coeffs, Field2D{}));
        reports.push_back({pair.back(), d, q.mesh.n_cells()});
      }
      if (pair.size() == 2) {
        double worst = 1.0;
        for (std::size_t j = 0; j < 2; ++j) {
          const double a = pair[0].rows[j].fitted_C;
          const double b = pair[1].rows[j].fitted_C;
          worst = std::max(worst, std::max(a, b) / std::min(a, b));
        }
        w.cell(d).cell(pair[0].rows[0].fitted_C).cell(pair[1].rows[0].fitted_C).cell(pair[0].rows[1].fitted_C);
        w.cell(pair[1].rows[1].fitted_C).cell(worst).cell(worst <= 2.0).end_row();
      }
    }
  });
  w.close();
  write_inequalities(ctx, reports);
}

void run_frac_check(RunContext& ctx, const Problem& p) {
  const ObsGeometry g = geometry_from_config(ctx.cfg(), p);
  record_geometry(ctx, g, gamma0_from_x0(p.mesh, g.x0));
  const CarlemanParams params = carleman_from_config(ctx.cfg(), g);
  const int draws = ctx.cfg().get_int("ensemble", "draws", 20);
  const std::vector<double> s_values = ctx.cfg().get_list("check", "s", {0.0, 1.0, 5.0});
  std::vector<TaggedReport> reports;
  ctx.time_stage("ensemble", [&] {
    for (int d = 0; d < draws; ++d) {
      FieldHistory h;
      h.mesh = p.mesh;
      h.dt = p.time.dt;
      h.u = random_smooth_field(p.mesh, p.time, derive_seed(ctx.cfg().seed(), static_cast<std::uint64_t>(d)));
      for (double s : s_values) reports.push_back({check_frac_damping_bound(h, p.coeffs, params, s), d, p.mesh.n_cells()});
    }
  });
  ctx.derived()["frac_bound"] = frac_damping_constant(p.time.T);
  write_inequalities(ctx, reports);
}

void run_carleman_check(RunContext& ctx, const Problem& p) {
  const ObsGeometry g = geometry_from_config(ctx.cfg(), p);
  record_geometry(ctx, g, gamma0_from_x0(p.mesh, g.x0));
  const CarlemanParams params = carleman_from_config(ctx.cfg(), g);
  std::vector<TaggedReport> reports;
  ctx.time_stage("checks", [&] {
    const FieldHistory h = solve_forward(p);
    Parity parity;
    if (all_zero(p.u0)) {
      parity = Parity::Odd;
    } else if (all_zero(p.u1)) {
      parity = Parity::Even;
    } else {
      throw PreconditionError("time symmetrisation needs u0 = 0 (odd) or u1 = 0 (even)");
    }
    reports.push_back({check_carleman(extend_time_symmetric(h, parity), p.coeffs, params), 0, p.mesh.n_cells()});
    if (p.coeffs.has_damping()) {
      reports.push_back({check_carleman_damped(h, p.coeffs, params, p.source_values()), 0, p.mesh.n_cells()});
    }
    if (ctx.cfg().get_string("check", "synthetic", "true") == "true") {
      const double T = p.time.T;
      FieldHistory syn;
      syn.mesh = p.mesh;
      syn.dt = p.time.dt;
      syn.t0 = -T;
      syn.u = Field2D(2 * p.time.steps + 1, p.node_count());
      for (std::size_t l = 0; l < syn.levels(); ++l) {
        for (std::size_t i = 0; i < p.node_count(); ++i) {
          const double xi = unit_coordinate(p.mesh, p.mesh.nodes()[i]);
          syn.u(l, i) = std::sin(std::numbers::pi * xi) * std::sin(std::numbers::pi * syn.time(l) / T);
        }
      }
      reports.push_back({check_carleman(syn, p.coeffs, params), 1, p.mesh.n_cells()});
    }
  });
  write_inequalities(ctx, reports);
}

double bk_gap_for(const RunConfig& cfg, const Problem& base, const SourceFactor& factor, std::vector<double>& f) {
  Problem p = base;
  p.u0.assign(p.node_count(), 0.0);
  p.u1.assign(p.node_count(), 0.0);
  f = sample_profile(p.mesh, cfg.get_profile("source", "f", "zero"));
  p.source = FactoredSource{factor.R, f, factor.r0};
  return bk_consistency(time_derivative_history(solve_forward(p)), factor, f);
}

void run_trace_check(RunContext& ctx, const Problem& p) {
  const ObsGeometry g = geometry_from_config(ctx.cfg(), p);
  record_geometry(ctx, g, gamma0_from_x0(p.mesh, g.x0));
  const CarlemanParams params = carleman_from_config(ctx.cfg(), g);
  const SourceFactor factor = source_factor_from_config(ctx.cfg(), p);
  std::vector<TaggedReport> reports;
  CsvWriter bk = ctx.open("bk.csv", "bk", {"n_cells", "dt", "gap"});
  ctx.time_stage("checks", [&] {
    Problem zero = p;
    zero.u0.assign(p.node_count(), 0.0);
    zero.u1.assign(p.node_count(), 0.0);
    const std::vector<double> f = sample_profile(p.mesh, ctx.cfg().get_profile("source", "f", "zero"));
    zero.source = FactoredSource{factor.R, f, factor.r0};
    const FieldHistory v = time_derivative_history(solve_forward(zero));
    for (double s : ctx.cfg().get_list("check", "s", params.s_grid)) {
      reports.push_back({check_initial_trace_estimate(v, params, s), 0, p.mesh.n_cells()});
    }
    const int levels = ctx.cfg().get_int("check", "bk_refinements", 2);
    for (int r = 0; r < levels; ++r) {
      const Problem q = r == 0 ? p : refined(ctx.cfg(), p, 1 << r);
      const SourceFactor fq = source_factor_from_config(ctx.cfg(), q);
      std::vector<double> fv;
      bk.cell(q.mesh.n_cells()).cell(q.time.dt).cell(bk_gap_for(ctx.cfg(), q, fq, fv)).end_row();
    }
  });
  bk.close();
  write_inequalities(ctx, reports);
}

ObservationSeries maybe_noisy(const RunConfig& cfg, const ObservationSeries& clean) {
  const double level = cfg.get_double("inverse", "noise", 0.0);
  return add_noise(clean, level, derive_seed(cfg.seed(), 1));
}

void run_invert_source(RunContext& ctx, const Problem& p) {
  const ObsGeometry g = geometry_from_config(ctx.cfg(), p);
  const ObservationTemplate tmpl = template_for(ctx.cfg(), p);
  record_geometry(ctx, g, tmpl.patch);
  const SourceFactor factor = source_factor_from_config(ctx.cfg(), p);
  const std::vector<double> truth = sample_profile(p.mesh, ctx.cfg().get_profile("source", "f", "zero"));
  ObservationSeries obs;
  ReconstructionResult rec;
  ctx.time_stage("observe", [&] { obs = maybe_noisy(ctx.cfg(), forward_map_source(truth, factor, tmpl)); });
  write_observation(ctx, "obs.csv", obs);
  const bool has_truth = !all_zero(truth);
  ctx.time_stage("reconstruct", [&] {
    rec = reconstruct_source(obs, factor, tmpl, regularization_from_config(ctx.cfg()),
                             has_truth ? std::optional(truth) : std::nullopt);
  });
  write_reconstruction(ctx, rec, "f", truth, p.mesh);
}

void run_invert_initial(RunContext& ctx, const Problem& p) {
  const ObsGeometry g = geometry_from_config(ctx.cfg(), p);
  const ObservationTemplate tmpl = template_for(ctx.cfg(), p);
  record_geometry(ctx, g, tmpl.patch);
  const std::string target = ctx.cfg().get_string("inverse", "target", "u1");
  InitialState which;
  if (target == "u0") {
    which = InitialState::U0;
    require(all_zero(p.u1), "recovering u0 requires u1 = 0");
  } else if (target == "u1") {
    which = InitialState::U1;
    require(all_zero(p.u0), "recovering u1 requires u0 = 0");
  } else {
    throw ConfigError(ctx.cfg().origin() + ": field '[inverse] target': expected u0 or u1, got '" + target + "'");
  }
  std::vector<double> truth = which == InitialState::U0 ? p.u0 : p.u1;
  if (which == InitialState::U0) {
    truth.front() = 0.0;
    truth.back() = 0.0;
  }
  ObservationSeries obs;
  ReconstructionResult rec;
  ctx.time_stage("observe", [&] { obs = maybe_noisy(ctx.cfg(), neumann_trace(solve_forward(p), tmpl.patch)); });
  write_observation(ctx, "obs.csv", obs);
  const bool has_truth = !all_zero(truth);
  ctx.time_stage("reconstruct", [&] {
    rec = reconstruct_initial(obs, tmpl, which, regularization_from_config(ctx.cfg()),
                              has_truth ? std::optional(truth) : std::nullopt);
  });
  write_reconstruction(ctx, rec, target, truth, p.mesh);
}

void run_probe(RunContext& ctx, const Problem& p) {
  const ObsGeometry g = geometry_from_config(ctx.cfg(), p);
  const ObservationTemplate tmpl = template_for(ctx.cfg(), p);
  record_geometry(ctx, g, tmpl.patch);
  ProbeConfig config;
  config.n_draws = ctx.cfg().get_int("ensemble", "draws", 10);
  config.noise_ladder = ctx.cfg().get_list("ensemble", "noise", {0.0});
  config.seed = ctx.cfg().seed();
  config.reg = regularization_from_config(ctx.cfg());
  const std::string target = ctx.cfg().get_string("ensemble", "target", "source");
  if (target == "source") {
    config.target = ProbeTarget::Source;
  } else if (target == "u1") {
    config.target = ProbeTarget::U1;
  } else {
    throw ConfigError(ctx.cfg().origin() + ": field '[ensemble] target': expected source or u1, got '" + target + "'");
  }
  SourceFactor factor;
  if (config.target == ProbeTarget::Source) factor = source_factor_from_config(ctx.cfg(), p);
  std::vector<ProbeRow> rows;
  ctx.time_stage("ensemble", [&] { rows = stability_probe(tmpl, factor, config); });
  CsvWriter w = ctx.open("probe.csv", "probe", {"draw", "noise", "truth_norm", "obs_norm", "rec_error", "ratio"});
  for (const auto& r : rows) {
    w.cell(r.draw).cell(r.noise).cell(r.truth_norm).cell(r.obs_norm).cell(r.rec_error).cell(r.ratio).end_row();
  }
  w.close();
}

void require_sections(const RunConfig& cfg) {
  for (const char* s : {"mesh", "time"}) {
    if (!cfg.has_section(s)) throw ConfigError(cfg.origin() + ": missing section [" + s + "]");
  }
  switch (cfg.kind()) {
    case ExperimentKind::FracCheck:
    case ExperimentKind::CarlemanCheck:
    case ExperimentKind::TraceCheck:
    case ExperimentKind::InvertSource:
    case ExperimentKind::InvertInitial:
    case ExperimentKind::Probe:
      cfg.get_string("geometry", "x0");
      break;
    default:
      break;
  }
  if (cfg.kind() == ExperimentKind::InvertSource || cfg.kind() == ExperimentKind::TraceCheck) {
    cfg.get_string("source", "f");
  }
}

void remove_previous_run(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest)) return;
  std::ifstream in(manifest);
  json old = json::parse(in, nullptr, false);
  in.close();
  fs::remove(manifest);
  if (old.is_discarded() || !old.contains("artifacts")) return;
  for (const auto& name : old["artifacts"]) {
    if (name.is_string()) fs::remove(dir / name.get<std::string>());
  }
  fs::remove(dir / "summary.csv");
}

}  // namespace

int exit_code_for_current_exception(std::string& message) {
  try {
    throw;
  } catch (const ConfigError& e) {
    message = std::string("configuration error: ") + e.what();
    return kExitConfig;
  } catch (const PreconditionError& e) {
    message = std::string("precondition violated: ") + e.what();
    return kExitPrecondition;
  } catch (const InstabilityError& e) {
    message = std::string("numerical instability: ") + e.what();
    return kExitInstability;
  } catch (const ConvergenceError& e) {
    message = std::string("numerical instability: ") + e.what();
    return kExitInstability;
  } catch (const std::exception& e) {
    message = std::string("error: ") + e.what();
    return kExitFailure;
  }
}

Problem problem_from_config(const RunConfig& cfg) {
  Problem p;
  p.mesh = Mesh::interval(cfg.get_double("mesh", "a", 0.0), cfg.get_double("mesh", "b", 1.0),
                          cfg.get_int("mesh", "n_cells"));
  Coefficients k;
  k.alpha = sample_profile(p.mesh, cfg.get_profile("coefficients", "alpha", "const:0.5"));
  k.q = sample_profile(p.mesh, cfg.get_profile("coefficients", "q", "zero"));
  k.b = sample_profile(p.mesh, cfg.get_profile("coefficients", "b", "zero"));
  k.c = sample_profile(p.mesh, cfg.get_profile("coefficients", "c", "zero"));
  k.rho = sample_profile(p.mesh, cfg.get_profile("coefficients", "rho", "const:1"));
  k.a = sample_profile(p.mesh, cfg.get_profile("coefficients", "a", "const:1"));
  for (double v : k.rho) require(v > 0.0, "rho must be positive");
  for (double v : k.a) require(v > 0.0, "a must be positive");
  k = with_tight_bounds(std::move(k), p.mesh);
  k.alpha1 = cfg.get_double("coefficients", "alpha1", k.alpha1);
  k.M = cfg.get_double("coefficients", "M", k.M);
  k.rho0 = cfg.get_double("coefficients", "rho0", k.rho0);
  k.rho1 = cfg.get_double("coefficients", "rho1", k.rho1);
  k.a0 = cfg.get_double("coefficients", "a0", k.a0);
  k.validate(p.mesh);
  p.coeffs = std::move(k);

  const double T = cfg.get_double("time", "T");
  const double dt_max = cfg.has("time", "dt") ? cfg.get_double("time", "dt")
                                              : stability_dt(p.mesh, p.coeffs, cfg.get_double("time", "cfl", 0.9));
  p.time = make_time_grid(T, dt_max);

  p.u0 = sample_profile(p.mesh, cfg.get_profile("initial", "u0", "zero"));
  p.u1 = sample_profile(p.mesh, cfg.get_profile("initial", "u1", "zero"));
  const std::vector<double> f = sample_profile(p.mesh, cfg.get_profile("source", "f", "zero"));
  if (!all_zero(f)) {
    FactoredSource src;
    src.R = source_factor_field(cfg, p.mesh, p.time);
    src.f = f;
    src.r0 = cfg.get_double("source", "r0", 0.0);
    p.source = std::move(src);
  }
  p.validate();
  return p;
}

Coefficients random_coefficients(const Mesh& mesh, std::uint64_t seed) {
  CounterRng rng(seed);
  const double alpha = rng.uniform(0.3, 0.8);
  const double q = rng.uniform(0.0, 2.0);
  const double slope = rng.uniform(0.0, 0.3);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  Coefficients k;
  for (double x : mesh.nodes()) {
    const double xi = unit_coordinate(mesh, x);
    k.alpha.push_back(std::clamp(alpha + 0.05 * std::sin(2.0 * std::numbers::pi * xi + phase), 0.3, 0.8));
    k.q.push_back(q * (0.9 + 0.1 * std::cos(std::numbers::pi * xi)));
    k.b.push_back(0.0);
    k.c.push_back(0.0);
    k.rho.push_back(1.0);
    k.a.push_back(1.0 + slope * xi);
  }
  return with_tight_bounds(std::move(k), mesh);
}

Field2D random_smooth_field(const Mesh& mesh, const TimeGrid& grid, std::uint64_t seed) {
  Field2D u(grid.levels(), mesh.node_count());
  for (std::uint64_t j = 0; j < 2; ++j) {
    const std::vector<double> p = random_smooth_profile(mesh, derive_seed(seed, 2 * j));
    CounterRng rng(derive_seed(seed, 2 * j + 1));
    const double omega = rng.uniform(0.5, 4.0);
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t l = 0; l < grid.levels(); ++l) {
      const double g = std::sin(omega * grid.time(l) + theta);
      for (std::size_t i = 0; i < p.size(); ++i) u(l, i) += p[i] * g;
    }
  }
  return u;
}

fs::path resolve_output_dir(const RunConfig& cfg, const fs::path& config_path) {
  if (const char* env = std::getenv("FRACWAVE_OUT"); env && *env) return fs::path(env);
  if (cfg.has("run", "output")) {
    const fs::path out = cfg.get_string("run", "output");
    return out.is_absolute() ? out : config_path.parent_path() / out;
  }
  return fs::path("runs") / config_path.stem();
}

RunResult run_experiment(const RunConfig& cfg, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  require_sections(cfg);
  const Problem p = problem_from_config(cfg);
  fs::create_directories(out_dir);
  remove_previous_run(out_dir);

  RunContext ctx(cfg, out_dir);
  record_grid(ctx, p);
  switch (cfg.kind()) {
    case ExperimentKind::Forward: run_forward(ctx, p); break;
    case ExperimentKind::Picard: run_picard(ctx, p); break;
    case ExperimentKind::EnergyCheck: run_energy_check(ctx, p); break;
    case ExperimentKind::FracCheck: run_frac_check(ctx, p); break;
    case ExperimentKind::CarlemanCheck: run_carleman_check(ctx, p); break;
    case ExperimentKind::TraceCheck: run_trace_check(ctx, p); break;
    case ExperimentKind::InvertSource: run_invert_source(ctx, p); break;
    case ExperimentKind::InvertInitial: run_invert_initial(ctx, p); break;
    case ExperimentKind::Probe: run_probe(ctx, p); break;
  }

  json manifest;
  manifest["tool"] = "fracwave";
  manifest["version"] = FRACWAVE_VERSION;
  manifest["kind"] = to_string(cfg.kind());
  manifest["seed"] = cfg.seed_text();
  json echo = json::object();
  for (const auto& [section, entries] : cfg.sections()) {
    json& s = echo[section];
    s = json::object();
    for (const auto& [k, v] : entries) s[k] = v;
  }
  manifest["config"] = echo;
  manifest["derived"] = ctx.derived();
  manifest["artifacts"] = ctx.artifacts();
  json timings = ctx.timings();
  timings["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest["timings"] = timings;

  const fs::path tmp = out_dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << manifest.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed writing the manifest");
  }
  fs::rename(tmp, out_dir / "manifest.json");
  return {out_dir, ctx.artifacts()};
}

// ---------------------------------------------------------------------------
// Reporting

namespace {

double num(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    return NAN;
  }
}

void summarize_inequalities(const CsvTable& t, std::vector<SummaryRow>& out) {
  std::map<std::string, std::pair<double, bool>> by_lemma;
  std::vector<std::string> order;
  const std::size_t lemma = t.column("lemma"), c = t.column("fitted_C"), pass = t.column("pass");
  for (const auto& row : t.rows) {
    auto [it, inserted] = by_lemma.try_emplace(row[lemma], 0.0, true);
    if (inserted) order.push_back(row[lemma]);
    it->second.first = std::max(it->second.first, num(row[c]));
    it->second.second = it->second.second && row[pass] == "true";
  }
  for (const auto& name : order) {
    const auto& [worst, ok] = by_lemma[name];
    out.push_back({name, "max_fitted_C", worst, ok ? "true" : "false"});
  }
}

void summarize_probe(const CsvTable& t, std::vector<SummaryRow>& out) {
  const std::size_t noise = t.column("noise"), err = t.column("rec_error"), ratio = t.column("ratio");
  std::map<double, std::pair<double, int>> mean;
  double max_ratio = 0.0;
  for (const auto& row : t.rows) {
    auto& m = mean[num(row[noise])];
    m.first += num(row[err]);
    m.second += 1;
    max_ratio = std::max(max_ratio, num(row[ratio]));
  }
  out.push_back({"probe", "max_ratio", max_ratio, std::isfinite(max_ratio) ? "true" : "false"});
  std::vector<double> xs, ys;
  for (const auto& [level, acc] : mean) {
    xs.push_back(level);
    ys.push_back(acc.first / acc.second);
  }
  if (xs.size() >= 2) {
    const LinearFit fit = fit_line(xs, ys);
    out.push_back({"probe", "error_vs_noise_slope", fit.slope, fit.slope > 0.0 ? "true" : "false"});
    out.push_back({"probe", "error_vs_noise_r2", fit.r_squared, fit.r_squared >= 0.9 ? "true" : "false"});
  }
}

}  // namespace

std::vector<SummaryRow> emit_report(const fs::path& run_dir) {
  const fs::path manifest_path = run_dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw PreconditionError("no manifest.json in '" + run_dir.string() + "' (run missing or incomplete)");
  }
  std::ifstream in(manifest_path);
  const json manifest = json::parse(in);
  std::vector<SummaryRow> rows;
  for (const auto& name_json : manifest.at("artifacts")) {
    const std::string name = name_json.get<std::string>();
    const CsvTable t = read_csv(run_dir / name);
    if (t.kind == "inequality") {
      summarize_inequalities(t, rows);
    } else if (t.kind == "probe") {
      summarize_probe(t, rows);
    } else if (t.kind == "reconstruction") {
      for (const auto& r : t.rows) {
        const std::string target = r[t.column("target")];
        rows.push_back({"reconstruct-" + target, "rel_error", num(r[t.column("rel_error")]), ""});
        rows.push_back({"reconstruct-" + target, "iterations", num(r[t.column("iterations")]),
                        r[t.column("converged")]});
      }
    } else if (t.kind == "bk") {
      for (const auto& r : t.rows) {
        rows.push_back({"bk n_cells=" + r[t.column("n_cells")], "gap", num(r[t.column("gap")]), ""});
      }
    } else if (t.kind == "metrics") {
      for (const auto& r : t.rows) rows.push_back({fs::path(name).stem().string(), r[0], num(r[1]), ""});
    } else if (t.kind == "energy-refinement" && !t.rows.empty()) {
      double worst = 0.0;
      bool stable = true;
      for (const auto& r : t.rows) {
        worst = std::max(worst, num(r[t.column("max_ratio")]));
        stable = stable && r[t.column("stable")] == "true";
      }
      rows.push_back({"energy-refinement", "max_ratio", worst, stable ? "true" : "false"});
    } else if (t.kind == "energy" && !t.rows.empty()) {
      double e0 = num(t.rows.front()[1]), drift = 0.0;
      for (const auto& r : t.rows) drift = std::max(drift, std::abs(num(r[1]) - e0));
      rows.push_back({"energy", "max_drift", drift, ""});
    }
  }
  CsvWriter w(run_dir / "summary.csv", "summary", {"check", "metric", "value", "pass"});
  for (const auto& r : rows) w.cell(r.check).cell(r.metric).cell(r.value).cell(r.pass).end_row();
  w.close();
  return rows;
}

// ---------------------------------------------------------------------------
// Sweeps

SweepParam parse_sweep_param(const std::string& text) {
  const auto eq = text.find('=');
  const auto dot = text.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq) {
    throw ConfigError("sweep parameter must look like section.key=v1,v2,..., got '" + text + "'");
  }
  SweepParam p;
  p.section = text.substr(0, dot);
  p.key = text.substr(dot + 1, eq - dot - 1);
  std::stringstream values(text.substr(eq + 1));
  std::string v;
  while (std::getline(values, v, ',')) {
    if (!v.empty()) p.values.push_back(v);
  }
  if (p.values.empty()) throw ConfigError("sweep parameter '" + text + "' lists no values");
  return p;
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, const SweepParam& param, const fs::path& base_dir) {
  std::vector<SweepRow> rows;
  fs::create_directories(base_dir);
  for (const auto& value : param.values) {
    SweepRow row;
    row.value = value;
    row.dir = base_dir / (param.key + "=" + value);
    try {
      RunConfig variant = cfg;
      variant.set(param.section, param.key, value);
      run_experiment(variant, row.dir);
      row.exit_code = kExitOk;
    } catch (...) {
      row.exit_code = exit_code_for_current_exception(row.message);
    }
    rows.push_back(row);
  }
  CsvWriter w(base_dir / "sweep.csv", "sweep", {"parameter", "value", "dir", "exit_code"});
  for (const auto& r : rows) {
    w.cell(param.section + "." + param.key).cell(r.value).cell(r.dir.filename().string()).cell(r.exit_code).end_row();
  }
  w.close();
  return rows;
}

}  // namespace fracwave
