#pragma once

#include "mmvsar/clusters.hpp"
#include "mmvsar/io.hpp"
#include "mmvsar/polarimetric.hpp"

#include <array>
#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <thread>

namespace mmvsar {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- configuration ----------------------------------------------------------

struct GeometryConfig {
  double aperture_length_m = 1500.0;
  double altitude_m = 8000.0;
  double west_standoff_m = 7000.0;
  double element_spacing_m = 10.0;
  double frequency_hz = 1.0e10;
  double wave_speed_mps = 3.0e8;
  bool include_endpoint = true;
};

struct SegmentationConfig {
  double sub_aperture_length_m = 300.0;
  double center_spacing_m = 50.0;
  int num_views = 0;  // when > 0, overrides center_spacing_m
};

struct GridConfig {
  double extent_units = 20.0;
  double spacing_units = 0.25;
};

struct ScattererConfig {
  double position_units = 0.0;
  Complex amplitude = Complex(1.0, 0.0);
  std::string window = "constant";
  double visibility_center_m = 0.0;
  double visibility_width_m = 250.0;
  std::vector<double> tensor_row6;  // polarimetric experiments only
};

struct NoiseConfig {
  double sigma_fraction = 0.0;
  std::uint64_t seed = 7;
};

struct SolverJsonConfig {
  std::string epsilon_policy = "known_noise";  // known_noise | sigma_estimate | fixed
  double epsilon_factor = 1.01;
  double noiseless_epsilon_rel = 1e-8;
  double sigma_estimate = 0.0;
  double epsilon = 0.0;
  double feasibility_tol = 1e-4;
  double inner_tol = 1e-6;
  int max_inner_iters = 40000;
  int max_outer_iters = 60;
};

struct SimulationConfig {
  std::string mode = "exact";  // matched | linearized | exact
  bool include_phase_factor = true;
};

struct ExperimentBlock {
  std::string kind;
  int trials = 250;
  std::vector<int> support_sizes = {9, 16, 36};
  int row_length = 50;
  double spacing_min_units = 1.0;
  double spacing_max_units = 3.0;
  double r = 0.5;
  double support_threshold_rel = 0.1;
  int smv_view = -1;          // -1: single view over smv_aperture_m
  double smv_aperture_m = 0;  // 0: the whole aperture
  std::vector<double> apertures_m = {50.0, 70.0, 100.0};
  std::vector<double> sigma_fractions = {0.0, 0.10};
  std::string scene_style = "separated";  // bound-suite: separated | clustered
  int support_size_min = 3;
  int support_size_max = 8;
  int num_views = 12;
  int cluster_count = 2;
  int cluster_size = 3;
  double cluster_center_separation_units = 5.0;
  double cluster_offset_units = 0.25;
};

struct ExperimentConfig {
  int schema = 1;
  std::uint64_t seed = 1;
  GeometryConfig geometry;
  SegmentationConfig segmentation;
  GridConfig grid;
  std::vector<ScattererConfig> scatterers;
  NoiseConfig noise;
  SolverJsonConfig solver;
  SimulationConfig simulation;
  ExperimentBlock experiment;
};

namespace detail {

template <class T>
void read_field(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void read_field(const Json& j, const char* key, Complex& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (v.is_number()) {
    out = Complex(v.get<double>(), 0.0);
  } else {
    if (v.size() != 2) throw ConfigError("amplitude must be a number or [re, im]");
    out = Complex(v[0].get<double>(), v[1].get<double>());
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig cfg;
  std::vector<std::string> errors;
  using detail::read_field;

  read_field(j, "schema", cfg.schema);
  if (cfg.schema != 1) errors.push_back("unsupported schema version (expected 1)");
  read_field(j, "seed", cfg.seed);

  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    read_field(g, "aperture_length_m", cfg.geometry.aperture_length_m);
    read_field(g, "altitude_m", cfg.geometry.altitude_m);
    read_field(g, "west_standoff_m", cfg.geometry.west_standoff_m);
    read_field(g, "element_spacing_m", cfg.geometry.element_spacing_m);
    read_field(g, "frequency_hz", cfg.geometry.frequency_hz);
    read_field(g, "wave_speed_mps", cfg.geometry.wave_speed_mps);
    read_field(g, "include_endpoint", cfg.geometry.include_endpoint);
  }
  if (cfg.geometry.aperture_length_m <= 0) errors.push_back("geometry.aperture_length_m must be positive");
  if (cfg.geometry.element_spacing_m <= 0) errors.push_back("geometry.element_spacing_m must be positive");
  if (cfg.geometry.frequency_hz <= 0) errors.push_back("geometry.frequency_hz must be positive");
  if (cfg.geometry.wave_speed_mps <= 0) errors.push_back("geometry.wave_speed_mps must be positive");

  if (j.contains("segmentation")) {
    const auto& s = j.at("segmentation");
    read_field(s, "sub_aperture_length_m", cfg.segmentation.sub_aperture_length_m);
    read_field(s, "center_spacing_m", cfg.segmentation.center_spacing_m);
    read_field(s, "num_views", cfg.segmentation.num_views);
  }
  if (cfg.segmentation.sub_aperture_length_m <= 0 ||
      cfg.segmentation.sub_aperture_length_m > cfg.geometry.aperture_length_m)
    errors.push_back("segmentation.sub_aperture_length_m must lie in (0, A]");
  if (cfg.segmentation.num_views == 0 && cfg.segmentation.center_spacing_m <= 0)
    errors.push_back("segmentation.center_spacing_m must be positive");

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    read_field(g, "extent_units", cfg.grid.extent_units);
    read_field(g, "spacing_units", cfg.grid.spacing_units);
  }
  if (cfg.grid.extent_units <= 0 || cfg.grid.spacing_units <= 0 ||
      cfg.grid.spacing_units > cfg.grid.extent_units)
    errors.push_back("grid spacing must lie in (0, extent]");

  if (j.contains("scene") && j.at("scene").contains("scatterers")) {
    for (const auto& s : j.at("scene").at("scatterers")) {
      ScattererConfig sc;
      read_field(s, "position_units", sc.position_units);
      read_field(s, "amplitude", sc.amplitude);
      read_field(s, "window", sc.window);
      read_field(s, "visibility_center_m", sc.visibility_center_m);
      read_field(s, "visibility_width_m", sc.visibility_width_m);
      read_field(s, "tensor_row6", sc.tensor_row6);
      if (!sc.tensor_row6.empty() && sc.tensor_row6.size() != 6)
        errors.push_back("scatterer tensor_row6 must have 6 entries");
      cfg.scatterers.push_back(std::move(sc));
    }
  }

  if (j.contains("noise")) {
    read_field(j.at("noise"), "sigma_fraction", cfg.noise.sigma_fraction);
    read_field(j.at("noise"), "seed", cfg.noise.seed);
  }
  if (cfg.noise.sigma_fraction < 0) errors.push_back("noise.sigma_fraction must be nonnegative");

  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    read_field(s, "epsilon_policy", cfg.solver.epsilon_policy);
    read_field(s, "epsilon_factor", cfg.solver.epsilon_factor);
    read_field(s, "noiseless_epsilon_rel", cfg.solver.noiseless_epsilon_rel);
    read_field(s, "sigma_estimate", cfg.solver.sigma_estimate);
    read_field(s, "epsilon", cfg.solver.epsilon);
    read_field(s, "feasibility_tol", cfg.solver.feasibility_tol);
    read_field(s, "inner_tol", cfg.solver.inner_tol);
    read_field(s, "max_inner_iters", cfg.solver.max_inner_iters);
    read_field(s, "max_outer_iters", cfg.solver.max_outer_iters);
  }
  if (cfg.solver.epsilon_policy != "known_noise" && cfg.solver.epsilon_policy != "sigma_estimate" &&
      cfg.solver.epsilon_policy != "fixed")
    errors.push_back("solver.epsilon_policy must be known_noise, sigma_estimate or fixed");
  if (cfg.solver.feasibility_tol <= 0 || cfg.solver.inner_tol <= 0)
    errors.push_back("solver tolerances must be positive");

  if (j.contains("simulation")) {
    read_field(j.at("simulation"), "mode", cfg.simulation.mode);
    read_field(j.at("simulation"), "include_phase_factor", cfg.simulation.include_phase_factor);
  }
  if (cfg.simulation.mode != "matched" && cfg.simulation.mode != "linearized" &&
      cfg.simulation.mode != "exact")
    errors.push_back("simulation.mode must be matched, linearized or exact");

  if (!j.contains("experiment") || !j.at("experiment").contains("kind")) {
    errors.push_back("experiment.kind is required");
  } else {
    const auto& e = j.at("experiment");
    auto& x = cfg.experiment;
    read_field(e, "kind", x.kind);
    read_field(e, "trials", x.trials);
    read_field(e, "support_sizes", x.support_sizes);
    read_field(e, "row_length", x.row_length);
    read_field(e, "spacing_min_units", x.spacing_min_units);
    read_field(e, "spacing_max_units", x.spacing_max_units);
    read_field(e, "r", x.r);
    read_field(e, "support_threshold_rel", x.support_threshold_rel);
    read_field(e, "smv_view", x.smv_view);
    read_field(e, "smv_aperture_m", x.smv_aperture_m);
    read_field(e, "apertures_m", x.apertures_m);
    read_field(e, "sigma_fractions", x.sigma_fractions);
    read_field(e, "scene_style", x.scene_style);
    read_field(e, "support_size_min", x.support_size_min);
    read_field(e, "support_size_max", x.support_size_max);
    read_field(e, "num_views", x.num_views);
    read_field(e, "cluster_count", x.cluster_count);
    read_field(e, "cluster_size", x.cluster_size);
    read_field(e, "cluster_center_separation_units", x.cluster_center_separation_units);
    read_field(e, "cluster_offset_units", x.cluster_offset_units);
    const std::vector<std::string> kinds = {"ratio-histogram",  "imaging-comparison",
                                            "subaperture-sweep", "noise-sweep",
                                            "polarimetric",      "bound-suite"};
    if (std::find(kinds.begin(), kinds.end(), x.kind) == kinds.end())
      errors.push_back("unknown experiment.kind: " + x.kind);
    if (x.trials < 1) errors.push_back("experiment.trials must be >= 1");
    if (!(x.r > 0 && x.r < 1)) errors.push_back("experiment.r must lie in (0, 1)");
    if (x.scene_style != "separated" && x.scene_style != "clustered")
      errors.push_back("experiment.scene_style must be separated or clustered");
  }

  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.good()) throw ConfigError("cannot read config file: " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["schema"] = c.schema;
  j["seed"] = c.seed;
  j["geometry"] = {{"aperture_length_m", c.geometry.aperture_length_m},
                   {"altitude_m", c.geometry.altitude_m},
                   {"west_standoff_m", c.geometry.west_standoff_m},
                   {"element_spacing_m", c.geometry.element_spacing_m},
                   {"frequency_hz", c.geometry.frequency_hz},
                   {"wave_speed_mps", c.geometry.wave_speed_mps},
                   {"include_endpoint", c.geometry.include_endpoint}};
  j["segmentation"] = {{"sub_aperture_length_m", c.segmentation.sub_aperture_length_m},
                       {"center_spacing_m", c.segmentation.center_spacing_m},
                       {"num_views", c.segmentation.num_views}};
  j["grid"] = {{"extent_units", c.grid.extent_units}, {"spacing_units", c.grid.spacing_units}};
  Json scat = Json::array();
  for (const auto& s : c.scatterers) {
    Json e = {{"position_units", s.position_units},
              {"amplitude", {s.amplitude.real(), s.amplitude.imag()}},
              {"window", s.window},
              {"visibility_center_m", s.visibility_center_m},
              {"visibility_width_m", s.visibility_width_m}};
    if (!s.tensor_row6.empty()) e["tensor_row6"] = s.tensor_row6;
    scat.push_back(e);
  }
  j["scene"] = {{"scatterers", scat}};
  j["noise"] = {{"sigma_fraction", c.noise.sigma_fraction}, {"seed", c.noise.seed}};
  j["solver"] = {{"epsilon_policy", c.solver.epsilon_policy},
                 {"epsilon_factor", c.solver.epsilon_factor},
                 {"noiseless_epsilon_rel", c.solver.noiseless_epsilon_rel},
                 {"sigma_estimate", c.solver.sigma_estimate},
                 {"epsilon", c.solver.epsilon},
                 {"feasibility_tol", c.solver.feasibility_tol},
                 {"inner_tol", c.solver.inner_tol},
                 {"max_inner_iters", c.solver.max_inner_iters},
                 {"max_outer_iters", c.solver.max_outer_iters}};
  j["simulation"] = {{"mode", c.simulation.mode},
                     {"include_phase_factor", c.simulation.include_phase_factor}};
  const auto& x = c.experiment;
  j["experiment"] = {{"kind", x.kind},
                     {"trials", x.trials},
                     {"support_sizes", x.support_sizes},
                     {"row_length", x.row_length},
                     {"spacing_min_units", x.spacing_min_units},
                     {"spacing_max_units", x.spacing_max_units},
                     {"r", x.r},
                     {"support_threshold_rel", x.support_threshold_rel},
                     {"smv_view", x.smv_view},
                     {"smv_aperture_m", x.smv_aperture_m},
                     {"apertures_m", x.apertures_m},
                     {"sigma_fractions", x.sigma_fractions},
                     {"scene_style", x.scene_style},
                     {"support_size_min", x.support_size_min},
                     {"support_size_max", x.support_size_max},
                     {"num_views", x.num_views},
                     {"cluster_count", x.cluster_count},
                     {"cluster_size", x.cluster_size},
                     {"cluster_center_separation_units", x.cluster_center_separation_units},
                     {"cluster_offset_units", x.cluster_offset_units}};
  return j;
}

inline std::string config_hash(const ExperimentConfig& c) {
  const std::string s = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- shared pipeline pieces --------------------------------------------------

inline ApertureGeometry build_geometry(const GeometryConfig& g) {
  ApertureGeometry geom;
  geom.scene_center = Vec3::Zero();
  geom.aperture_center = Vec3(-g.west_standoff_m, 0.0, g.altitude_m);
  geom.tangent = Vec3(0.0, 1.0, 0.0);
  geom.aperture_length = g.aperture_length_m;
  geom.element_spacing = g.element_spacing_m;
  geom.altitude = g.altitude_m;
  geom.central_frequency = g.frequency_hz;
  geom.wave_speed = g.wave_speed_mps;
  geom.include_endpoint = g.include_endpoint;
  geom.validate();
  return geom;
}

inline std::vector<SubAperture> build_sub_apertures(const ApertureGeometry& geom,
                                                    const SegmentationConfig& s) {
  if (s.num_views > 0)
    return segment_aperture_views(geom, s.sub_aperture_length_m, s.num_views);
  return segment_aperture(geom, s.sub_aperture_length_m, s.center_spacing_m);
}

inline int grid_index_of_units(const ImagingGrid& grid, const ApertureGeometry& geom,
                               double position_units) {
  const double offset = position_units * grid.resolution_unit /
                        (grid.spacing > 0 ? grid.spacing : 1.0);
  const int idx = int(std::llround(offset + 0.5 * double(grid.size() - 1)));
  require(idx >= 0 && idx < grid.size(), "scatterer position lies outside the grid");
  (void)geom;
  return idx;
}

inline Scene build_scene(const std::vector<ScattererConfig>& scatterers,
                         const ImagingGrid& grid, const ApertureGeometry& geom) {
  std::vector<ReflectivityProfile> profiles;
  for (const auto& s : scatterers) {
    ReflectivityProfile p;
    p.grid_index = grid_index_of_units(grid, geom, s.position_units);
    p.amplitude = s.amplitude;
    p.window = window_kind_from_string(s.window);
    p.visibility_center = s.visibility_center_m;
    p.visibility_width = s.visibility_width_m;
    profiles.push_back(p);
  }
  return Scene::from_profiles(std::move(profiles), grid.size());
}

inline SolverConfig build_solver_config(const SolverJsonConfig& s, std::uint64_t seed) {
  SolverConfig cfg;
  cfg.max_outer_iters = s.max_outer_iters;
  cfg.max_inner_iters = s.max_inner_iters;
  cfg.inner_tol = s.inner_tol;
  cfg.feasibility_tol = s.feasibility_tol;
  cfg.seed = seed;
  return cfg;
}

// epsilon per the declared policy. The known-noise path uses the realized
// additive noise ||W||_F only; linearization model error is deliberately not
// absorbed (the solver is supposed to face it). Noiseless runs fall back to
// the configured fraction of the data norm.
inline double choose_epsilon(const SolverJsonConfig& s, const CMatrix& d, double noise_norm) {
  if (s.epsilon_policy == "fixed") return s.epsilon;
  if (s.epsilon_policy == "sigma_estimate")
    return 1.05 * s.sigma_estimate * std::sqrt(double(d.rows()) * double(d.cols()));
  if (noise_norm > 0.0) return s.epsilon_factor * noise_norm;
  return s.noiseless_epsilon_rel * d.norm();
}

struct SupportMetrics {
  bool exact_match = false;
  int spurious = 0;  // |estimated \ B_r(S)|
  int missed = 0;    // |S \ B_r(estimated)|
};

inline SupportMetrics support_metrics(const IndexSet& true_support, const IndexSet& estimated,
                                      const SemimetricTable& table, double r) {
  SupportMetrics m;
  m.exact_match = sorted_unique(estimated) == sorted_unique(true_support);
  const IndexSet near_true = vicinity_set(table, true_support, r);
  for (int q : estimated)
    if (!contains(near_true, q)) ++m.spurious;
  if (estimated.empty()) {
    m.missed = int(true_support.size());
  } else {
    const IndexSet near_est = vicinity_set(table, estimated, r);
    for (int q : true_support)
      if (!contains(near_est, q)) ++m.missed;
  }
  return m;
}

inline Json to_json(const SupportMetrics& m) {
  return Json{{"exact_match", m.exact_match}, {"spurious", m.spurious}, {"missed", m.missed}};
}

// Runs fn(0..n-1) across a small pool; per-index work must seed its own RNG.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(threads, n); ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// --- experiment kinds --------------------------------------------------------

struct RunContext {
  ExperimentConfig cfg;
  std::filesystem::path out_dir;
  int threads = 1;
  std::string hash;

  std::string preamble() const {
    return "# config_hash=" + hash + " seed=" + std::to_string(cfg.seed);
  }
};

// Lean closed-form interaction coefficients for orthogonal-row scenes:
// needs only the correlations between support columns and the rest.
struct RatioCoefficients {
  double i1 = 0.0;
  double i_nv = 0.0;
};

inline RatioCoefficients orthogonal_interaction_coefficients(const CMatrix& g,
                                                             const IndexSet& support) {
  const CMatrix gs = restrict_columns(g, support);
  const CMatrix mu = g.adjoint() * gs;  // N_y x |S|
  RatioCoefficients out;
  const int k = int(support.size());
  for (int j = 0; j < int(mu.rows()); ++j) {
    int nearest = 0;
    double best = 2.0;
    for (int i = 0; i < k; ++i) {
      const double d = 1.0 - std::abs(mu(j, i));
      if (d < best - 1e-15 || (std::abs(d - best) <= 1e-15 && support[i] < support[nearest])) {
        best = d;
        nearest = i;
      }
    }
    double l1 = 0.0, l2 = 0.0;
    for (int i = 0; i < k; ++i) {
      if (i == nearest) continue;
      const double a = std::abs(mu(j, i));
      l1 += a;
      l2 += a * a;
    }
    out.i1 = std::max(out.i1, l1);
    out.i_nv = std::max(out.i_nv, std::sqrt(l2));
  }
  return out;
}

// Support with nearest-neighbor gaps drawn uniformly then snapped to the
// grid, centered in the grid.
inline IndexSet random_separated_support(Rng& rng, const ImagingGrid& grid, int size,
                                         double gap_min_units, double gap_max_units,
                                         double spacing_units) {
  std::vector<double> gaps(std::max(0, size - 1));
  double total = 0.0;
  for (auto& g : gaps) {
    g = rng.uniform(gap_min_units, gap_max_units);
    g = std::max(spacing_units, std::round(g / spacing_units) * spacing_units);
    total += g;
  }
  const int total_steps = int(std::llround(total / spacing_units));
  const int start = (grid.size() - 1 - total_steps) / 2;
  require(start >= 0, "random support does not fit in the grid");
  IndexSet s = {start};
  for (double g : gaps) s.push_back(s.back() + int(std::llround(g / spacing_units)));
  return s;
}

inline Json run_ratio_histogram(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const ApertureGeometry geom = build_geometry(cfg.geometry);
  const auto subs = build_sub_apertures(geom, cfg.segmentation);
  const SubAperture& ref = subs.front();

  CsvWriter csv(ctx.out_dir / "ratios.csv",
                {"trial", "support_size", "i1", "i_nv", "ratio", "ratio_over_sqrt_s"},
                ctx.preamble());

  Json summary;
  summary["per_support_size"] = Json::array();
  struct Row {
    double i1, inv;
  };

  bool all_within_sqrt = true;
  for (std::size_t si = 0; si < cfg.experiment.support_sizes.size(); ++si) {
    const int s_size = cfg.experiment.support_sizes[si];
    require(s_size >= 2, "ratio-histogram: support sizes must be >= 2");
    require(s_size <= cfg.experiment.row_length,
            "ratio-histogram: support size exceeds the row length");
    std::vector<Row> rows(cfg.experiment.trials);

    parallel_for(cfg.experiment.trials, ctx.threads, [&](int trial) {
      Rng rng(cfg.seed + std::uint64_t(trial) + 0x100000ull * si);
      // Grid sized to the realized scene: support span plus a margin.
      const double max_span = (s_size - 1) * cfg.experiment.spacing_max_units + 10.0;
      const ImagingGrid grid = imaging_grid(geom, max_span, cfg.grid.spacing_units);
      const IndexSet support =
          random_separated_support(rng, grid, s_size, cfg.experiment.spacing_min_units,
                                   cfg.experiment.spacing_max_units, cfg.grid.spacing_units);
      // Orthogonal rows justify the closed form; the draw mirrors the study.
      (void)make_orthogonal_rows(support, grid.size(), cfg.experiment.row_length,
                                 cfg.seed + trial);
      const CMatrix g = linearized_kernel(ref, grid, geom.scene_center);
      const RatioCoefficients c = orthogonal_interaction_coefficients(g, support);
      rows[trial] = {c.i1, c.i_nv};
    });

    std::vector<double> ratios;
    for (int t = 0; t < cfg.experiment.trials; ++t) {
      const double ratio = rows[t].inv > 0 ? rows[t].i1 / rows[t].inv : 1.0;
      const double scaled = ratio / std::sqrt(double(s_size));
      if (scaled > 1.0 + 1e-12) all_within_sqrt = false;
      ratios.push_back(ratio);
      csv.row({cell(t), cell(s_size), cell(rows[t].i1), cell(rows[t].inv), cell(ratio),
               cell(scaled)});
    }
    std::sort(ratios.begin(), ratios.end());
    auto quant = [&](double p) {
      return ratios[std::min(ratios.size() - 1, std::size_t(p * ratios.size()))];
    };
    summary["per_support_size"].push_back(Json{{"support_size", s_size},
                                               {"trials", cfg.experiment.trials},
                                               {"median_ratio", quant(0.5)},
                                               {"q25_ratio", quant(0.25)},
                                               {"q75_ratio", quant(0.75)},
                                               {"max_ratio_over_sqrt_s",
                                                ratios.back() / std::sqrt(double(s_size))}});
  }
  summary["all_ratios_within_sqrt_s"] = all_within_sqrt;
  return summary;
}

// Shared scalar-imaging pipeline: simulate, choose epsilon, solve.
struct ImagingRun {
  ApertureGeometry geom;
  std::vector<SubAperture> subs;
  ImagingGrid grid;
  Scene scene;
  UnknownMatrix x;
  SensingMatrix sensing;
  SemimetricTable table;
  DataMatrix data;
  double epsilon = 0.0;
  SolverResult mmv;
};

inline ImagingRun run_scalar_pipeline(const ExperimentConfig& cfg, bool solve = true) {
  ImagingRun run;
  run.geom = build_geometry(cfg.geometry);
  run.subs = build_sub_apertures(run.geom, cfg.segmentation);
  run.grid = imaging_grid(run.geom, cfg.grid.extent_units, cfg.grid.spacing_units);
  run.scene = build_scene(cfg.scatterers, run.grid, run.geom);
  require(!run.scene.profiles.empty(), "imaging experiment needs at least one scatterer");

  SimulationSpec sim;
  sim.mode = simulation_mode_from_string(cfg.simulation.mode);
  sim.include_phase_factor = cfg.simulation.include_phase_factor;
  run.x = sample_unknown_matrix(run.scene, run.grid, run.subs, run.geom,
                                sim.include_phase_factor);
  run.sensing = build_sensing_matrix(run.grid, run.subs.front(), run.geom.scene_center,
                                     PhaseMode::kLinearized);
  run.table = semimetric_table(run.sensing);

  NoiseSpec noise;
  noise.sigma_fraction = cfg.noise.sigma_fraction;
  noise.seed = cfg.noise.seed;
  run.data = forward_data(run.subs, run.grid, run.geom, run.x, sim, noise);
  run.epsilon = choose_epsilon(cfg.solver, run.data.entries, run.data.noise_norm);
  if (solve) {
    MmvProblem problem{run.sensing.entries, run.data.entries, run.epsilon};
    run.mmv = solve_p12_eps(problem, build_solver_config(cfg.solver, cfg.seed));
    if (!run.mmv.converged)
      throw SolverFailure("MMV solve did not converge in a required imaging run");
  }
  return run;
}

inline void write_image_csv(const RunContext& ctx, const std::string& name,
                            const ImagingRun& run, const RVector& values) {
  std::ofstream out(ctx.out_dir / name);
  require(out.good(), "cannot open output file " + name);
  out << ctx.preamble() << '\n';
  out << "pixel,cross_range_units,value\n";
  for (int q = 0; q < run.grid.size(); ++q)
    out << q << ',' << format_double(run.grid.coordinate_units(run.geom, q)) << ','
        << format_double(values(q)) << '\n';
}

inline RVector row_norms(const CMatrix& m) {
  RVector v(m.rows());
  for (Eigen::Index j = 0; j < m.rows(); ++j) v(j) = m.row(j).norm();
  return v;
}

inline Json run_imaging_comparison(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  ImagingRun run = run_scalar_pipeline(cfg);
  const double r = cfg.experiment.r;
  const double threshold = cfg.experiment.support_threshold_rel;

  Json summary;
  summary["epsilon"] = run.epsilon;
  summary["n_views"] = int(run.subs.size());
  summary["n_receivers"] = run.subs.front().num_receivers();
  summary["mmv_solver"] = to_json(run.mmv);

  const IndexSet mmv_support = extract_support(run.mmv.solution, threshold);
  summary["mmv_support"] = mmv_support;
  summary["mmv_metrics"] = to_json(support_metrics(run.scene.support, mmv_support, run.table, r));

  // SMV baseline: a single view. By default the view spans the whole
  // aperture (the constant-reflectivity comparison); smv_view >= 0 selects
  // one of the MMV sub-aperture columns instead. Either way the result is
  // judged in the semimetric of the matrix it inverted.
  CVector d_smv;
  CMatrix g_smv;
  if (cfg.experiment.smv_view >= 0) {
    require(cfg.experiment.smv_view < int(run.subs.size()), "smv_view out of range");
    d_smv = run.data.entries.col(cfg.experiment.smv_view);
    g_smv = run.sensing.entries;
    summary["smv_view"] = cfg.experiment.smv_view;
  } else {
    const double length = cfg.experiment.smv_aperture_m > 0 ? cfg.experiment.smv_aperture_m
                                                            : run.geom.aperture_length;
    const SubAperture lone = make_sub_aperture(run.geom, run.geom.aperture_center, length, 0);
    CMatrix d_one =
        forward_data_positions(run.scene, run.grid, lone.antenna_positions, run.geom);
    DataMatrix noisy;
    NoiseSpec smv_noise{cfg.noise.sigma_fraction, cfg.noise.seed + 1};
    add_noise(d_one, smv_noise, noisy);
    d_smv = d_one;
    g_smv = linearized_kernel(lone, run.grid, run.geom.scene_center);
    summary["smv_aperture_m"] = length;
  }
  // the single-view model may not be able to reach the policy epsilon at
  // all (systematic reflectivity variation); fall back to just above the
  // least-squares floor of that model
  double eps_smv = choose_epsilon(cfg.solver, d_smv, 0.0);
  {
    Eigen::JacobiSVD<CMatrix> svd(g_smv, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double floor = (d_smv - g_smv * svd.solve(d_smv)).norm();
    eps_smv = std::max(eps_smv, 1.02 * floor);
  }
  SolverResult smv = solve_smv(g_smv, d_smv, eps_smv, build_solver_config(cfg.solver, cfg.seed + 1));
  if (!smv.converged) throw SolverFailure("SMV solve did not converge");
  const IndexSet smv_support = extract_support(smv.solution, threshold);
  const SemimetricTable smv_table =
      cfg.experiment.smv_view >= 0 ? run.table : semimetric_table(g_smv);
  summary["smv_epsilon"] = eps_smv;
  summary["smv_solver"] = to_json(smv);
  summary["smv_support"] = smv_support;
  summary["smv_metrics"] = to_json(support_metrics(run.scene.support, smv_support, smv_table, r));

  // Conventional image over the entire aperture, reflectivity sampled at
  // every antenna position.
  const SubAperture full =
      make_sub_aperture(run.geom, run.geom.aperture_center, run.geom.aperture_length, 0);
  const CVector d_full =
      forward_data_positions(run.scene, run.grid, full.antenna_positions, run.geom);
  const CMatrix g_full = exact_downramped_kernel(full.antenna_positions, run.grid,
                                                 run.geom.scene_center, full.wavenumber);
  const RVector migration = migration_image(g_full, d_full);
  int mig_argmax = 0;
  migration.maxCoeff(&mig_argmax);
  summary["migration_argmax"] = mig_argmax;
  summary["migration_argmax_units"] = run.grid.coordinate_units(run.geom, mig_argmax);

  // Interaction + theorem reports (numeric-sup lower bound: the window rows
  // are not orthogonal in general).
  const InteractionReport interaction =
      interaction_report(run.table, run.x.entries, run.scene.support,
                         MultiViewMode::kNumericSup, cfg.seed);
  summary["interaction"] = to_json(interaction);
  const double w_norm = (run.data.entries - run.sensing.entries * run.x.entries).norm();
  summary["model_error_norm"] = w_norm;
  Json bounds = Json::array();
  for (const auto& b :
       support_localization_check(run.sensing.entries, run.table, run.x.entries, run.mmv.solution,
                      run.scene.support, r, run.epsilon, interaction.i_nv, w_norm))
    bounds.push_back(to_json(b));
  for (const auto& b :
       quantitative_estimate_check(run.sensing.entries, run.table, run.x.entries, run.mmv.solution,
                      run.scene.support, r, run.epsilon, interaction.i_nv, interaction.i1,
                      w_norm))
    bounds.push_back(to_json(b));
  summary["bounds"] = bounds;

  write_image_csv(ctx, "truth_image.csv", run, row_norms(run.x.entries));
  write_image_csv(ctx, "mmv_image.csv", run, row_norms(run.mmv.solution));
  write_image_csv(ctx, "smv_image.csv", run, row_norms(smv.solution));
  write_image_csv(ctx, "migration_image.csv", run, migration);
  write_complex_matrix_csv(ctx.out_dir / "mmv_solution.csv", run.mmv.solution,
                           ctx.preamble());
  return summary;
}

inline Json run_subaperture_sweep(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  CsvWriter csv(ctx.out_dir / "sweep.csv",
                {"aperture_m", "n_views", "exact_match", "spurious", "missed", "objective",
                 "feasibility_residual", "epsilon"},
                ctx.preamble());
  Json summary;
  summary["apertures"] = Json::array();
  for (double a : cfg.experiment.apertures_m) {
    ExperimentConfig sub_cfg = cfg;
    sub_cfg.segmentation.sub_aperture_length_m = a;
    ImagingRun run = run_scalar_pipeline(sub_cfg);
    const IndexSet support =
        extract_support(run.mmv.solution, cfg.experiment.support_threshold_rel);
    const SupportMetrics m =
        support_metrics(run.scene.support, support, run.table, cfg.experiment.r);
    csv.row({cell(a), cell(int(run.subs.size())), cell(m.exact_match), cell(m.spurious),
             cell(m.missed), cell(run.mmv.objective), cell(run.mmv.feasibility_residual),
             cell(run.epsilon)});
    summary["apertures"].push_back(Json{{"aperture_m", a},
                                        {"n_views", int(run.subs.size())},
                                        {"metrics", to_json(m)},
                                        {"solver", to_json(run.mmv)}});
  }
  return summary;
}

inline Json run_noise_sweep(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  CsvWriter csv(ctx.out_dir / "noise_sweep.csv",
                {"sigma_fraction", "epsilon", "exact_match", "spurious", "missed",
                 "spurious_vs_noiseless", "missed_vs_noiseless"},
                ctx.preamble());

  ExperimentConfig base_cfg = cfg;
  base_cfg.noise.sigma_fraction = 0.0;
  ImagingRun base = run_scalar_pipeline(base_cfg);
  const IndexSet base_support =
      extract_support(base.mmv.solution, cfg.experiment.support_threshold_rel);

  Json summary;
  summary["noiseless_support"] = base_support;
  summary["levels"] = Json::array();
  for (double sigma : cfg.experiment.sigma_fractions) {
    ExperimentConfig level_cfg = cfg;
    level_cfg.noise.sigma_fraction = sigma;
    ImagingRun run = sigma == 0.0 ? std::move(base) : run_scalar_pipeline(level_cfg);
    const IndexSet support =
        extract_support(run.mmv.solution, cfg.experiment.support_threshold_rel);
    const SupportMetrics vs_truth =
        support_metrics(run.scene.support, support, run.table, cfg.experiment.r);
    const SupportMetrics vs_base =
        support_metrics(base_support, support, run.table, cfg.experiment.r);
    csv.row({cell(sigma), cell(run.epsilon), cell(vs_truth.exact_match),
             cell(vs_truth.spurious), cell(vs_truth.missed), cell(vs_base.spurious),
             cell(vs_base.missed)});
    summary["levels"].push_back(Json{{"sigma_fraction", sigma},
                                     {"epsilon", run.epsilon},
                                     {"support", support},
                                     {"vs_truth", to_json(vs_truth)},
                                     {"vs_noiseless", to_json(vs_base)}});
    if (sigma == 0.0) base = std::move(run);  // keep baseline alive for later levels
  }
  return summary;
}

inline Json run_polarimetric(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const ApertureGeometry geom = build_geometry(cfg.geometry);
  const auto subs = build_sub_apertures(geom, cfg.segmentation);
  const ImagingGrid grid = imaging_grid(geom, cfg.grid.extent_units, cfg.grid.spacing_units);

  std::vector<TensorScatterer> list;
  for (const auto& s : cfg.scatterers) {
    require(s.tensor_row6.size() == 6, "polarimetric experiment needs tensor_row6 scatterers");
    TensorScatterer t;
    t.grid_index = grid_index_of_units(grid, geom, s.position_units);
    Eigen::Matrix<double, 1, 6> row;
    for (int i = 0; i < 6; ++i) row(i) = s.tensor_row6[i];
    t.tensor = ReflectivityTensor::from_row6(row);
    t.window = window_kind_from_string(s.window);
    t.visibility_center = s.visibility_center_m;
    t.visibility_width = s.visibility_width_m;
    list.push_back(t);
  }
  PolarimetricScene scene = PolarimetricScene::from_scatterers(std::move(list), grid.size());

  NoiseSpec noise;
  noise.sigma_fraction = cfg.noise.sigma_fraction;
  noise.seed = cfg.noise.seed;
  PolForwardResult fwd = pol_forward(scene, grid, subs, geom, noise);

  const bool single_view = subs.size() == 1;
  const CMatrix g = single_view
                        ? exact_kernel(subs.front().antenna_positions, grid,
                                       subs.front().wavenumber)
                        : linearized_kernel(subs.front(), grid, geom.scene_center);
  const double eps = choose_epsilon(cfg.solver, fwd.data.entries, fwd.data.noise_norm);
  MmvProblem problem{g, fwd.data.entries, eps};
  SolverResult res = solve_p12_eps(problem, build_solver_config(cfg.solver, cfg.seed));
  if (!res.converged) throw SolverFailure("polarimetric MMV solve did not converge");

  const SemimetricTable table = semimetric_table(g);
  const IndexSet support = extract_support(res.solution, cfg.experiment.support_threshold_rel);

  Json summary;
  summary["epsilon"] = eps;
  summary["solver"] = to_json(res);
  summary["support"] = support;
  summary["metrics"] = to_json(support_metrics(scene.support, support, table,
                                               cfg.experiment.r));

  // Per polarization column: row support of each of the six stacked columns.
  Json per_column = Json::array();
  bool all_columns_exact = true;
  for (int c = 0; c < 6; ++c) {
    CMatrix cols(grid.size(), Eigen::Index(subs.size()));
    for (std::size_t v = 0; v < subs.size(); ++v)
      cols.col(Eigen::Index(v)) = res.solution.col(Eigen::Index(6 * v + c));
    const IndexSet sc = extract_support(cols, cfg.experiment.support_threshold_rel);
    const SupportMetrics m = support_metrics(scene.support, sc, table, cfg.experiment.r);
    all_columns_exact = all_columns_exact && m.exact_match;
    per_column.push_back(Json{{"column", c}, {"metrics", to_json(m)}});
  }
  summary["per_column"] = per_column;
  summary["all_columns_exact"] = all_columns_exact;

  // Tensor recovery on the estimated rows: min-norm inversion per view after
  // stripping the scalar model phase, then transverse-component errors.
  double max_transverse_error = 0.0;
  CsvWriter csv(ctx.out_dir / "tensor_recovery.csv",
                {"pixel", "view", "err_transverse", "true_norm"}, ctx.preamble());
  for (const auto& sc : scene.scatterers) {
    if (!contains(support, sc.grid_index)) continue;
    for (std::size_t v = 0; v < subs.size(); ++v) {
      const Vec3 platform = subs[v].center - geom.scene_center;
      const GammaMatrix gamma = gamma_matrix(direction_cosines(platform));
      const ProjectionEigenbasis basis = projection_eigenbasis(platform);
      Eigen::Matrix<Complex, 1, 6> row;
      for (int c = 0; c < 6; ++c) row(c) = res.solution(sc.grid_index, Eigen::Index(6 * v + c));
      if (!single_view)
        row *= std::conj(model_phase_factor(subs[v], geom.scene_center,
                                            grid.points[sc.grid_index]));
      const double s = (subs[v].center - geom.aperture_center).dot(geom.tangent);
      const double vis = sc.value_at(s);
      if (vis < 1e-12) continue;
      const ReflectivityTensor rec = recover_tensor_minnorm(row, gamma);
      double err = 0.0, norm = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int l = 0; l < 2; ++l) {
          const Vec3& vi = i == 0 ? basis.v1 : basis.v2;
          const Vec3& vl = l == 0 ? basis.v1 : basis.v2;
          const double truth = vis * vi.dot(sc.tensor.tensor * vl);
          err = std::max(err, std::abs(vi.dot(rec.tensor * vl) - truth));
          norm = std::max(norm, std::abs(truth));
        }
      max_transverse_error = std::max(max_transverse_error, err);
      csv.row({cell(sc.grid_index), cell(int(v)), cell(err), cell(norm)});
    }
  }
  summary["max_transverse_error"] = max_transverse_error;

  write_complex_matrix_csv(ctx.out_dir / "pol_solution.csv", res.solution, ctx.preamble());
  write_complex_matrix_csv(ctx.out_dir / "pol_truth.csv", fwd.unknown.entries,
                           ctx.preamble());
  return summary;
}

// One Monte Carlo trial of the bound suite.
struct BoundTrial {
  int support_size = 0;
  double i1 = 0.0;
  double i_nv = 0.0;
  double i_nv_cluster = -1.0;
  double eps = 0.0;
  bool solver_converged = false;
  std::vector<BoundReport> bounds;
};

inline Json run_bound_suite(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const ApertureGeometry geom = build_geometry(cfg.geometry);
  const auto subs = build_sub_apertures(geom, cfg.segmentation);
  const ImagingGrid grid = imaging_grid(geom, cfg.grid.extent_units, cfg.grid.spacing_units);
  const SensingMatrix sensing =
      build_sensing_matrix(grid, subs.front(), geom.scene_center, PhaseMode::kLinearized);
  const SemimetricTable table = semimetric_table(sensing);
  const bool clustered = cfg.experiment.scene_style == "clustered";
  const double r = cfg.experiment.r;

  std::vector<BoundTrial> trials(cfg.experiment.trials);
  parallel_for(cfg.experiment.trials, ctx.threads, [&](int t) {
    BoundTrial& out = trials[t];
    Rng rng(cfg.seed + std::uint64_t(t));

    IndexSet support;
    IndexSet centers;
    if (clustered) {
      const int nc = cfg.experiment.cluster_count;
      const int csize = cfg.experiment.cluster_size;
      const double sep = cfg.experiment.cluster_center_separation_units +
                         std::round(rng.uniform(0.0, 2.0) / cfg.grid.spacing_units) *
                             cfg.grid.spacing_units;
      const int sep_steps = int(std::llround(sep / cfg.grid.spacing_units));
      const int offset_steps = std::max(
          1, int(std::llround(cfg.experiment.cluster_offset_units / cfg.grid.spacing_units)));
      const int span = (nc - 1) * sep_steps + (csize - 1) * offset_steps;
      const int start = (grid.size() - 1 - span) / 2;
      require(start >= 0, "cluster scene does not fit in the grid");
      for (int c = 0; c < nc; ++c) {
        const int center = start + c * sep_steps + (csize / 2) * offset_steps;
        centers.push_back(center);
        for (int i = 0; i < csize; ++i)
          support.push_back(start + c * sep_steps + i * offset_steps);
      }
      support = sorted_unique(support);
    } else {
      const int size = cfg.experiment.support_size_min +
                       rng.uniform_int(cfg.experiment.support_size_max -
                                       cfg.experiment.support_size_min + 1);
      support = random_separated_support(rng, grid, size, cfg.experiment.spacing_min_units,
                                         cfg.experiment.spacing_max_units,
                                         cfg.grid.spacing_units);
    }
    out.support_size = int(support.size());

    const UnknownMatrix x = make_orthogonal_rows(support, grid.size(),
                                                 cfg.experiment.num_views,
                                                 cfg.seed + std::uint64_t(t) * 7919ULL);
    NoiseSpec noise;
    noise.sigma_fraction = cfg.noise.sigma_fraction;
    noise.seed = cfg.noise.seed + std::uint64_t(t);
    const DataMatrix data = forward_data(sensing, x, noise);

    // Interaction coefficients: exact closed form (orthogonal rows).
    const InteractionReport interaction = interaction_report(
        table, x.entries, support, MultiViewMode::kClosedFormOrthogonal);
    out.i1 = interaction.i1;
    out.i_nv = interaction.i_nv;

    std::optional<ClusterDecomposition> dec;
    double eps = choose_epsilon(cfg.solver, data.entries, data.noise_norm);
    if (clustered) {
      dec = cluster_decompose(sensing.entries, table, x.entries, support, centers);
      // the cluster estimate needs ||W + G R||_F < eps for the solver epsilon
      const double redefined = (data.entries - sensing.entries * dec->projected).norm();
      eps = std::max(eps, cfg.solver.epsilon_factor * redefined);
    }
    out.eps = eps;

    MmvProblem problem{sensing.entries, data.entries, eps};
    SolverResult res = solve_p12_eps(problem, build_solver_config(cfg.solver,
                                                                  cfg.seed + t));
    out.solver_converged = res.converged;
    if (!res.converged) return;

    auto push = [&](std::vector<BoundReport> v) {
      for (auto& b : v) out.bounds.push_back(std::move(b));
    };
    const double w_norm = (data.entries - sensing.entries * x.entries).norm();
    push(support_localization_check(sensing.entries, table, x.entries, res.solution, support, r, eps,
                        interaction.i_nv, w_norm));
    push(quantitative_estimate_check(sensing.entries, table, x.entries, res.solution, support, r, eps,
                        interaction.i_nv, interaction.i1, w_norm));

    // Lemma 1 inequalities on this trial's draw.
    const SupportSplit split = split_reconstruction(res.solution, table, support, r);
    out.bounds.push_back(functional_coercivity_bound(sensing.entries, x.entries, support, interaction.i_nv));
    out.bounds.push_back(
        functional_inside_bound(sensing.entries, x.entries, support, interaction.i_nv, split.inside));
    out.bounds.push_back(functional_outside_bound(sensing.entries, x.entries, support, interaction.i_nv, r,
                                   split.outside));
    out.bounds.push_back(functional_adjoint_bound(sensing.entries, x.entries, support,
                                   rng.cnormal_matrix(data.entries.rows(),
                                                      data.entries.cols())));

    if (clustered) {
      out.bounds.push_back(cluster_residual_check(sensing.entries, x.entries, *dec));
      for (auto& b : cluster_projection_chain_check(sensing.entries, table, *dec, x.entries))
        out.bounds.push_back(std::move(b));
      const MultiViewInteraction icl =
          cluster_interaction(table, *dec, MultiViewMode::kNumericSup, cfg.seed + t);
      out.i_nv_cluster = icl.value;
      push(cluster_localization_check(sensing.entries, table, data.entries, x.entries, res.solution,
                          *dec, r, eps, icl.value));
    }
  });

  CsvWriter csv(ctx.out_dir / "bounds.csv",
                {"trial", "support_size", "i1", "i_nv", "r", "eps", "bound", "lhs", "rhs",
                 "satisfied", "applicable"},
                ctx.preamble());
  std::map<std::string, std::array<int, 3>> tally;  // name -> {applicable, satisfied, total}
  int solver_failures = 0;
  bool cluster_coeff_smaller = true;
  for (int t = 0; t < cfg.experiment.trials; ++t) {
    const BoundTrial& trial = trials[t];
    if (!trial.solver_converged) {
      ++solver_failures;
      continue;
    }
    if (clustered && trial.i_nv_cluster >= trial.i_nv) cluster_coeff_smaller = false;
    for (const auto& b : trial.bounds) {
      csv.row({cell(t), cell(trial.support_size), cell(trial.i1), cell(trial.i_nv), cell(r),
               cell(trial.eps), b.name, cell(b.lhs), cell(b.rhs), cell(b.satisfied),
               cell(b.applicable)});
      auto& counts = tally[b.name];
      ++counts[2];
      if (b.applicable) {
        ++counts[0];
        if (b.satisfied) ++counts[1];
      }
    }
  }
  if (solver_failures > 0)
    throw SolverFailure("bound suite: " + std::to_string(solver_failures) +
                        " trial(s) did not converge");

  Json summary;
  summary["trials"] = cfg.experiment.trials;
  summary["scene_style"] = cfg.experiment.scene_style;
  bool all_satisfied = true;
  Json per_bound = Json::array();
  for (const auto& [name, counts] : tally) {
    per_bound.push_back(Json{{"bound", name},
                             {"total", counts[2]},
                             {"applicable", counts[0]},
                             {"satisfied", counts[1]}});
    if (counts[1] != counts[0]) all_satisfied = false;
  }
  summary["per_bound"] = per_bound;
  summary["all_applicable_satisfied"] = all_satisfied;
  if (clustered) summary["cluster_coefficient_always_smaller"] = cluster_coeff_smaller;
  return summary;
}

// --- entry point --------------------------------------------------------------

inline Json run_experiment(const ExperimentConfig& config,
                           const std::filesystem::path& out_dir,
                           std::optional<std::uint64_t> seed_override = std::nullopt,
                           int threads = 1) {
  ExperimentConfig cfg = config;
  if (seed_override) cfg.seed = *seed_override;

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!std::filesystem::is_directory(out_dir))
    throw ConfigError("output directory is not writable: " + out_dir.string());

  RunContext ctx{cfg, out_dir, std::max(1, threads), config_hash(cfg)};

  Json summary;
  const auto& kind = cfg.experiment.kind;
  if (kind == "ratio-histogram")
    summary = run_ratio_histogram(ctx);
  else if (kind == "imaging-comparison")
    summary = run_imaging_comparison(ctx);
  else if (kind == "subaperture-sweep")
    summary = run_subaperture_sweep(ctx);
  else if (kind == "noise-sweep")
    summary = run_noise_sweep(ctx);
  else if (kind == "polarimetric")
    summary = run_polarimetric(ctx);
  else if (kind == "bound-suite")
    summary = run_bound_suite(ctx);
  else
    throw ConfigError("unknown experiment kind: " + kind);

  Json envelope;
  envelope["kind"] = kind;
  envelope["config_hash"] = ctx.hash;
  envelope["seed"] = cfg.seed;
  envelope["config"] = config_to_json(cfg);
  envelope["results"] = summary;
  write_json(out_dir / "summary.json", envelope);
  return envelope;
}

inline Json run_experiment_file(const std::filesystem::path& config_path,
                                const std::filesystem::path& out_dir,
                                std::optional<std::uint64_t> seed_override = std::nullopt,
                                int threads = 1) {
  return run_experiment(load_config(config_path), out_dir, seed_override, threads);
}

}  // namespace mmvsar
