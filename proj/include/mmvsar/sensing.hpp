#pragma once

#include "mmvsar/scene.hpp"

namespace mmvsar {

enum class PhaseMode { kLinearized, kExact };

// Normalized-column sensing matrix. Linearized mode is the reduced model
// kernel exp[-2ik dr.P dy / L]/sqrt(Nr) relative to the reference
// sub-aperture; exact mode uses the raw phases exp[2ik|r - y|]/sqrt(Nr).
struct SensingMatrix {
  CMatrix entries;
  double wavenumber = 0.0;
  SubAperture reference;
  PhaseMode phase_mode = PhaseMode::kLinearized;

  int num_receivers() const { return int(entries.rows()); }
  int num_pixels() const { return int(entries.cols()); }
};

struct NoiseSpec {
  double sigma_fraction = 0.0;  // of the largest |entry| of the noiseless data
  std::uint64_t seed = 0;
};

struct DataMatrix {
  CMatrix entries;
  double noise_sigma = 0.0;  // absolute sigma actually applied
  double noise_sigma_fraction = 0.0;
  double noise_norm = 0.0;  // ||W||_F of the realized draw
  std::uint64_t seed = 0;
};

// --- kernels ------------------------------------------------------------

inline CMatrix linearized_kernel(const SubAperture& sub, const ImagingGrid& grid,
                                 const Vec3& scene_center) {
  const int nr = sub.num_receivers();
  const int ny = grid.size();
  CMatrix g(nr, ny);
  const double scale = 1.0 / std::sqrt(double(nr));
  for (int q = 0; q < ny; ++q) {
    const Vec3 pdy = sub.projector * (grid.points[q] - scene_center);
    for (int j = 0; j < nr; ++j) {
      const Vec3 dr = sub.antenna_positions[j] - sub.center;
      const double phase = -2.0 * sub.wavenumber * dr.dot(pdy) / sub.standoff;
      g(j, q) = scale * std::exp(Complex(0.0, phase));
    }
  }
  return g;
}

inline CMatrix exact_kernel(const std::vector<Vec3>& positions, const ImagingGrid& grid,
                            double wavenumber) {
  const int nr = int(positions.size());
  const int ny = grid.size();
  CMatrix g(nr, ny);
  const double scale = 1.0 / std::sqrt(double(nr));
  for (int q = 0; q < ny; ++q)
    for (int j = 0; j < nr; ++j) {
      const double phase = 2.0 * wavenumber * (positions[j] - grid.points[q]).norm();
      g(j, q) = scale * std::exp(Complex(0.0, phase));
    }
  return g;
}

// Down-ramped exact kernel exp[2ik(|r - y| - |r - ybar|)]/sqrt(Nr): the raw
// phases synchronized with the round trip to the scene center. Expands to
// the linearized kernel times the model phase factor, up to the cubic
// remainder controlled by the scaling conditions.
inline CMatrix exact_downramped_kernel(const std::vector<Vec3>& positions,
                                       const ImagingGrid& grid, const Vec3& scene_center,
                                       double wavenumber) {
  const int nr = int(positions.size());
  const int ny = grid.size();
  CMatrix g(nr, ny);
  const double scale = 1.0 / std::sqrt(double(nr));
  for (int q = 0; q < ny; ++q)
    for (int j = 0; j < nr; ++j) {
      const double delay = (positions[j] - grid.points[q]).norm() -
                           (positions[j] - scene_center).norm();
      g(j, q) = scale * std::exp(Complex(0.0, 2.0 * wavenumber * delay));
    }
  return g;
}

inline SensingMatrix build_sensing_matrix(const ImagingGrid& grid, const SubAperture& ref,
                                          const Vec3& scene_center,
                                          PhaseMode mode = PhaseMode::kLinearized) {
  require(grid.size() >= 1, "build_sensing_matrix: empty grid");
  require(ref.num_receivers() >= 1, "build_sensing_matrix: reference sub-aperture has no receivers");
  SensingMatrix g;
  g.wavenumber = ref.wavenumber;
  g.reference = ref;
  g.phase_mode = mode;
  g.entries = mode == PhaseMode::kLinearized
                  ? linearized_kernel(ref, grid, scene_center)
                  : exact_kernel(ref.antenna_positions, grid, ref.wavenumber);
  return g;
}

// mu(g_j, g_q) = <g_j, g_q>, Hermitian inner product of unit columns.
inline Complex column_correlation(const CMatrix& g, int j, int q) {
  return (g.col(j).adjoint() * g.col(q))(0, 0);
}

inline Complex column_correlation(const SensingMatrix& g, int j, int q) {
  return column_correlation(g.entries, j, q);
}

// Continuum limit of the column correlation over the reference sub-aperture:
// sinc[k a tau.P (y_q - y_l) / L].
inline double sinc_correlation(const ApertureGeometry& geom, const SubAperture& ref,
                               double separation) {
  require(ref.length > 0.0, "sinc_correlation: zero-length sub-aperture");
  const Vec3 dy = separation * geom.tangent;
  const double arg =
      ref.wavenumber * ref.length * geom.tangent.dot(ref.projector * dy) / ref.standoff;
  return sinc(arg);
}

// --- forward simulation ---------------------------------------------------

enum class SimulationMode {
  kMatched,            // D = G_ref X + W, zero model error
  kLinearizedPerView,  // per-view linearized kernels (cross-view error only)
  kExact               // down-ramped exact phases (full model error)
};

inline SimulationMode simulation_mode_from_string(const std::string& s) {
  if (s == "matched") return SimulationMode::kMatched;
  if (s == "linearized") return SimulationMode::kLinearizedPerView;
  if (s == "exact") return SimulationMode::kExact;
  throw std::invalid_argument("unknown simulation mode: " + s);
}

struct SimulationSpec {
  SimulationMode mode = SimulationMode::kExact;
  bool include_phase_factor = true;  // must match sample_unknown_matrix
};

inline void add_noise(CMatrix& d, const NoiseSpec& noise, DataMatrix& out) {
  out.noise_sigma_fraction = noise.sigma_fraction;
  out.seed = noise.seed;
  out.noise_sigma = 0.0;
  out.noise_norm = 0.0;
  if (noise.sigma_fraction <= 0.0) return;
  const double peak = d.cwiseAbs().maxCoeff();
  out.noise_sigma = noise.sigma_fraction * peak;
  Rng rng(noise.seed);
  double energy = 0.0;
  for (Eigen::Index j = 0; j < d.rows(); ++j)
    for (Eigen::Index v = 0; v < d.cols(); ++v) {
      const Complex w = out.noise_sigma * rng.cnormal();
      energy += std::norm(w);
      d(j, v) += w;
    }
  out.noise_norm = std::sqrt(energy);
}

// Matched forward model: data from the same matrix used for inversion.
inline DataMatrix forward_data(const SensingMatrix& g, const UnknownMatrix& x,
                               const NoiseSpec& noise) {
  require(g.num_pixels() == x.rows(), "forward_data: dimension mismatch");
  DataMatrix d;
  d.entries = g.entries * x.entries;
  add_noise(d.entries, noise, d);
  return d;
}

// Per-view forward model. In exact mode the kernel acts on the amplitude
// part of X (the model phase factor is divided out when X carries it), so
// the simulated data differ from G_ref X only by the honest expansion error.
inline DataMatrix forward_data(const std::vector<SubAperture>& subs, const ImagingGrid& grid,
                               const ApertureGeometry& geom, const UnknownMatrix& x,
                               const SimulationSpec& sim, const NoiseSpec& noise) {
  require(x.rows() == grid.size(), "forward_data: unknown matrix does not match grid");
  require(x.cols() == int(subs.size()), "forward_data: unknown matrix does not match views");
  const int nr = subs.front().num_receivers();
  DataMatrix d;
  d.entries = CMatrix::Zero(nr, Eigen::Index(subs.size()));
  for (std::size_t v = 0; v < subs.size(); ++v) {
    require(subs[v].num_receivers() == nr, "forward_data: ragged sub-apertures");
    CMatrix kernel;
    switch (sim.mode) {
      case SimulationMode::kMatched:
        kernel = linearized_kernel(subs.front(), grid, geom.scene_center);
        break;
      case SimulationMode::kLinearizedPerView:
        kernel = linearized_kernel(subs[v], grid, geom.scene_center);
        break;
      case SimulationMode::kExact:
        kernel = exact_downramped_kernel(subs[v].antenna_positions, grid, geom.scene_center,
                                         subs[v].wavenumber);
        if (sim.include_phase_factor)
          for (int q = 0; q < grid.size(); ++q)
            kernel.col(q) *= std::conj(
                model_phase_factor(subs[v], geom.scene_center, grid.points[q]));
        break;
    }
    d.entries.col(Eigen::Index(v)) = kernel * x.entries.col(Eigen::Index(v));
  }
  add_noise(d.entries, noise, d);
  return d;
}

// Scene-level simulation over an arbitrary antenna track, with the
// visibility window evaluated at every position. This is the input of the
// conventional image over the full aperture, where the reflectivity is not
// constant across the track.
inline CVector forward_data_positions(const Scene& scene, const ImagingGrid& grid,
                                      const std::vector<Vec3>& positions,
                                      const ApertureGeometry& geom) {
  const int nr = int(positions.size());
  CVector d = CVector::Zero(nr);
  const double k = geom.wavenumber();
  const double scale = 1.0 / std::sqrt(double(nr));
  for (const auto& p : scene.profiles) {
    const Vec3& y = grid.points[p.grid_index];
    for (int j = 0; j < nr; ++j) {
      const double s = (positions[j] - geom.aperture_center).dot(geom.tangent);
      const Complex amp = p.amplitude * p.value_at(s);
      if (amp == Complex(0.0, 0.0)) continue;
      const double delay = (positions[j] - y).norm() - (positions[j] - geom.scene_center).norm();
      d(j) += scale * amp * std::exp(Complex(0.0, 2.0 * k * delay));
    }
  }
  return d;
}

// Matched-filter image I[q] = |<g_q, d>| per pixel.
inline RVector migration_image(const CMatrix& g, const CVector& d) {
  require(g.rows() == d.size(), "migration_image: dimension mismatch");
  return (g.adjoint() * d).cwiseAbs();
}

inline RVector migration_image(const SensingMatrix& g, const CVector& d) {
  return migration_image(g.entries, d);
}

}  // namespace mmvsar
