#pragma once

#include "mmvsar/geometry.hpp"

namespace mmvsar {

enum class WindowKind { kBoxcar, kGaussian, kRaisedCosine, kConstant };

inline WindowKind window_kind_from_string(const std::string& s) {
  if (s == "boxcar") return WindowKind::kBoxcar;
  if (s == "gaussian") return WindowKind::kGaussian;
  if (s == "raisedCosine" || s == "raised_cosine") return WindowKind::kRaisedCosine;
  if (s == "constant") return WindowKind::kConstant;
  throw std::invalid_argument("unknown window kind: " + s);
}

inline std::string to_string(WindowKind k) {
  switch (k) {
    case WindowKind::kBoxcar: return "boxcar";
    case WindowKind::kGaussian: return "gaussian";
    case WindowKind::kRaisedCosine: return "raisedCosine";
    case WindowKind::kConstant: return "constant";
  }
  return "?";
}

// u = (s - center)/width with s the along-aperture coordinate. For boxcar
// and raisedCosine, width is the full width of the visibility cone; for
// gaussian it is the standard deviation.
inline double window_value(WindowKind kind, double u) {
  switch (kind) {
    case WindowKind::kBoxcar: return std::abs(u) <= 0.5 ? 1.0 : 0.0;
    case WindowKind::kGaussian: return std::exp(-0.5 * u * u);
    case WindowKind::kRaisedCosine:
      return std::abs(u) <= 0.5 ? 0.5 * (1.0 + std::cos(2.0 * kPi * u)) : 0.0;
    case WindowKind::kConstant: return 1.0;
  }
  return 0.0;
}

// Direction-dependent reflectivity of one scatterer: complex amplitude
// modulated by a visibility window along the aperture.
struct ReflectivityProfile {
  int grid_index = 0;
  Complex amplitude = Complex(1.0, 0.0);
  double visibility_center = 0.0;  // m along tau, measured from the aperture center
  double visibility_width = 1.0;   // m, full width
  WindowKind window = WindowKind::kConstant;

  double value_at(double along_aperture) const {
    if (window == WindowKind::kConstant) return 1.0;
    return window_value(window, (along_aperture - visibility_center) / visibility_width);
  }
};

struct Scene {
  std::vector<ReflectivityProfile> profiles;
  IndexSet support;  // sorted distinct grid indexes

  static Scene from_profiles(std::vector<ReflectivityProfile> profiles, int grid_size) {
    Scene scene;
    IndexSet s;
    for (const auto& p : profiles) {
      require(p.grid_index >= 0 && p.grid_index < grid_size,
              "scene: profile grid index out of range");
      require(p.window == WindowKind::kConstant || p.visibility_width > 0.0,
              "scene: visibility width must be positive");
      s.push_back(p.grid_index);
    }
    scene.profiles = std::move(profiles);
    scene.support = sorted_unique(s);
    return scene;
  }
};

// Reflectivity matrix with declared row support.
struct UnknownMatrix {
  CMatrix entries;
  IndexSet support;

  int rows() const { return int(entries.rows()); }
  int cols() const { return int(entries.cols()); }
};

// Deterministic phase factor of the reduced data model, evaluated with the
// sub-aperture's own range axis: exp[-2ik (m_v.dy - dy.P_v dy / (2 L_v))].
inline Complex model_phase_factor(const SubAperture& sub, const Vec3& scene_center,
                                  const Vec3& point) {
  const Vec3 dy = point - scene_center;
  const double linear = sub.range_unit.dot(dy);
  const double quadratic = dy.dot(sub.projector * dy) / (2.0 * sub.standoff);
  return std::exp(Complex(0.0, -2.0 * sub.wavenumber * (linear - quadratic)));
}

// X[q,v]: window amplitude sampled at the center of sub-aperture v, times
// the model phase factor (optional). Rows outside the scene support are zero.
inline UnknownMatrix sample_unknown_matrix(const Scene& scene, const ImagingGrid& grid,
                                           const std::vector<SubAperture>& subs,
                                           const ApertureGeometry& geom,
                                           bool include_phase_factor = true) {
  UnknownMatrix x;
  x.entries = CMatrix::Zero(grid.size(), Eigen::Index(subs.size()));
  x.support = scene.support;
  for (const auto& p : scene.profiles) {
    for (std::size_t v = 0; v < subs.size(); ++v) {
      const double s = (subs[v].center - geom.aperture_center).dot(geom.tangent);
      Complex val = p.amplitude * p.value_at(s);
      if (include_phase_factor && val != Complex(0.0, 0.0))
        val *= model_phase_factor(subs[v], geom.scene_center, grid.points[p.grid_index]);
      x.entries(p.grid_index, Eigen::Index(v)) += val;
    }
  }
  return x;
}

// Rows indexed by S form an orthogonal set (orthonormal after row
// normalization), with random positive magnitudes. Deterministic in seed.
inline UnknownMatrix make_orthogonal_rows(const IndexSet& support, int grid_size,
                                          int num_views, std::uint64_t seed) {
  const IndexSet s = sorted_unique(support);
  const int k = int(s.size());
  require(k >= 1, "make_orthogonal_rows: empty support");
  require(k <= num_views, "make_orthogonal_rows: |S| exceeds the number of views");
  require(s.front() >= 0 && s.back() < grid_size, "make_orthogonal_rows: support out of range");

  Rng rng(seed);
  CMatrix rows = rng.cnormal_matrix(k, num_views);
  // Gram-Schmidt on the rows; Ginibre rows are almost surely independent.
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < i; ++j)
      rows.row(i) -= (rows.row(j).conjugate().cwiseProduct(rows.row(i))).sum() * rows.row(j);
    const double n = rows.row(i).norm();
    require(n > 1e-12, "make_orthogonal_rows: degenerate random draw");
    rows.row(i) /= n;
  }
  UnknownMatrix x;
  x.entries = CMatrix::Zero(grid_size, num_views);
  x.support = s;
  for (int i = 0; i < k; ++i) x.entries.row(s[i]) = rng.uniform(0.5, 2.0) * rows.row(i);
  return x;
}

}  // namespace mmvsar
