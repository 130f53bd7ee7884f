#pragma once

#include "mmvsar/core.hpp"

namespace mmvsar {

// Linear synthetic aperture along the unit tangent tau, at standoff
// L_o = |aperture_center - scene_center| from the imaging region center.
struct ApertureGeometry {
  Vec3 scene_center = Vec3::Zero();
  Vec3 aperture_center = Vec3(-7000.0, 0.0, 8000.0);
  Vec3 tangent = Vec3(0.0, 1.0, 0.0);
  double aperture_length = 1500.0;   // A, m
  double element_spacing = 1.0;      // antenna step along tau, m
  double altitude = 8000.0;          // h, m
  double central_frequency = 1.0e10; // Hz
  double wave_speed = 3.0e8;         // m/s
  bool include_endpoint = true;      // N_r = floor(a/spacing) + 1 when true

  double wavelength() const { return wave_speed / central_frequency; }
  double wavenumber() const { return 2.0 * kPi / wavelength(); }
  double standoff() const { return (aperture_center - scene_center).norm(); }
  Vec3 range_unit() const { return (aperture_center - scene_center) / standoff(); }
  // Cross-range resolution of the full aperture, lambda * L_o / A.
  double resolution_unit() const { return wavelength() * standoff() / aperture_length; }

  void validate() const {
    require(std::abs(tangent.norm() - 1.0) < 1e-9, "geometry: tangent must be a unit vector");
    require(aperture_length > 0.0, "geometry: aperture length must be positive");
    require(element_spacing > 0.0, "geometry: element spacing must be positive");
    require(element_spacing <= aperture_length, "geometry: element spacing exceeds aperture");
    require(central_frequency > 0.0 && wave_speed > 0.0, "geometry: frequency and wave speed must be positive");
    require(standoff() > 0.0, "geometry: aperture center coincides with scene center");
  }
};

// One view: a segment of the aperture with its own range axis and
// cross-range projector P_v = I - m_v m_v^T.
struct SubAperture {
  int index = 0;
  Vec3 center = Vec3::Zero();
  double length = 0.0;  // a, m
  std::vector<Vec3> antenna_positions;
  Vec3 range_unit = Vec3::Zero();  // m_v
  Mat3 projector = Mat3::Identity();
  double standoff = 0.0;  // L_v
  double wavenumber = 0.0;

  int num_receivers() const { return int(antenna_positions.size()); }
};

struct ImagingGrid {
  std::vector<Vec3> points;
  double spacing = 0.0;          // m between adjacent points
  double resolution_unit = 0.0;  // lambda * L_o / A, m

  int size() const { return int(points.size()); }
  // Signed cross-range coordinate of point q in resolution units.
  double coordinate_units(const ApertureGeometry& geom, int q) const {
    return (points[q] - geom.scene_center).dot(geom.tangent) / resolution_unit;
  }
};

inline std::vector<Vec3> antenna_positions(const Vec3& center, double length,
                                           const Vec3& tangent, double spacing,
                                           bool include_endpoint = true) {
  require(spacing > 0.0, "antenna_positions: spacing must be positive");
  require(spacing <= length, "antenna_positions: spacing exceeds sub-aperture length");
  int n = int(std::floor(length / spacing + 1e-9)) + 1;
  if (!include_endpoint) n -= 1;
  std::vector<Vec3> out;
  out.reserve(n);
  for (int j = 0; j < n; ++j)
    out.push_back(center - 0.5 * length * tangent + j * spacing * tangent);
  return out;
}

inline std::vector<Vec3> antenna_positions(const SubAperture& sub, double spacing,
                                           const Vec3& tangent,
                                           bool include_endpoint = true) {
  return antenna_positions(sub.center, sub.length, tangent, spacing, include_endpoint);
}

inline SubAperture make_sub_aperture(const ApertureGeometry& geom, const Vec3& center,
                                     double length, int index) {
  SubAperture sub;
  sub.index = index;
  sub.center = center;
  sub.length = length;
  sub.standoff = (center - geom.scene_center).norm();
  sub.range_unit = (center - geom.scene_center) / sub.standoff;
  sub.projector = Mat3::Identity() - sub.range_unit * sub.range_unit.transpose();
  sub.wavenumber = geom.wavenumber();
  sub.antenna_positions = antenna_positions(center, length, geom.tangent,
                                            geom.element_spacing, geom.include_endpoint);
  return sub;
}

// Splits the aperture of length A into sub-apertures of length a whose
// centers step by center_spacing along tau, symmetric about the aperture
// center. Overlap is permitted.
inline std::vector<SubAperture> segment_aperture(const ApertureGeometry& geom,
                                                 double sub_length,
                                                 double center_spacing) {
  geom.validate();
  require(sub_length > 0.0 && sub_length <= geom.aperture_length,
          "segment_aperture: sub-aperture length must lie in (0, A]");
  require(center_spacing > 0.0, "segment_aperture: center spacing must be positive");

  const double span = geom.aperture_length - sub_length;
  const int n = int(std::floor(span / center_spacing + 1e-9)) + 1;
  std::vector<SubAperture> subs;
  subs.reserve(n);
  const double start = -0.5 * double(n - 1) * center_spacing;
  for (int v = 0; v < n; ++v) {
    const Vec3 center = geom.aperture_center + (start + v * center_spacing) * geom.tangent;
    subs.push_back(make_sub_aperture(geom, center, sub_length, v));
  }
  return subs;
}

// Same segmentation, but with the number of views given instead of the
// spacing (centers span the admissible range end to end).
inline std::vector<SubAperture> segment_aperture_views(const ApertureGeometry& geom,
                                                       double sub_length, int num_views) {
  require(num_views >= 1, "segment_aperture_views: need at least one view");
  if (num_views == 1) {
    geom.validate();
    return {make_sub_aperture(geom, geom.aperture_center, sub_length, 0)};
  }
  const double spacing = (geom.aperture_length - sub_length) / double(num_views - 1);
  require(spacing > 0.0, "segment_aperture_views: too many views for this sub-aperture length");
  return segment_aperture(geom, sub_length, spacing);
}

// Cross-range line through the scene center along tau. Extent and spacing
// are in resolution units (lambda L_o / A); endpoints are included, so the
// count is round(extent/spacing) + 1.
inline ImagingGrid imaging_grid(const ApertureGeometry& geom, double extent_units,
                                double spacing_units) {
  geom.validate();
  require(extent_units > 0.0, "imaging_grid: extent must be positive");
  require(spacing_units > 0.0 && spacing_units <= extent_units,
          "imaging_grid: spacing must lie in (0, extent]");

  ImagingGrid grid;
  grid.resolution_unit = geom.resolution_unit();
  grid.spacing = spacing_units * grid.resolution_unit;
  const int n = int(std::llround(extent_units / spacing_units)) + 1;
  require(n >= 1, "imaging_grid: empty grid");
  grid.points.reserve(n);
  const double start = -0.5 * extent_units * grid.resolution_unit;
  for (int q = 0; q < n; ++q)
    grid.points.push_back(geom.scene_center + (start + q * grid.spacing) * geom.tangent);
  return grid;
}

// Fresnel numbers of the imaging regime and the smallness ratios that
// control the linearized model error. Reported, never enforced.
struct ScalingReport {
  double fresnel_aperture = 0.0;     // a^2 / (lambda L)
  double fresnel_scene = 0.0;        // Y_perp^2 / (lambda L)
  double phase_error_scale = 0.0;    // a^2 Y_perp / (lambda L^2)
  bool fresnel_ok = false;           // both Fresnel numbers >~ 1
  bool smallness_ok = false;         // phase error scale << 1
};

inline ScalingReport scaling_report(const ApertureGeometry& geom, double sub_length,
                                    double cross_range_extent) {
  ScalingReport rep;
  const double lambda = geom.wavelength();
  const double L = geom.standoff();
  rep.fresnel_aperture = sub_length * sub_length / (lambda * L);
  rep.fresnel_scene = cross_range_extent * cross_range_extent / (lambda * L);
  rep.phase_error_scale = sub_length * sub_length * cross_range_extent / (lambda * L * L);
  rep.fresnel_ok = rep.fresnel_aperture >= 1.0 && rep.fresnel_scene >= 1.0;
  rep.smallness_ok = rep.phase_error_scale < 0.1;
  return rep;
}

}  // namespace mmvsar
