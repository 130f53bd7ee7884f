#pragma once

#include "mmvsar/sensing.hpp"

#include <Eigen/SVD>

namespace mmvsar {

// Symmetric 3x3 scattering tensor and its 1x6 row form
// (rho11, rho22, rho33, rho12, rho13, rho23).
struct ReflectivityTensor {
  Mat3 tensor = Mat3::Zero();

  static ReflectivityTensor from_row6(const Eigen::Matrix<double, 1, 6>& r) {
    ReflectivityTensor t;
    t.tensor << r(0), r(3), r(4), r(3), r(1), r(5), r(4), r(5), r(2);
    return t;
  }

  Eigen::Matrix<double, 1, 6> row6() const {
    Eigen::Matrix<double, 1, 6> r;
    r << tensor(0, 0), tensor(1, 1), tensor(2, 2), tensor(0, 1), tensor(0, 2), tensor(1, 2);
    return r;
  }

  void validate_symmetry(double tol = 1e-12) const {
    require((tensor - tensor.transpose()).cwiseAbs().maxCoeff() <= tol,
            "reflectivity tensor must be symmetric");
  }
};

// Direction cosines of the sub-aperture center seen from the scene center:
// n = (eta1, eta2, beta), |n| = 1.
struct DirectionCosines {
  double eta1 = 0.0;
  double eta2 = 0.0;
  double beta = 1.0;

  Vec3 vector() const { return Vec3(eta1, eta2, beta); }
};

inline DirectionCosines direction_cosines(const Vec3& platform_from_scene) {
  const double l = platform_from_scene.norm();
  require(l > 0.0, "direction_cosines: zero platform vector");
  DirectionCosines d;
  d.eta1 = platform_from_scene.x() / l;
  d.eta2 = platform_from_scene.y() / l;
  d.beta = platform_from_scene.z() / l;
  return d;
}

// Far-field angular factor of the dyadic Green tensor: the transverse
// projector I - n n^T (amplitude and phase factored out).
inline Mat3 green_tensor_far_field(const DirectionCosines& n) {
  const Vec3 v = n.vector();
  return Mat3::Identity() - v * v.transpose();
}

inline Mat3 green_tensor_far_field(const Vec3& platform_from_scene) {
  return green_tensor_far_field(direction_cosines(platform_from_scene));
}

// 6x6 map from the vectorized tensor to the polarimetric data row:
// vec_upper(P rho P) = rho_row * Gamma with P = I - n n^T. Rank 3.
struct GammaMatrix {
  Eigen::Matrix<double, 6, 6> entries = Eigen::Matrix<double, 6, 6>::Zero();
  DirectionCosines params;
};

inline GammaMatrix gamma_matrix(const DirectionCosines& n) {
  const double e1 = n.eta1, e2 = n.eta2, b = n.beta;
  require(std::abs(e1 * e1 + e2 * e2 + b * b - 1.0) < 1e-9,
          "gamma_matrix: direction cosines must be a unit triple");
  GammaMatrix g;
  g.params = n;
  auto& m = g.entries;

  const double p11 = 1.0 - e1 * e1, p22 = 1.0 - e2 * e2, p33 = 1.0 - b * b;
  const double p12 = -e1 * e2, p13 = -e1 * b, p23 = -e2 * b;

  m.diagonal() << p11 * p11, p22 * p22, p33 * p33,
      p11 * p22 + p12 * p12, p11 * p33 + p13 * p13, p22 * p33 + p23 * p23;

  m(0, 1) = p12 * p12; m(0, 2) = p13 * p13;
  m(0, 3) = p11 * p12; m(0, 4) = p11 * p13; m(0, 5) = p12 * p13;
  m(1, 0) = p12 * p12; m(1, 2) = p23 * p23;
  m(1, 3) = p12 * p22; m(1, 4) = p12 * p23; m(1, 5) = p22 * p23;
  m(2, 0) = p13 * p13; m(2, 1) = p23 * p23;
  m(2, 3) = p13 * p23; m(2, 4) = p13 * p33; m(2, 5) = p23 * p33;
  m(3, 0) = 2.0 * p11 * p12; m(3, 1) = 2.0 * p12 * p22; m(3, 2) = 2.0 * p13 * p23;
  m(3, 4) = p11 * p23 + p12 * p13; m(3, 5) = p12 * p23 + p13 * p22;
  m(4, 0) = 2.0 * p11 * p13; m(4, 1) = 2.0 * p12 * p23; m(4, 2) = 2.0 * p13 * p33;
  m(4, 3) = p11 * p23 + p12 * p13; m(4, 5) = p12 * p33 + p13 * p23;
  m(5, 0) = 2.0 * p12 * p13; m(5, 1) = 2.0 * p22 * p23; m(5, 2) = 2.0 * p23 * p33;
  m(5, 3) = p12 * p23 + p13 * p22; m(5, 4) = p12 * p33 + p13 * p23;
  return g;
}

inline GammaMatrix gamma_matrix(double eta1, double eta2, double beta) {
  DirectionCosines n;
  n.eta1 = eta1;
  n.eta2 = eta2;
  n.beta = beta;
  return gamma_matrix(n);
}

// Orthonormal eigenbasis of the far-field projector with v3 along the
// platform direction; v1, v2 by deterministic Gram-Schmidt completion.
struct ProjectionEigenbasis {
  Vec3 v1 = Vec3::UnitX();
  Vec3 v2 = Vec3::UnitY();
  Vec3 v3 = Vec3::UnitZ();
};

inline ProjectionEigenbasis projection_eigenbasis(const Vec3& platform_from_scene) {
  const double l = platform_from_scene.norm();
  require(l > 0.0, "projection_eigenbasis: zero platform vector");
  ProjectionEigenbasis b;
  b.v3 = platform_from_scene / l;
  const Vec3 candidates[3] = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  int found = 0;
  Vec3 basis[2];
  for (const Vec3& u : candidates) {
    Vec3 w = u - b.v3 * b.v3.dot(u);
    for (int i = 0; i < found; ++i) w -= basis[i] * basis[i].dot(w);
    if (w.norm() > 1e-8) {
      basis[found++] = w / w.norm();
      if (found == 2) break;
    }
  }
  b.v1 = basis[0];
  b.v2 = basis[1];
  return b;
}

// Minimum-norm tensor from a recovered data row, solving rho_row Gamma =
// x_row by a rank-3 truncated SVD. The norm minimized is the Frobenius norm
// of the tensor (off-diagonal entries count twice in the 6-vector), which is
// what zeroes the unobservable look-direction components; the plain
// vectorized l2 norm would leave residue there.
inline ReflectivityTensor recover_tensor_minnorm(const Eigen::Matrix<Complex, 1, 6>& x_row,
                                                 const GammaMatrix& gamma) {
  Eigen::Matrix<double, 6, 1> weights;
  weights << 1.0, 1.0, 1.0, 2.0, 2.0, 2.0;
  const Eigen::Matrix<double, 6, 1> inv_sqrt_w = weights.cwiseSqrt().cwiseInverse();
  const Eigen::Matrix<double, 6, 6> scaled = inv_sqrt_w.asDiagonal() * gamma.entries;

  Eigen::JacobiSVD<Eigen::Matrix<double, 6, 6>> svd(
      scaled, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-8 * sv(0);
  Eigen::Matrix<Complex, 6, 1> sigma = Eigen::Matrix<Complex, 6, 1>::Zero();
  for (int i = 0; i < 6; ++i) {
    if (sv(i) <= cutoff) break;
    const Complex coeff = (x_row * svd.matrixV().col(i).cast<Complex>())(0, 0) / sv(i);
    sigma += coeff * svd.matrixU().col(i).cast<Complex>();
  }
  // undo the row scaling; tensors are real symmetric, so keep the real part
  // (the imaginary residue is at the noise level)
  Eigen::Matrix<double, 1, 6> r;
  for (int i = 0; i < 6; ++i) r(i) = sigma(i).real() * inv_sqrt_w(i);
  return ReflectivityTensor::from_row6(r);
}

// One scatterer with a polarization tensor; visibility handled as in the
// scalar scene.
struct TensorScatterer {
  int grid_index = 0;
  ReflectivityTensor tensor;
  double visibility_center = 0.0;
  double visibility_width = 1.0;
  WindowKind window = WindowKind::kConstant;

  double value_at(double along_aperture) const {
    if (window == WindowKind::kConstant) return 1.0;
    return window_value(window, (along_aperture - visibility_center) / visibility_width);
  }
};

struct PolarimetricScene {
  std::vector<TensorScatterer> scatterers;
  IndexSet support;

  static PolarimetricScene from_scatterers(std::vector<TensorScatterer> list, int grid_size) {
    PolarimetricScene s;
    IndexSet idx;
    for (auto& t : list) {
      require(t.grid_index >= 0 && t.grid_index < grid_size,
              "polarimetric scene: grid index out of range");
      t.tensor.validate_symmetry(1e-10);
      idx.push_back(t.grid_index);
    }
    s.scatterers = std::move(list);
    s.support = sorted_unique(idx);
    return s;
  }
};

struct PolForwardResult {
  UnknownMatrix unknown;  // N_y x 6 N_v, rows x_q = rho_row Gamma (times model phase)
  DataMatrix data;        // N_r x 6 N_v
};

// Polarization-diverse forward model. A single sub-aperture uses the raw
// exact-phase kernel (simulation and inversion share the matrix); multiple
// sub-apertures go through the down-ramped kernel with the scalar model
// phase carried by X, exactly like the scalar chain.
inline PolForwardResult pol_forward(const PolarimetricScene& scene, const ImagingGrid& grid,
                                    const std::vector<SubAperture>& subs,
                                    const ApertureGeometry& geom, const NoiseSpec& noise) {
  const int ny = grid.size();
  const int nv = int(subs.size());
  const int nr = subs.front().num_receivers();
  const bool single_view = nv == 1;

  PolForwardResult out;
  out.unknown.entries = CMatrix::Zero(ny, 6 * nv);
  out.unknown.support = scene.support;
  out.data.entries = CMatrix::Zero(nr, 6 * nv);

  for (int v = 0; v < nv; ++v) {
    const SubAperture& sub = subs[v];
    require(sub.num_receivers() == nr, "pol_forward: ragged sub-apertures");
    const Vec3 platform = sub.center - geom.scene_center;
    const GammaMatrix gamma = gamma_matrix(direction_cosines(platform));
    const double s = (sub.center - geom.aperture_center).dot(geom.tangent);

    CMatrix amplitude = CMatrix::Zero(ny, 6);  // rho_row Gamma per pixel
    for (const auto& sc : scene.scatterers) {
      const Eigen::Matrix<double, 1, 6> row = sc.value_at(s) * sc.tensor.row6() * gamma.entries;
      amplitude.row(sc.grid_index) += row.cast<Complex>();
    }

    CMatrix block = amplitude;
    if (!single_view)
      for (int q = 0; q < ny; ++q)
        block.row(q) *= model_phase_factor(sub, geom.scene_center, grid.points[q]);
    out.unknown.entries.middleCols(6 * v, 6) = block;

    const CMatrix kernel =
        single_view ? exact_kernel(sub.antenna_positions, grid, sub.wavenumber)
                    : exact_downramped_kernel(sub.antenna_positions, grid, geom.scene_center,
                                              sub.wavenumber);
    out.data.entries.middleCols(6 * v, 6) = kernel * amplitude;
  }
  add_noise(out.data.entries, noise, out.data);
  return out;
}

}  // namespace mmvsar
