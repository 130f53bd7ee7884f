#pragma once

#include "mmvsar/sensing.hpp"
#include "mmvsar/solver.hpp"

#include <map>

namespace mmvsar {

// Pairwise pixel distances D(j,q) = 1 - |mu(g_j,g_q)| together with the
// complex column correlations they came from.
struct SemimetricTable {
  RMatrix dist;
  CMatrix gram;  // mu(g_j, g_q)

  int size() const { return int(dist.rows()); }
  double operator()(int j, int q) const { return dist(j, q); }
  Complex mu(int j, int q) const { return gram(j, q); }
  double mu_abs(int j, int q) const { return 1.0 - dist(j, q); }
};

inline SemimetricTable semimetric_table(const CMatrix& g) {
  SemimetricTable t;
  t.gram = g.adjoint() * g;
  const int n = int(t.gram.rows());
  t.dist.resize(n, n);
  for (int j = 0; j < n; ++j) {
    t.dist(j, j) = 0.0;
    for (int q = j + 1; q < n; ++q) {
      const double d = std::clamp(1.0 - std::abs(t.gram(j, q)), 0.0, 1.0);
      t.dist(j, q) = d;
      t.dist(q, j) = d;
    }
  }
  return t;
}

inline SemimetricTable semimetric_table(const SensingMatrix& g) {
  return semimetric_table(g.entries);
}

// n(j): index of the point in S closest to pixel j; ties go to the smaller
// index.
inline int nearest_support_index(const SemimetricTable& table, const IndexSet& support,
                                 int j) {
  require(!support.empty(), "nearest_support_index: empty support");
  int best = support.front();
  double best_d = table(j, best);
  for (int q : support)
    if (table(j, q) < best_d) {
      best = q;
      best_d = table(j, q);
    }
  return best;
}

// r-vicinity B_r(S): pixels within semimetric distance r of the support.
inline IndexSet vicinity_set(const SemimetricTable& table, const IndexSet& support,
                             double r) {
  require(r > 0.0 && r <= 1.0, "vicinity_set: r must lie in (0, 1]");
  IndexSet out;
  for (int j = 0; j < table.size(); ++j) {
    double dmin = 2.0;
    for (int q : support) dmin = std::min(dmin, table(j, q));
    if (dmin < r) out.push_back(j);
  }
  return out;
}

struct SingleViewInteraction {
  double value = 0.0;
  RVector per_pixel;
  int argmax = 0;
};

// I_1 = max_j sum_{q in S \ n(j)} |mu(g_j, g_q)|
inline SingleViewInteraction interaction_single(const SemimetricTable& table,
                                                const IndexSet& support) {
  require(!support.empty(), "interaction_single: empty support");
  SingleViewInteraction out;
  out.per_pixel = RVector::Zero(table.size());
  for (int j = 0; j < table.size(); ++j) {
    const int nj = nearest_support_index(table, support, j);
    double s = 0.0;
    for (int q : support)
      if (q != nj) s += table.mu_abs(j, q);
    out.per_pixel(j) = s;
    if (s > out.value) {
      out.value = s;
      out.argmax = j;
    }
  }
  return out;
}

enum class MultiViewMode { kClosedFormOrthogonal, kNumericSup };

struct MultiViewInteraction {
  double value = 0.0;
  RVector per_pixel;
  int argmax = 0;
  bool is_lower_bound = false;  // numericSup maximizes a nonconvex objective
};

namespace detail {

// Normalized nonzero rows of X restricted to S, in support order.
inline CMatrix normalized_support_rows(const CMatrix& x, const IndexSet& support) {
  CMatrix rows(Eigen::Index(support.size()), x.cols());
  for (std::size_t i = 0; i < support.size(); ++i) {
    const double n = x.row(support[i]).norm();
    require(n > 0.0, "interaction_multi: zero row inside the support");
    rows.row(Eigen::Index(i)) = x.row(support[i]) / n;
  }
  return rows;
}

// One step of the phase-alignment fixed point: align each term's phase,
// move v to the maximizing unit vector, and report the objective value
// sum_q a_q |<v, xhat_q>| at the incoming v.
inline double phase_alignment_step(const CMatrix& xhat, const RVector& weights,
                                   Eigen::RowVectorXcd& v) {
  const Eigen::Index k = xhat.rows();
  Eigen::RowVectorXcd inner = v * xhat.adjoint();  // <v, xhat_q>
  double value = 0.0;
  Eigen::RowVectorXcd w = Eigen::RowVectorXcd::Zero(xhat.cols());
  for (Eigen::Index q = 0; q < k; ++q) {
    const double mag = std::abs(inner(q));
    value += weights(q) * mag;
    const Complex phase = mag > 0.0 ? inner(q) / mag : Complex(1.0, 0.0);
    w += weights(q) * phase * xhat.row(q);
  }
  const double wn = w.norm();
  if (wn > 0.0) v = w / wn;
  return value;
}

// sup over unit v of sum_q a_q |<v, xhat_q>| by iterating the step above.
// Each step is an ascent, so the best value over restarts is a certified
// lower bound on the true sup.
inline double phase_alignment_sup(const CMatrix& xhat, const RVector& weights,
                                  std::uint64_t seed) {
  const Eigen::Index k = xhat.rows();
  const Eigen::Index nv = xhat.cols();
  double best = 0.0;
  Rng rng(seed);
  auto run = [&](Eigen::RowVectorXcd v) {
    double value = 0.0;
    for (int it = 0; it < 300; ++it) {
      const double next = phase_alignment_step(xhat, weights, v);
      if (next <= value * (1.0 + 1e-13)) return std::max(next, value);
      value = next;
    }
    return value;
  };
  for (Eigen::Index q = 0; q < k; ++q)
    if (weights(q) > 0.0) best = std::max(best, run(xhat.row(q)));
  for (int rs = 0; rs < 32; ++rs) {
    Eigen::RowVectorXcd v = rng.cnormal_matrix(1, nv);
    v /= v.norm();
    best = std::max(best, run(v));
  }
  return best;
}

}  // namespace detail

// I_{Nv} per pixel: closed form sqrt(sum |mu|^2) for orthogonal rows, or
// the numeric sup of the interaction coefficient otherwise.
inline MultiViewInteraction interaction_multi(const SemimetricTable& table, const CMatrix& x,
                                              const IndexSet& support, MultiViewMode mode,
                                              std::uint64_t seed = 0x9e3779b9) {
  require(!support.empty(), "interaction_multi: empty support");
  MultiViewInteraction out;
  out.per_pixel = RVector::Zero(table.size());

  const CMatrix xhat = detail::normalized_support_rows(x, support);
  if (mode == MultiViewMode::kClosedFormOrthogonal) {
    require(int(support.size()) <= int(x.cols()),
            "interaction_multi: orthogonal rows need |S| <= N_v");
    const CMatrix gram = xhat * xhat.adjoint();
    const double dev = (gram - CMatrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    require(dev <= 1e-8, "interaction_multi: closed form requires orthogonal rows");
  } else {
    out.is_lower_bound = true;
  }

  const int k = int(support.size());
  for (int j = 0; j < table.size(); ++j) {
    const int nj = nearest_support_index(table, support, j);
    double value = 0.0;
    if (mode == MultiViewMode::kClosedFormOrthogonal) {
      double s = 0.0;
      for (int q : support)
        if (q != nj) {
          const double m = table.mu_abs(j, q);
          s += m * m;
        }
      value = std::sqrt(s);
    } else {
      RVector weights(k);
      for (int i = 0; i < k; ++i)
        weights(i) = support[i] == nj ? 0.0 : table.mu_abs(j, support[i]);
      if (weights.maxCoeff() > 0.0)
        value = detail::phase_alignment_sup(xhat, weights, seed + std::uint64_t(j) * 0x9e37ULL);
    }
    out.per_pixel(j) = value;
    if (value > out.value) {
      out.value = value;
      out.argmax = j;
    }
  }
  return out;
}

// Both coefficients plus the nearest-support map, as reported to callers.
struct InteractionReport {
  double i1 = 0.0;
  double i_nv = 0.0;
  RVector per_pixel_i1;
  RVector per_pixel_inv;
  int argmax = 0;  // maximizer of I_{Nv}
  std::vector<int> nearest;
  bool inv_is_lower_bound = false;
};

inline InteractionReport interaction_report(const SemimetricTable& table, const CMatrix& x,
                                            const IndexSet& support, MultiViewMode mode,
                                            std::uint64_t seed = 0x9e3779b9) {
  InteractionReport rep;
  const SingleViewInteraction one = interaction_single(table, support);
  const MultiViewInteraction multi = interaction_multi(table, x, support, mode, seed);
  rep.i1 = one.value;
  rep.i_nv = multi.value;
  rep.per_pixel_i1 = one.per_pixel;
  rep.per_pixel_inv = multi.per_pixel;
  rep.argmax = multi.argmax;
  rep.inv_is_lower_bound = multi.is_lower_bound;
  rep.nearest.resize(table.size());
  for (int j = 0; j < table.size(); ++j)
    rep.nearest[j] = nearest_support_index(table, support, j);
  return rep;
}

// X^eps = X^{eps,r} + E^{eps,r}: rows inside / outside the r-vicinity.
struct SupportSplit {
  CMatrix inside;   // X^{eps,r}, row supported in B_r(S)
  CMatrix outside;  // E^{eps,r}
  IndexSet vicinity;
  double r = 0.0;
};

inline SupportSplit split_reconstruction(const CMatrix& xeps, const SemimetricTable& table,
                                         const IndexSet& support, double r) {
  SupportSplit split;
  split.r = r;
  split.vicinity = vicinity_set(table, support, r);
  split.inside = CMatrix::Zero(xeps.rows(), xeps.cols());
  split.outside = xeps;
  for (int j : split.vicinity) {
    split.inside.row(j) = xeps.row(j);
    split.outside.row(j).setZero();
  }
  return split;
}

// One verified inequality: lhs <= rhs up to the report tolerance.
struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
  bool applicable = true;  // false when the theorem's hypothesis fails
  std::map<std::string, double> context;

  static BoundReport make(std::string name, double lhs, double rhs, bool applicable = true) {
    BoundReport b;
    b.name = std::move(name);
    b.lhs = lhs;
    b.rhs = rhs;
    b.applicable = applicable;
    b.satisfied = lhs <= rhs + 1e-9 * std::max(1.0, rhs);
    return b;
  }
};

inline double restricted_norm_12(const CMatrix& m, const IndexSet& rows) {
  double s = 0.0;
  for (int j : rows) s += m.row(j).norm();
  return s;
}

// Support-localization estimate: both forms of the error bound, the bound on
// the uncomputable-in-practice W^eps, and the pessimism check on the noise
// term.
inline std::vector<BoundReport> support_localization_check(const CMatrix& g, const SemimetricTable& table,
                                               const CMatrix& x_true, const CMatrix& xeps,
                                               const IndexSet& support, double r, double eps,
                                               double i_nv, double w_norm = -1.0) {
  // w_norm = ||D - G X||_F when available: the estimate needs it below eps
  const bool hypothesis = 2.0 * i_nv < r && r < 1.0 && (w_norm < 0.0 || w_norm < eps);
  const CMatrix weps = g * (xeps - x_true);
  const CMatrix gw = g.adjoint() * weps;
  const double gw_s = restricted_norm_12(gw, support);
  const SupportSplit split = split_reconstruction(xeps, table, support, r);
  const double lhs = mixed_norm_12(split.outside);
  const double xeps_norm = mixed_norm_12(xeps);
  const double s_size = double(support.size());

  const bool noise_ok = w_norm < 0.0 || w_norm < eps;
  std::vector<BoundReport> out;
  out.push_back(BoundReport::make("localization_sharp", lhs,
                                  2.0 * i_nv / r * xeps_norm + gw_s / r, hypothesis));
  out.push_back(BoundReport::make("localization_loose", lhs,
                                  2.0 * i_nv / r * xeps_norm + 2.0 * eps * s_size / r,
                                  hypothesis));
  out.push_back(BoundReport::make("perturbation_energy", weps.norm(), 2.0 * eps, noise_ok));
  out.push_back(BoundReport::make("noise_term_pessimism", gw_s, 2.0 * eps * s_size, noise_ok));
  for (auto& b : out) {
    b.context["i_nv"] = i_nv;
    b.context["r"] = r;
    b.context["eps"] = eps;
    b.context["support_size"] = s_size;
  }
  return out;
}

// Part of X^{eps,r} supported in S, defined through the pseudoinverse of
// G_S; the residual is G_S^* G - orthogonal by construction.
struct ProjectedEstimate {
  CMatrix matrix;           // row supported in S
  double orthogonality = 0.0;  // max entry of |G_S^* G (X^{eps,r} - matrix)|
  double condition = 0.0;      // cond(G_S)
};

inline CMatrix restrict_columns(const CMatrix& g, const IndexSet& cols) {
  CMatrix out(g.rows(), Eigen::Index(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(Eigen::Index(i)) = g.col(cols[i]);
  return out;
}

inline ProjectedEstimate projected_estimate(const CMatrix& g, const IndexSet& support,
                                            const CMatrix& xeps_r) {
  const CMatrix gs = restrict_columns(g, support);
  Eigen::JacobiSVD<CMatrix> svd(gs, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (smin <= 1e-10 * smax)
    throw std::runtime_error(
        "projected_estimate: G_S is rank deficient; the support is not recoverable");

  ProjectedEstimate out;
  out.condition = smax / smin;
  const CMatrix rhs = g * xeps_r;
  const CMatrix coeff = svd.solve(rhs);  // G_S^dagger G X^{eps,r}
  out.matrix = CMatrix::Zero(xeps_r.rows(), xeps_r.cols());
  for (std::size_t i = 0; i < support.size(); ++i)
    out.matrix.row(support[i]) = coeff.row(Eigen::Index(i));
  const CMatrix residual = gs.adjoint() * (rhs - gs * coeff);
  out.orthogonality = residual.size() > 0 ? residual.cwiseAbs().maxCoeff() : 0.0;
  return out;
}

// Partition of the support of X^{eps,r} by nearest point of S (ties toward
// the smaller support index), then local mu-weighted aggregation onto S.
inline CMatrix effective_matrix(const SemimetricTable& table, const IndexSet& support,
                                const CMatrix& xeps_r) {
  CMatrix out = CMatrix::Zero(xeps_r.rows(), xeps_r.cols());
  for (int q = 0; q < int(xeps_r.rows()); ++q) {
    if (xeps_r.row(q).norm() < 1e-14) continue;
    const int j = nearest_support_index(table, support, q);
    out.row(j) += table.mu(j, q) * xeps_r.row(q);
  }
  return out;
}

// Quantitative estimate: l12 distance of the projected estimate to the truth
// and the l11 comparison against the effective matrix (gated on I_1 < 1).
inline std::vector<BoundReport> quantitative_estimate_check(const CMatrix& g, const SemimetricTable& table,
                                               const CMatrix& x_true, const CMatrix& xeps,
                                               const IndexSet& support, double r, double eps,
                                               double i_nv, double i1, double w_norm = -1.0) {
  const bool hypothesis = 2.0 * i_nv < r && r < 1.0 && (w_norm < 0.0 || w_norm < eps);
  const SupportSplit split = split_reconstruction(xeps, table, support, r);
  const ProjectedEstimate proj = projected_estimate(g, support, split.inside);
  const CMatrix effective = effective_matrix(table, support, split.inside);

  std::vector<BoundReport> out;
  const double s_size = double(support.size());
  out.push_back(BoundReport::make(
      "projected_error", mixed_norm_12(proj.matrix - x_true),
      2.0 * i_nv / r * mixed_norm_12(xeps) + 6.0 * eps * s_size / r, hypothesis));
  out.push_back(BoundReport::make("effective_aggregation", (1.0 - i1) * mixed_norm_11(proj.matrix - effective),
                                  2.0 * i1 * mixed_norm_11(split.inside),
                                  hypothesis && i1 < 1.0));
  for (auto& b : out) {
    b.context["i_nv"] = i_nv;
    b.context["i1"] = i1;
    b.context["r"] = r;
    b.context["eps"] = eps;
    b.context["support_size"] = s_size;
    b.context["condition_gs"] = proj.condition;
  }
  return out;
}

// L(V) = tr[(G Xhat)^* V] with Xhat the row-normalized unknown.
inline Complex alignment_functional(const CMatrix& g, const CMatrix& x_true,
                                 const IndexSet& support, const CMatrix& v) {
  CMatrix xhat = CMatrix::Zero(x_true.rows(), x_true.cols());
  for (int q : support) {
    const double n = x_true.row(q).norm();
    require(n > 0.0, "alignment_functional: zero row inside the support");
    xhat.row(q) = x_true.row(q) / n;
  }
  const CMatrix gxhat = g * xhat;
  return (gxhat.conjugate().cwiseProduct(v)).sum();
}

inline BoundReport functional_adjoint_bound(const CMatrix& g, const CMatrix& x_true, const IndexSet& support,
                             const CMatrix& v) {
  return BoundReport::make("functional_adjoint", std::abs(alignment_functional(g, x_true, support, v)),
                           restricted_norm_12(g.adjoint() * v, support));
}

inline BoundReport functional_coercivity_bound(const CMatrix& g, const CMatrix& x_true, const IndexSet& support,
                             double i_nv) {
  return BoundReport::make("functional_coercivity", restricted_norm_12(x_true, support) * (1.0 - i_nv),
                           std::abs(alignment_functional(g, x_true, support, g * x_true)));
}

inline BoundReport functional_inside_bound(const CMatrix& g, const CMatrix& x_true, const IndexSet& support,
                             double i_nv, const CMatrix& xeps_r) {
  return BoundReport::make("functional_inside",
                           std::abs(alignment_functional(g, x_true, support, g * xeps_r)),
                           (1.0 + i_nv) * mixed_norm_12(xeps_r));
}

inline BoundReport functional_outside_bound(const CMatrix& g, const CMatrix& x_true, const IndexSet& support,
                             double i_nv, double r, const CMatrix& outside) {
  return BoundReport::make("functional_outside",
                           std::abs(alignment_functional(g, x_true, support, g * outside)),
                           (1.0 - r + i_nv) * mixed_norm_12(outside));
}

// Row-decorrelation machinery: the empirical correlation of two unknown
// rows sampled over overlapping sub-apertures, against the normalized
// cross-range offset Q = 4 pi A tau . P_o (y_q - y_l) / (lambda L_o) and the
// isotropic reference |sinc(Q/2)|.
struct RowCorrelationPoint {
  int q = 0;
  int l = 0;
  double big_q = 0.0;
  double mu_abs = 0.0;
  double sinc_reference = 0.0;
};

inline RowCorrelationPoint row_correlation_point(const CMatrix& x, const ApertureGeometry& geom,
                                                 const ImagingGrid& grid, int q, int l) {
  RowCorrelationPoint p;
  p.q = q;
  p.l = l;
  const Vec3 m = geom.range_unit();
  const Mat3 proj = Mat3::Identity() - m * m.transpose();
  const Vec3 dy = grid.points[q] - grid.points[l];
  p.big_q = 4.0 * kPi * geom.aperture_length * geom.tangent.dot(proj * dy) /
            (geom.wavelength() * geom.standoff());
  const double nq = x.row(q).norm();
  const double nl = x.row(l).norm();
  if (nq > 0.0 && nl > 0.0) {
    const Complex ip = (x.row(q).conjugate().cwiseProduct(x.row(l))).sum();
    p.mu_abs = std::abs(ip) / (nq * nl);
  } else {
    p.mu_abs = q == l ? 1.0 : 0.0;
  }
  p.sinc_reference = std::abs(sinc(0.5 * p.big_q));
  return p;
}

// |mu| <= min(1, C/|Q|) with C fitted over the decay region |Q| >= fit_min_q.
// The fitted constant is the report's payload; it is about 2 for isotropic
// reflectivities and grows with the reflectivity's directional variation.
inline BoundReport row_correlation_bound_check(const std::vector<RowCorrelationPoint>& points,
                                               double fit_min_q = 2.0) {
  double c = 0.0;
  for (const auto& p : points)
    if (std::abs(p.big_q) >= fit_min_q) c = std::max(c, p.mu_abs * std::abs(p.big_q));
  double worst = 0.0;
  double max_sinc_gap = 0.0;
  for (const auto& p : points) {
    const double bound = std::abs(p.big_q) >= fit_min_q
                             ? std::min(1.0, c / std::abs(p.big_q))
                             : 1.0;
    worst = std::max(worst, p.mu_abs - bound);
    max_sinc_gap = std::max(max_sinc_gap, std::abs(p.mu_abs - p.sinc_reference));
  }
  BoundReport b = BoundReport::make("row_decorrelation", worst, 0.0);
  b.context["fitted_c"] = c;
  b.context["fit_min_q"] = fit_min_q;
  b.context["max_sinc_gap"] = max_sinc_gap;
  b.context["points"] = double(points.size());
  return b;
}

// Rows whose norm clears a fraction of the largest row norm; the reporting
// threshold the localization estimate leaves open.
inline IndexSet extract_support(const CMatrix& x, double rel_threshold = 0.1) {
  const double m = max_row_norm(x);
  IndexSet s;
  if (m <= 0.0) return s;
  for (int j = 0; j < int(x.rows()); ++j)
    if (x.row(j).norm() >= rel_threshold * m) s.push_back(j);
  return s;
}

}  // namespace mmvsar
