#ifndef OSK_MASLOV_HPP
#define OSK_MASLOV_HPP

#include "osk/oscnum.hpp"

namespace osk {

/// Gamma(t) = -(X + iU)(X - iU)^{-1}(Xhat - iUhat)(Xhat + iUhat)^{-1};
/// unitary, with eigenvalues similar to those of -W_S for S = Z_Y^{-1} Z_Yhat.
struct GammaSample {
  double t = 0.0;
  CMat Gamma;
  Vec eigen_angles;  // sorted principal angles in [0, 2*pi)
};

GammaSample gamma_matrix(const LagrangianFrame& Y, const LagrangianFrame& Yhat,
                         const Tolerances& tol);

/// Mas and Mas* of the pair from a single angle-tracking run of
/// S(t) = Z_Y^{-1}(t) Z_Yhat(t) on the merged grid.
struct MaslovPair {
  long mas = 0;
  long mas_star = 0;
  AngleTrace trace;
};

MaslovPair maslov_pair(const SampledLagrangianPath& pathY,
                       const SampledLagrangianPath& pathYhat,
                       const Tolerances& tol, const TrackOptions& opts = {});

long maslov_index(const SampledLagrangianPath& pathY,
                  const SampledLagrangianPath& pathYhat, const Tolerances& tol,
                  const TrackOptions& opts = {});
long dual_maslov_index(const SampledLagrangianPath& pathY,
                       const SampledLagrangianPath& pathYhat,
                       const Tolerances& tol, const TrackOptions& opts = {});

/// Crossing-arc evaluation of the Maslov index: counts eigenvalues of
/// Gamma(t) on per-segment arcs [pi, pi + eps_k) and telescopes the counts.
/// boundary_snaps reports how many endpoint memberships were decided by
/// angle_atol snapping.
struct CrossingCount {
  long value = 0;
  int boundary_snaps = 0;
};

CrossingCount maslov_crossing_oracle(const SampledLagrangianPath& pathY,
                                     const SampledLagrangianPath& pathYhat,
                                     const Tolerances& tol,
                                     const TrackOptions& opts = {});
/// Dual oracle on arcs (pi - eps_k, pi] with reversed endpoint order.
CrossingCount dual_maslov_crossing_oracle(const SampledLagrangianPath& pathY,
                                          const SampledLagrangianPath& pathYhat,
                                          const Tolerances& tol,
                                          const TrackOptions& opts = {});

/// Mas(Y,Yhat) == Mas(E,Yhat) - Mas(E,Y) + mu(Yhat(a),Y(a)) - mu(Yhat(b),Y(b))
/// and the dual version with mu* and swapped endpoints.
std::pair<IdentityReport, IdentityReport> verify_maslov_comparison(
    const SampledLagrangianPath& pathY, const SampledLagrangianPath& pathYhat,
    const Tolerances& tol);

/// Monotone route: counts one-sided rank drops of the Wronskian
/// W(Y(t), Yhat(t)) under the monotonicity condition on Z^{-1} Yhat, where
/// Z(t) E = Y(t) P(t). Cross-checked against the angle-tracking route.
struct MonotoneMaslovReport {
  long mas_rank_route = 0;
  long mas_star_rank_route = 0;
  long mas_angle_route = 0;
  long mas_star_angle_route = 0;
  bool ok = false;
};

MonotoneMaslovReport monotone_maslov(const SampledLagrangianPath& pathY,
                                     const SampledLagrangianPath& pathYhat,
                                     const SymplecticEvaluator& Z_of_t,
                                     const std::function<Mat(double)>& P_of_t,
                                     const Tolerances& tol);

}  // namespace osk

#endif  // OSK_MASLOV_HPP
