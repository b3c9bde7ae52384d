#ifndef OSK_COMPIDX_HPP
#define OSK_COMPIDX_HPP

#include "osk/lagrangian.hpp"

namespace osk {

/// mu = rank M + ind P and mu* = rank M + ind(-P) with
///   M = (I - Xdag X) W(Y, Yhat),
///   P = V W(Y, Yhat)^T Xdag Xhat V,  V = I - Mdag M.
struct ComparativeIndexBreakdown {
  int rank_M = 0;
  int ind_P = 0;
  int ind_negP = 0;
  int mu = 0;
  int mu_star = 0;
  // Diagnostics for borderline eigenvalue classification in P.
  double largest_discarded_abs = 0.0;
  double smallest_kept_abs = 0.0;
};

ComparativeIndexBreakdown comparative_index(const LagrangianFrame& Y,
                                            const LagrangianFrame& Yhat,
                                            const Tolerances& tol);

/// mu(Y C1, Yhat C2) == mu(Y, Yhat) and the mu* twin, for invertible C1, C2.
bool check_prop_right_mult(const LagrangianFrame& Y, const LagrangianFrame& Yhat,
                           const Mat& C1, const Mat& C2, const Tolerances& tol);

/// mu(L Y, L Yhat) == mu(Y, Yhat) for symplectic lower block triangular L.
bool check_prop_lower_triangular(const LagrangianFrame& Y,
                                 const LagrangianFrame& Yhat, const Mat& L,
                                 const Tolerances& tol);

/// mu(Y, Yhat) == mu*(Z^{-1}E, Z^{-1}Yhat) and the swapped twin, for
/// symplectic Z with Z E = Y.
bool check_prop_duality(const LagrangianFrame& Y, const LagrangianFrame& Yhat,
                        const SymplecticMatrix& Z, const Tolerances& tol);

}  // namespace osk

#endif  // OSK_COMPIDX_HPP
