#include "osk/compidx.hpp"

namespace osk {

ComparativeIndexBreakdown comparative_index(const LagrangianFrame& Y,
                                            const LagrangianFrame& Yhat,
                                            const Tolerances& tol) {
  if (Y.n() != Yhat.n())
    throw Error(ErrorCode::ShapeMismatch, "comparative_index: dim mismatch");
  const int n = Y.n();
  const Mat I = Mat::Identity(n, n);

  const Mat W = wronskian(Y, Yhat);
  const Mat Xdag = pseudoinverse(Y.X(), tol);
  const Mat M = (I - Xdag * Y.X()) * W;
  const Mat V = I - pseudoinverse(M, tol) * M;
  const Mat P = V * W.transpose() * Xdag * Yhat.X() * V;

  ComparativeIndexBreakdown out;
  out.rank_M = numeric_rank(M, tol);
  const InertiaBreakdown inertia = symmetric_inertia(0.5 * (P + P.transpose()), tol);
  out.ind_P = inertia.negative;
  out.ind_negP = inertia.positive;
  out.mu = out.rank_M + out.ind_P;
  out.mu_star = out.rank_M + out.ind_negP;
  out.largest_discarded_abs = inertia.largest_discarded_abs;
  out.smallest_kept_abs = inertia.smallest_kept_abs;
  return out;
}

bool check_prop_right_mult(const LagrangianFrame& Y, const LagrangianFrame& Yhat,
                           const Mat& C1, const Mat& C2, const Tolerances& tol) {
  const int n = Y.n();
  if (numeric_rank(C1, tol) < n || numeric_rank(C2, tol) < n)
    throw Error(ErrorCode::PreconditionViolated,
                "check_prop_right_mult: C1, C2 must be invertible");
  const auto lhs = comparative_index(make_frame(Y.Y * C1, tol),
                                     make_frame(Yhat.Y * C2, tol), tol);
  const auto rhs = comparative_index(Y, Yhat, tol);
  return lhs.mu == rhs.mu && lhs.mu_star == rhs.mu_star;
}

bool check_prop_lower_triangular(const LagrangianFrame& Y,
                                 const LagrangianFrame& Yhat, const Mat& L,
                                 const Tolerances& tol) {
  const int n = Y.n();
  if (!is_symplectic(L, tol) ||
      L.topRightCorner(n, n).cwiseAbs().maxCoeff() > tol.struct_atol)
    throw Error(ErrorCode::PreconditionViolated,
                "check_prop_lower_triangular: L must be symplectic lower "
                "block triangular");
  const auto lhs = comparative_index(make_frame(L * Y.Y, tol),
                                     make_frame(L * Yhat.Y, tol), tol);
  const auto rhs = comparative_index(Y, Yhat, tol);
  return lhs.mu == rhs.mu && lhs.mu_star == rhs.mu_star;
}

bool check_prop_duality(const LagrangianFrame& Y, const LagrangianFrame& Yhat,
                        const SymplecticMatrix& Z, const Tolerances& tol) {
  const int n = Y.n();
  if (!is_symplectic(Z.S, tol))
    throw Error(ErrorCode::PreconditionViolated,
                "check_prop_duality: Z not symplectic");
  // Z E must represent the plane of Y: Z E = Y C with invertible C (the
  // property is invariant under right multipliers).
  const Mat ZE = Z.S.rightCols(n);
  const Mat C = (Y.Y.transpose() * Y.Y).ldlt().solve(Y.Y.transpose() * ZE);
  if ((Y.Y * C - ZE).cwiseAbs().maxCoeff() > tol.struct_atol ||
      numeric_rank(C, tol) < n)
    throw Error(ErrorCode::PreconditionViolated,
                "check_prop_duality: Z E does not represent the plane of Y");
  const Mat Zinv = Z.inverse();
  const auto transformed =
      comparative_index(make_frame(Zinv * vertical_plane(n).Y, tol),
                        make_frame(Zinv * Yhat.Y, tol), tol);
  const auto direct = comparative_index(Y, Yhat, tol);
  return direct.mu == transformed.mu_star && direct.mu_star == transformed.mu;
}

}  // namespace osk
