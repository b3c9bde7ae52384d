#ifndef OSK_MATLIB_HPP
#define OSK_MATLIB_HPP

#include "osk/types.hpp"

namespace osk {

/// Canonical skew-symmetric matrix [[0, I], [-I, 0]] of size 2n x 2n.
Mat canonical_J(int n);

/// Number of singular values above rank_rtol * max(rows, cols) * sigma_max.
/// Returns 0 for the zero matrix.
int numeric_rank(const Mat& A, const Tolerances& tol);

/// Moore-Penrose pseudoinverse, rank-truncated with the numeric_rank cutoff.
Mat pseudoinverse(const Mat& A, const Tolerances& tol);

/// Number of eigenvalues of the symmetric matrix P below the negative rank
/// cutoff. The input is symmetrized as (P + P^T)/2 before decomposition;
/// asymmetry beyond struct_atol raises NonSymmetric.
int negative_index(const Mat& P, const Tolerances& tol);

/// Like negative_index but also reports the band of eigenvalues classified
/// as zero: largest |lambda| discarded and smallest |lambda| kept.
struct InertiaBreakdown {
  int negative = 0;
  int positive = 0;
  int zero = 0;
  double largest_discarded_abs = 0.0;  // 0 when nothing was discarded
  double smallest_kept_abs = 0.0;      // 0 when everything was discarded
};
InertiaBreakdown symmetric_inertia(const Mat& P, const Tolerances& tol);

/// Inverse square root of a symmetric positive definite matrix. The result K
/// is symmetric positive definite with K * G * K = I.
Mat inv_sqrt_spd(const Mat& G, const Tolerances& tol);

bool is_symplectic(const Mat& S, const Tolerances& tol);
bool is_orthogonal(const Mat& S, const Tolerances& tol);
bool is_lagrangian_frame(const Mat& Y, const Tolerances& tol);

}  // namespace osk

#endif  // OSK_MATLIB_HPP
