#include "osk/matlib.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace osk {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::RefinementExhausted: return "RefinementExhausted";
    case ErrorCode::EvaluatorMissing: return "EvaluatorMissing";
    case ErrorCode::SingularFactor: return "SingularFactor";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorCode::AmbiguousMatching: return "AmbiguousMatching";
    case ErrorCode::InvalidPartition: return "InvalidPartition";
    case ErrorCode::ConstructionFailed: return "ConstructionFailed";
    case ErrorCode::NotMonotone: return "NotMonotone";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::PartitionNotFound: return "PartitionNotFound";
    case ErrorCode::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

Mat canonical_J(int n) {
  Mat J = Mat::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n) = Mat::Identity(n, n);
  J.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  return J;
}

int numeric_rank(const Mat& A, const Tolerances& tol) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(A);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff =
      tol.rank_rtol * static_cast<double>(std::max(A.rows(), A.cols())) * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return rank;
}

Mat pseudoinverse(const Mat& A, const Tolerances& tol) {
  if (A.size() == 0) return A.transpose();
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double cutoff =
      tol.rank_rtol * static_cast<double>(std::max(A.rows(), A.cols())) * smax;
  Vec inv = Vec::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

namespace {

Mat checked_symmetrize(const Mat& P, const Tolerances& tol, const char* who) {
  if (P.rows() != P.cols())
    throw Error(ErrorCode::ShapeMismatch, std::string(who) + ": matrix not square");
  const double asym = (P - P.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol.struct_atol)
    throw Error(ErrorCode::NonSymmetric,
                std::string(who) + ": asymmetry " + std::to_string(asym));
  return 0.5 * (P + P.transpose());
}

}  // namespace

InertiaBreakdown symmetric_inertia(const Mat& P, const Tolerances& tol) {
  const Mat S = checked_symmetrize(P, tol, "symmetric_inertia");
  InertiaBreakdown out;
  if (S.size() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  const Vec& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  // Same cutoff formula as numeric_rank so that inertia counts and rank
  // agree exactly on symmetric inputs.
  const double cutoff = tol.rank_rtol * static_cast<double>(S.rows()) * scale;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double lam = ev(i);
    if (lam < -cutoff) {
      ++out.negative;
    } else if (lam > cutoff) {
      ++out.positive;
    } else {
      ++out.zero;
      out.largest_discarded_abs = std::max(out.largest_discarded_abs, std::abs(lam));
    }
    if (std::abs(lam) > cutoff) {
      if (out.smallest_kept_abs == 0.0 || std::abs(lam) < out.smallest_kept_abs)
        out.smallest_kept_abs = std::abs(lam);
    }
  }
  return out;
}

int negative_index(const Mat& P, const Tolerances& tol) {
  return symmetric_inertia(P, tol).negative;
}

Mat inv_sqrt_spd(const Mat& G, const Tolerances& tol) {
  const Mat S = checked_symmetrize(G, tol, "inv_sqrt_spd");
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  const Vec& ev = es.eigenvalues();
  if (ev.size() == 0 || ev.minCoeff() <= tol.struct_atol)
    throw Error(ErrorCode::NotPositiveDefinite,
                "inv_sqrt_spd: min eigenvalue " +
                    std::to_string(ev.size() ? ev.minCoeff() : 0.0));
  Vec d(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) d(i) = 1.0 / std::sqrt(ev(i));
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

bool is_symplectic(const Mat& S, const Tolerances& tol) {
  if (S.rows() != S.cols() || S.rows() % 2 != 0 || S.rows() == 0)
    throw Error(ErrorCode::ShapeMismatch, "is_symplectic: need 2n x 2n");
  const int n = static_cast<int>(S.rows()) / 2;
  const Mat J = canonical_J(n);
  return (S.transpose() * J * S - J).cwiseAbs().maxCoeff() <= tol.struct_atol;
}

bool is_orthogonal(const Mat& S, const Tolerances& tol) {
  if (S.rows() != S.cols() || S.rows() == 0)
    throw Error(ErrorCode::ShapeMismatch, "is_orthogonal: need square");
  const Mat R = S.transpose() * S - Mat::Identity(S.rows(), S.cols());
  return R.cwiseAbs().maxCoeff() <= tol.struct_atol;
}

bool is_lagrangian_frame(const Mat& Y, const Tolerances& tol) {
  if (Y.cols() == 0 || Y.rows() != 2 * Y.cols())
    throw Error(ErrorCode::ShapeMismatch, "is_lagrangian_frame: need 2n x n");
  const int n = static_cast<int>(Y.cols());
  const Mat iso = Y.transpose() * canonical_J(n) * Y;
  if (iso.cwiseAbs().maxCoeff() > tol.struct_atol) return false;
  return numeric_rank(Y, tol) == n;
}

}  // namespace osk
