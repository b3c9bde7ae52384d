#ifndef OSK_LIDSKII_HPP
#define OSK_LIDSKII_HPP

#include <iosfwd>
#include <vector>

#include "osk/lagrangian.hpp"

namespace osk {

/// W_S = (S11 - i S12)^{-1} (S11 + i S12); unitary and complex-symmetric for
/// symplectic S.
CMat ws_matrix(const SymplecticMatrix& S, const Tolerances& tol);

/// Sorted principal arguments in [0, 2*pi) of the eigenvalues of ws_matrix(S).
/// Angles within angle_atol of a multiple of 2*pi are snapped to 0.
Vec instantaneous_angles(const SymplecticMatrix& S, const Tolerances& tol);

/// Sorted snapped principal angles of the eigenvalues of a unitary matrix.
Vec unitary_eigen_angles(const CMat& W, const Tolerances& tol);

/// Per-node spectral data consumed by the branch-tracking pass.
struct NodeSpectrum {
  Vec angles;      // sorted principal angles in [0, 2*pi), snapped
  int s12_defect;  // n - numeric_rank(S12)
};

NodeSpectrum node_spectrum(const SymplecticMatrix& S, const Tolerances& tol);

enum class Execution { serial, openmp };

/// Evaluates node_spectrum at every listed time. The serial variant is the
/// reference implementation; the openmp variant distributes nodes across
/// threads and produces identical output.
std::vector<NodeSpectrum> spectral_sweep(const SymplecticEvaluator& S_of_t,
                                         const std::vector<double>& times,
                                         const Tolerances& tol,
                                         Execution exec = Execution::openmp);

/// Batched evaluation of an angle-set function; parallel twin of the loop
/// `for t: out.push_back(angle_set(t))`.
std::vector<Vec> sweep_angle_sets(const std::function<Vec(double)>& angle_set,
                                  const std::vector<double>& times,
                                  Execution exec = Execution::openmp);

enum class InitialBranchRule { principal };  // principal arguments in [0, 2*pi)

struct TrackOptions {
  double branch_step_bound = 1.5707963267948966;  // pi/2
  int max_depth = 48;
  bool allow_refine = true;   // false when no evaluator backs the grid
  Execution exec = Execution::openmp;
  InitialBranchRule initial_branch_rule = InitialBranchRule::principal;
};

/// Continuous Lidskii angle branches over a time grid together with the
/// half-open-window integers q and q*.
struct AngleTrace {
  int n = 0;
  std::vector<double> t;
  std::vector<Vec> angles;        // continuous branch values per node
  std::vector<IVec> q;            // floor(phi / 2*pi), boundary snapped
  std::vector<IVec> q_star;       // ceil(phi / 2*pi) - 1
  std::vector<int> s12_defect;    // per node

  long q_sum(std::size_t node) const;
  long q_star_sum(std::size_t node) const;
  long q_sum_change() const { return q_sum(t.size() - 1) - q_sum(0); }
  long q_star_sum_change() const {
    return q_star_sum(t.size() - 1) - q_star_sum(0);
  }
};

/// Continuous branch lift of a time-dependent multiset of unit-circle angles.
/// Core of track_angles and of the Maslov crossing oracle.
struct BranchTrack {
  std::vector<double> t;
  std::vector<Vec> angles;  // per node, continuous branch values
};

/// angle_set(t) must return the sorted principal angles in [0, 2*pi) of a
/// continuously varying unitary spectrum. Segments whose matched displacement
/// reaches branch_step_bound (or whose matching is ambiguous) are bisected up
/// to max_depth; fails rather than guessing when refinement is disallowed or
/// exhausted.
using AngleSetEvaluator = std::function<Vec(double)>;
BranchTrack track_branches(const AngleSetEvaluator& angle_set,
                           const std::vector<double>& grid,
                           const Tolerances& tol, const TrackOptions& opts);

/// Tracks continuous Lidskii angle branches of S(t) over the grid together
/// with the q/q* integers and the per-node S12 defects.
AngleTrace track_angles(const SymplecticEvaluator& S_of_t,
                        const std::vector<double>& grid, const Tolerances& tol,
                        const TrackOptions& opts = {});

enum class IntervalKind { left_closed, right_closed };

/// Half-sum of the Lidskii angles of S represented inside the window
/// [2*pi*q, 2*pi*(q+1)) or (2*pi*q, 2*pi*(q+1)].
double arg_interval_sum(const SymplecticMatrix& S, IntervalKind kind,
                        long q_offset, const Tolerances& tol);

/// Comparative index pair computed from the three interval-argument terms of
/// Z_Yhat, Z_Y, and Z_Yhat^{-1} Z_Y; ResidualTooLarge when the value fails to
/// round cleanly to an integer.
struct LidskiiMuResult {
  int mu = 0;
  int mu_star = 0;
  double residual_mu = 0.0;
  double residual_mu_star = 0.0;
};
LidskiiMuResult mu_via_lidskii(const LagrangianFrame& Y,
                               const LagrangianFrame& Yhat,
                               const Tolerances& tol);

/// Columns: t, phi_1..phi_n, q_1..q_n, qstar_1..qstar_n.
void write_angle_trace_csv(const AngleTrace& trace, std::ostream& out);

}  // namespace osk

#endif  // OSK_LIDSKII_HPP
