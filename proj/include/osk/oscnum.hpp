#ifndef OSK_OSCNUM_HPP
#define OSK_OSCNUM_HPP

#include <optional>
#include <string>

#include "osk/lidskii.hpp"

namespace osk {

enum class Route { lidskii, partition, rank_drop };

struct OscillationResult {
  long value = 0;
  Route route = Route::lidskii;
  std::optional<AngleTrace> trace;
};

/// N and N* of one path from a single angle-tracking run of Z_{Y(t)}.
struct OscillationPair {
  long N = 0;
  long N_star = 0;
  AngleTrace trace;
};

OscillationPair oscillation_pair(const SampledLagrangianPath& path,
                                 const Tolerances& tol,
                                 const TrackOptions& opts = {});

OscillationResult oscillation_number(const SampledLagrangianPath& path,
                                     const Tolerances& tol,
                                     const TrackOptions& opts = {});
OscillationResult dual_oscillation_number(const SampledLagrangianPath& path,
                                          const Tolerances& tol,
                                          const TrackOptions& opts = {});

/// Per-segment symplectic transformations R_k on consecutive breakpoint
/// intervals, subject to the two constant-rank conditions checked by
/// validate_partition.
struct PartitionSystem {
  std::vector<double> breakpoints;      // subsequence of the path nodes
  std::vector<SymplecticEvaluator> R;   // one evaluator per segment
};

/// Checks at every path node of every segment that rank W(R_k(t)E, Y(t)) and
/// the rank of the upper block of R_k(t)E stay constant; InvalidPartition
/// names the failing segment and condition.
void validate_partition(const SampledLagrangianPath& path,
                        const PartitionSystem& ps, const Tolerances& tol);

/// Builds R_k(t) = Z_{Y(t)} C_k with constant rotation-by-alpha blocks C_k,
/// bisecting segments until the rank conditions hold at all samples.
PartitionSystem build_partition(const SampledLagrangianPath& path,
                                const Tolerances& tol, int max_depth = 24);

/// Telescoping comparative-index sum over the partition segments; equals the
/// Lidskii route by the q-sum theorem.
OscillationResult oscillation_number_partition(
    const SampledLagrangianPath& path, const PartitionSystem& ps,
    const Tolerances& tol);
OscillationResult dual_oscillation_number_partition(
    const SampledLagrangianPath& path, const PartitionSystem& ps,
    const Tolerances& tol);

enum class Side { left, right };

/// Focal-point style count of one-sided rank drops of the upper block X(t),
/// valid under the monotonicity condition Y'^T J Y >= 0 (checked at nodes by
/// finite differences). Side::left sums rank X(t0^-) - rank X(t0) over
/// (a, b]; Side::right sums rank X(t0^+) - rank X(t0) over [a, b).
int rank_drop_count(const SampledLagrangianPath& path, Side side,
                    const Tolerances& tol);

/// Finite-difference check of Y'^T J Y >= 0 at every node; NotMonotone names
/// the offending node. This is a sampled check, not a proof.
void require_monotone_at_nodes(const SampledLagrangianPath& path,
                               const Tolerances& tol);

/// Exceptional-point scan shared by rank_drop_count and the monotone Maslov
/// route: one-sided rank jump counts of a matrix-valued function of time.
struct RankDropTally {
  int left = 0;   // sum over (a, b] of rank(t0^-) - rank(t0)
  int right = 0;  // sum over [a, b) of rank(t0^+) - rank(t0)
};
RankDropTally scan_rank_drops(const std::function<Mat(double)>& F, double a,
                              double b, const std::vector<double>& seed_grid,
                              double loc_atol, const Tolerances& tol);

struct IdentityReport {
  bool ok = false;
  long lhs = 0;
  long rhs = 0;
  std::string description;
};

/// N + rank X(b) == N* + rank X(a).
IdentityReport verify_duality(const SampledLagrangianPath& path,
                              const Tolerances& tol);

/// Interleaves two paths into the block-diagonal composite and checks
/// N = N1 + N2 together with the dual statement.
std::pair<IdentityReport, IdentityReport> verify_block_diag(
    const SampledLagrangianPath& path1, const SampledLagrangianPath& path2,
    const Tolerances& tol);

/// Block-diagonal interleaving (diag{X1,X2}; diag{U1,U2}) on the merged grid.
SampledLagrangianPath interleave_paths(const SampledLagrangianPath& path1,
                                       const SampledLagrangianPath& path2,
                                       const Tolerances& tol);

/// N(SE) + N(S^{-1}E) == rank S12(a) - rank S12(b) and the dual version.
std::pair<IdentityReport, IdentityReport> verify_se_inverse(
    const SymplecticEvaluator& S_of_t, const std::vector<double>& grid,
    const Tolerances& tol);

/// N(S^{-1} Y) == N(Z_{SE}^{-1} Y) and the dual version.
std::pair<IdentityReport, IdentityReport> verify_transform_invariance(
    const SampledLagrangianPath& path, const SymplecticEvaluator& S_of_t,
    const Tolerances& tol);

}  // namespace osk

#endif  // OSK_OSCNUM_HPP
