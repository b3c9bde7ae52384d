#ifndef OSK_LAGRANGIAN_HPP
#define OSK_LAGRANGIAN_HPP

#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "osk/matlib.hpp"

namespace osk {

/// A real 2n x n matrix with Y^T J Y = 0 and full column rank. The upper
/// n x n block is X, the lower one U.
struct LagrangianFrame {
  Mat Y;

  int n() const { return static_cast<int>(Y.cols()); }
  Mat X() const { return Y.topRows(n()); }
  Mat U() const { return Y.bottomRows(n()); }
};

/// Validating constructor; throws when the frame conditions fail.
LagrangianFrame make_frame(const Mat& Y, const Tolerances& tol);

/// A real 2n x 2n matrix with S^T J S = J.
struct SymplecticMatrix {
  Mat S;

  int n() const { return static_cast<int>(S.rows()) / 2; }
  Mat block11() const { return S.topLeftCorner(n(), n()); }
  Mat block12() const { return S.topRightCorner(n(), n()); }
  Mat block21() const { return S.bottomLeftCorner(n(), n()); }
  Mat block22() const { return S.bottomRightCorner(n(), n()); }

  /// Inverse through the symplectic identity S^{-1} = -J S^T J.
  Mat inverse() const;
};

SymplecticMatrix make_symplectic(const Mat& S, const Tolerances& tol);

using FrameEvaluator = std::function<LagrangianFrame(double)>;

/// A Lagrangian path sampled on a strictly increasing grid, optionally backed
/// by a point evaluator that permits adaptive refinement between nodes.
struct SampledLagrangianPath {
  std::vector<double> t;
  std::vector<LagrangianFrame> frames;
  FrameEvaluator evaluator;           // may be empty
  bool evaluator_concurrent = true;   // safe for concurrent calls

  int n() const { return frames.empty() ? 0 : frames.front().n(); }
  double a() const { return t.front(); }
  double b() const { return t.back(); }
  std::size_t size() const { return t.size(); }

  LagrangianFrame at(double time) const;  // evaluator or exact node lookup
  bool has_evaluator() const { return static_cast<bool>(evaluator); }
};

/// Validates grid monotonicity, frame conditions at every node, and (when an
/// evaluator is present) agreement of evaluator(t_i) with frames[i].
void validate_path(const SampledLagrangianPath& path, const Tolerances& tol);

/// E = (0, I)^T, the vertical Lagrangian plane.
LagrangianFrame vertical_plane(int n);

/// W(Y, Yhat) = Y^T J Yhat.
Mat wronskian(const LagrangianFrame& Y, const LagrangianFrame& Yhat);

/// K_Y = (Y^T Y)^{-1/2}.
Mat normalizer(const LagrangianFrame& Y, const Tolerances& tol);

/// Z_Y = [J Y K_Y | Y K_Y]; symplectic and orthogonal, Z_E = I.
SymplecticMatrix z_frame(const LagrangianFrame& Y, const Tolerances& tol);

/// S = Zpart * Lpart with Zpart = Z_{SE} and Lpart symplectic lower block
/// triangular.
std::pair<SymplecticMatrix, SymplecticMatrix> factor_symplectic(
    const SymplecticMatrix& S, const Tolerances& tol);

/// Returns true when the segment [t0, t1] needs no further splitting.
using SegmentPredicate = std::function<bool(
    double t0, const LagrangianFrame& f0, double t1, const LagrangianFrame& f1)>;

/// Inserts midpoints into segments failing the predicate until all pass or
/// max_depth bisections of some original segment have happened.
SampledLagrangianPath refine_path(const SampledLagrangianPath& path,
                                  const SegmentPredicate& keep,
                                  int max_depth, const Tolerances& tol);

using SymplecticEvaluator = std::function<SymplecticMatrix(double)>;

/// Node-wise S^{-1}(t_i) Y(t_i); output frames are revalidated.
SampledLagrangianPath transform_path(const SampledLagrangianPath& path,
                                     const SymplecticEvaluator& S_of_t,
                                     const Tolerances& tol);
SampledLagrangianPath transform_path(const SampledLagrangianPath& path,
                                     const SymplecticMatrix& S,
                                     const Tolerances& tol);

/// Node-wise Y(t_i) C(t_i) for invertible C; SingularFactor otherwise.
SampledLagrangianPath multiply_right(const SampledLagrangianPath& path,
                                     const std::function<Mat(double)>& C_of_t,
                                     const Tolerances& tol);

/// Merges both grids; frames at foreign nodes come from the evaluator.
std::vector<double> merge_grids(const std::vector<double>& ta,
                                const std::vector<double>& tb);

/// Path resampled onto a superset grid (requires the evaluator for new nodes).
SampledLagrangianPath resample_path(const SampledLagrangianPath& path,
                                    const std::vector<double>& grid,
                                    const Tolerances& tol);

/// JSON path format: {"n": int, "t": [...], "frames": [[row-major 2n x n]...]}.
SampledLagrangianPath load_path_json(std::istream& in, const Tolerances& tol);
void save_path_json(const SampledLagrangianPath& path, std::ostream& out);

}  // namespace osk

#endif  // OSK_LAGRANGIAN_HPP
