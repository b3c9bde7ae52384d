#include "osk/oscnum.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "osk/compidx.hpp"

namespace osk {

namespace {

SymplecticEvaluator z_evaluator(const SampledLagrangianPath& path,
                                const Tolerances& tol) {
  return [&path, tol](double t) { return z_frame(path.at(t), tol); };
}

TrackOptions adapt(const SampledLagrangianPath& path, TrackOptions opts) {
  if (!path.has_evaluator()) opts.allow_refine = false;
  if (!path.evaluator_concurrent) opts.exec = Execution::serial;
  return opts;
}

}  // namespace

OscillationPair oscillation_pair(const SampledLagrangianPath& path,
                                 const Tolerances& tol,
                                 const TrackOptions& opts) {
  const AngleTrace trace =
      track_angles(z_evaluator(path, tol), path.t, tol, adapt(path, opts));
  OscillationPair out;
  out.N = trace.q_sum_change();
  out.N_star = trace.q_star_sum_change();
  out.trace = trace;
  return out;
}

OscillationResult oscillation_number(const SampledLagrangianPath& path,
                                     const Tolerances& tol,
                                     const TrackOptions& opts) {
  OscillationPair pair = oscillation_pair(path, tol, opts);
  return {pair.N, Route::lidskii, std::move(pair.trace)};
}

OscillationResult dual_oscillation_number(const SampledLagrangianPath& path,
                                          const Tolerances& tol,
                                          const TrackOptions& opts) {
  OscillationPair pair = oscillation_pair(path, tol, opts);
  return {pair.N_star, Route::lidskii, std::move(pair.trace)};
}

namespace {

LagrangianFrame reference_plane(const SymplecticMatrix& R,
                                const Tolerances& tol) {
  return make_frame(R.S.rightCols(R.n()), tol);
}

// Ranks entering the two partition conditions at one sample time.
struct SegmentRanks {
  int wronskian_rank;
  int upper_rank;
};

SegmentRanks segment_ranks(const SymplecticEvaluator& Rk, double t,
                           const LagrangianFrame& frame,
                           const Tolerances& tol) {
  const SymplecticMatrix R = Rk(t);
  const LagrangianFrame RE = reference_plane(R, tol);
  return {numeric_rank(wronskian(RE, frame), tol),
          numeric_rank(RE.X(), tol)};
}

}  // namespace

void validate_partition(const SampledLagrangianPath& path,
                        const PartitionSystem& ps, const Tolerances& tol) {
  if (ps.breakpoints.size() < 2 || ps.R.size() + 1 != ps.breakpoints.size())
    throw Error(ErrorCode::InvalidPartition, "breakpoint/segment count");
  if (ps.breakpoints.front() != path.a() || ps.breakpoints.back() != path.b())
    throw Error(ErrorCode::InvalidPartition, "breakpoints must span [a, b]");
  for (double bp : ps.breakpoints)
    if (!std::binary_search(path.t.begin(), path.t.end(), bp))
      throw Error(ErrorCode::InvalidPartition,
                  "breakpoint " + std::to_string(bp) + " is not a path node");

  for (std::size_t k = 0; k + 1 < ps.breakpoints.size(); ++k) {
    const double lo = ps.breakpoints[k];
    const double hi = ps.breakpoints[k + 1];
    bool first = true;
    SegmentRanks ref{0, 0};
    for (std::size_t i = 0; i < path.t.size(); ++i) {
      if (path.t[i] < lo || path.t[i] > hi) continue;
      const SegmentRanks r =
          segment_ranks(ps.R[k], path.t[i], path.frames[i], tol);
      if (first) {
        ref = r;
        first = false;
      } else if (r.wronskian_rank != ref.wronskian_rank) {
        throw Error(ErrorCode::InvalidPartition,
                    "segment " + std::to_string(k) +
                        ": rank W(R_k E, Y) not constant");
      } else if (r.upper_rank != ref.upper_rank) {
        throw Error(ErrorCode::InvalidPartition,
                    "segment " + std::to_string(k) +
                        ": upper-block rank of R_k E not constant");
      }
    }
  }
}

namespace {

Mat rotation_block(int n, double alpha) {
  Mat R(2 * n, 2 * n);
  const Mat I = Mat::Identity(n, n);
  R.topLeftCorner(n, n) = std::cos(alpha) * I;
  R.topRightCorner(n, n) = std::sin(alpha) * I;
  R.bottomLeftCorner(n, n) = -std::sin(alpha) * I;
  R.bottomRightCorner(n, n) = std::cos(alpha) * I;
  return R;
}

const std::vector<double>& alpha_candidates() {
  static const std::vector<double> alphas = [] {
    std::vector<double> v{M_PI / 2, M_PI / 4, 3 * M_PI / 4};
    for (int level = 3; level <= 6; ++level) {
      const int den = 1 << level;
      for (int num = 1; num < den; num += 2)
        v.push_back(M_PI * static_cast<double>(num) / den);
    }
    return v;
  }();
  return alphas;
}

}  // namespace

PartitionSystem build_partition(const SampledLagrangianPath& path,
                                const Tolerances& tol, int max_depth) {
  const int n = path.n();

  // Node index range [lo, hi]; returns the alpha whose rank conditions are
  // constant at all nodes of the closed segment, or nullopt.
  auto find_alpha = [&](std::size_t lo, std::size_t hi) -> std::optional<double> {
    for (double alpha : alpha_candidates()) {
      const Mat C = rotation_block(n, alpha);
      bool good = true;
      int ref_w = -1, ref_u = -1;
      for (std::size_t i = lo; i <= hi && good; ++i) {
        const SymplecticMatrix Z = z_frame(path.frames[i], tol);
        const LagrangianFrame RE =
            reference_plane(SymplecticMatrix{Z.S * C}, tol);
        const int rw = numeric_rank(wronskian(RE, path.frames[i]), tol);
        const int ru = numeric_rank(RE.X(), tol);
        if (i == lo) {
          ref_w = rw;
          ref_u = ru;
        } else {
          good = rw == ref_w && ru == ref_u;
        }
      }
      if (good) return alpha;
    }
    return std::nullopt;
  };

  PartitionSystem ps;
  ps.breakpoints.push_back(path.a());

  std::function<void(std::size_t, std::size_t, int)> cover =
      [&](std::size_t lo, std::size_t hi, int depth) {
        if (auto alpha = find_alpha(lo, hi)) {
          const Mat C = rotation_block(n, *alpha);
          ps.R.push_back([&path, C, tol](double t) {
            return SymplecticMatrix{z_frame(path.at(t), tol).S * C};
          });
          ps.breakpoints.push_back(path.t[hi]);
          return;
        }
        if (hi - lo < 2 || depth >= max_depth)
          throw Error(ErrorCode::ConstructionFailed,
                      "build_partition: no admissible rotation on [" +
                          std::to_string(path.t[lo]) + ", " +
                          std::to_string(path.t[hi]) + "]");
        const std::size_t mid = lo + (hi - lo) / 2;
        cover(lo, mid, depth + 1);
        cover(mid, hi, depth + 1);
      };
  cover(0, path.t.size() - 1, 0);

  validate_partition(path, ps, tol);
  return ps;
}

namespace {

long partition_sum(const SampledLagrangianPath& path, const PartitionSystem& ps,
                   const Tolerances& tol, bool dual) {
  validate_partition(path, ps, tol);
  auto frame_at = [&path](double t) {
    const auto it = std::lower_bound(path.t.begin(), path.t.end(), t);
    return path.frames[static_cast<std::size_t>(it - path.t.begin())];
  };
  long sum = 0;
  for (std::size_t k = 0; k + 1 < ps.breakpoints.size(); ++k) {
    const double lo = ps.breakpoints[k];
    const double hi = ps.breakpoints[k + 1];
    const auto mu_at = [&](double t) {
      const LagrangianFrame RE = reference_plane(ps.R[k](t), tol);
      const ComparativeIndexBreakdown ci =
          comparative_index(frame_at(t), RE, tol);
      return dual ? ci.mu_star : ci.mu;
    };
    // Plain: value at t_{k+1} minus at t_k; dual: reversed endpoint order.
    sum += dual ? mu_at(lo) - mu_at(hi) : mu_at(hi) - mu_at(lo);
  }
  return sum;
}

}  // namespace

OscillationResult oscillation_number_partition(
    const SampledLagrangianPath& path, const PartitionSystem& ps,
    const Tolerances& tol) {
  return {partition_sum(path, ps, tol, false), Route::partition, std::nullopt};
}

OscillationResult dual_oscillation_number_partition(
    const SampledLagrangianPath& path, const PartitionSystem& ps,
    const Tolerances& tol) {
  return {partition_sum(path, ps, tol, true), Route::partition, std::nullopt};
}

namespace {

// Smallest few singular values govern both the dip search and the
// classification of the rank exactly at an exceptional point.
Vec singular_values(const Mat& A) {
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues();
}

double sigma_k(const Mat& A, int k) {
  const Vec sv = singular_values(A);
  return k >= 1 && k <= sv.size() ? sv(k - 1) : 0.0;
}

struct ExceptionalPoint {
  double t;
  int value;  // rank exactly at the point
};

class RankScanner {
 public:
  RankScanner(const std::function<Mat(double)>& F, double loc_atol,
              const Tolerances& tol)
      : F_(F), loc_atol_(loc_atol), tol_(tol) {}

  int rank_at(double t) const { return numeric_rank(F_(t), tol_); }

  // Rank at t classified against motion-scaled thresholds so that a value
  // within loc_atol of a true rank-drop point is still recognized as dropped.
  int rank_at_localized(double t) const {
    const double h = 100.0 * loc_atol_;
    const Mat A = F_(t);
    const double slope =
        (F_(t + h) - F_(t - h)).norm() / (2.0 * h);
    const Vec sv = singular_values(A);
    const double cutoff =
        20.0 * slope * loc_atol_ +
        tol_.rank_rtol * static_cast<double>(std::max(A.rows(), A.cols())) *
            (sv.size() ? sv(0) : 0.0);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > cutoff) ++r;
    return r;
  }

  void scan(double lo, int rank_lo, double hi, int rank_hi,
            std::vector<ExceptionalPoint>& events, int depth) const {
    if (depth > 64)
      throw Error(ErrorCode::RefinementExhausted,
                  "rank scan exceeded recursion budget");
    if (hi - lo <= loc_atol_) {
      const double mid = 0.5 * (lo + hi);
      events.push_back({mid, std::min({rank_at_localized(mid), rank_lo, rank_hi})});
      return;
    }
    if (rank_lo != rank_hi) {
      const double mid = 0.5 * (lo + hi);
      const int rm = rank_at(mid);
      scan(lo, rank_lo, mid, rm, events, depth + 1);
      scan(mid, rm, hi, rank_hi, events, depth + 1);
      return;
    }
    // Equal end ranks: look for an interior dip of sigma_{rank_lo}.
    if (rank_lo == 0) return;
    const auto [tmin, fmin] = golden_min(lo, hi, rank_lo);
    const double h = std::max(100.0 * loc_atol_, 1e-9 * (hi - lo));
    const double slope =
        std::max(std::abs(sigma_k(F_(tmin + h), rank_lo) - fmin),
                 std::abs(sigma_k(F_(tmin - h), rank_lo) - fmin)) /
        h;
    const Mat A = F_(tmin);
    const double gate =
        20.0 * slope * loc_atol_ +
        tol_.rank_rtol * static_cast<double>(std::max(A.rows(), A.cols())) *
            sigma_k(A, 1);
    if (fmin > gate) return;  // clean segment
    const double guard = 8.0 * loc_atol_;
    const double gl = std::max(lo, tmin - guard);
    const double gr = std::min(hi, tmin + guard);
    const int rl = rank_at(gl), rr = rank_at(gr);
    if (rl == rank_lo && rr == rank_lo) {
      events.push_back({tmin, rank_at_localized(tmin)});
      if (gl - lo > loc_atol_) scan(lo, rank_lo, gl, rl, events, depth + 1);
      if (hi - gr > loc_atol_) scan(gr, rr, hi, rank_hi, events, depth + 1);
    } else {
      if (gl - lo > loc_atol_) scan(lo, rank_lo, gl, rl, events, depth + 1);
      scan(gl, rl, gr, rr, events, depth + 1);
      if (hi - gr > loc_atol_) scan(gr, rr, hi, rank_hi, events, depth + 1);
    }
  }

 private:
  // Coarse scan then golden-section refinement of the located local minimum.
  std::pair<double, double> golden_min(double lo, double hi, int k) const {
    constexpr int kCoarse = 33;
    double best_t = lo, best_f = sigma_k(F_(lo), k);
    for (int i = 1; i <= kCoarse; ++i) {
      const double t =
          lo + (hi - lo) * static_cast<double>(i) / (kCoarse + 1);
      const double f = sigma_k(F_(t), k);
      if (f < best_f) {
        best_f = f;
        best_t = t;
      }
    }
    const double step = (hi - lo) / (kCoarse + 1);
    double a = std::max(lo, best_t - step), b = std::min(hi, best_t + step);
    const double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = sigma_k(F_(x1), k), f2 = sigma_k(F_(x2), k);
    while (b - a > loc_atol_) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - inv_phi * (b - a);
        f1 = sigma_k(F_(x1), k);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + inv_phi * (b - a);
        f2 = sigma_k(F_(x2), k);
      }
    }
    const double t = 0.5 * (a + b);
    return {t, sigma_k(F_(t), k)};
  }

  const std::function<Mat(double)>& F_;
  double loc_atol_;
  const Tolerances& tol_;
};

}  // namespace

RankDropTally scan_rank_drops(const std::function<Mat(double)>& F, double a,
                              double b, const std::vector<double>& seed_grid,
                              double loc_atol, const Tolerances& tol) {
  RankScanner scanner(F, loc_atol, tol);

  std::vector<ExceptionalPoint> events;
  std::vector<int> node_rank(seed_grid.size());
  for (std::size_t i = 0; i < seed_grid.size(); ++i)
    node_rank[i] = scanner.rank_at(seed_grid[i]);
  for (std::size_t i = 0; i + 1 < seed_grid.size(); ++i)
    scanner.scan(seed_grid[i], node_rank[i], seed_grid[i + 1],
                 node_rank[i + 1], events, 0);

  // Merge events produced by adjacent brackets around the same point.
  std::sort(events.begin(), events.end(),
            [](const ExceptionalPoint& x, const ExceptionalPoint& y) {
              return x.t < y.t;
            });
  std::vector<ExceptionalPoint> merged;
  for (const auto& e : events) {
    if (!merged.empty() && e.t - merged.back().t <= 16.0 * loc_atol) {
      merged.back().value = std::min(merged.back().value, e.value);
      merged.back().t = 0.5 * (merged.back().t + e.t);
    } else {
      merged.push_back(e);
    }
  }

  // Markers: interval endpoints plus interior exceptional points. Plateau
  // ranks are sampled at gap midpoints between consecutive markers.
  struct Marker {
    double t;
    int value;
  };
  std::vector<Marker> markers;
  markers.push_back({a, node_rank.front()});
  for (const auto& e : merged)
    if (e.t > a + 16.0 * loc_atol && e.t < b - 16.0 * loc_atol)
      markers.push_back({e.t, e.value});
  markers.push_back({b, node_rank.back()});

  std::vector<int> gap_rank(markers.size() - 1);
  for (std::size_t g = 0; g + 1 < markers.size(); ++g)
    gap_rank[g] = scanner.rank_at(0.5 * (markers[g].t + markers[g + 1].t));

  RankDropTally tally;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    if (i > 0) tally.left += gap_rank[i - 1] - markers[i].value;    // (a, b]
    if (i + 1 < markers.size())
      tally.right += gap_rank[i] - markers[i].value;                // [a, b)
  }
  return tally;
}

void require_monotone_at_nodes(const SampledLagrangianPath& path,
                               const Tolerances& tol) {
  for (std::size_t i = 0; i < path.t.size(); ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == path.t.size() ? i : i + 1;
    const Mat dY =
        (path.frames[hi].Y - path.frames[lo].Y) / (path.t[hi] - path.t[lo]);
    const int n = path.n();
    Mat G = dY.transpose() * canonical_J(n) * path.frames[i].Y;
    G = 0.5 * (G + G.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(G, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol.struct_atol)
      throw Error(ErrorCode::NotMonotone,
                  "monotonicity fails at node " + std::to_string(i) +
                      " (t = " + std::to_string(path.t[i]) +
                      ", min eigenvalue " +
                      std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
}

int rank_drop_count(const SampledLagrangianPath& path, Side side,
                    const Tolerances& tol) {
  if (!path.has_evaluator())
    throw Error(ErrorCode::EvaluatorMissing,
                "rank_drop_count needs an evaluator for localization");
  require_monotone_at_nodes(path, tol);
  const double loc_atol = 1e-6 * (path.b() - path.a());
  const auto X_of_t = [&path](double t) { return path.at(t).X(); };
  const RankDropTally tally =
      scan_rank_drops(X_of_t, path.a(), path.b(), path.t, loc_atol, tol);
  return side == Side::left ? tally.left : tally.right;
}

IdentityReport verify_duality(const SampledLagrangianPath& path,
                              const Tolerances& tol) {
  const OscillationPair pair = oscillation_pair(path, tol);
  const int rank_b = numeric_rank(path.frames.back().X(), tol);
  const int rank_a = numeric_rank(path.frames.front().X(), tol);
  IdentityReport rep;
  rep.lhs = pair.N + rank_b;
  rep.rhs = pair.N_star + rank_a;
  rep.ok = rep.lhs == rep.rhs;
  rep.description = "N + rank X(b) == N* + rank X(a)";
  return rep;
}

SampledLagrangianPath interleave_paths(const SampledLagrangianPath& path1,
                                       const SampledLagrangianPath& path2,
                                       const Tolerances& tol) {
  const std::vector<double> grid = merge_grids(path1.t, path2.t);
  const SampledLagrangianPath p1 = resample_path(path1, grid, tol);
  const SampledLagrangianPath p2 = resample_path(path2, grid, tol);
  const int n1 = p1.n(), n2 = p2.n();

  auto combine = [n1, n2](const LagrangianFrame& f1, const LagrangianFrame& f2) {
    Mat Y = Mat::Zero(2 * (n1 + n2), n1 + n2);
    Y.block(0, 0, n1, n1) = f1.X();
    Y.block(n1, n1, n2, n2) = f2.X();
    Y.block(n1 + n2, 0, n1, n1) = f1.U();
    Y.block(2 * n1 + n2, n1, n2, n2) = f2.U();
    return LagrangianFrame{Y};
  };

  SampledLagrangianPath out;
  out.t = grid;
  out.frames.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    out.frames.push_back(combine(p1.frames[i], p2.frames[i]));
  if (p1.has_evaluator() && p2.has_evaluator()) {
    FrameEvaluator e1 = p1.evaluator, e2 = p2.evaluator;
    out.evaluator = [e1, e2, combine](double t) {
      return combine(e1(t), e2(t));
    };
    out.evaluator_concurrent =
        p1.evaluator_concurrent && p2.evaluator_concurrent;
  }
  validate_path(out, tol);
  return out;
}

std::pair<IdentityReport, IdentityReport> verify_block_diag(
    const SampledLagrangianPath& path1, const SampledLagrangianPath& path2,
    const Tolerances& tol) {
  const SampledLagrangianPath combined = interleave_paths(path1, path2, tol);
  const OscillationPair pc = oscillation_pair(combined, tol);
  const OscillationPair p1 = oscillation_pair(path1, tol);
  const OscillationPair p2 = oscillation_pair(path2, tol);

  IdentityReport plain{pc.N == p1.N + p2.N, pc.N, p1.N + p2.N,
                       "N(diag) == N(Y1) + N(Y2)"};
  IdentityReport dual{pc.N_star == p1.N_star + p2.N_star, pc.N_star,
                      p1.N_star + p2.N_star, "N*(diag) == N*(Y1) + N*(Y2)"};
  return {plain, dual};
}

std::pair<IdentityReport, IdentityReport> verify_se_inverse(
    const SymplecticEvaluator& S_of_t, const std::vector<double>& grid,
    const Tolerances& tol) {
  auto path_from = [&](bool inverse) {
    SampledLagrangianPath p;
    p.t = grid;
    for (double t : grid) {
      const SymplecticMatrix S = S_of_t(t);
      const Mat M = inverse ? S.inverse() : S.S;
      p.frames.push_back(make_frame(M.rightCols(S.n()), tol));
    }
    p.evaluator = [S_of_t, inverse, tol](double t) {
      const SymplecticMatrix S = S_of_t(t);
      const Mat M = inverse ? S.inverse() : S.S;
      return make_frame(M.rightCols(S.n()), tol);
    };
    return p;
  };
  const OscillationPair fwd = oscillation_pair(path_from(false), tol);
  const OscillationPair inv = oscillation_pair(path_from(true), tol);
  const int r_a = numeric_rank(S_of_t(grid.front()).block12(), tol);
  const int r_b = numeric_rank(S_of_t(grid.back()).block12(), tol);

  IdentityReport plain{fwd.N + inv.N == r_a - r_b, fwd.N + inv.N,
                       static_cast<long>(r_a - r_b),
                       "N(SE) + N(S^{-1}E) == rank S12(a) - rank S12(b)"};
  IdentityReport dual{fwd.N_star + inv.N_star == r_b - r_a,
                      fwd.N_star + inv.N_star, static_cast<long>(r_b - r_a),
                      "N*(SE) + N*(S^{-1}E) == rank S12(b) - rank S12(a)"};
  return {plain, dual};
}

std::pair<IdentityReport, IdentityReport> verify_transform_invariance(
    const SampledLagrangianPath& path, const SymplecticEvaluator& S_of_t,
    const Tolerances& tol) {
  const SampledLagrangianPath direct = transform_path(path, S_of_t, tol);
  const SymplecticEvaluator ZSE = [S_of_t, tol](double t) {
    const SymplecticMatrix S = S_of_t(t);
    return z_frame(make_frame(S.S.rightCols(S.n()), tol), tol);
  };
  const SampledLagrangianPath viaZ = transform_path(path, ZSE, tol);

  const OscillationPair pd = oscillation_pair(direct, tol);
  const OscillationPair pz = oscillation_pair(viaZ, tol);
  IdentityReport plain{pd.N == pz.N, pd.N, pz.N,
                       "N(S^{-1}Y) == N(Z_{SE}^{-1}Y)"};
  IdentityReport dual{pd.N_star == pz.N_star, pd.N_star, pz.N_star,
                      "N*(S^{-1}Y) == N*(Z_{SE}^{-1}Y)"};
  return {plain, dual};
}

}  // namespace osk
