#include "osk/maslov.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "osk/compidx.hpp"

namespace osk {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

CMat complex_combination(const Mat& X, const Mat& U, double sign) {
  const std::complex<double> im(0.0, sign);
  return X.cast<std::complex<double>>() + im * U.cast<std::complex<double>>();
}

}  // namespace

GammaSample gamma_matrix(const LagrangianFrame& Y, const LagrangianFrame& Yhat,
                         const Tolerances& tol) {
  if (Y.n() != Yhat.n())
    throw Error(ErrorCode::ShapeMismatch, "gamma_matrix: dim mismatch");
  const int n = Y.n();
  const CMat Ap = complex_combination(Y.X(), Y.U(), +1.0);
  const CMat Am = complex_combination(Y.X(), Y.U(), -1.0);
  const CMat Bp = complex_combination(Yhat.X(), Yhat.U(), +1.0);
  const CMat Bm = complex_combination(Yhat.X(), Yhat.U(), -1.0);

  // T1 = Ap * Am^{-1} via Am^T x = Ap^T, T2 = Bm * Bp^{-1} likewise.
  Eigen::PartialPivLU<CMat> luA(Am.transpose());
  const CMat T1 = luA.solve(Ap.transpose()).transpose();
  Eigen::PartialPivLU<CMat> luB(Bp.transpose());
  const CMat T2 = luB.solve(Bm.transpose()).transpose();
  const double residA = (T1 * Am - Ap).cwiseAbs().maxCoeff();
  const double residB = (T2 * Bp - Bm).cwiseAbs().maxCoeff();
  const double scale = std::max({1.0, Ap.cwiseAbs().maxCoeff(),
                                 Bm.cwiseAbs().maxCoeff()});
  if (residA > tol.struct_atol * scale * n || residB > tol.struct_atol * scale * n)
    throw Error(ErrorCode::IllConditioned,
                "gamma_matrix: factor inversion residual");

  GammaSample out;
  out.Gamma = -(T1 * T2);
  const double unit =
      (out.Gamma * out.Gamma.adjoint() - CMat::Identity(n, n))
          .cwiseAbs()
          .maxCoeff();
  if (unit > 1e3 * tol.struct_atol)
    throw Error(ErrorCode::IllConditioned,
                "gamma_matrix: result not unitary, residual " +
                    std::to_string(unit));
  out.eigen_angles = unitary_eigen_angles(out.Gamma, tol);
  return out;
}

namespace {

SymplecticEvaluator pair_evaluator(const SampledLagrangianPath& pathY,
                                   const SampledLagrangianPath& pathYhat,
                                   const Tolerances& tol) {
  return [&pathY, &pathYhat, tol](double t) {
    const SymplecticMatrix ZY = z_frame(pathY.at(t), tol);
    const SymplecticMatrix ZYhat = z_frame(pathYhat.at(t), tol);
    return SymplecticMatrix{ZY.S.transpose() * ZYhat.S};
  };
}

TrackOptions adapt_pair(const SampledLagrangianPath& a,
                        const SampledLagrangianPath& b, TrackOptions opts) {
  if (!a.has_evaluator() || !b.has_evaluator()) opts.allow_refine = false;
  if ((a.has_evaluator() && !a.evaluator_concurrent) ||
      (b.has_evaluator() && !b.evaluator_concurrent))
    opts.exec = Execution::serial;
  return opts;
}

}  // namespace

MaslovPair maslov_pair(const SampledLagrangianPath& pathY,
                       const SampledLagrangianPath& pathYhat,
                       const Tolerances& tol, const TrackOptions& opts) {
  if (pathY.n() != pathYhat.n())
    throw Error(ErrorCode::ShapeMismatch, "maslov_pair: dim mismatch");
  const std::vector<double> grid = merge_grids(pathY.t, pathYhat.t);
  const AngleTrace trace =
      track_angles(pair_evaluator(pathY, pathYhat, tol), grid, tol,
                   adapt_pair(pathY, pathYhat, opts));
  MaslovPair out;
  out.mas = trace.q_sum_change();
  out.mas_star = trace.q_star_sum_change();
  out.trace = trace;
  return out;
}

long maslov_index(const SampledLagrangianPath& pathY,
                  const SampledLagrangianPath& pathYhat, const Tolerances& tol,
                  const TrackOptions& opts) {
  return maslov_pair(pathY, pathYhat, tol, opts).mas;
}

long dual_maslov_index(const SampledLagrangianPath& pathY,
                       const SampledLagrangianPath& pathYhat,
                       const Tolerances& tol, const TrackOptions& opts) {
  return maslov_pair(pathY, pathYhat, tol, opts).mas_star;
}

namespace {

// Distance data of one branch value relative to the level set pi + 2*pi*m.
struct LevelPosition {
  double signed_dist;  // psi - nearest level, in [-pi, pi]
  long level;          // index m of the nearest level
};

LevelPosition level_position(double psi) {
  const double m = std::round((psi - M_PI) / kTwoPi);
  return {psi - (M_PI + kTwoPi * m), static_cast<long>(m)};
}

struct ArcCounters {
  long plain = 0;  // eigenvalues on [pi, pi + eps)
  long dual = 0;   // eigenvalues on (pi - eps, pi]
  int snaps = 0;   // memberships decided by angle_atol snapping
};

ArcCounters arc_membership(const Vec& psi, double eps, double atol) {
  ArcCounters c;
  for (Eigen::Index j = 0; j < psi.size(); ++j) {
    const LevelPosition p = level_position(psi(j));
    if (std::abs(p.signed_dist) <= atol) {
      ++c.plain;
      ++c.dual;
      ++c.snaps;
    } else if (p.signed_dist > 0.0 && p.signed_dist < eps) {
      ++c.plain;
    } else if (p.signed_dist < 0.0 && -p.signed_dist < eps) {
      ++c.dual;
    }
  }
  return c;
}

struct SegmentEps {
  bool feasible = false;
  double eps = 0.0;
};

// Chooses eps for one segment so that crossing branches stay inside the band
// and all other branches stay outside it at both endpoints.
SegmentEps choose_eps(const Vec& lo, const Vec& hi, double atol) {
  double active_max = 0.0;
  double inactive_min = M_PI;
  bool has_active = false;
  for (Eigen::Index j = 0; j < lo.size(); ++j) {
    const LevelPosition pl = level_position(lo(j));
    const LevelPosition ph = level_position(hi(j));
    const bool on_level =
        std::abs(pl.signed_dist) <= atol || std::abs(ph.signed_dist) <= atol;
    const bool crosses =
        pl.level == ph.level && pl.signed_dist * ph.signed_dist <= 0.0;
    if (on_level || crosses) {
      has_active = true;
      active_max = std::max(
          {active_max, std::abs(pl.signed_dist), std::abs(ph.signed_dist)});
    } else {
      inactive_min = std::min(
          {inactive_min, std::abs(pl.signed_dist), std::abs(ph.signed_dist)});
    }
  }
  SegmentEps out;
  out.eps = std::clamp(0.5 * inactive_min, 10.0 * atol, 0.5 * M_PI);
  out.feasible =
      out.eps < inactive_min && (!has_active || active_max < out.eps);
  return out;
}

CrossingCount crossing_core(const SampledLagrangianPath& pathY,
                            const SampledLagrangianPath& pathYhat,
                            const Tolerances& tol, TrackOptions opts,
                            bool dual) {
  opts = adapt_pair(pathY, pathYhat, opts);
  opts.branch_step_bound = std::min(opts.branch_step_bound, M_PI / 8.0);
  const AngleSetEvaluator gamma_angles = [&pathY, &pathYhat, tol](double t) {
    return gamma_matrix(pathY.at(t), pathYhat.at(t), tol).eigen_angles;
  };

  std::vector<double> grid = merge_grids(pathY.t, pathYhat.t);
  for (int round = 0;; ++round) {
    const BranchTrack track = track_branches(gamma_angles, grid, tol, opts);
    std::vector<double> extra;
    std::vector<SegmentEps> eps(track.t.size() - 1);
    for (std::size_t k = 0; k + 1 < track.t.size(); ++k) {
      eps[k] = choose_eps(track.angles[k], track.angles[k + 1], tol.angle_atol);
      if (!eps[k].feasible)
        extra.push_back(0.5 * (track.t[k] + track.t[k + 1]));
    }
    if (extra.empty()) {
      CrossingCount out;
      for (std::size_t k = 0; k + 1 < track.t.size(); ++k) {
        const ArcCounters at_lo =
            arc_membership(track.angles[k], eps[k].eps, tol.angle_atol);
        const ArcCounters at_hi =
            arc_membership(track.angles[k + 1], eps[k].eps, tol.angle_atol);
        out.value += dual ? at_lo.dual - at_hi.dual : at_hi.plain - at_lo.plain;
        out.boundary_snaps += at_lo.snaps + at_hi.snaps;
      }
      return out;
    }
    if (!opts.allow_refine || round >= opts.max_depth)
      throw Error(ErrorCode::PartitionNotFound,
                  "crossing oracle: no admissible eps after " +
                      std::to_string(round) + " refinement rounds");
    grid = merge_grids(track.t, extra);
  }
}

}  // namespace

CrossingCount maslov_crossing_oracle(const SampledLagrangianPath& pathY,
                                     const SampledLagrangianPath& pathYhat,
                                     const Tolerances& tol,
                                     const TrackOptions& opts) {
  return crossing_core(pathY, pathYhat, tol, opts, false);
}

CrossingCount dual_maslov_crossing_oracle(const SampledLagrangianPath& pathY,
                                          const SampledLagrangianPath& pathYhat,
                                          const Tolerances& tol,
                                          const TrackOptions& opts) {
  return crossing_core(pathY, pathYhat, tol, opts, true);
}

namespace {

SampledLagrangianPath constant_vertical_path(const std::vector<double>& grid,
                                             int n) {
  SampledLagrangianPath p;
  p.t = grid;
  p.frames.assign(grid.size(), vertical_plane(n));
  p.evaluator = [n](double) { return vertical_plane(n); };
  return p;
}

}  // namespace

std::pair<IdentityReport, IdentityReport> verify_maslov_comparison(
    const SampledLagrangianPath& pathY, const SampledLagrangianPath& pathYhat,
    const Tolerances& tol) {
  const std::vector<double> grid = merge_grids(pathY.t, pathYhat.t);
  const SampledLagrangianPath epath = constant_vertical_path(grid, pathY.n());

  const MaslovPair direct = maslov_pair(pathY, pathYhat, tol);
  const MaslovPair refYhat = maslov_pair(epath, pathYhat, tol);
  const MaslovPair refY = maslov_pair(epath, pathY, tol);

  const auto mu_a = comparative_index(pathYhat.frames.front(),
                                      pathY.frames.front(), tol);
  const auto mu_b =
      comparative_index(pathYhat.frames.back(), pathY.frames.back(), tol);

  IdentityReport plain;
  plain.lhs = direct.mas;
  plain.rhs = refYhat.mas - refY.mas + mu_a.mu - mu_b.mu;
  plain.ok = plain.lhs == plain.rhs;
  plain.description =
      "Mas(Y,Yh) == Mas(E,Yh) - Mas(E,Y) + mu(Yh(a),Y(a)) - mu(Yh(b),Y(b))";

  IdentityReport dual;
  dual.lhs = direct.mas_star;
  dual.rhs = refYhat.mas_star - refY.mas_star + mu_b.mu_star - mu_a.mu_star;
  dual.ok = dual.lhs == dual.rhs;
  dual.description =
      "Mas*(Y,Yh) == Mas*(E,Yh) - Mas*(E,Y) + mu*(Yh(b),Y(b)) - mu*(Yh(a),Y(a))";
  return {plain, dual};
}

MonotoneMaslovReport monotone_maslov(const SampledLagrangianPath& pathY,
                                     const SampledLagrangianPath& pathYhat,
                                     const SymplecticEvaluator& Z_of_t,
                                     const std::function<Mat(double)>& P_of_t,
                                     const Tolerances& tol) {
  const std::vector<double> grid = merge_grids(pathY.t, pathYhat.t);
  const SampledLagrangianPath Y = resample_path(pathY, grid, tol);
  const SampledLagrangianPath Yhat = resample_path(pathYhat, grid, tol);

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const SymplecticMatrix Z = Z_of_t(grid[i]);
    const Mat ZE = Z.S.rightCols(Z.n());
    const Mat YP = Y.frames[i].Y * P_of_t(grid[i]);
    if ((ZE - YP).cwiseAbs().maxCoeff() > tol.struct_atol)
      throw Error(ErrorCode::FrameMismatch,
                  "monotone_maslov: Z(t)E != Y(t)P(t) at t = " +
                      std::to_string(grid[i]));
  }

  // Transformed path whose monotonicity drives the rank-drop formula.
  SampledLagrangianPath bar = transform_path(Yhat, Z_of_t, tol);
  require_monotone_at_nodes(bar, tol);

  const auto W_of_t = [&Y, &Yhat](double t) {
    return wronskian(Y.at(t), Yhat.at(t));
  };
  const double loc_atol = 1e-6 * (grid.back() - grid.front());
  const RankDropTally tally =
      scan_rank_drops(W_of_t, grid.front(), grid.back(), grid, loc_atol, tol);

  const MaslovPair angles = maslov_pair(Y, Yhat, tol);
  MonotoneMaslovReport rep;
  rep.mas_rank_route = tally.left;
  rep.mas_star_rank_route = tally.right;
  rep.mas_angle_route = angles.mas;
  rep.mas_star_angle_route = angles.mas_star;
  rep.ok = rep.mas_rank_route == rep.mas_angle_route &&
           rep.mas_star_rank_route == rep.mas_star_angle_route &&
           rep.mas_rank_route >= 0 && rep.mas_star_rank_route >= 0;
  return rep;
}

}  // namespace osk
