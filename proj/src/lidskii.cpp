#include "osk/lidskii.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace osk {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double principal_angle(std::complex<double> w, double atol) {
  double a = std::arg(w);  // (-pi, pi]
  if (a < 0.0) a += kTwoPi;
  if (a <= atol || kTwoPi - a <= atol) a = 0.0;
  return a;
}

// Signed circular difference target - source wrapped into (-pi, pi].
double circ_diff(double source, double target) {
  double d = std::fmod(target - source, kTwoPi);
  if (d <= -M_PI) d += kTwoPi;
  if (d > M_PI) d -= kTwoPi;
  return d;
}

void q_integers(double phi, double atol, int& q, int& q_star) {
  const double m = std::round(phi / kTwoPi);
  if (std::abs(phi - kTwoPi * m) <= atol) {
    q = static_cast<int>(m);
    q_star = q - 1;
  } else {
    q = static_cast<int>(std::floor(phi / kTwoPi));
    q_star = q;
  }
}

}  // namespace

CMat ws_matrix(const SymplecticMatrix& S, const Tolerances& tol) {
  const int n = S.n();
  const std::complex<double> im(0.0, 1.0);
  const CMat minus = S.block11().cast<std::complex<double>>() -
                     im * S.block12().cast<std::complex<double>>();
  const CMat plus = S.block11().cast<std::complex<double>>() +
                    im * S.block12().cast<std::complex<double>>();
  Eigen::PartialPivLU<CMat> lu(minus);
  const CMat W = lu.solve(plus);
  const double resid = (minus * W - plus).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, plus.cwiseAbs().maxCoeff());
  if (resid > tol.struct_atol * scale * static_cast<double>(n))
    throw Error(ErrorCode::IllConditioned,
                "ws_matrix: inversion residual " + std::to_string(resid));
  return W;
}

Vec unitary_eigen_angles(const CMat& W, const Tolerances& tol) {
  Eigen::ComplexEigenSolver<CMat> es(W, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::IllConditioned, "eigensolver failed");
  Vec angles(W.rows());
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    angles(i) = principal_angle(es.eigenvalues()(i), tol.angle_atol);
  std::sort(angles.data(), angles.data() + angles.size());
  return angles;
}

NodeSpectrum node_spectrum(const SymplecticMatrix& S, const Tolerances& tol) {
  NodeSpectrum out;
  out.angles = unitary_eigen_angles(ws_matrix(S, tol), tol);
  out.s12_defect = S.n() - numeric_rank(S.block12(), tol);
  return out;
}

Vec instantaneous_angles(const SymplecticMatrix& S, const Tolerances& tol) {
  return node_spectrum(S, tol).angles;
}

long AngleTrace::q_sum(std::size_t node) const {
  return std::accumulate(q[node].data(), q[node].data() + q[node].size(), 0L);
}

long AngleTrace::q_star_sum(std::size_t node) const {
  return std::accumulate(q_star[node].data(),
                         q_star[node].data() + q_star[node].size(), 0L);
}

namespace {

struct MatchResult {
  bool ok = false;  // step bound respected and unambiguous
  bool ambiguous = false;
  double cost = 0.0;  // max |displacement| of the chosen assignment
  Vec next;           // updated branch values
};

// Matches current branch values to the next node's principal angles by the
// cyclic shift of the sorted representatives that minimizes the maximum
// circular displacement. Continuity of unitary spectra preserves the cyclic
// order, so the optimal order-preserving assignment is one of the n shifts.
MatchResult match_branches(const Vec& phi, const Vec& next_principal,
                           double step_bound, double angle_atol) {
  const int n = static_cast<int>(phi.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> rep(n);
  for (int j = 0; j < n; ++j) {
    rep[j] = std::fmod(phi(j), kTwoPi);
    if (rep[j] < 0.0) rep[j] += kTwoPi;
  }
  std::sort(order.begin(), order.end(),
            [&rep](int a, int b) { return rep[a] < rep[b]; });

  std::vector<double> shift_cost(n);
  for (int s = 0; s < n; ++s) {
    double cost = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d =
          std::abs(circ_diff(rep[order[j]], next_principal((j + s) % n)));
      cost = std::max(cost, d);
    }
    shift_cost[s] = cost;
  }
  const int best_shift = static_cast<int>(
      std::min_element(shift_cost.begin(), shift_cost.end()) -
      shift_cost.begin());
  const double best_cost = shift_cost[best_shift];

  MatchResult res;
  res.cost = best_cost;
  Vec best_delta(n), alt_delta(n);
  for (int j = 0; j < n; ++j)
    best_delta(order[j]) =
        circ_diff(rep[order[j]], next_principal((j + best_shift) % n));
  res.next = phi + best_delta;

  if (best_cost >= step_bound) return res;  // needs refinement

  // Ambiguity: a different shift with indistinguishable cost that moves the
  // branches materially differently.
  for (int s = 0; s < n; ++s) {
    if (s == best_shift || shift_cost[s] - best_cost >= angle_atol) continue;
    for (int j = 0; j < n; ++j)
      alt_delta(order[j]) =
          circ_diff(rep[order[j]], next_principal((j + s) % n));
    if ((alt_delta - best_delta).cwiseAbs().maxCoeff() > 10.0 * angle_atol) {
      res.ambiguous = true;
      return res;
    }
  }
  res.ok = true;
  return res;
}

}  // namespace

BranchTrack track_branches(const AngleSetEvaluator& angle_set,
                           const std::vector<double>& grid,
                           const Tolerances& tol, const TrackOptions& opts) {
  if (grid.empty())
    throw Error(ErrorCode::InvalidInput, "track_branches: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw Error(ErrorCode::InvalidInput,
                  "track_branches: grid not strictly increasing");

  struct Node {
    double t;
    int depth;
    Vec set;
  };
  std::vector<Node> nodes;
  {
    const std::vector<Vec> sets = sweep_angle_sets(angle_set, grid, opts.exec);
    nodes.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      nodes.push_back({grid[i], 0, sets[i]});
  }

  // Alternate a serial matching walk with batched refinement of the failing
  // segments until every step is clean.
  for (;;) {
    std::vector<std::size_t> bad;  // indices of left endpoints to split
    bool any_ambiguous = false;
    Vec phi = nodes.front().set;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      const MatchResult m =
          match_branches(phi, nodes[i + 1].set, opts.branch_step_bound,
                         tol.angle_atol);
      if (!m.ok) {
        bad.push_back(i);
        any_ambiguous = any_ambiguous || m.ambiguous;
      }
      phi = m.next;
    }
    if (bad.empty()) break;

    for (std::size_t i : bad) {
      if (nodes[i].depth >= opts.max_depth)
        throw Error(any_ambiguous ? ErrorCode::AmbiguousMatching
                                  : ErrorCode::RefinementExhausted,
                    "track_branches: segment [" + std::to_string(nodes[i].t) +
                        ", " + std::to_string(nodes[i + 1].t) +
                        "] cannot be resolved at max depth");
    }
    if (!opts.allow_refine)
      throw Error(ErrorCode::RefinementExhausted,
                  "track_branches: grid too coarse and refinement disallowed");

    std::vector<double> mids(bad.size());
    for (std::size_t k = 0; k < bad.size(); ++k)
      mids[k] = 0.5 * (nodes[bad[k]].t + nodes[bad[k] + 1].t);
    const std::vector<Vec> mid_sets = sweep_angle_sets(angle_set, mids, opts.exec);

    std::vector<Node> next;
    next.reserve(nodes.size() + bad.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      next.push_back(nodes[i]);
      if (k < bad.size() && bad[k] == i) {
        next.back().depth = nodes[i].depth + 1;
        next.push_back({mids[k], nodes[i].depth + 1, mid_sets[k]});
        ++k;
      }
    }
    nodes = std::move(next);
  }

  BranchTrack out;
  out.t.reserve(nodes.size());
  out.angles.reserve(nodes.size());
  Vec phi = nodes.front().set;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0)
      phi = match_branches(phi, nodes[i].set, opts.branch_step_bound,
                           tol.angle_atol)
                .next;
    out.t.push_back(nodes[i].t);
    out.angles.push_back(phi);
  }
  return out;
}

AngleTrace track_angles(const SymplecticEvaluator& S_of_t,
                        const std::vector<double>& grid, const Tolerances& tol,
                        const TrackOptions& opts) {
  const AngleSetEvaluator angle_set = [&S_of_t, tol](double t) {
    return unitary_eigen_angles(ws_matrix(S_of_t(t), tol), tol);
  };
  BranchTrack bt = track_branches(angle_set, grid, tol, opts);

  AngleTrace trace;
  trace.n = static_cast<int>(bt.angles.front().size());
  trace.t = std::move(bt.t);
  trace.angles = std::move(bt.angles);
  trace.q.reserve(trace.t.size());
  trace.q_star.reserve(trace.t.size());
  trace.s12_defect.reserve(trace.t.size());
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    IVec q(trace.n), qs(trace.n);
    for (int j = 0; j < trace.n; ++j)
      q_integers(trace.angles[i](j), tol.angle_atol, q(j), qs(j));
    trace.q.push_back(q);
    trace.q_star.push_back(qs);
    const SymplecticMatrix S = S_of_t(trace.t[i]);
    trace.s12_defect.push_back(S.n() - numeric_rank(S.block12(), tol));
  }
  return trace;
}

double arg_interval_sum(const SymplecticMatrix& S, IntervalKind kind,
                        long q_offset, const Tolerances& tol) {
  const Vec angles = instantaneous_angles(S, tol);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < angles.size(); ++j) {
    double rep = angles(j);
    if (kind == IntervalKind::right_closed && rep == 0.0) rep = kTwoPi;
    sum += rep + kTwoPi * static_cast<double>(q_offset);
  }
  return 0.5 * sum;
}

LidskiiMuResult mu_via_lidskii(const LagrangianFrame& Y,
                               const LagrangianFrame& Yhat,
                               const Tolerances& tol) {
  if (Y.n() != Yhat.n())
    throw Error(ErrorCode::ShapeMismatch, "mu_via_lidskii: dim mismatch");
  const int n = Y.n();
  const SymplecticMatrix ZY = z_frame(Y, tol);
  const SymplecticMatrix ZYhat = z_frame(Yhat, tol);
  const SymplecticMatrix cross{ZYhat.S.transpose() * ZY.S};

  auto three_terms = [&](IntervalKind kind) {
    return arg_interval_sum(ZYhat, kind, 0, tol) -
           arg_interval_sum(ZY, kind, 0, tol) +
           arg_interval_sum(cross, kind, 0, tol);
  };

  const double mu_raw = three_terms(IntervalKind::left_closed) / M_PI;
  const double mu_star_raw =
      static_cast<double>(n) - three_terms(IntervalKind::right_closed) / M_PI;

  LidskiiMuResult out;
  out.mu = static_cast<int>(std::lround(mu_raw));
  out.mu_star = static_cast<int>(std::lround(mu_star_raw));
  out.residual_mu = std::abs(mu_raw - std::round(mu_raw));
  out.residual_mu_star = std::abs(mu_star_raw - std::round(mu_star_raw));
  if (out.residual_mu >= 0.05 || out.residual_mu_star >= 0.05)
    throw Error(ErrorCode::ResidualTooLarge,
                "mu_via_lidskii: residuals " + std::to_string(out.residual_mu) +
                    ", " + std::to_string(out.residual_mu_star));
  return out;
}

void write_angle_trace_csv(const AngleTrace& trace, std::ostream& out) {
  out << "t";
  for (int j = 1; j <= trace.n; ++j) out << ",phi_" << j;
  for (int j = 1; j <= trace.n; ++j) out << ",q_" << j;
  for (int j = 1; j <= trace.n; ++j) out << ",qstar_" << j;
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", trace.t[i]);
    out << buf;
    for (int j = 0; j < trace.n; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", trace.angles[i](j));
      out << ',' << buf;
    }
    for (int j = 0; j < trace.n; ++j) out << ',' << trace.q[i](j);
    for (int j = 0; j < trace.n; ++j) out << ',' << trace.q_star[i](j);
    out << "\n";
  }
}

}  // namespace osk
