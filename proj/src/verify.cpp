#include "osk/verify.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "osk/compidx.hpp"

namespace osk::verify {

namespace {

std::mt19937_64 trial_rng(unsigned long long seed, int trial) {
  std::seed_seq seq{static_cast<unsigned long long>(seed),
                    static_cast<unsigned long long>(trial) + 1};
  return std::mt19937_64(seq);
}

Mat random_invertible(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Vec d(n);
  for (int j = 0; j < n; ++j) d(j) = std::exp(uni(rng));
  return random_orthogonal(rng, n) * d.asDiagonal() *
         random_orthogonal(rng, n).transpose();
}

std::string dump_frames(const LagrangianFrame& Y, const LagrangianFrame& Yhat) {
  std::ostringstream os;
  os << "{\"Y\": " << Y.Y.format(Eigen::IOFormat(
            Eigen::FullPrecision, 0, ", ", ", ", "[", "]", "[", "]"))
     << ", \"Yhat\": " << Yhat.Y.format(Eigen::IOFormat(
            Eigen::FullPrecision, 0, ", ", ", ", "[", "]", "[", "]"))
     << "}";
  return os.str();
}

std::string dump_path(const SampledLagrangianPath& path) {
  std::ostringstream os;
  save_path_json(path, os);
  return os.str();
}

using TrialBody = std::function<void(int trial, std::mt19937_64& rng,
                                     std::vector<std::string>& problems,
                                     std::string& replay)>;

SuiteResult drive(const std::string& name, const SuiteConfig& cfg,
                  const TrialBody& body) {
  SuiteResult result;
  result.suite = name;
  result.trials = cfg.trials;

  std::vector<FailureRecord> failures;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
#endif
  for (int trial = 0; trial < cfg.trials; ++trial) {
    std::mt19937_64 rng = trial_rng(cfg.seed, trial);
    std::vector<std::string> problems;
    std::string replay;
    try {
      body(trial, rng, problems, replay);
    } catch (const std::exception& e) {
      problems.push_back(std::string("exception: ") + e.what());
    }
    if (!problems.empty()) {
      std::ostringstream detail;
      for (std::size_t i = 0; i < problems.size(); ++i)
        detail << (i ? "; " : "") << problems[i];
#ifdef _OPENMP
#pragma omp critical
#endif
      failures.push_back({trial, detail.str(), replay});
    }
  }
  std::sort(failures.begin(), failures.end(),
            [](const FailureRecord& x, const FailureRecord& y) {
              return x.trial < y.trial;
            });
  result.failures = std::move(failures);
  return result;
}

void expect(std::vector<std::string>& problems, bool cond,
            const std::string& what) {
  if (!cond) problems.push_back(what);
}

std::string eq_msg(const std::string& what, long lhs, long rhs) {
  return what + ": " + std::to_string(lhs) + " != " + std::to_string(rhs);
}

// ---------------------------------------------------------------------------
// Suite bodies
// ---------------------------------------------------------------------------

void compidx_props_trial(int trial, std::mt19937_64& rng, int n_max,
                         const Tolerances& tol,
                         std::vector<std::string>& problems,
                         std::string& replay) {
  const int n = 1 + trial % n_max;
  std::uniform_int_distribution<int> defect_dist(0, n);
  const int defY = trial % 3 == 0 ? defect_dist(rng) : 0;
  const int defYhat = trial % 5 == 0 ? defect_dist(rng) : 0;
  const LagrangianFrame Y = random_lagrangian_plane(rng, n, defY);
  const LagrangianFrame Yhat = random_lagrangian_plane(rng, n, defYhat);

  const ComparativeIndexBreakdown ci = comparative_index(Y, Yhat, tol);
  expect(problems, ci.mu >= 0 && ci.mu <= n, "mu out of [0, n]");
  expect(problems, ci.mu_star >= 0 && ci.mu_star <= n, "mu* out of [0, n]");
  expect(problems,
         ci.mu + ci.mu_star == 2 * ci.rank_M + ci.ind_P + ci.ind_negP,
         "mu + mu* != 2 rank M + rank P");

  const Mat C1 = random_invertible(rng, n);
  const Mat C2 = random_invertible(rng, n);
  expect(problems, check_prop_right_mult(Y, Yhat, C1, C2, tol),
         "right-multiplication invariance fails");

  const Mat L = random_lower_triangular_symplectic(rng, n);
  expect(problems, check_prop_lower_triangular(Y, Yhat, L, tol),
         "lower-triangular invariance fails");

  expect(problems, check_prop_duality(Y, Yhat, z_frame(Y, tol), tol),
         "duality property fails");

  const LidskiiMuResult viaZ = mu_via_lidskii(Y, Yhat, tol);
  expect(problems, viaZ.mu == ci.mu && viaZ.mu_star == ci.mu_star,
         eq_msg("mu_via_lidskii vs comparative_index", viaZ.mu, ci.mu) + " / " +
             eq_msg("", viaZ.mu_star, ci.mu_star));

  if (!problems.empty()) replay = dump_frames(Y, Yhat);
}

SampledLagrangianPath random_flow_path(std::mt19937_64& rng, int n,
                                       const Tolerances& tol, bool psd,
                                       int steps = 140) {
  std::uniform_real_distribution<double> len(1.5, 3.0);
  const double a = 0.0, b = len(rng);
  const HamiltonianSpec spec = random_hamiltonian_trig(rng, n, a, b, psd);
  // Rank-deficient X(a) in a quarter of the draws.
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_int_distribution<int> howmany(1, n);
  const int defect = pick(rng) == 0 ? howmany(rng) : 0;
  const LagrangianFrame init = random_lagrangian_plane(rng, n, defect);
  return integrate_conjoined_basis(spec, init, steps, tol);
}

void duality_trial(int trial, std::mt19937_64& rng, int n_max,
                   const Tolerances& tol, std::vector<std::string>& problems,
                   std::string& replay) {
  const int n = 1 + trial % n_max;
  const SampledLagrangianPath path = random_flow_path(rng, n, tol, false);

  const IdentityReport duality = verify_duality(path, tol);
  expect(problems, duality.ok, eq_msg(duality.description, duality.lhs, duality.rhs));

  // Interval additivity at an interior node.
  const OscillationPair whole = oscillation_pair(path, tol);
  const std::size_t cut = path.t.size() / 2;
  auto slice = [&](std::size_t lo, std::size_t hi) {
    SampledLagrangianPath part;
    part.t.assign(path.t.begin() + lo, path.t.begin() + hi + 1);
    part.frames.assign(path.frames.begin() + lo, path.frames.begin() + hi + 1);
    part.evaluator = path.evaluator;
    return part;
  };
  const OscillationPair left = oscillation_pair(slice(0, cut), tol);
  const OscillationPair right =
      oscillation_pair(slice(cut, path.t.size() - 1), tol);
  expect(problems, whole.N == left.N + right.N,
         eq_msg("interval additivity N", whole.N, left.N + right.N));
  expect(problems, whole.N_star == left.N_star + right.N_star,
         eq_msg("interval additivity N*", whole.N_star,
                left.N_star + right.N_star));

  // Block-diagonal additivity against a second, lower-dimensional path.
  const SampledLagrangianPath other =
      random_flow_path(rng, 1 + trial % 2, tol, false);
  const auto [plain, dual] = verify_block_diag(path, other, tol);
  expect(problems, plain.ok, eq_msg(plain.description, plain.lhs, plain.rhs));
  expect(problems, dual.ok, eq_msg(dual.description, dual.lhs, dual.rhs));

  // S E / S^{-1} E corollary and the transformation invariance theorem on a
  // time-dependent random symplectic family.
  const HamiltonianSpec sspec =
      random_hamiltonian_trig(rng, path.n(), path.a(), path.b(), false);
  const PhiFamily fam = flow_family(sspec, 100, tol);
  const Mat Sconst = random_symplectic(rng, path.n());
  const SymplecticEvaluator S_of_t = [fam, Sconst](double t) {
    return SymplecticMatrix{fam.Phi(t).S * Sconst};
  };
  const auto [se_plain, se_dual] = verify_se_inverse(S_of_t, path.t, tol);
  expect(problems, se_plain.ok,
         eq_msg(se_plain.description, se_plain.lhs, se_plain.rhs));
  expect(problems, se_dual.ok,
         eq_msg(se_dual.description, se_dual.lhs, se_dual.rhs));

  const auto [ti_plain, ti_dual] = verify_transform_invariance(path, S_of_t, tol);
  expect(problems, ti_plain.ok,
         eq_msg(ti_plain.description, ti_plain.lhs, ti_plain.rhs));
  expect(problems, ti_dual.ok,
         eq_msg(ti_dual.description, ti_dual.lhs, ti_dual.rhs));

  if (!problems.empty()) replay = dump_path(path);
}

void routes_trial(int trial, std::mt19937_64& rng, int n_max,
                  const Tolerances& tol, std::vector<std::string>& problems,
                  std::string& replay) {
  const int n = 1 + trial % std::min(n_max, 3);

  // Lidskii route vs partition route on a general path.
  const SampledLagrangianPath path = random_flow_path(rng, n, tol, false);
  const OscillationPair viaQ = oscillation_pair(path, tol);
  const PartitionSystem ps = build_partition(path, tol);
  const OscillationResult viaP = oscillation_number_partition(path, ps, tol);
  const OscillationResult viaPdual =
      dual_oscillation_number_partition(path, ps, tol);
  expect(problems, viaQ.N == viaP.value,
         eq_msg("lidskii vs partition N", viaQ.N, viaP.value));
  expect(problems, viaQ.N_star == viaPdual.value,
         eq_msg("lidskii vs partition N*", viaQ.N_star, viaPdual.value));

  // Monotone instance: rank-drop route.
  const SampledLagrangianPath mono = random_flow_path(rng, n, tol, true);
  const OscillationPair monoQ = oscillation_pair(mono, tol);
  const int drops_left = rank_drop_count(mono, Side::left, tol);
  const int drops_right = rank_drop_count(mono, Side::right, tol);
  expect(problems, monoQ.N == drops_left,
         eq_msg("lidskii vs rank-drop N", monoQ.N, drops_left));
  expect(problems, monoQ.N_star == drops_right,
         eq_msg("lidskii vs rank-drop N*", monoQ.N_star, drops_right));
  expect(problems, drops_left >= 0 && drops_right >= 0,
         "monotone counts must be nonnegative");

  // Maslov angle route vs crossing oracle on a random pair.
  const SampledLagrangianPath pY = random_flow_path(rng, n, tol, false, 120);
  const SampledLagrangianPath pYhat =
      random_flow_path(rng, n, tol, false, 120);
  const MaslovPair mp = maslov_pair(pY, pYhat, tol);
  const CrossingCount cc = maslov_crossing_oracle(pY, pYhat, tol);
  const CrossingCount ccd = dual_maslov_crossing_oracle(pY, pYhat, tol);
  expect(problems, mp.mas == cc.value,
         eq_msg("maslov angle vs crossing", mp.mas, cc.value));
  expect(problems, mp.mas_star == ccd.value,
         eq_msg("dual maslov angle vs crossing", mp.mas_star, ccd.value));

  // Maslov index equals the oscillation number of the transformed path.
  const std::vector<double> grid = merge_grids(pY.t, pYhat.t);
  const SampledLagrangianPath rY = resample_path(pY, grid, tol);
  const SymplecticEvaluator ZY = [&rY, tol](double t) {
    return z_frame(rY.at(t), tol);
  };
  const OscillationPair transformed =
      oscillation_pair(transform_path(resample_path(pYhat, grid, tol), ZY, tol), tol);
  expect(problems, mp.mas == transformed.N,
         eq_msg("maslov vs transformed oscillation", mp.mas, transformed.N));
  expect(problems, mp.mas_star == transformed.N_star,
         eq_msg("dual maslov vs transformed oscillation", mp.mas_star,
                transformed.N_star));

  if (!problems.empty()) replay = dump_path(path);
}

void maslov_identities_trial(int trial, std::mt19937_64& rng, int n_max,
                             const Tolerances& tol,
                             std::vector<std::string>& problems,
                             std::string& replay) {
  const int n = 1 + trial % std::min(n_max, 3);
  const SampledLagrangianPath pY = random_flow_path(rng, n, tol, false, 110);
  const SampledLagrangianPath pYhat =
      random_flow_path(rng, n, tol, false, 110);

  // Similarity of Gamma(t) and -W_S(t) eigen-angle multisets at every node.
  const std::vector<double> grid = merge_grids(pY.t, pYhat.t);
  double worst = 0.0;
  for (double t : grid) {
    const LagrangianFrame fY = pY.at(t), fYhat = pYhat.at(t);
    const GammaSample gs = gamma_matrix(fY, fYhat, tol);
    const SymplecticMatrix S{z_frame(fY, tol).S.transpose() *
                             z_frame(fYhat, tol).S};
    const Vec ws = instantaneous_angles(S, tol);
    // Angles of -W_S are those of W_S shifted by pi.
    std::vector<double> shifted(ws.size());
    for (Eigen::Index j = 0; j < ws.size(); ++j)
      shifted[j] = std::fmod(ws(j) + M_PI, 2.0 * M_PI);
    std::sort(shifted.begin(), shifted.end());
    for (Eigen::Index j = 0; j < gs.eigen_angles.size(); ++j) {
      double best = 4.0;
      for (double v : shifted) {
        const double d = std::abs(v - gs.eigen_angles(j));
        best = std::min(best, std::min(d, 2.0 * M_PI - d));
      }
      worst = std::max(worst, best);
    }
  }
  expect(problems, worst <= 1e-8,
         "similarity multiset mismatch " + std::to_string(worst));

  const MaslovPair fwd = maslov_pair(pY, pYhat, tol);
  const MaslovPair rev = maslov_pair(pYhat, pY, tol);
  expect(problems, fwd.mas_star == -rev.mas,
         eq_msg("flipping Mas*(Y,Yh) == -Mas(Yh,Y)", fwd.mas_star, -rev.mas));

  const int rank_b =
      numeric_rank(wronskian(pY.frames.back(), pYhat.at(pY.b())), tol);
  const int rank_a =
      numeric_rank(wronskian(pY.frames.front(), pYhat.at(pY.a())), tol);
  expect(problems, fwd.mas_star - fwd.mas == rank_b - rank_a,
         eq_msg("Mas* - Mas == rank W(b) - rank W(a)", fwd.mas_star - fwd.mas,
                rank_b - rank_a));

  expect(problems, maslov_index(pY, pY, tol) == 0, "Mas(Y, Y) != 0");

  if (!problems.empty()) replay = dump_path(pY);
}

void separation_trial(int trial, std::mt19937_64& rng, int n_max,
                      const Tolerances& tol,
                      std::vector<std::string>& problems, std::string& replay) {
  const int n = 1 + trial % std::min(n_max, 3);
  std::uniform_real_distribution<double> len(1.5, 2.5);
  const HamiltonianSpec spec =
      random_hamiltonian_trig(rng, n, 0.0, len(rng), false);
  const PhiFamily fam = flow_family(spec, 120, tol);

  const auto [Ya, Yb] = principal_paths(fam, tol);
  const OscillationPair pa = oscillation_pair(Ya, tol);
  const OscillationPair pb = oscillation_pair(Yb, tol);

  std::uniform_int_distribution<int> defect(0, n);
  const SampledLagrangianPath Y =
      member_path(fam, random_lagrangian_plane(rng, n, defect(rng)).Y, tol);
  const SampledLagrangianPath Yhat =
      member_path(fam, random_lagrangian_plane(rng, n, 0).Y, tol);
  const OscillationPair py = oscillation_pair(Y, tol);
  const OscillationPair pyh = oscillation_pair(Yhat, tol);

  // Separation theorem.
  const auto mu_b =
      comparative_index(Y.frames.back(), Yhat.frames.back(), tol);
  const auto mu_a =
      comparative_index(Y.frames.front(), Yhat.frames.front(), tol);
  expect(problems, py.N - pyh.N == mu_b.mu - mu_a.mu,
         eq_msg("separation N", py.N - pyh.N, mu_b.mu - mu_a.mu));
  expect(problems, py.N_star - pyh.N_star == mu_a.mu_star - mu_b.mu_star,
         eq_msg("separation N*", py.N_star - pyh.N_star,
                mu_a.mu_star - mu_b.mu_star));

  // Estimates and principal equalities.
  expect(problems, pa.N <= py.N && py.N <= pb.N, "estimate N(Ya)<=N<=N(Yb)");
  expect(problems, pb.N_star <= py.N_star && py.N_star <= pa.N_star,
         "estimate N*(Yb)<=N*<=N*(Ya)");
  expect(problems, pa.N == pb.N_star,
         eq_msg("N(Ya) == N*(Yb)", pa.N, pb.N_star));
  expect(problems, pb.N == pa.N_star,
         eq_msg("N(Yb) == N*(Ya)", pb.N, pa.N_star));
  const int w =
      numeric_rank(wronskian(Ya.frames.front(), Yb.frames.front()), tol);
  expect(problems, pb.N - pa.N == w,
         eq_msg("N(Yb) - N(Ya) == rank W(Ya,Yb)", pb.N - pa.N, w));

  if (!problems.empty()) replay = dump_path(Y);
}

void comparison_trial(int trial, std::mt19937_64& rng, int n_max,
                      const Tolerances& tol,
                      std::vector<std::string>& problems, std::string& replay) {
  const int n = 1 + trial % std::min(n_max, 3);
  SampledLagrangianPath Y = random_flow_path(rng, n, tol, false, 110);
  SampledLagrangianPath Yhat = random_flow_path(rng, n, tol, false, 110);
  const std::vector<double> grid = merge_grids(Y.t, Yhat.t);
  Y = resample_path(Y, grid, tol);
  Yhat = resample_path(Yhat, grid, tol);

  const OscillationPair py = oscillation_pair(Y, tol);
  const OscillationPair pyh = oscillation_pair(Yhat, tol);
  const SymplecticEvaluator ZYhat = [&Yhat, tol](double t) {
    return z_frame(Yhat.at(t), tol);
  };
  const OscillationPair pt =
      oscillation_pair(transform_path(Y, ZYhat, tol), tol);

  const auto mu_b = comparative_index(Y.frames.back(), Yhat.frames.back(), tol);
  const auto mu_a =
      comparative_index(Y.frames.front(), Yhat.frames.front(), tol);
  expect(problems, py.N - pyh.N == mu_b.mu - mu_a.mu + pt.N,
         eq_msg("comparison N", py.N - pyh.N, mu_b.mu - mu_a.mu + pt.N));
  expect(problems,
         py.N_star - pyh.N_star == mu_a.mu_star - mu_b.mu_star + pt.N_star,
         eq_msg("comparison N*", py.N_star - pyh.N_star,
                mu_a.mu_star - mu_b.mu_star + pt.N_star));

  const auto [mas_plain, mas_dual] = verify_maslov_comparison(Y, Yhat, tol);
  expect(problems, mas_plain.ok,
         eq_msg(mas_plain.description, mas_plain.lhs, mas_plain.rhs));
  expect(problems, mas_dual.ok,
         eq_msg(mas_dual.description, mas_dual.lhs, mas_dual.rhs));

  if (!problems.empty()) replay = dump_path(Y);
}

void distribution_trial(int trial, std::mt19937_64& rng, int n_max,
                        const Tolerances& tol,
                        std::vector<std::string>& problems,
                        std::string& replay) {
  const int n = 1 + trial % std::min(n_max, 3);
  std::uniform_real_distribution<double> len(1.5, 2.5);
  const HamiltonianSpec spec =
      random_hamiltonian_trig(rng, n, 0.0, len(rng), false);
  const PhiFamily fam = flow_family(spec, 120, tol);
  const OscillationRectangle rect = admissible_rectangle(fam, tol);

  for (long ell = rect.N_low; ell <= rect.N_high; ++ell) {
    for (long r = rect.N_star_low; r <= rect.N_star_high; ++r) {
      const SampledLagrangianPath Y =
          prescribed_oscillation_path(fam, ell, r, tol);
      const Mat I = Mat::Identity(n, n);
      if (ell >= r) {
        expect(problems,
               (Y.frames.front().X() - I).cwiseAbs().maxCoeff() <
                   tol.struct_atol,
               "X(a) != I for ell >= r");
      }
      if (ell <= r) {
        expect(problems,
               (Y.frames.back().X() - I).cwiseAbs().maxCoeff() <
                   tol.struct_atol,
               "X(b) != I for ell <= r");
      }
    }
  }

  // Out-of-range requests must be rejected.
  bool rejected = false;
  try {
    prescribed_oscillation_path(fam, rect.N_high + 1, rect.N_star_low, tol);
  } catch (const Error& e) {
    rejected = e.code() == ErrorCode::OutOfRange;
  }
  expect(problems, rejected, "out-of-range (ell, r) not rejected");
}

void monotone_trial(int trial, std::mt19937_64& rng, int n_max,
                    const Tolerances& tol, std::vector<std::string>& problems,
                    std::string& replay) {
  const int n = 1 + trial % std::min(n_max, 3);
  const SampledLagrangianPath mono = random_flow_path(rng, n, tol, true);

  const OscillationPair pair = oscillation_pair(mono, tol);
  const int left = rank_drop_count(mono, Side::left, tol);
  const int right = rank_drop_count(mono, Side::right, tol);
  expect(problems, left == pair.N, eq_msg("rank-drop left vs N", left, pair.N));
  expect(problems, right == pair.N_star,
         eq_msg("rank-drop right vs N*", right, pair.N_star));
  expect(problems, left >= 0 && right >= 0, "negative monotone count");

  // Monotone Maslov route with the constant vertical reference path.
  SampledLagrangianPath epath;
  epath.t = mono.t;
  epath.frames.assign(mono.t.size(), vertical_plane(n));
  epath.evaluator = [n](double) { return vertical_plane(n); };
  const SymplecticEvaluator Zid = [n](double) {
    return SymplecticMatrix{Mat::Identity(2 * n, 2 * n)};
  };
  const auto Pid = [n](double) { return Mat(Mat::Identity(n, n)); };
  const MonotoneMaslovReport rep =
      monotone_maslov(epath, mono, Zid, Pid, tol);
  expect(problems, rep.ok,
         eq_msg("monotone maslov rank route vs angle route",
                rep.mas_rank_route, rep.mas_angle_route) +
             " / " + eq_msg("dual", rep.mas_star_rank_route,
                            rep.mas_star_angle_route));

  if (!problems.empty()) replay = dump_path(mono);
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "compidx-props", "duality",    "routes",       "maslov-identities",
      "separation",    "comparison", "distribution", "monotone"};
  return names;
}

SuiteResult run_suite(const std::string& name, const SuiteConfig& config,
                      const Tolerances& tol) {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw Error(ErrorCode::InvalidInput, "unknown suite: " + name);

  auto with = [&](auto fn) {
    return drive(name, config,
                 [fn, &config, &tol](int trial, std::mt19937_64& rng,
                                     std::vector<std::string>& problems,
                                     std::string& replay) {
                   fn(trial, rng, config.n_max, tol, problems, replay);
                 });
  };

  if (name == "compidx-props") return with(compidx_props_trial);
  if (name == "duality") return with(duality_trial);
  if (name == "routes") return with(routes_trial);
  if (name == "maslov-identities") return with(maslov_identities_trial);
  if (name == "separation") return with(separation_trial);
  if (name == "comparison") return with(comparison_trial);
  if (name == "distribution") return with(distribution_trial);
  return with(monotone_trial);
}

SampledLagrangianPath double_density(const SampledLagrangianPath& path,
                                     const Tolerances& tol) {
  if (!path.has_evaluator())
    throw Error(ErrorCode::EvaluatorMissing, "double_density needs evaluator");
  std::vector<double> grid;
  grid.reserve(2 * path.t.size());
  for (std::size_t i = 0; i + 1 < path.t.size(); ++i) {
    grid.push_back(path.t[i]);
    grid.push_back(0.5 * (path.t[i] + path.t[i + 1]));
  }
  grid.push_back(path.t.back());
  return resample_path(path, grid, tol);
}

}  // namespace osk::verify
