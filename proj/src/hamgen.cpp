#include "osk/hamgen.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <memory>

namespace osk {

SampledLagrangianPath rotation_path(int n, const std::vector<double>& speeds,
                                    double a, double b,
                                    int nodes_per_unit_speed) {
  if (static_cast<int>(speeds.size()) != n)
    throw Error(ErrorCode::ShapeMismatch, "rotation_path: need n speeds");
  if (!(b > a)) throw Error(ErrorCode::InvalidInput, "rotation_path: b > a");
  double wmax = 1.0;
  for (double w : speeds) wmax = std::max(wmax, std::abs(w));

  auto eval = [n, speeds](double t) {
    Mat Y = Mat::Zero(2 * n, n);
    for (int j = 0; j < n; ++j) {
      Y(j, j) = std::sin(speeds[j] * t);
      Y(n + j, j) = std::cos(speeds[j] * t);
    }
    return LagrangianFrame{Y};
  };

  const int m = std::max<int>(
      32, static_cast<int>(std::ceil((b - a) * wmax *
                                     static_cast<double>(nodes_per_unit_speed))));
  SampledLagrangianPath path;
  path.t.reserve(m + 1);
  path.frames.reserve(m + 1);
  for (int i = 0; i <= m; ++i) {
    const double t = i == m ? b : a + (b - a) * static_cast<double>(i) / m;
    path.t.push_back(t);
    path.frames.push_back(eval(t));
  }
  path.evaluator = eval;
  return path;
}

namespace {

constexpr double kIsotropyTarget = 1e-13;

Mat rk4_step(const std::function<Mat(double)>& H_of_t, const Mat& J,
             const Mat& Y, double t, double h) {
  const Mat k1 = J * (H_of_t(t) * Y);
  const Mat k2 = J * (H_of_t(t + 0.5 * h) * (Y + 0.5 * h * k1));
  const Mat k3 = J * (H_of_t(t + 0.5 * h) * (Y + 0.5 * h * k2));
  const Mat k4 = J * (H_of_t(t + h) * (Y + h * k3));
  return Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Newton-type correction of the isotropy defect A = Y^T J Y:
// Y <- Y + (1/2) J Y (Y^T Y)^{-1} A removes A to first order.
Mat project_isotropic(Mat Y, const Mat& J, double trigger) {
  for (int iter = 0; iter < 12; ++iter) {
    const Mat A = Y.transpose() * J * Y;
    const double resid = A.cwiseAbs().maxCoeff();
    if (iter == 0 && resid <= trigger) return Y;
    if (resid <= kIsotropyTarget) return Y;
    Y = Y + 0.5 * J * Y * (Y.transpose() * Y).ldlt().solve(A);
  }
  throw Error(ErrorCode::StepFailure,
              "isotropy residual cannot be reduced");
}

// Symplecticity correction Phi <- Phi (I + (1/2) J A), A = Phi^T J Phi - J.
Mat project_symplectic(Mat Phi, const Mat& J, double trigger) {
  const int d = static_cast<int>(Phi.rows());
  for (int iter = 0; iter < 12; ++iter) {
    const Mat A = Phi.transpose() * J * Phi - J;
    const double resid = A.cwiseAbs().maxCoeff();
    if (iter == 0 && resid <= trigger) return Phi;
    if (resid <= kIsotropyTarget) return Phi;
    Phi = Phi * (Mat::Identity(d, d) + 0.5 * J * A);
  }
  throw Error(ErrorCode::StepFailure,
              "symplecticity residual cannot be reduced");
}

std::vector<double> integration_grid(const HamiltonianSpec& spec, int steps) {
  std::vector<double> cuts{spec.t_begin, spec.t_end};
  for (double bp : spec.breakpoints)
    if (bp > spec.t_begin && bp < spec.t_end) cuts.push_back(bp);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const double total = spec.t_end - spec.t_begin;
  std::vector<double> grid{spec.t_begin};
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double len = cuts[c + 1] - cuts[c];
    const int k = std::max(1, static_cast<int>(std::ceil(steps * len / total)));
    for (int i = 1; i <= k; ++i)
      grid.push_back(i == k ? cuts[c + 1] : cuts[c] + len * i / k);
  }
  return grid;
}

// Dense output: march from the stored node nearest below t with steps no
// longer than the base resolution.
template <typename Projector>
Mat reintegrate(const std::function<Mat(double)>& H_of_t, const Mat& J,
                const std::vector<double>& grid,
                const std::shared_ptr<std::vector<Mat>>& values, double t,
                double h_base, const Projector& project) {
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  std::size_t k = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
  double cur = grid[k];
  Mat Y = (*values)[k];
  const double span = t - cur;
  if (span == 0.0) return Y;
  const int m = std::max(1, static_cast<int>(std::ceil(std::abs(span) / h_base)));
  const double h = span / m;
  for (int i = 0; i < m; ++i) {
    Y = rk4_step(H_of_t, J, Y, cur, h);
    cur += h;
    Y = project(Y);
  }
  return Y;
}

}  // namespace

SampledLagrangianPath integrate_conjoined_basis(const HamiltonianSpec& spec,
                                                const LagrangianFrame& Y_init,
                                                int steps,
                                                const Tolerances& tol) {
  if (Y_init.n() != spec.n)
    throw Error(ErrorCode::ShapeMismatch, "integrate_conjoined_basis: n");
  const Mat J = canonical_J(spec.n);
  const std::vector<double> grid = integration_grid(spec, steps);
  const double trigger = tol.struct_atol / 10.0;

  auto values = std::make_shared<std::vector<Mat>>();
  values->reserve(grid.size());
  values->push_back(Y_init.Y);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    Mat Y = rk4_step(spec.H_of_t, J, values->back(), grid[i - 1],
                     grid[i] - grid[i - 1]);
    Y = project_isotropic(std::move(Y), J, trigger);
    values->push_back(std::move(Y));
  }

  SampledLagrangianPath path;
  path.t = grid;
  for (const Mat& Y : *values) path.frames.push_back(LagrangianFrame{Y});

  const double h_base = (spec.t_end - spec.t_begin) / std::max(1, steps);
  auto H = spec.H_of_t;
  auto project = [J, trigger](Mat Y) {
    return project_isotropic(std::move(Y), J, trigger);
  };
  std::vector<double> grid_copy = grid;
  path.evaluator = [H, J, grid_copy, values, h_base, project](double t) {
    return LagrangianFrame{
        reintegrate(H, J, grid_copy, values, t, h_base, project)};
  };
  validate_path(path, tol);
  return path;
}

PhiFamily flow_family(const HamiltonianSpec& spec, int steps,
                      const Tolerances& tol) {
  const Mat J = canonical_J(spec.n);
  const std::vector<double> grid = integration_grid(spec, steps);
  const double trigger = tol.struct_atol / 10.0;

  auto values = std::make_shared<std::vector<Mat>>();
  values->reserve(grid.size());
  values->push_back(Mat::Identity(2 * spec.n, 2 * spec.n));
  for (std::size_t i = 1; i < grid.size(); ++i) {
    Mat Phi = rk4_step(spec.H_of_t, J, values->back(), grid[i - 1],
                       grid[i] - grid[i - 1]);
    Phi = project_symplectic(std::move(Phi), J, trigger);
    values->push_back(std::move(Phi));
  }

  PhiFamily fam;
  fam.n = spec.n;
  fam.t_begin = spec.t_begin;
  fam.t_end = spec.t_end;
  fam.grid = grid;
  const double h_base = (spec.t_end - spec.t_begin) / std::max(1, steps);
  auto H = spec.H_of_t;
  auto project = [J, trigger](Mat Phi) {
    return project_symplectic(std::move(Phi), J, trigger);
  };
  fam.Phi = [H, J, grid, values, h_base, project](double t) {
    return SymplecticMatrix{
        reintegrate(H, J, grid, values, t, h_base, project)};
  };
  return fam;
}

SampledLagrangianPath member_path(const PhiFamily& fam, const Mat& C,
                                  const Tolerances& tol) {
  if (!is_lagrangian_frame(C, tol))
    throw Error(ErrorCode::PreconditionViolated,
                "member_path: C is not a Lagrangian plane");
  auto Phi = fam.Phi;
  auto eval = [Phi, C](double t) { return LagrangianFrame{Phi(t).S * C}; };
  SampledLagrangianPath path;
  path.t = fam.grid;
  path.frames.reserve(fam.grid.size());
  for (double t : fam.grid) path.frames.push_back(eval(t));
  path.evaluator = eval;
  validate_path(path, tol);
  return path;
}

std::pair<SampledLagrangianPath, SampledLagrangianPath> principal_paths(
    const PhiFamily& fam, const Tolerances& tol) {
  const Mat E = vertical_plane(fam.n).Y;
  const Mat Ca = fam.Phi(fam.t_begin).inverse() * E;
  const Mat Cb = fam.Phi(fam.t_end).inverse() * E;
  return {member_path(fam, Ca, tol), member_path(fam, Cb, tol)};
}

std::pair<SampledLagrangianPath, SampledLagrangianPath> principal_paths(
    const HamiltonianSpec& spec, int steps, const Tolerances& tol) {
  return principal_paths(flow_family(spec, steps, tol), tol);
}

OscillationRectangle admissible_rectangle(const PhiFamily& fam,
                                          const Tolerances& tol) {
  const auto [Ya, Yb] = principal_paths(fam, tol);
  const OscillationPair pa = oscillation_pair(Ya, tol);
  const OscillationPair pb = oscillation_pair(Yb, tol);
  return {pa.N, pb.N, pb.N_star, pa.N_star};
}

namespace {

// Orthogonal L whose leading w columns span the range of the projector R;
// eigenvectors for eigenvalue 1 come first, ties broken by eigenvector index.
Mat projector_basis(const Mat& R) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (R + R.transpose()));
  return es.eigenvectors().rowwise().reverse();
}

}  // namespace

SampledLagrangianPath prescribed_oscillation_path(const PhiFamily& fam,
                                                  long ell, long r,
                                                  const Tolerances& tol) {
  const int n = fam.n;
  const auto [Ya, Yb] = principal_paths(fam, tol);
  const OscillationPair pa = oscillation_pair(Ya, tol);
  const OscillationPair pb = oscillation_pair(Yb, tol);
  if (ell < pa.N || ell > pb.N || r < pb.N_star || r > pa.N_star)
    throw Error(ErrorCode::OutOfRange,
                "prescribed_oscillation_path: need N in [" +
                    std::to_string(pa.N) + ", " + std::to_string(pb.N) +
                    "] and N* in [" + std::to_string(pb.N_star) + ", " +
                    std::to_string(pa.N_star) + "], got (" +
                    std::to_string(ell) + ", " + std::to_string(r) + ")");

  const long p = ell - pa.N;
  const long q = r - pb.N_star;
  const long w =
      numeric_rank(wronskian(Ya.frames.front(), Yb.frames.front()), tol);

  Mat C;
  if (ell >= r) {
    const Mat Xb_a = Yb.frames.front().X();
    const Mat Ub_a = Yb.frames.front().U();
    const Mat Xdag = pseudoinverse(Xb_a, tol);
    const Mat R = Xb_a * Xdag;
    const Mat L = projector_basis(R);
    Vec d = Vec::Zero(n);
    for (long j = 0; j < q; ++j) d(j) = -1.0;
    for (long j = q; j < w - p + q; ++j) d(j) = 1.0;
    const Mat D = L * d.asDiagonal() * L.transpose();
    Mat block(2 * n, n);
    block.topRows(n) = Mat::Identity(n, n);
    block.bottomRows(n) = D + R * Ub_a * Xdag;
    C = fam.Phi(fam.t_begin).inverse() * block;
  } else {
    const Mat Xa_b = Ya.frames.back().X();
    const Mat Ua_b = Ya.frames.back().U();
    const Mat Xdag = pseudoinverse(Xa_b, tol);
    const Mat R = Xa_b * Xdag;
    const Mat L = projector_basis(R);
    Vec d = Vec::Zero(n);
    for (long j = 0; j < w - q; ++j) d(j) = -1.0;
    for (long j = w - q; j < w - q + p; ++j) d(j) = 1.0;
    const Mat D = L * d.asDiagonal() * L.transpose();
    Mat block(2 * n, n);
    block.topRows(n) = Mat::Identity(n, n);
    block.bottomRows(n) = D + R * Ua_b * Xdag;
    C = fam.Phi(fam.t_end).inverse() * block;
  }

  SampledLagrangianPath path = member_path(fam, C, tol);
  const OscillationPair achieved = oscillation_pair(path, tol);
  if (achieved.N != ell || achieved.N_star != r)
    throw Error(ErrorCode::ConstructionFailed,
                "prescribed_oscillation_path: achieved (" +
                    std::to_string(achieved.N) + ", " +
                    std::to_string(achieved.N_star) + ") instead of (" +
                    std::to_string(ell) + ", " + std::to_string(r) + ")");
  return path;
}

Mat random_orthogonal(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ();
  const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

LagrangianFrame random_lagrangian_plane(std::mt19937_64& rng, int n,
                                        int forced_X_defect) {
  std::uniform_real_distribution<double> uni(0.0, 2.0 * M_PI);
  const Mat O = random_orthogonal(rng, n);
  Vec theta(n);
  for (int j = 0; j < n; ++j) theta(j) = uni(rng);
  for (int j = 0; j < std::min(forced_X_defect, n); ++j) theta(j) = 0.0;
  Vec s(n), c(n);
  for (int j = 0; j < n; ++j) {
    s(j) = std::sin(theta(j));
    c(j) = std::cos(theta(j));
  }
  Mat Y(2 * n, n);
  Y.topRows(n) = O * s.asDiagonal() * O.transpose();
  Y.bottomRows(n) = O * c.asDiagonal() * O.transpose();
  return LagrangianFrame{Y};
}

Mat random_lower_triangular_symplectic(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const Mat O1 = random_orthogonal(rng, n);
  const Mat O2 = random_orthogonal(rng, n);
  Vec d(n);
  for (int j = 0; j < n; ++j) d(j) = std::exp(uni(rng));
  const Mat P = O1 * d.asDiagonal() * O2.transpose();
  Mat Sym(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) Sym(i, j) = Sym(j, i) = uni(rng);
  Mat L = Mat::Zero(2 * n, 2 * n);
  L.topLeftCorner(n, n) = P;
  L.bottomLeftCorner(n, n) = P.transpose().inverse() * Sym;
  L.bottomRightCorner(n, n) = P.transpose().inverse();
  return L;
}

Mat random_symplectic(std::mt19937_64& rng, int n) {
  Tolerances tol;
  const SymplecticMatrix Z = z_frame(random_lagrangian_plane(rng, n), tol);
  return Z.S * random_lower_triangular_symplectic(rng, n);
}

HamiltonianSpec random_hamiltonian_trig(std::mt19937_64& rng, int n, double a,
                                        double b, bool psd) {
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  std::uniform_real_distribution<double> freq(0.5, 2.0);
  const int d = 2 * n;
  auto sym = [&](double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Mat A(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = u(rng);
    return A;
  };
  const double omega = freq(rng);

  HamiltonianSpec spec;
  spec.n = n;
  spec.t_begin = a;
  spec.t_end = b;
  if (psd) {
    Mat B0(d, d), B1(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        B0(i, j) = uni(rng);
        B1(i, j) = uni(rng);
      }
    spec.H_of_t = [B0, B1, omega, d](double t) {
      const Mat B = B0 + std::sin(omega * t) * B1;
      return Mat(B * B.transpose() + 0.05 * Mat::Identity(d, d));
    };
  } else {
    const Mat A0 = sym(-0.5, 0.5);
    const Mat A1 = sym(-0.5, 0.5);
    const Mat A2 = sym(-0.5, 0.5);
    spec.H_of_t = [A0, A1, A2, omega](double t) {
      return Mat(A0 + std::sin(omega * t) * A1 + std::cos(omega * t) * A2);
    };
  }
  return spec;
}

}  // namespace osk
