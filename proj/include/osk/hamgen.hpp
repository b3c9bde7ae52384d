#ifndef OSK_HAMGEN_HPP
#define OSK_HAMGEN_HPP

#include <random>

#include "osk/oscnum.hpp"

namespace osk {

/// Coefficient data of the linear Hamiltonian system y' = J H(t) y.
struct HamiltonianSpec {
  int n = 0;
  std::function<Mat(double)> H_of_t;  // 2n x 2n symmetric
  double t_begin = 0.0;
  double t_end = 1.0;
  std::vector<double> breakpoints;  // interior discontinuities of H, may be empty
};

/// Continuous symplectic matrix family on [a, b] spanning the set of paths
/// Phi(.) C over Lagrangian planes C.
struct PhiFamily {
  int n = 0;
  SymplecticEvaluator Phi;
  double t_begin = 0.0;
  double t_end = 1.0;
  std::vector<double> grid;  // natural sampling grid
};

/// Block path with j-th 2x1 block (sin(w_j t), cos(w_j t))^T, interleaved
/// into (diag sin; diag cos); closed-form evaluator attached.
SampledLagrangianPath rotation_path(int n, const std::vector<double>& speeds,
                                    double a, double b,
                                    int nodes_per_unit_speed = 16);

/// Classical 4th-order integration of Y' = J H(t) Y on a uniform grid
/// honoring the breakpoints of H, with isotropy re-projection whenever the
/// residual exceeds struct_atol / 10. The evaluator re-integrates densely
/// from the nearest stored node.
SampledLagrangianPath integrate_conjoined_basis(const HamiltonianSpec& spec,
                                                const LagrangianFrame& Y_init,
                                                int steps,
                                                const Tolerances& tol);

/// Fundamental symplectic solution Phi' = J H(t) Phi, Phi(a) = I, packaged
/// with a dense-output evaluator.
PhiFamily flow_family(const HamiltonianSpec& spec, int steps,
                      const Tolerances& tol);

/// Member Phi(.) C of the family for a Lagrangian plane C.
SampledLagrangianPath member_path(const PhiFamily& fam, const Mat& C,
                                  const Tolerances& tol);

/// Principal paths Y_a, Y_b with Y_a(a) = E = Y_b(b).
std::pair<SampledLagrangianPath, SampledLagrangianPath> principal_paths(
    const PhiFamily& fam, const Tolerances& tol);
std::pair<SampledLagrangianPath, SampledLagrangianPath> principal_paths(
    const HamiltonianSpec& spec, int steps, const Tolerances& tol);

/// Admissible rectangle of the prescribed-oscillation construction.
struct OscillationRectangle {
  long N_low = 0;        // N(Y_a)
  long N_high = 0;       // N(Y_b)
  long N_star_low = 0;   // N*(Y_b)
  long N_star_high = 0;  // N*(Y_a)
};
OscillationRectangle admissible_rectangle(const PhiFamily& fam,
                                          const Tolerances& tol);

/// Path Y in F(Phi) with oscillation number ell and dual oscillation number
/// r, built from the projector-based initial condition and verified before
/// return. For ell >= r the frame has X(a) = I, for ell <= r it has X(b) = I;
/// OutOfRange reports the admissible rectangle.
SampledLagrangianPath prescribed_oscillation_path(const PhiFamily& fam,
                                                  long ell, long r,
                                                  const Tolerances& tol);

/// Deterministic instance generators for the property suites.
Mat random_orthogonal(std::mt19937_64& rng, int n);
/// Frame (O diag(sin th) O^T; O diag(cos th) O^T); forcing zeros among the
/// angles th makes the upper block rank deficient.
LagrangianFrame random_lagrangian_plane(std::mt19937_64& rng, int n,
                                        int forced_X_defect = 0);
Mat random_lower_triangular_symplectic(std::mt19937_64& rng, int n);
Mat random_symplectic(std::mt19937_64& rng, int n);
/// Trigonometric-polynomial symmetric H(t); positive semidefinite plus a
/// margin when psd is set.
HamiltonianSpec random_hamiltonian_trig(std::mt19937_64& rng, int n, double a,
                                        double b, bool psd);

}  // namespace osk

#endif  // OSK_HAMGEN_HPP
