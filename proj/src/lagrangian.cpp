#include "osk/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace osk {

LagrangianFrame make_frame(const Mat& Y, const Tolerances& tol) {
  if (!is_lagrangian_frame(Y, tol))
    throw Error(ErrorCode::PreconditionViolated,
                "make_frame: matrix is not a Lagrangian frame");
  return LagrangianFrame{Y};
}

Mat SymplecticMatrix::inverse() const {
  const Mat J = canonical_J(n());
  return -J * S.transpose() * J;
}

SymplecticMatrix make_symplectic(const Mat& S, const Tolerances& tol) {
  if (!is_symplectic(S, tol))
    throw Error(ErrorCode::PreconditionViolated,
                "make_symplectic: S^T J S != J");
  return SymplecticMatrix{S};
}

LagrangianFrame SampledLagrangianPath::at(double time) const {
  if (evaluator) return evaluator(time);
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] == time) return frames[i];
  throw Error(ErrorCode::EvaluatorMissing,
              "path has no evaluator and " + std::to_string(time) +
                  " is not a grid node");
}

void validate_path(const SampledLagrangianPath& path, const Tolerances& tol) {
  if (path.t.size() < 2 || path.t.size() != path.frames.size())
    throw Error(ErrorCode::InvalidInput, "path needs >= 2 nodes with frames");
  const int n = path.frames.front().n();
  for (std::size_t i = 0; i < path.t.size(); ++i) {
    if (i > 0 && !(path.t[i] > path.t[i - 1]))
      throw Error(ErrorCode::InvalidInput, "grid not strictly increasing");
    if (path.frames[i].n() != n)
      throw Error(ErrorCode::ShapeMismatch, "inconsistent frame dimensions");
    if (!is_lagrangian_frame(path.frames[i].Y, tol))
      throw Error(ErrorCode::PreconditionViolated,
                  "node " + std::to_string(i) + " is not a Lagrangian frame");
    if (path.evaluator) {
      const Mat diff = path.evaluator(path.t[i]).Y - path.frames[i].Y;
      if (diff.cwiseAbs().maxCoeff() > tol.struct_atol)
        throw Error(ErrorCode::PreconditionViolated,
                    "evaluator disagrees with stored frame at node " +
                        std::to_string(i));
    }
  }
}

LagrangianFrame vertical_plane(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidInput, "vertical_plane: n >= 1");
  Mat Y = Mat::Zero(2 * n, n);
  Y.bottomRows(n) = Mat::Identity(n, n);
  return LagrangianFrame{Y};
}

Mat wronskian(const LagrangianFrame& Y, const LagrangianFrame& Yhat) {
  if (Y.n() != Yhat.n())
    throw Error(ErrorCode::ShapeMismatch, "wronskian: dimension mismatch");
  // Y^T J Yhat = X^T Uhat - U^T Xhat, written without forming J.
  return Y.X().transpose() * Yhat.U() - Y.U().transpose() * Yhat.X();
}

Mat normalizer(const LagrangianFrame& Y, const Tolerances& tol) {
  return inv_sqrt_spd(Y.Y.transpose() * Y.Y, tol);
}

SymplecticMatrix z_frame(const LagrangianFrame& Y, const Tolerances& tol) {
  const int n = Y.n();
  const Mat K = normalizer(Y, tol);
  const Mat YK = Y.Y * K;
  Mat Z(2 * n, 2 * n);
  // J * YK has blocks (U K, -X K).
  Z.topLeftCorner(n, n) = Y.U() * K;
  Z.bottomLeftCorner(n, n) = -Y.X() * K;
  Z.topRightCorner(n, n) = YK.topRows(n);
  Z.bottomRightCorner(n, n) = YK.bottomRows(n);
  return SymplecticMatrix{Z};
}

std::pair<SymplecticMatrix, SymplecticMatrix> factor_symplectic(
    const SymplecticMatrix& S, const Tolerances& tol) {
  const int n = S.n();
  const Mat SE = S.S.rightCols(n);
  const SymplecticMatrix Z = z_frame(LagrangianFrame{SE}, tol);
  const SymplecticMatrix L{Z.S.transpose() * S.S};
  if (L.block12().cwiseAbs().maxCoeff() > tol.struct_atol)
    throw Error(ErrorCode::ResidualTooLarge,
                "factor_symplectic: upper-right block of L not zero");
  return {Z, L};
}

SampledLagrangianPath refine_path(const SampledLagrangianPath& path,
                                  const SegmentPredicate& keep, int max_depth,
                                  const Tolerances& tol) {
  if (!path.has_evaluator())
    throw Error(ErrorCode::EvaluatorMissing, "refine_path needs an evaluator");

  struct Node {
    double t;
    LagrangianFrame f;
    int depth;  // bisection generation of the segment starting here
  };
  std::vector<Node> nodes;
  nodes.reserve(path.t.size());
  for (std::size_t i = 0; i < path.t.size(); ++i)
    nodes.push_back({path.t[i], path.frames[i], 0});

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Node> next;
    next.reserve(nodes.size());
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      next.push_back(nodes[i]);
      if (keep(nodes[i].t, nodes[i].f, nodes[i + 1].t, nodes[i + 1].f)) continue;
      if (nodes[i].depth >= max_depth)
        throw Error(ErrorCode::RefinementExhausted,
                    "segment [" + std::to_string(nodes[i].t) + ", " +
                        std::to_string(nodes[i + 1].t) +
                        "] still fails at max depth");
      const double mid = 0.5 * (nodes[i].t + nodes[i + 1].t);
      next.back().depth = nodes[i].depth + 1;
      next.push_back({mid, path.evaluator(mid), nodes[i].depth + 1});
      changed = true;
    }
    next.push_back(nodes.back());
    nodes = std::move(next);
  }

  SampledLagrangianPath out;
  out.evaluator = path.evaluator;
  out.evaluator_concurrent = path.evaluator_concurrent;
  out.t.reserve(nodes.size());
  out.frames.reserve(nodes.size());
  for (auto& nd : nodes) {
    out.t.push_back(nd.t);
    out.frames.push_back(std::move(nd.f));
  }
  validate_path(out, tol);
  return out;
}

SampledLagrangianPath transform_path(const SampledLagrangianPath& path,
                                     const SymplecticEvaluator& S_of_t,
                                     const Tolerances& tol) {
  SampledLagrangianPath out;
  out.t = path.t;
  out.frames.reserve(path.frames.size());
  for (std::size_t i = 0; i < path.t.size(); ++i) {
    const Mat Sinv = S_of_t(path.t[i]).inverse();
    out.frames.push_back(make_frame(Sinv * path.frames[i].Y, tol));
  }
  if (path.has_evaluator()) {
    FrameEvaluator base = path.evaluator;
    out.evaluator = [base, S_of_t, tol](double time) {
      return make_frame(S_of_t(time).inverse() * base(time).Y, tol);
    };
    out.evaluator_concurrent = path.evaluator_concurrent;
  }
  return out;
}

SampledLagrangianPath transform_path(const SampledLagrangianPath& path,
                                     const SymplecticMatrix& S,
                                     const Tolerances& tol) {
  return transform_path(path, [S](double) { return S; }, tol);
}

SampledLagrangianPath multiply_right(const SampledLagrangianPath& path,
                                     const std::function<Mat(double)>& C_of_t,
                                     const Tolerances& tol) {
  const int n = path.n();
  auto apply = [C_of_t, tol, n](double time, const Mat& Y) {
    const Mat C = C_of_t(time);
    if (C.rows() != n || C.cols() != n)
      throw Error(ErrorCode::ShapeMismatch, "multiply_right: C must be n x n");
    if (numeric_rank(C, tol) < n)
      throw Error(ErrorCode::SingularFactor,
                  "multiply_right: C(" + std::to_string(time) + ") singular");
    return Y * C;
  };

  SampledLagrangianPath out;
  out.t = path.t;
  out.frames.reserve(path.frames.size());
  for (std::size_t i = 0; i < path.t.size(); ++i)
    out.frames.push_back(make_frame(apply(path.t[i], path.frames[i].Y), tol));
  if (path.has_evaluator()) {
    FrameEvaluator base = path.evaluator;
    out.evaluator = [base, apply, tol](double time) {
      return make_frame(apply(time, base(time).Y), tol);
    };
    out.evaluator_concurrent = path.evaluator_concurrent;
  }
  return out;
}

std::vector<double> merge_grids(const std::vector<double>& ta,
                                const std::vector<double>& tb) {
  std::vector<double> out;
  out.reserve(ta.size() + tb.size());
  std::merge(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SampledLagrangianPath resample_path(const SampledLagrangianPath& path,
                                    const std::vector<double>& grid,
                                    const Tolerances& tol) {
  SampledLagrangianPath out;
  out.t = grid;
  out.frames.reserve(grid.size());
  std::size_t j = 0;
  for (double time : grid) {
    while (j < path.t.size() && path.t[j] < time) ++j;
    if (j < path.t.size() && path.t[j] == time) {
      out.frames.push_back(path.frames[j]);
    } else {
      out.frames.push_back(path.at(time));
    }
  }
  out.evaluator = path.evaluator;
  out.evaluator_concurrent = path.evaluator_concurrent;
  validate_path(out, tol);
  return out;
}

SampledLagrangianPath load_path_json(std::istream& in, const Tolerances& tol) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("n") || !j.contains("t") ||
      !j.contains("frames"))
    throw Error(ErrorCode::InvalidInput, "path JSON needs n, t, frames");
  const int n = j.at("n").get<int>();
  if (n < 1) throw Error(ErrorCode::InvalidInput, "path JSON: n >= 1");
  const auto& jt = j.at("t");
  const auto& jf = j.at("frames");
  if (!jt.is_array() || !jf.is_array() || jt.size() != jf.size())
    throw Error(ErrorCode::InvalidInput, "path JSON: t/frames length mismatch");

  SampledLagrangianPath path;
  for (const auto& v : jt) path.t.push_back(v.get<double>());
  for (const auto& rows : jf) {
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(2 * n * n))
      throw Error(ErrorCode::InvalidInput, "path JSON: frame entry size");
    Mat Y(2 * n, n);
    std::size_t k = 0;
    for (int r = 0; r < 2 * n; ++r)
      for (int c = 0; c < n; ++c) Y(r, c) = rows[k++].get<double>();
    path.frames.push_back(LagrangianFrame{Y});
  }
  validate_path(path, tol);
  return path;
}

namespace {

void write_double(std::ostream& out, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out << buf;
}

}  // namespace

void save_path_json(const SampledLagrangianPath& path, std::ostream& out) {
  const int n = path.n();
  out << "{\n  \"n\": " << n << ",\n  \"t\": [";
  for (std::size_t i = 0; i < path.t.size(); ++i) {
    if (i) out << ", ";
    write_double(out, path.t[i]);
  }
  out << "],\n  \"frames\": [\n";
  for (std::size_t i = 0; i < path.frames.size(); ++i) {
    out << "    [";
    const Mat& Y = path.frames[i].Y;
    bool first = true;
    for (int r = 0; r < Y.rows(); ++r)
      for (int c = 0; c < Y.cols(); ++c) {
        if (!first) out << ", ";
        first = false;
        write_double(out, Y(r, c));
      }
    out << (i + 1 < path.frames.size() ? "],\n" : "]\n");
  }
  out << "  ]\n}\n";
}

}  // namespace osk
