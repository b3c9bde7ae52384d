#include "osk/lidskii.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <exception>

namespace osk {

namespace {

// Runs fn(times[i]) for every index, either in order or across OpenMP
// threads; the first exception thrown by any worker is rethrown.
template <typename T, typename Fn>
std::vector<T> batched_map(const std::vector<double>& times, Execution exec,
                           Fn&& fn) {
  std::vector<T> out(times.size());
  if (exec == Execution::serial || times.size() < 4) {
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = fn(times[i]);
    return out;
  }
#ifdef _OPENMP
  std::exception_ptr failure;
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(times.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    try {
      out[i] = fn(times[i]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
#else
  for (std::size_t i = 0; i < times.size(); ++i) out[i] = fn(times[i]);
#endif
  return out;
}

}  // namespace

std::vector<NodeSpectrum> spectral_sweep(const SymplecticEvaluator& S_of_t,
                                         const std::vector<double>& times,
                                         const Tolerances& tol,
                                         Execution exec) {
  return batched_map<NodeSpectrum>(
      times, exec, [&](double t) { return node_spectrum(S_of_t(t), tol); });
}

std::vector<Vec> sweep_angle_sets(const std::function<Vec(double)>& angle_set,
                                  const std::vector<double>& times,
                                  Execution exec) {
  return batched_map<Vec>(times, exec,
                          [&](double t) { return angle_set(t); });
}

}  // namespace osk
