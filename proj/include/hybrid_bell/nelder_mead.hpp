#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>

namespace hybrid_bell::optimize {

struct SimplexOptions {
  double x_tol = 1e-9;   // max vertex distance from the best vertex (inf-norm)
  double f_tol = 1e-12;  // spread of function values across the simplex
  int max_evaluations = 2000;
};

template <std::size_t N>
struct SimplexResult {
  std::array<double, N> x{};
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free maximization of f: R^N -> R with the Nelder-Mead simplex
/// (standard coefficients: reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). Deterministic for a deterministic f.
template <std::size_t N, class F>
SimplexResult<N> nelder_mead_maximize(F&& f, const std::array<double, N>& start,
                                      const std::array<double, N>& step,
                                      const SimplexOptions& opts = {}) {
  using Point = std::array<double, N>;
  std::array<Point, N + 1> pts;
  std::array<double, N + 1> val;
  int evals = 0;
  // minimize the negated objective
  auto eval = [&](const Point& p) {
    ++evals;
    return -f(p);
  };

  pts[0] = start;
  val[0] = eval(start);
  for (std::size_t i = 0; i < N; ++i) {
    pts[i + 1] = start;
    pts[i + 1][i] += step[i];
    val[i + 1] = eval(pts[i + 1]);
  }

  std::array<std::size_t, N + 1> order;
  bool converged = false;
  while (evals < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[N - 1];

    double x_spread = 0.0;
    for (std::size_t i = 0; i <= N; ++i)
      for (std::size_t k = 0; k < N; ++k)
        x_spread = std::max(x_spread, std::abs(pts[i][k] - pts[best][k]));
    if (x_spread <= opts.x_tol && val[worst] - val[best] <= opts.f_tol) {
      converged = true;
      break;
    }

    Point centroid{};
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < N; ++k) centroid[k] += pts[i][k] / static_cast<double>(N);
    }
    auto along = [&](double t) {
      Point p;
      for (std::size_t k = 0; k < N; ++k) p[k] = centroid[k] + t * (pts[worst][k] - centroid[k]);
      return p;
    };

    const Point reflected = along(-1.0);
    const double f_reflected = eval(reflected);
    if (f_reflected < val[best]) {
      const Point expanded = along(-2.0);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        pts[worst] = expanded;
        val[worst] = f_expanded;
      } else {
        pts[worst] = reflected;
        val[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < val[second_worst]) {
      pts[worst] = reflected;
      val[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < val[worst];
    const Point contracted = along(outside ? -0.5 : 0.5);
    const double f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : val[worst])) {
      pts[worst] = contracted;
      val[worst] = f_contracted;
      continue;
    }
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < N; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      val[i] = eval(pts[i]);
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin());
  return {pts[best], -val[best], evals, converged};
}

}  // namespace hybrid_bell::optimize
