#include <algorithm>
#include <cmath>
#include <vector>

#include "thermfuse/fusion.hpp"

namespace thermfuse {

L1TvSolution PrimalDualSolver::solve(const RealImage& f, double lambda,
                                     const FusionParams& params,
                                     std::span<const RealImage> extra_candidates) const {
  params.validate();
  const std::size_t w = f.width();
  const std::size_t h = f.height();
  const std::size_t n = f.size();
  const auto fv = f.pixels();
  auto value_of = [&](std::span<const double> y) { return l1tv_value(y, fv, w, h, lambda); };

  L1TvSolution best{f, value_of(fv), 0.0, 0, false, {}};
  for (const auto& cand : extra_candidates) {
    if (!cand.same_shape(f)) {
      throw Error(ErrorKind::kBounds, "starting candidate does not match the image dimensions");
    }
    const double value = value_of(cand.pixels());
    if (value < best.value) {
      best.y = cand;
      best.value = value;
    }
  }
  auto gap_closed = [&] {
    return best.value - best.lower_bound <= params.tol * std::max(best.value, 1.0);
  };
  if (lambda == 0.0 || gap_closed()) {
    best.converged = true;
    return best;
  }

  // tau * sigma * ||grad||^2 < 1 with ||grad||^2 <= 8. The primal lives on
  // the intensity scale and the dual on the lambda scale, so the steps are
  // skewed by their ratio.
  const double base = 0.99 / std::sqrt(8.0);
  const double skew = std::sqrt(std::clamp(255.0 / lambda, 1.0, 1e4));
  const double tau = base * skew;
  const double sigma = base / skew;

  std::vector<double> y(fv.begin(), fv.end());
  std::vector<double> y_bar = y;
  std::vector<double> y_prev(n);
  std::vector<double> ph(n, 0.0), pv(n, 0.0), adj(n, 0.0);

  for (int it = 1; it <= params.max_iter; ++it) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const std::size_t i = r * w + c;
        const double dh = c + 1 < w ? y_bar[i] - y_bar[i + 1] : 0.0;
        const double dv = r + 1 < h ? y_bar[i] - y_bar[i + w] : 0.0;
        double qh = ph[i] + sigma * dh;
        double qv = pv[i] + sigma * dv;
        const double mag = std::sqrt(qh * qh + qv * qv);
        if (mag > lambda) {
          qh *= lambda / mag;
          qv *= lambda / mag;
        }
        ph[i] = qh;
        pv[i] = qv;
      }
    }
    grad_adjoint(ph, pv, w, h, adj);

    // Rescaled duals satisfy |grad^T p|_inf <= 1 and bound the optimum.
    double adj_max = 0.0;
    double dual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      adj_max = std::max(adj_max, std::abs(adj[i]));
      dual += fv[i] * adj[i];
    }
    best.lower_bound = std::max(best.lower_bound, dual / std::max(1.0, adj_max));

    // prox of tau |y - f|_1 is soft shrinkage toward f.
    y_prev = y;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = y[i] - tau * adj[i] - fv[i];
      y[i] = fv[i] + std::copysign(std::max(std::abs(z) - tau, 0.0), z);
      y_bar[i] = 2.0 * y[i] - y_prev[i];
    }

    const double value = value_of(y);
    if (value < best.value) {
      best.value = value;
      std::copy(y.begin(), y.end(), best.y.pixels().begin());
    }
    best.history.push_back(best.value);
    best.iterations = it;
    if (gap_closed()) {
      best.converged = true;
      break;
    }
  }
  return best;
}

}  // namespace thermfuse
