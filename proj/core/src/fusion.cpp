#include "thermfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <thread>

namespace thermfuse {

GradientField grad(const RealImage& img) {
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  GradientField g{RealImage(w, h, 0.0), RealImage(w, h, 0.0)};
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (c + 1 < w) g.h(r, c) = img(r, c) - img(r, c + 1);
      if (r + 1 < h) g.v(r, c) = img(r, c) - img(r + 1, c);
    }
  }
  return g;
}

namespace {

double tv_flat(std::span<const double> x, std::size_t w, std::size_t h) {
  double sum = 0.0;
  for (std::size_t r = 0; r < h; ++r) {
    const double* row = x.data() + r * w;
    const double* below = r + 1 < h ? row + w : nullptr;
    for (std::size_t c = 0; c < w; ++c) {
      const double dh = c + 1 < w ? row[c] - row[c + 1] : 0.0;
      const double dv = below ? row[c] - below[c] : 0.0;
      sum += std::sqrt(dh * dh + dv * dv);
    }
  }
  return sum;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

void require_finite(const RealImage& img, const char* what) {
  for (double v : img.pixels()) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::kNumeric, std::string(what) + " contains non-finite samples");
    }
  }
}

}  // namespace

double tv(const RealImage& img) { return tv_flat(img.pixels(), img.width(), img.height()); }

double l1tv_value(std::span<const double> y, std::span<const double> f, std::size_t width,
                  std::size_t height, double lambda) {
  return l1_distance(y, f) + lambda * tv_flat(y, width, height);
}

void grad_adjoint(std::span<const double> ph, std::span<const double> pv, std::size_t w,
                  std::size_t h, std::span<double> out) {
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t i = r * w + c;
      double acc = 0.0;
      if (c + 1 < w) acc += ph[i];
      if (c > 0) acc -= ph[i - 1];
      if (r + 1 < h) acc += pv[i];
      if (r > 0) acc -= pv[i - w];
      out[i] = acc;
    }
  }
}

double dual_lower_bound(const RealImage& f, double lambda, std::span<const double> ph,
                        std::span<const double> pv) {
  const std::size_t n = f.size();
  std::vector<double> qh(ph.begin(), ph.end());
  std::vector<double> qv(pv.begin(), pv.end());
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = std::sqrt(qh[i] * qh[i] + qv[i] * qv[i]);
    if (mag > lambda) {
      const double scale = lambda > 0.0 ? lambda / mag : 0.0;
      qh[i] *= scale;
      qv[i] *= scale;
    }
  }
  std::vector<double> adj(n);
  grad_adjoint(qh, qv, f.width(), f.height(), adj);

  // Weak duality with q = -clip(grad^T p, -1, 1):
  //   P(y) >= <clip(grad^T p), f> + <y, grad^T p - clip(grad^T p)>.
  // Clamping y into [min f, max f] never increases P, so the residual term
  // only needs its minimum over that box.
  const auto [lo_it, hi_it] = std::minmax_element(f.pixels().begin(), f.pixels().end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  double bound = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double clipped = std::clamp(adj[i], -1.0, 1.0);
    const double excess = adj[i] - clipped;
    bound += clipped * f[i] + std::min(lo * excess, hi * excess);
  }
  return bound;
}

ObjectiveTerms objective(const RealImage& x, const RegisteredPair& pair, double lambda) {
  if (!x.same_shape(pair.ir) || !x.same_shape(pair.vi)) {
    throw Error(ErrorKind::kBounds, "candidate image does not match the pair dimensions");
  }
  RealImage residual(x.width(), x.height());
  for (std::size_t i = 0; i < x.size(); ++i) residual[i] = x[i] - pair.vi[i];
  ObjectiveTerms t;
  t.data_term = l1_distance(x.pixels(), pair.ir.pixels());
  t.tv_term = tv(residual);
  t.objective = t.data_term + lambda * t.tv_term;
  return t;
}

void FusionParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::kParameter, "lambda must be a finite non-negative number");
  }
  if (!(tol > 0.0) || !std::isfinite(tol)) {
    throw Error(ErrorKind::kParameter, "tolerance must be positive");
  }
  if (max_iter < 1) {
    throw Error(ErrorKind::kParameter, "max_iter must be at least 1");
  }
}

std::unique_ptr<L1TvSolver> make_solver(SolverKind kind) {
  switch (kind) {
    case SolverKind::kPrimalDual: return std::make_unique<PrimalDualSolver>();
    case SolverKind::kBarrier: break;
  }
  return std::make_unique<BarrierSolver>();
}

FusionResult fuse(const RegisteredPair& pair, const FusionParams& params,
                  const L1TvSolver& solver) {
  params.validate();
  if (!pair.ir.same_shape(pair.vi)) {
    throw Error(ErrorKind::kBounds, "thermal and visible images differ in size");
  }
  require_finite(pair.ir, "thermal image");
  require_finite(pair.vi, "visible image");

  RealImage residual(pair.width(), pair.height());
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = pair.ir[i] - pair.vi[i];
  // y = 0 reproduces the visible image; solvers themselves start from y = f.
  const RealImage visible_start(pair.width(), pair.height(), 0.0);
  L1TvSolution sol = solver.solve(residual, params.lambda, params,
                                  std::span<const RealImage>(&visible_start, 1));

  FusionResult out;
  out.fused = RealImage(pair.width(), pair.height());
  // Where y reproduces the residual exactly the fused pixel is the thermal
  // one; adding vi back would only reintroduce rounding.
  for (std::size_t i = 0; i < residual.size(); ++i) {
    out.fused[i] = sol.y[i] == residual[i] ? pair.ir[i] : sol.y[i] + pair.vi[i];
  }
  const ObjectiveTerms terms = objective(out.fused, pair, params.lambda);
  out.objective = terms.objective;
  out.data_term = terms.data_term;
  out.tv_term = terms.tv_term;
  out.iterations = sol.iterations;
  out.converged = sol.converged;
  out.history = std::move(sol.history);
  return out;
}

FusionResult fuse(const RegisteredPair& pair, const FusionParams& params) {
  return fuse(pair, params, BarrierSolver{});
}

std::vector<SweepRow> sweep(const RegisteredPair& pair, std::span<const double> lambdas,
                            const FusionParams& params, unsigned workers, SolverKind solver) {
  if (lambdas.empty()) {
    throw Error(ErrorKind::kParameter, "sweep needs at least one lambda");
  }
  for (double l : lambdas) {
    FusionParams p = params;
    p.lambda = l;
    p.validate();
  }
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(lambdas.size()));
  const auto impl = make_solver(solver);

  std::vector<SweepRow> rows(lambdas.size());
  std::vector<std::exception_ptr> failures(lambdas.size());
  auto run = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < lambdas.size(); i += stride) {
      try {
        FusionParams p = params;
        p.lambda = lambdas[i];
        const FusionResult r = fuse(pair, p, *impl);
        rows[i] = {lambdas[i], r.objective, r.data_term, r.tv_term, r.iterations, r.converged};
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    run(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(run, t, workers);
  }
  for (const auto& e : failures) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "lambda,objective,data_term,tv_term,iterations,converged\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g,%.10g,%d,%d\n", r.lambda, r.objective,
                  r.data_term, r.tv_term, r.iterations, r.converged ? 1 : 0);
    out += line;
  }
  return out;
}

}  // namespace thermfuse
