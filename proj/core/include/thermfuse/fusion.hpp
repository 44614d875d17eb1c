#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "thermfuse/image.hpp"
#include "thermfuse/registered_pair.hpp"

namespace thermfuse {

/// Forward differences toward the right (`h`) and lower (`v`) neighbour. The
/// last column of `h` and the last row of `v` are zero: a border pixel is its
/// own neighbour.
struct GradientField {
  RealImage h;
  RealImage v;
};

GradientField grad(const RealImage& img);

/// Isotropic total variation, sum over pixels of sqrt(h^2 + v^2).
double tv(const RealImage& img);

struct ObjectiveTerms {
  double objective = 0.0;  ///< data_term + lambda * tv_term
  double data_term = 0.0;  ///< sum |x - ir|
  double tv_term = 0.0;    ///< tv(x - vi)
};

ObjectiveTerms objective(const RealImage& x, const RegisteredPair& pair, double lambda);

/// Both norm exponents are fixed at 1; only the trade-off and the stopping
/// rule are tunable.
struct FusionParams {
  double lambda = 7.0;
  /// Relative duality-gap tolerance.
  double tol = 1e-5;
  int max_iter = 500;

  void validate() const;
};

struct FusionResult {
  RealImage fused;
  double objective = 0.0;
  double data_term = 0.0;
  double tv_term = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Best objective after each iteration; non-increasing.
  std::vector<double> history;
};

/// Result of minimizing  sum |y - f| + lambda * tv(y).
struct L1TvSolution {
  RealImage y;
  double value = 0.0;
  /// Certified lower bound on the optimal value.
  double lower_bound = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

/// Solver for the l1 data / isotropic TV problem. Implementations must return
/// the best iterate they visited and never a value above that of y = f.
class L1TvSolver {
 public:
  virtual ~L1TvSolver() = default;
  virtual L1TvSolution solve(const RealImage& f, double lambda, const FusionParams& params,
                             std::span<const RealImage> extra_candidates = {}) const = 0;
};

/// Log-barrier interior point method. Each Newton step eliminates the
/// per-pixel epigraph variables and solves a sparse SPD system in y; the
/// barrier weight grows geometrically until the certified gap closes.
/// `max_iter` bounds the total number of Newton steps.
class BarrierSolver final : public L1TvSolver {
 public:
  L1TvSolution solve(const RealImage& f, double lambda, const FusionParams& params,
                     std::span<const RealImage> extra_candidates = {}) const override;
};

/// First-order primal-dual splitting (Chambolle-Pock). Cheap per iteration
/// but needs thousands of iterations for 1e-5 relative accuracy on typical
/// crops; `max_iter` counts primal-dual iterations.
class PrimalDualSolver final : public L1TvSolver {
 public:
  L1TvSolution solve(const RealImage& f, double lambda, const FusionParams& params,
                     std::span<const RealImage> extra_candidates = {}) const override;
};

enum class SolverKind { kBarrier, kPrimalDual };

std::unique_ptr<L1TvSolver> make_solver(SolverKind kind);

/// Lower bound on min_y |y - f|_1 + lambda tv(y) from any dual field
/// (ph, pv); the field is first projected onto the per-pixel lambda ball.
double dual_lower_bound(const RealImage& f, double lambda, std::span<const double> ph,
                        std::span<const double> pv);

/// grad^T applied to a field stored as two flat buffers.
void grad_adjoint(std::span<const double> ph, std::span<const double> pv, std::size_t width,
                  std::size_t height, std::span<double> out);

/// Value of |y - f|_1 + lambda tv(y).
double l1tv_value(std::span<const double> y, std::span<const double> f, std::size_t width,
                  std::size_t height, double lambda);

/// Gradient-transfer fusion: solves for y = x - vi against the residual
/// f = ir - vi and returns x = y + vi.
/// Uses the barrier solver.
FusionResult fuse(const RegisteredPair& pair, const FusionParams& params = {});
FusionResult fuse(const RegisteredPair& pair, const FusionParams& params,
                  const L1TvSolver& solver);

struct SweepRow {
  double lambda = 0.0;
  double objective = 0.0;
  double data_term = 0.0;
  double tv_term = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// One fusion per lambda, rows in input order. `params.lambda` is ignored.
/// `workers` == 0 picks the hardware concurrency.
std::vector<SweepRow> sweep(const RegisteredPair& pair, std::span<const double> lambdas,
                            const FusionParams& params, unsigned workers = 1,
                            SolverKind solver = SolverKind::kBarrier);

/// CSV with header lambda,objective,data_term,tv_term,iterations,converged.
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace thermfuse
