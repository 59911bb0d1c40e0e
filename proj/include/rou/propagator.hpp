/*
  Exponential semigroup E_{s,t}(A): the solution of d/dt E = A_t E, E_{s,s} = I.

  A Propagator stores e^{log_scale} * factor with ||factor||_2 in [1/2, 2], so
  log-norms over very long horizons never under- or overflow. Integration is
  fixed-step RK4 aligned to the source's smooth pieces; rescaling is by powers
  of two, which is exact.
*/
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rou/flows.hpp"
#include "rou/linalg.hpp"

namespace rou {

struct Propagator {
  Matrix factor;
  double log_scale = 0.0;
  double s = 0.0;
  double t = 0.0;

  static Propagator identity(std::size_t dim, double at);
  std::size_t dim() const { return factor.dim(); }
  // e^{log_scale} * factor; may overflow for long horizons.
  Matrix value() const;
};

inline constexpr double kDefaultPropagatorTol = 1e-10;

// Step size used by propagate for a piece whose norm bound is `norm_bound`.
double rk4_step_bound(double tol, double norm_bound);

// Throws InvalidArgument unless 0 <= s <= t and tol > 0; GridExceeded if t is
// beyond the source's horizon.
Propagator propagate(const DriftSource& source, double s, double t, double tol = kDefaultPropagatorTol);

// E_{s, t_k} for each checkpoint t_k (increasing, all >= s), sharing one integration.
std::vector<Propagator> propagate_checkpoints(const DriftSource& source, double s, std::span<const double> times,
                                              double tol = kDefaultPropagatorTol);

// E_{t_k, t_{k+1}} for consecutive nodes, as plain matrices. Meant for short
// steps (simulation grids), where no log scale is needed.
std::vector<Matrix> step_propagators(const DriftSource& source, std::span<const double> nodes,
                                     double tol = kDefaultPropagatorTol);

// p1 over [s, u], p2 over [u, t] -> E_{s,t} = E_{u,t} E_{s,u}. IntervalMismatch if p1.t != p2.s.
Propagator compose(const Propagator& p1, const Propagator& p2);

// Truncated Peano-Baker series I + int A + int int A A + ... up to `order`
// nested integrals, by cumulative 4th-order quadrature with about `panels`
// panels over [s, t] (at least 3 per smooth piece). RegimeTooWide if
// (t - s) * sup ||A|| > 1.
Matrix peano_baker(const DriftSource& source, double s, double t, int order, std::size_t panels = 256);

// log ||E_{s,t}||_2.
double log_norm_of(const Propagator& p);

}  // namespace rou
