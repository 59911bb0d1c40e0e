/*
  Deterministic drift flows t -> A_t.

  DriftSource is the common read interface used by the propagator and the
  log-norm quadrature: deterministic flows, tabulated flows and realized
  random coefficient paths all implement it. A source is split into smooth
  pieces; inside a piece A_u is smooth, and at a piece boundary each side is
  evaluated with its own one-sided limit.
*/
#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "rou/linalg.hpp"

namespace rou {

class DriftSource {
 public:
  virtual ~DriftSource() = default;

  virtual std::size_t dim() const = 0;

  // Breakpoints s = p_0 < p_1 < ... < p_m = t of the smooth pieces covering [s, t].
  virtual std::vector<double> pieces(double s, double t) const { return {s, t}; }

  // A_u for u in the piece that starts at `piece_start`.
  virtual void eval(double u, double piece_start, Matrix& out) const = 0;

  // An upper bound on ||A_u||_2 over [s, t].
  virtual double norm_bound(double s, double t) const = 0;

  // Largest time the source is defined for.
  virtual double horizon() const { return std::numeric_limits<double>::infinity(); }

  Matrix at(double u) const {
    Matrix m(dim());
    eval(u, u, m);
    return m;
  }
};

// A source that claims hypothesis (H0): ||A_t - A_inf|| <= a e^{-bt}, mu(A_inf) < 0.
class H0Source : public DriftSource {
 public:
  virtual const Matrix& a_inf() const = 0;
  virtual double a() const = 0;
  virtual double b() const = 0;
};

// Canonical family A_t = A_inf + a e^{-bt} M with ||M|| = 1.
class H0Flow final : public H0Source {
 public:
  // M is rescaled to unit spectral norm. Throws NotStable if mu(A_inf) >= 0,
  // InvalidArgument for a < 0, b <= 0, dimension mismatch or M = 0 with a > 0.
  H0Flow(Matrix a_inf, Matrix direction, double a, double b);

  std::size_t dim() const override { return a_inf_.dim(); }
  void eval(double u, double piece_start, Matrix& out) const override;
  double norm_bound(double s, double t) const override;

  const Matrix& a_inf() const override { return a_inf_; }
  const Matrix& direction() const { return m_; }
  double a() const override { return a_; }
  double b() const override { return b_; }

 private:
  Matrix a_inf_;
  Matrix m_;
  double a_;
  double b_;
  double a_inf_norm_;
};

Matrix eval_flow(const H0Flow& flow, double t);

// Flow given on a time table, linearly interpolated; defined on [times.front(), times.back()].
class TabulatedFlow final : public H0Source {
 public:
  TabulatedFlow(std::vector<double> times, std::vector<Matrix> values, Matrix a_inf, double a, double b);

  std::size_t dim() const override { return a_inf_.dim(); }
  std::vector<double> pieces(double s, double t) const override;
  void eval(double u, double piece_start, Matrix& out) const override;
  double norm_bound(double s, double t) const override;
  double horizon() const override { return times_.back(); }

  const Matrix& a_inf() const override { return a_inf_; }
  double a() const override { return a_; }
  double b() const override { return b_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Matrix>& values() const { return values_; }

 private:
  std::vector<double> times_;
  std::vector<Matrix> values_;
  std::vector<double> norms_;
  Matrix a_inf_;
  double a_;
  double b_;
};

// Smooth flow given by a callable; used for test flows and adapters.
class FunctionFlow final : public DriftSource {
 public:
  FunctionFlow(std::size_t dim, std::function<Matrix(double)> fn, double norm_bound)
      : dim_(dim), fn_(std::move(fn)), norm_bound_(norm_bound) {}

  std::size_t dim() const override { return dim_; }
  void eval(double u, double, Matrix& out) const override { out = fn_(u); }
  double norm_bound(double, double) const override { return norm_bound_; }

 private:
  std::size_t dim_;
  std::function<Matrix(double)> fn_;
  double norm_bound_;
};

// v -> -A_{t_hi - v} on [0, t_hi - t_lo]. Propagating it from 0 to t_hi - t_lo
// yields E_{t_hi, t_lo} = E_{t_lo, t_hi}^{-1} (the backward equation).
class ReversedFlow final : public DriftSource {
 public:
  ReversedFlow(const DriftSource& source, double t_lo, double t_hi);

  std::size_t dim() const override { return source_.dim(); }
  std::vector<double> pieces(double s, double t) const override;
  void eval(double v, double piece_start, Matrix& out) const override;
  double norm_bound(double s, double t) const override;
  double horizon() const override { return t_hi_ - t_lo_; }

 private:
  const DriftSource& source_;
  double t_lo_;
  double t_hi_;
  std::vector<double> source_pieces_;
};

struct H0Certificate {
  double a = 0.0;
  double b = 0.0;
  double c0 = 0.0;
  double checked_horizon = 0.0;
  std::size_t grid_points = 0;
};

// Checks mu(A_inf) < 0 (NotStable otherwise) and the decay bound on a uniform
// grid of `grid` points over [0, horizon] plus any table nodes (DecayViolated).
H0Certificate certify_h0(const H0Source& flow, double horizon, std::size_t grid);

// Composite Simpson approximation of int_s^t mu(A_u) du, piece by piece, with
// at least `panels_per_unit` panels per unit time and at least 2 per piece.
double integrate_log_norm(const DriftSource& source, double s, double t, std::size_t panels_per_unit = 256);

struct LognormIntegral {
  double integral = 0.0;
  // mu(A_inf) (t - s) + (a / b) e^{-b s}
  double closed_form_bound = 0.0;
};

LognormIntegral lognorm_integral(const H0Source& flow, double s, double t, std::size_t grid = 0);

}  // namespace rou
