#include "rou/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rou/error.hpp"

namespace rou {

namespace {

// Rescales m by a power of two so that `norm` lands in [1/2, 2]; returns the log factor removed.
double renormalize(Matrix& m, double norm) {
  if (norm >= 0.5 && norm <= 2.0) return 0.0;
  require(norm > 0.0 && std::isfinite(norm), ErrorCode::InvalidArgument,
          "propagator factor degenerated (norm " + std::to_string(norm) + ")");
  int e = 0;
  std::frexp(norm, &e);  // norm = f 2^e with f in [1/2, 1)
  for (double& v : m.data()) v = std::ldexp(v, -e);
  return static_cast<double>(e) * std::numbers::ln2;
}

double renormalize_spectral(Matrix& m) {
  double removed = renormalize(m, spectral_norm(m));
  // frexp lands in [1/2, 1); one more pass only matters for round-off at the edges.
  removed += renormalize(m, spectral_norm(m));
  return removed;
}

struct Rk4Workspace {
  explicit Rk4Workspace(std::size_t r) : a0(r), am(r), a1(r), k1(r), k2(r), k3(r), k4(r), tmp(r) {}
  Matrix a0, am, a1, k1, k2, k3, k4, tmp;
};

// Integrates y from lo to hi over one smooth piece; y carries its own log scale.
void integrate_piece(const DriftSource& source, double lo, double hi, double tol, Matrix& y, double& log_scale,
                     Rk4Workspace& w) {
  const double len = hi - lo;
  if (len <= 0.0) return;
  const double h_max = rk4_step_bound(tol, source.norm_bound(lo, hi));
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(len / h_max)));
  const double h = len / static_cast<double>(steps);
  source.eval(lo, lo, w.a0);
  for (std::size_t i = 0; i < steps; ++i) {
    const double u = lo + h * static_cast<double>(i);
    const double u1 = i + 1 == steps ? hi : lo + h * static_cast<double>(i + 1);
    source.eval(u + 0.5 * (u1 - u), lo, w.am);
    source.eval(u1, lo, w.a1);
    const double hs = u1 - u;

    multiply_into(w.k1, w.a0, y);
    w.tmp = y;
    axpy(w.tmp, 0.5 * hs, w.k1);
    multiply_into(w.k2, w.am, w.tmp);
    w.tmp = y;
    axpy(w.tmp, 0.5 * hs, w.k2);
    multiply_into(w.k3, w.am, w.tmp);
    w.tmp = y;
    axpy(w.tmp, hs, w.k3);
    multiply_into(w.k4, w.a1, w.tmp);

    auto yd = y.data();
    auto d1 = w.k1.data();
    auto d2 = w.k2.data();
    auto d3 = w.k3.data();
    auto d4 = w.k4.data();
    for (std::size_t k = 0; k < yd.size(); ++k) yd[k] += hs / 6.0 * (d1[k] + 2.0 * (d2[k] + d3[k]) + d4[k]);

    log_scale += renormalize(y, y.frobenius_norm());
    std::swap(w.a0, w.a1);
  }
}

}  // namespace

Propagator Propagator::identity(std::size_t dim, double at) { return {Matrix::identity(dim), 0.0, at, at}; }

Matrix Propagator::value() const {
  Matrix out = factor;
  out *= std::exp(log_scale);
  return out;
}

double rk4_step_bound(double tol, double norm_bound) {
  const double m = std::max(norm_bound, 1e-300);
  return std::min(std::pow(tol, 0.25) / std::max(1.0, m), 0.5 / m);
}

std::vector<Propagator> propagate_checkpoints(const DriftSource& source, double s, std::span<const double> times,
                                              double tol) {
  require(std::isfinite(s) && s >= 0.0, ErrorCode::InvalidArgument, "propagate needs s >= 0");
  require(std::isfinite(tol) && tol > 0.0, ErrorCode::InvalidArgument, "propagate needs tol > 0");
  double prev = s;
  for (double t : times) {
    require(std::isfinite(t) && t >= prev, ErrorCode::InvalidArgument, "propagate needs s <= t (increasing)");
    prev = t;
  }
  if (!times.empty())
    require(times.back() <= source.horizon() * (1.0 + 1e-12), ErrorCode::GridExceeded,
            "t = " + std::to_string(times.back()) + " is beyond the source horizon");

  const std::size_t r = source.dim();
  Rk4Workspace w(r);
  Matrix y = Matrix::identity(r);
  double log_scale = 0.0;
  double at = s;
  std::vector<Propagator> out;
  out.reserve(times.size());
  for (double t : times) {
    const std::vector<double> nodes = source.pieces(at, t);
    for (std::size_t p = 0; p + 1 < nodes.size(); ++p) integrate_piece(source, nodes[p], nodes[p + 1], tol, y, log_scale, w);
    at = t;
    Propagator result{y, log_scale, s, t};
    result.log_scale += renormalize_spectral(result.factor);
    out.push_back(std::move(result));
  }
  return out;
}

Propagator propagate(const DriftSource& source, double s, double t, double tol) {
  const double times[] = {t};
  return std::move(propagate_checkpoints(source, s, times, tol).front());
}

std::vector<Matrix> step_propagators(const DriftSource& source, std::span<const double> nodes, double tol) {
  require(std::isfinite(tol) && tol > 0.0, ErrorCode::InvalidArgument, "propagate needs tol > 0");
  require(!nodes.empty() && std::isfinite(nodes[0]) && nodes[0] >= 0.0, ErrorCode::InvalidArgument,
          "step_propagators needs nodes >= 0");
  for (std::size_t k = 1; k < nodes.size(); ++k)
    require(std::isfinite(nodes[k]) && nodes[k] >= nodes[k - 1], ErrorCode::InvalidArgument,
            "step_propagators needs increasing nodes");
  require(nodes.back() <= source.horizon() * (1.0 + 1e-12), ErrorCode::GridExceeded,
          "t = " + std::to_string(nodes.back()) + " is beyond the source horizon");

  const std::size_t r = source.dim();
  Rk4Workspace w(r);
  std::vector<Matrix> out;
  out.reserve(nodes.size() - 1);
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    Matrix y = Matrix::identity(r);
    double log_scale = 0.0;
    const std::vector<double> pieces = source.pieces(nodes[k], nodes[k + 1]);
    for (std::size_t p = 0; p + 1 < pieces.size(); ++p)
      integrate_piece(source, pieces[p], pieces[p + 1], tol, y, log_scale, w);
    if (log_scale != 0.0) y *= std::exp(log_scale);
    out.push_back(std::move(y));
  }
  return out;
}

Propagator compose(const Propagator& p1, const Propagator& p2) {
  require(std::abs(p1.t - p2.s) <= 1e-12 * (1.0 + std::abs(p1.t)), ErrorCode::IntervalMismatch,
          "cannot compose [" + std::to_string(p1.s) + ", " + std::to_string(p1.t) + "] with [" +
              std::to_string(p2.s) + ", " + std::to_string(p2.t) + "]");
  require(p1.dim() == p2.dim(), ErrorCode::InvalidArgument, "propagator dimensions differ");
  Propagator out{p2.factor * p1.factor, p1.log_scale + p2.log_scale, p1.s, p2.t};
  out.log_scale += renormalize_spectral(out.factor);
  return out;
}

double log_norm_of(const Propagator& p) { return p.log_scale + std::log(spectral_norm(p.factor)); }

Matrix peano_baker(const DriftSource& source, double s, double t, int order, std::size_t panels) {
  require(order >= 1, ErrorCode::InvalidArgument, "peano_baker order must be >= 1");
  require(std::isfinite(s) && s >= 0.0 && std::isfinite(t) && s <= t, ErrorCode::InvalidArgument,
          "peano_baker needs 0 <= s <= t");
  const std::size_t r = source.dim();
  if (s == t) return Matrix::identity(r);
  const double width = (t - s) * source.norm_bound(s, t);
  require(width <= 1.0, ErrorCode::RegimeTooWide,
          "(t - s) sup||A|| = " + std::to_string(width) + " exceeds 1; the series oracle is not reliable");

  // Per piece: uniform sub-grid with at least 3 panels, A evaluated with the piece's own limits.
  const std::vector<double> nodes = source.pieces(s, t);
  const std::size_t piece_count = nodes.size() - 1;
  std::vector<double> hs(piece_count);
  std::vector<std::vector<Matrix>> a(piece_count);
  std::vector<std::vector<Matrix>> term(piece_count);
  for (std::size_t p = 0; p < piece_count; ++p) {
    const double len = nodes[p + 1] - nodes[p];
    const auto m = std::max<std::size_t>(
        3, static_cast<std::size_t>(std::ceil(static_cast<double>(panels) * len / (t - s))));
    hs[p] = len / static_cast<double>(m);
    a[p].resize(m + 1, Matrix(r));
    for (std::size_t i = 0; i <= m; ++i) {
      const double u = i == m ? nodes[p + 1] : nodes[p] + hs[p] * static_cast<double>(i);
      source.eval(u, nodes[p], a[p][i]);
    }
    term[p].assign(m + 1, Matrix::identity(r));
  }

  Matrix sum = Matrix::identity(r);
  std::vector<Matrix> g;
  for (int k = 1; k <= order; ++k) {
    Matrix carry(r);
    for (std::size_t p = 0; p < piece_count; ++p) {
      const std::size_t m = a[p].size() - 1;
      g.assign(m + 1, Matrix(r));
      for (std::size_t i = 0; i <= m; ++i) multiply_into(g[i], a[p][i], term[p][i]);
      const double c = hs[p] / 24.0;
      term[p][0] = carry;
      for (std::size_t i = 0; i < m; ++i) {
        Matrix& next = term[p][i + 1];
        next = term[p][i];
        if (i == 0) {
          axpy(next, 9.0 * c, g[0]);
          axpy(next, 19.0 * c, g[1]);
          axpy(next, -5.0 * c, g[2]);
          axpy(next, c, g[3]);
        } else if (i + 1 == m) {
          axpy(next, c, g[m - 3]);
          axpy(next, -5.0 * c, g[m - 2]);
          axpy(next, 19.0 * c, g[m - 1]);
          axpy(next, 9.0 * c, g[m]);
        } else {
          axpy(next, -c, g[i - 1]);
          axpy(next, 13.0 * c, g[i]);
          axpy(next, 13.0 * c, g[i + 1]);
          axpy(next, -c, g[i + 2]);
        }
      }
      carry = term[p][m];
    }
    sum += carry;
  }
  return sum;
}

}  // namespace rou
