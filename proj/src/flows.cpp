#include "rou/flows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rou/error.hpp"

namespace rou {

H0Flow::H0Flow(Matrix a_inf, Matrix direction, double a, double b)
    : a_inf_(std::move(a_inf)), m_(std::move(direction)), a_(a), b_(b) {
  require(a_inf_.dim() >= 1 && a_inf_.is_finite(), ErrorCode::InvalidArgument, "A_inf must be finite, dim >= 1");
  require(m_.dim() == a_inf_.dim() && m_.is_finite(), ErrorCode::InvalidArgument, "M must match A_inf");
  require(std::isfinite(a) && a >= 0.0, ErrorCode::InvalidArgument, "transient amplitude a must be >= 0");
  require(std::isfinite(b) && b > 0.0, ErrorCode::InvalidArgument, "decay rate b must be > 0");
  const double mu = log_norm(a_inf_);
  require(mu < 0.0, ErrorCode::NotStable, "mu(A_inf) = " + std::to_string(mu) + " is not negative");
  const double m_norm = spectral_norm(m_);
  if (m_norm > 0.0) {
    m_ *= 1.0 / m_norm;
  } else {
    require(a_ == 0.0, ErrorCode::InvalidArgument, "M = 0 requires a = 0");
  }
  a_inf_norm_ = spectral_norm(a_inf_);
}

void H0Flow::eval(double u, double, Matrix& out) const {
  out = a_inf_;
  const double w = a_ * std::exp(-b_ * u);
  if (w != 0.0) axpy(out, w, m_);
}

double H0Flow::norm_bound(double s, double) const { return a_inf_norm_ + a_ * std::exp(-b_ * std::max(0.0, s)); }

Matrix eval_flow(const H0Flow& flow, double t) {
  require(t >= 0.0, ErrorCode::InvalidArgument, "eval_flow needs t >= 0");
  return flow.at(t);
}

TabulatedFlow::TabulatedFlow(std::vector<double> times, std::vector<Matrix> values, Matrix a_inf, double a, double b)
    : times_(std::move(times)), values_(std::move(values)), a_inf_(std::move(a_inf)), a_(a), b_(b) {
  require(times_.size() >= 2 && times_.size() == values_.size(), ErrorCode::InvalidArgument,
          "tabulated flow needs >= 2 aligned time/value entries");
  require(times_.front() == 0.0, ErrorCode::InvalidArgument, "tabulated flow must start at t = 0");
  for (std::size_t k = 1; k < times_.size(); ++k)
    require(times_[k] > times_[k - 1], ErrorCode::InvalidArgument, "tabulated times must increase strictly");
  for (const Matrix& m : values_)
    require(m.dim() == a_inf_.dim() && m.is_finite(), ErrorCode::InvalidArgument, "tabulated values must match A_inf");
  require(std::isfinite(a) && a >= 0.0 && std::isfinite(b) && b > 0.0, ErrorCode::InvalidArgument,
          "tabulated flow needs a >= 0 and b > 0");
  norms_.reserve(values_.size());
  for (const Matrix& m : values_) norms_.push_back(spectral_norm(m));
}

std::vector<double> TabulatedFlow::pieces(double s, double t) const {
  std::vector<double> out{s};
  for (double tk : times_)
    if (tk > s && tk < t) out.push_back(tk);
  out.push_back(t);
  return out;
}

void TabulatedFlow::eval(double u, double piece_start, Matrix& out) const {
  require(u <= times_.back() * (1.0 + 1e-14) + 1e-300, ErrorCode::GridExceeded, "time beyond tabulated flow");
  auto it = std::upper_bound(times_.begin(), times_.end(), piece_start);
  std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - times_.begin()) - 1));
  k = std::min(k, times_.size() - 2);
  const double w = (u - times_[k]) / (times_[k + 1] - times_[k]);
  out = values_[k];
  out *= 1.0 - w;
  axpy(out, w, values_[k + 1]);
}

double TabulatedFlow::norm_bound(double s, double t) const {
  double m = 0.0;
  // Linear interpolation: the norm is convex on each segment, so node values bound it.
  for (std::size_t k = 0; k + 1 < times_.size(); ++k) {
    if (times_[k] <= t && times_[k + 1] >= s) m = std::max({m, norms_[k], norms_[k + 1]});
  }
  return m;
}

ReversedFlow::ReversedFlow(const DriftSource& source, double t_lo, double t_hi)
    : source_(source), t_lo_(t_lo), t_hi_(t_hi), source_pieces_(source.pieces(t_lo, t_hi)) {
  require(t_hi >= t_lo, ErrorCode::InvalidArgument, "ReversedFlow needs t_lo <= t_hi");
}

std::vector<double> ReversedFlow::pieces(double s, double t) const {
  std::vector<double> out{s};
  for (auto it = source_pieces_.rbegin(); it != source_pieces_.rend(); ++it) {
    const double v = t_hi_ - *it;
    if (v > s && v < t) out.push_back(v);
  }
  out.push_back(t);
  return out;
}

void ReversedFlow::eval(double v, double piece_start, Matrix& out) const {
  // The reversed piece starting at v0 is the source piece ending at t_hi - v0.
  const double source_end = t_hi_ - piece_start;
  double source_start = source_pieces_.front();
  for (std::size_t k = 1; k < source_pieces_.size(); ++k) {
    if (source_pieces_[k] >= source_end - 1e-12 * (1.0 + std::abs(source_end))) {
      source_start = source_pieces_[k - 1];
      break;
    }
  }
  source_.eval(t_hi_ - v, source_start, out);
  out *= -1.0;
}

double ReversedFlow::norm_bound(double s, double t) const { return source_.norm_bound(t_hi_ - t, t_hi_ - s); }

H0Certificate certify_h0(const H0Source& flow, double horizon, std::size_t grid) {
  require(horizon > 0.0 && grid >= 2, ErrorCode::InvalidArgument, "certify_h0 needs horizon > 0 and grid >= 2");
  const double mu = log_norm(flow.a_inf());
  require(mu < 0.0, ErrorCode::NotStable, "mu(A_inf) = " + std::to_string(mu) + " is not negative");

  const double checked = std::min(horizon, flow.horizon());
  std::vector<double> times(grid);
  for (std::size_t k = 0; k < grid; ++k) times[k] = checked * static_cast<double>(k) / static_cast<double>(grid - 1);
  if (const auto* table = dynamic_cast<const TabulatedFlow*>(&flow)) {
    for (double tk : table->times())
      if (tk <= checked) times.push_back(tk);
  }

  // Forming A_t - A_inf loses about one ulp of ||A_inf|| per entry.
  const double roundoff = 8.0 * std::numeric_limits<double>::epsilon() * flow.a_inf().frobenius_norm();
  Matrix at(flow.dim());
  for (double t : times) {
    flow.eval(t, t, at);
    at -= flow.a_inf();
    const double dev = spectral_norm(at);
    const double allowed = flow.a() * std::exp(-flow.b() * t) * (1.0 + 1e-9) + roundoff;
    if (!(dev <= allowed))
      throw Error(ErrorCode::DecayViolated, "||A_t - A_inf|| = " + std::to_string(dev) + " exceeds a e^{-bt} = " +
                                                std::to_string(allowed) + " at t = " + std::to_string(t));
  }
  return H0Certificate{flow.a(), flow.b(), -mu, checked, times.size()};
}

double integrate_log_norm(const DriftSource& source, double s, double t, std::size_t panels_per_unit) {
  require(s <= t, ErrorCode::InvalidArgument, "integrate_log_norm needs s <= t");
  if (s == t) return 0.0;
  const std::vector<double> nodes = source.pieces(s, t);
  Matrix a(source.dim());
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < nodes.size(); ++p) {
    const double lo = nodes[p];
    const double hi = nodes[p + 1];
    const double len = hi - lo;
    std::size_t panels = static_cast<std::size_t>(std::ceil(len * static_cast<double>(panels_per_unit)));
    panels = std::max<std::size_t>(2, panels + (panels % 2));
    const double h = len / static_cast<double>(panels);
    auto mu_at = [&](std::size_t i) {
      const double u = i == panels ? hi : lo + h * static_cast<double>(i);
      source.eval(u, lo, a);
      return log_norm(a);
    };
    double acc = mu_at(0) + mu_at(panels);
    for (std::size_t i = 1; i < panels; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * mu_at(i);
    total += acc * h / 3.0;
  }
  return total;
}

LognormIntegral lognorm_integral(const H0Source& flow, double s, double t, std::size_t grid) {
  require(0.0 <= s && s <= t, ErrorCode::InvalidArgument, "lognorm_integral needs 0 <= s <= t");
  std::size_t per_unit = 256;
  if (t > s && grid > 0) {
    per_unit = std::max<std::size_t>(per_unit, static_cast<std::size_t>(std::ceil(static_cast<double>(grid) / (t - s))));
  }
  LognormIntegral out;
  out.integral = integrate_log_norm(flow, s, t, per_unit);
  out.closed_form_bound = log_norm(flow.a_inf()) * (t - s) + flow.a() / flow.b() * std::exp(-flow.b() * s);
  return out;
}

}  // namespace rou
