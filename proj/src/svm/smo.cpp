#include "smo.hpp"

#include <limits>

namespace eod::svm::detail {

namespace {

// Whole kernel matrices up to this many entries (256 MiB of doubles).
constexpr std::size_t kFullKernelEntries = std::size_t{32} << 20;
constexpr double kTau = 1e-12;

}  // namespace

KernelRows::KernelRows(const Matrix& x, const KernelParams& k)
    : x_(x), kernel_(k), n_(static_cast<std::size_t>(x.rows())), full_(n_ * n_ <= kFullKernelEntries) {
  if (full_) k_ = kernel_matrix(kernel_, x_);
}

std::span<const double> KernelRows::row(std::size_t i) {
  if (full_) return {k_.row(static_cast<Eigen::Index>(i)).data(), n_};
  for (int s = 0; s < 2; ++s) {
    if (cached_[s] == i) {
      next_slot_ = 1 - s;
      return buf_[s];
    }
  }
  const int s = next_slot_;
  next_slot_ = 1 - s;
  buf_[s].resize(n_);
  const auto xi = row_span(x_, static_cast<Eigen::Index>(i));
  for (std::size_t j = 0; j < n_; ++j)
    buf_[s][j] = j == i ? 1.0 : rbf(kernel_, xi, row_span(x_, static_cast<Eigen::Index>(j)));
  cached_[s] = i;
  return buf_[s];
}

SmoOutput solve_smo(KernelRows& kernel, SmoInput in) {
  const std::size_t n = kernel.size();
  std::vector<double>& a = in.alpha;
  const std::vector<double>& y = in.y;
  const std::vector<double>& ub = in.upper;

  std::vector<double> g = in.p;
  for (std::size_t j = 0; j < n; ++j) {
    if (a[j] == 0) continue;
    const auto kj = kernel.row(j);
    for (std::size_t k = 0; k < n; ++k) g[k] += a[j] * y[j] * y[k] * kj[k];
  }

  auto in_up = [&](std::size_t t) { return y[t] > 0 ? a[t] < ub[t] : a[t] > 0; };
  auto in_low = [&](std::size_t t) { return y[t] > 0 ? a[t] > 0 : a[t] < ub[t]; };

  SmoOutput out;
  for (;;) {
    std::size_t i = SIZE_MAX, j = SIZE_MAX;
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * g[t];
      if (in_up(t) && v > m_up) {
        m_up = v;
        i = t;
      }
      if (in_low(t) && v < m_low) {
        m_low = v;
        j = t;
      }
    }
    out.m_up = m_up;
    out.m_low = m_low;
    if (i == SIZE_MAX || j == SIZE_MAX || m_up - m_low < in.eps) {
      out.converged = true;
      break;
    }
    if (out.iterations >= in.max_iterations) break;
    ++out.iterations;

    const auto ki = kernel.row(i);
    const auto kj = kernel.row(j);
    const double old_ai = a[i];
    const double old_aj = a[j];
    const double ci = ub[i];
    const double cj = ub[j];

    if (y[i] != y[j]) {
      double quad = ki[i] + kj[j] + 2.0 * ki[j];
      if (quad <= 0) quad = kTau;
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) {
          a[j] = 0;
          a[i] = diff;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = -diff;
      }
      if (diff > ci - cj) {
        if (a[i] > ci) {
          a[i] = ci;
          a[j] = ci - diff;
        }
      } else if (a[j] > cj) {
        a[j] = cj;
        a[i] = cj + diff;
      }
    } else {
      double quad = ki[i] + kj[j] - 2.0 * ki[j];
      if (quad <= 0) quad = kTau;
      const double delta = (g[i] - g[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > ci) {
        if (a[i] > ci) {
          a[i] = ci;
          a[j] = sum - ci;
        }
      } else if (a[j] < 0) {
        a[j] = 0;
        a[i] = sum;
      }
      if (sum > cj) {
        if (a[j] > cj) {
          a[j] = cj;
          a[i] = sum - cj;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = sum;
      }
    }

    const double dai = (a[i] - old_ai) * y[i];
    const double daj = (a[j] - old_aj) * y[j];
    for (std::size_t k = 0; k < n; ++k) g[k] += y[k] * (ki[k] * dai + kj[k] * daj);
  }
  out.alpha = std::move(a);
  out.gradient = std::move(g);
  return out;
}

}  // namespace eod::svm::detail
