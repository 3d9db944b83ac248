#pragma once

// Brute-force reference implementations. These are written from the textbook
// definitions with plain loops and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace evotrade::oracle {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline std::vector<double> sma(const std::vector<double>& x, int length) {
  std::vector<double> out(x.size(), kNaN);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i + 1 < static_cast<std::size_t>(length)) continue;
    long double sum = 0.0L;
    for (int k = 0; k < length; ++k) sum += x[i - static_cast<std::size_t>(k)];
    out[i] = static_cast<double>(sum / length);
  }
  return out;
}

/// Wilder RSI from its definition: seed averages over the first `length`
/// changes, then exponential smoothing with factor 1/length.
inline std::vector<double> rsi(const std::vector<double>& closes, int length) {
  const std::size_t n = closes.size();
  std::vector<double> out(n, kNaN);
  std::vector<double> gains, losses;
  for (std::size_t i = 1; i < n; ++i) {
    const double change = closes[i] - closes[i - 1];
    gains.push_back(change > 0 ? change : 0.0);
    losses.push_back(change < 0 ? -change : 0.0);
  }
  if (gains.size() < static_cast<std::size_t>(length)) return out;
  double g = 0.0, l = 0.0;
  for (int k = 0; k < length; ++k) {
    g += gains[static_cast<std::size_t>(k)];
    l += losses[static_cast<std::size_t>(k)];
  }
  g /= length;
  l /= length;
  auto value = [](double ag, double al) {
    if (ag == 0.0 && al == 0.0) return 50.0;
    if (al == 0.0) return 100.0;
    const double rs = ag / al;
    return 100.0 - 100.0 / (1.0 + rs);
  };
  out[static_cast<std::size_t>(length)] = value(g, l);
  for (std::size_t j = static_cast<std::size_t>(length); j < gains.size(); ++j) {
    g = (g * (length - 1) + gains[j]) / length;
    l = (l * (length - 1) + losses[j]) / length;
    out[j + 1] = value(g, l);
  }
  return out;
}

inline std::vector<double> true_range(const std::vector<double>& h, const std::vector<double>& l,
                                      const std::vector<double>& c) {
  std::vector<double> tr(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    double r = h[i] - l[i];
    if (i > 0) {
      r = std::max(r, std::fabs(h[i] - c[i - 1]));
      r = std::max(r, std::fabs(l[i] - c[i - 1]));
    }
    tr[i] = r;
  }
  return tr;
}

inline std::vector<double> atr(const std::vector<double>& h, const std::vector<double>& l,
                               const std::vector<double>& c, int length) {
  const auto tr = true_range(h, l, c);
  std::vector<double> out(tr.size(), kNaN);
  if (tr.size() < static_cast<std::size_t>(length)) return out;
  double a = 0.0;
  for (int k = 0; k < length; ++k) a += tr[static_cast<std::size_t>(k)];
  a /= length;
  out[static_cast<std::size_t>(length - 1)] = a;
  for (std::size_t i = static_cast<std::size_t>(length); i < tr.size(); ++i) {
    a = ((length - 1) * a + tr[i]) / length;
    out[i] = a;
  }
  return out;
}

inline std::vector<double> normalized_slope(const std::vector<double>& ma, const std::vector<double>& range,
                                            int lookback) {
  std::vector<double> out(ma.size(), kNaN);
  for (std::size_t i = static_cast<std::size_t>(lookback); i < ma.size(); ++i) {
    const double now = ma[i], then = ma[i - static_cast<std::size_t>(lookback)], r = range[i];
    if (std::isnan(now) || std::isnan(then) || std::isnan(r)) continue;
    out[i] = r > 0 ? (now - then) / r : 0.0;
  }
  return out;
}

struct Moments {
  double mean;
  double sample_sd;
  double downside_dev;
};

inline Moments moments(const std::vector<double>& r) {
  long double sum = 0.0L;
  for (double x : r) sum += x;
  const long double mean = sum / r.size();
  long double ss = 0.0L, down = 0.0L;
  for (double x : r) {
    ss += (x - mean) * (x - mean);
    if (x < 0) down += static_cast<long double>(x) * x;
  }
  return {static_cast<double>(mean), static_cast<double>(std::sqrt(ss / (r.size() - 1))),
          static_cast<double>(std::sqrt(down / r.size()))};
}

/// Largest (peak - trough) / peak over all ordered pairs.
inline double max_drawdown(const std::vector<double>& equity) {
  double worst = 0.0;
  for (std::size_t i = 0; i < equity.size(); ++i) {
    for (std::size_t j = i; j < equity.size(); ++j) worst = std::max(worst, (equity[i] - equity[j]) / equity[i]);
  }
  return worst;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

/// P(X >= k) for X ~ Binomial(n, p).
inline double binomial_upper_tail(int n, double p, int k) {
  double total = 0.0;
  for (int i = k; i <= n; ++i) {
    total += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) + i * std::log(p) +
                      (n - i) * std::log1p(-p));
  }
  return total;
}

/// Upper critical value of chi-square with 2 degrees of freedom:
/// the survival function is exp(-x/2).
inline double chi_square_2df_critical(double alpha) { return -2.0 * std::log(alpha); }

}  // namespace evotrade::oracle
