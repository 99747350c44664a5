#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace steklov {

/// Gauss-Legendre nodes and weights on [-1, 1].
template <typename Scalar>
struct GaussRule {
  std::vector<Scalar> nodes;
  std::vector<Scalar> weights;

  std::size_t size() const { return nodes.size(); }
};

template <typename Scalar>
GaussRule<Scalar> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre rule needs at least one node");
  GaussRule<Scalar> g;
  g.nodes.resize(static_cast<std::size_t>(n));
  g.weights.resize(static_cast<std::size_t>(n));
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = 0;
    for (int it = 0; it < 100; ++it) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = Scalar(n) * (x * p1 - p0) / (x * x - 1);
      const Scalar dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= 4 * eps) break;
    }
    {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = Scalar(n) * (x * p1 - p0) / (x * x - 1);
    }
    const Scalar w = 2 / ((1 - x * x) * dp * dp);
    const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(n - 1 - i);
    g.nodes[a] = -x;
    g.nodes[b] = x;
    g.weights[a] = w;
    g.weights[b] = w;
  }
  if (n % 2 == 1) g.nodes[static_cast<std::size_t>(n / 2)] = 0;
  return g;
}

/// Composite rule: `panels` equal panels on [a, b], each with the given rule.
template <typename Scalar, typename F>
Scalar integrate(F&& f, Scalar a, Scalar b, const GaussRule<Scalar>& rule, int panels = 1) {
  const Scalar width = (b - a) / Scalar(panels);
  Scalar sum = 0;
  for (int p = 0; p < panels; ++p) {
    const Scalar lo = a + width * Scalar(p);
    const Scalar half = width / 2, mid = lo + half;
    Scalar part = 0;
    for (std::size_t i = 0; i < rule.size(); ++i) part += rule.weights[i] * f(mid + half * rule.nodes[i]);
    sum += half * part;
  }
  return sum;
}

/// Flattened composite rule on [a, b] for reuse across many integrands.
template <typename Scalar>
GaussRule<Scalar> composite_rule(Scalar a, Scalar b, const GaussRule<Scalar>& rule, int panels) {
  GaussRule<Scalar> out;
  const Scalar width = (b - a) / Scalar(panels);
  for (int p = 0; p < panels; ++p) {
    const Scalar half = width / 2, mid = a + width * Scalar(p) + half;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      out.nodes.push_back(mid + half * rule.nodes[i]);
      out.weights.push_back(half * rule.weights[i]);
    }
  }
  return out;
}

extern template GaussRule<double> gauss_legendre<double>(int);
extern template GaussRule<long double> gauss_legendre<long double>(int);

}  // namespace steklov
