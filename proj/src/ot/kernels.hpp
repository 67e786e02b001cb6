#pragma once
// Internal to the Sinkhorn solver: dense cost storage and log-sum-exp
// reductions written with GCC/Clang vector extensions. Eigen 3.4 has no
// vectorized exp for double under AVX-512, and the scalar fallback costs
// ~15 ns per entry.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <vector>

#include "idm/types.hpp"

namespace idm::ot {

template <typename S>
struct CostMatrix {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<S> data;
  double max_cost = 0.0;

  const S* row(Eigen::Index i) const { return data.data() + i * cols; }
};

/// C_ij = |x_i - y_j|, rounded to S. Bitwise symmetric: cost(x, y) and
/// cost(y, x) agree entry for entry (see cost.cpp).
template <typename S>
CostMatrix<S> euclidean_cost(const PointMatrix& x, const PointMatrix& y, int workers);

extern template CostMatrix<float> euclidean_cost<float>(const PointMatrix&, const PointMatrix&, int);
extern template CostMatrix<double> euclidean_cost<double>(const PointMatrix&, const PointMatrix&, int);

template <typename S>
struct Vec;

template <>
struct Vec<double> {
  typedef double type __attribute__((vector_size(64)));
  typedef std::int64_t bits __attribute__((vector_size(64)));
  static constexpr int lanes = 8;
};

template <>
struct Vec<float> {
  typedef float type __attribute__((vector_size(64)));
  typedef std::int32_t bits __attribute__((vector_size(64)));
  static constexpr int lanes = 16;
};

template <typename S>
using V = typename Vec<S>::type;

template <typename S>
inline V<S> load(const S* p) {
  V<S> v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

template <typename S, typename T>
inline void store(S* p, T v) {
  std::memcpy(p, &v, sizeof v);
}

template <typename S>
inline V<S> splat(S s) {
  return V<S>{} + s;
}

template <typename T>
inline T vmax(T a, T b) {
  return a > b ? a : b;
}

/// exp(x): Cody-Waite reduction by ln 2 and a Taylor polynomial, ~1 ulp in
/// double and float. Arguments are clamped to the normal range; callers treat
/// sums that hit either clamp as out of range and recompute them shifted.
inline V<double> vexp(V<double> x) {
  using T = V<double>;
  using B = Vec<double>::bits;
  x = x < -708.0 ? splat(-708.0) : x;
  x = x > 708.0 ? splat(708.0) : x;
  const T t = x * 1.4426950408889634 + 0x1.8p52;
  const T k = t - 0x1.8p52;
  const T r = (x - k * 0.693145751953125) - k * 1.428606820309417e-06;
  T p = splat(1.0 / 479001600.0);
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;
  const B scale = ((B)t + 1023) << 52;
  return p * (T)scale;
}

inline V<float> vexp(V<float> x) {
  using T = V<float>;
  using B = Vec<float>::bits;
  x = x < -87.0f ? splat(-87.0f) : x;
  x = x > 87.0f ? splat(87.0f) : x;
  const T t = x * 1.44269504f + 0x1.8p23f;
  const T k = t - 0x1.8p23f;
  const T r = (x - k * 0.693359375f) + k * 2.12194440e-4f;
  T p = splat(1.0f / 5040.0f);
  p = p * r + 1.0f / 720.0f;
  p = p * r + 1.0f / 120.0f;
  p = p * r + 1.0f / 24.0f;
  p = p * r + 1.0f / 6.0f;
  p = p * r + 0.5f;
  p = p * r + 1.0f;
  p = p * r + 1.0f;
  const B scale = ((B)t + 127) << 23;
  return p * (T)scale;
}

template <typename S>
inline S scalar_exp(S x) {
  V<S> v{};
  v[0] = x;
  return vexp(v)[0];
}

/// Row softmin: returns (m, s) with Σ_j exp((h_j - c_j) * inv) = exp(m) * s.
/// The sum is accumulated per 512-entry chunk and carried in double.
template <typename S>
inline void row_logsumexp(const S* c, const S* h, Eigen::Index n, S inv, double& m_out, double& s_out) {
  constexpr int L = Vec<S>::lanes;
  constexpr Eigen::Index kChunk = 512;
  V<S> vm = splat(-std::numeric_limits<S>::infinity());
  Eigen::Index j = 0;
  for (; j + L <= n; j += L) vm = vmax(vm, (load(h + j) - load(c + j)) * inv);
  S m = -std::numeric_limits<S>::infinity();
  for (int q = 0; q < L; ++q) m = std::max(m, vm[q]);
  for (; j < n; ++j) m = std::max(m, (h[j] - c[j]) * inv);

  double total = 0.0;
  for (Eigen::Index s0 = 0; s0 < n; s0 += kChunk) {
    const Eigen::Index s1 = std::min(n, s0 + kChunk);
    V<S> acc{};
    Eigen::Index k = s0;
    for (; k + L <= s1; k += L) acc += vexp((load(h + k) - load(c + k)) * inv - m);
    S part = 0;
    for (int q = 0; q < L; ++q) part += acc[q];
    for (; k < s1; ++k) part += scalar_exp((h[k] - c[k]) * inv - m);
    total += static_cast<double>(part);
  }
  m_out = static_cast<double>(m);
  s_out = total;
}

/// One row of the plan exp((F_i + G_j - c_ij) * inv): adds each entry to
/// col[j] and returns the row total (chunks of 512 carried in double).
template <typename S>
inline double fused_row(const S* c, S fi, const S* g, Eigen::Index n, S inv, S* col) {
  constexpr int L = Vec<S>::lanes;
  constexpr Eigen::Index kChunk = 512;
  const V<S> vf = splat(fi);
  double total = 0.0;
  for (Eigen::Index s0 = 0; s0 < n; s0 += kChunk) {
    const Eigen::Index s1 = std::min(n, s0 + kChunk);
    V<S> acc{};
    Eigen::Index j = s0;
    for (; j + L <= s1; j += L) {
      const V<S> e = vexp((vf + load(g + j) - load(c + j)) * inv);
      acc += e;
      store(col + j, load(col + j) + e);
    }
    S part = 0;
    for (int q = 0; q < L; ++q) part += acc[q];
    for (; j < s1; ++j) {
      const S e = scalar_exp((fi + g[j] - c[j]) * inv);
      part += e;
      col[j] += e;
    }
    total += static_cast<double>(part);
  }
  return total;
}

/// Row total only (self problems, where column sums equal row sums).
template <typename S>
inline double row_mass(const S* c, S fi, const S* g, Eigen::Index n, S inv) {
  constexpr int L = Vec<S>::lanes;
  constexpr Eigen::Index kChunk = 512;
  const V<S> vf = splat(fi);
  double total = 0.0;
  for (Eigen::Index s0 = 0; s0 < n; s0 += kChunk) {
    const Eigen::Index s1 = std::min(n, s0 + kChunk);
    V<S> acc{};
    Eigen::Index j = s0;
    for (; j + L <= s1; j += L) acc += vexp((vf + load(g + j) - load(c + j)) * inv);
    S part = 0;
    for (int q = 0; q < L; ++q) part += acc[q];
    for (; j < s1; ++j) part += scalar_exp((fi + g[j] - c[j]) * inv);
    total += static_cast<double>(part);
  }
  return total;
}

}  // namespace idm::ot
