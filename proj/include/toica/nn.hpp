#pragma once

// Minimal dense-layer toolkit: forward/backward by hand, Adam updates.
// Sized for Q networks of a few hundred units, double precision throughout.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "toica/common.hpp"

namespace toica {

struct AdamParams {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;

  void resize(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
};

inline void adam_step(std::vector<double>& weights, const std::vector<double>& grads,
                      AdamState& state, long t, const AdamParams& p) {
  const double bc1 = 1.0 - std::pow(p.beta1, t);
  const double bc2 = 1.0 - std::pow(p.beta2, t);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    state.m[i] = p.beta1 * state.m[i] + (1.0 - p.beta1) * grads[i];
    state.v[i] = p.beta2 * state.v[i] + (1.0 - p.beta2) * grads[i] * grads[i];
    weights[i] -= p.lr * (state.m[i] / bc1) / (std::sqrt(state.v[i] / bc2) + p.eps);
  }
}

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;   // row-major [out][in]
  std::vector<double> b;
  std::vector<double> gw;  // gradient accumulators
  std::vector<double> gb;
  AdamState aw, ab;

  void init(int in_dim, int out_dim, Rng& rng) {
    in = in_dim;
    out = out_dim;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    w.resize(static_cast<std::size_t>(in) * out);
    b.resize(out);
    for (double& x : w) x = u(rng);
    for (double& x : b) x = u(rng);
    gw.assign(w.size(), 0.0);
    gb.assign(b.size(), 0.0);
    aw.resize(w.size());
    ab.resize(b.size());
  }

  void forward(const double* x, double* y) const {
    for (int o = 0; o < out; ++o) {
      const double* row = w.data() + static_cast<std::size_t>(o) * in;
      double acc = b[o];
      for (int i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = acc;
    }
  }

  // Accumulates parameter gradients for input x and upstream dy; writes the
  // input gradient into dx when non-null.
  void backward(const double* x, const double* dy, double* dx) {
    if (dx)
      for (int i = 0; i < in; ++i) dx[i] = 0.0;
    for (int o = 0; o < out; ++o) {
      const double g = dy[o];
      if (g == 0.0) continue;
      double* grow = gw.data() + static_cast<std::size_t>(o) * in;
      const double* row = w.data() + static_cast<std::size_t>(o) * in;
      gb[o] += g;
      for (int i = 0; i < in; ++i) grow[i] += g * x[i];
      if (dx)
        for (int i = 0; i < in; ++i) dx[i] += g * row[i];
    }
  }

  void zero_grad() {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
  }

  void apply_adam(long t, const AdamParams& p) {
    adam_step(w, gw, aw, t, p);
    adam_step(b, gb, ab, t, p);
  }

  std::size_t n_params() const { return w.size() + b.size(); }
};

inline void relu_inplace(double* x, int n) {
  for (int i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

// Gradient of ReLU evaluated on the pre-activation values.
inline void relu_backward(const double* pre, double* grad, int n) {
  for (int i = 0; i < n; ++i)
    if (pre[i] <= 0.0) grad[i] = 0.0;
}

}  // namespace toica
