#include "gridtune/nets.hpp"

#include <cmath>

namespace gridtune {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double activate(Act a, double z) {
  switch (a) {
    case Act::relu: return z > 0.0 ? z : 0.0;
    case Act::tanh: return std::tanh(z);
    default: return z;
  }
}

double activate_grad(Act a, double z) {
  switch (a) {
    case Act::relu: return z > 0.0 ? 1.0 : 0.0;
    case Act::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    default: return 1.0;
  }
}

double softplus(double z) {
  if (z > 30.0) return z;
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

// Orthogonalizes the rows (out <= in) or columns (out > in) of w via
// modified Gram-Schmidt on Gaussian draws, then scales by `gain`.
void orthogonal_init(std::vector<double>& w, int out, int in, double gain, Rng& rng) {
  const bool by_rows = out <= in;
  const int nvec = by_rows ? out : in;
  const int dim = by_rows ? in : out;
  std::vector<std::vector<double>> q(nvec, std::vector<double>(dim));
  for (auto& v : q)
    for (auto& x : v) x = rng.normal();
  for (int i = 0; i < nvec; ++i) {
    for (int j = 0; j < i; ++j) {
      double dot = 0.0;
      for (int k = 0; k < dim; ++k) dot += q[i][k] * q[j][k];
      for (int k = 0; k < dim; ++k) q[i][k] -= dot * q[j][k];
    }
    double norm = 0.0;
    for (double x : q[i]) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;  // vanishing draw, keep direction as-is
    for (auto& x : q[i]) x /= norm;
  }
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c)
      w[static_cast<std::size_t>(r) * in + c] = gain * (by_rows ? q[r][c] : q[c][r]);
}

}  // namespace

DenseNet::DenseNet(const std::vector<int>& dims, const std::vector<Act>& acts, Rng& rng,
                   double final_scale)
    : dims_(dims) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1)
    throw UsageError("DenseNet: dims/acts size mismatch");
  for (int d : dims)
    if (d < 1 || d > kMaxWidth) throw UsageError("DenseNet: layer width out of range");
  layers_.resize(dims.size() - 1);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Layer& l = layers_[i];
    l.in = dims[i];
    l.out = dims[i + 1];
    l.act = acts[i];
    l.w.resize(static_cast<std::size_t>(l.in) * l.out);
    l.b.assign(l.out, 0.0);
    l.gw.assign(l.w.size(), 0.0);
    l.gb.assign(l.out, 0.0);
    const bool last = i + 1 == layers_.size();
    orthogonal_init(l.w, l.out, l.in, last ? final_scale : std::sqrt(2.0), rng);
  }
}

void DenseNet::layer_forward(const Layer& l, const double* x, double* y) const {
  for (int r = 0; r < l.out; ++r) {
    double z = l.b[r];
    const double* wr = l.w.data() + static_cast<std::size_t>(r) * l.in;
    for (int c = 0; c < l.in; ++c) z += wr[c] * x[c];
    y[r] = activate(l.act, z);
  }
}

void DenseNet::forward(std::span<const double> x, std::span<double> y) const {
  if (static_cast<int>(x.size()) != in_dim() || static_cast<int>(y.size()) != out_dim())
    throw UsageError("DenseNet::forward: dimension mismatch");
  double buf[2][kMaxWidth];
  const double* cur = x.data();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    double* dst = i + 1 == layers_.size() ? y.data() : buf[i % 2];
    layer_forward(layers_[i], cur, dst);
    cur = dst;
  }
}

void DenseNet::forward_cached(std::span<const double> x, std::span<double> y) {
  if (static_cast<int>(x.size()) != in_dim() || static_cast<int>(y.size()) != out_dim())
    throw UsageError("DenseNet::forward_cached: dimension mismatch");
  std::vector<double> cur(x.begin(), x.end());
  for (Layer& l : layers_) {
    l.x_in = cur;
    l.z.resize(l.out);
    for (int r = 0; r < l.out; ++r) {
      double z = l.b[r];
      const double* wr = l.w.data() + static_cast<std::size_t>(r) * l.in;
      for (int c = 0; c < l.in; ++c) z += wr[c] * cur[c];
      l.z[r] = z;
    }
    cur.resize(l.out);
    for (int r = 0; r < l.out; ++r) cur[r] = activate(l.act, l.z[r]);
  }
  for (int r = 0; r < out_dim(); ++r) y[r] = cur[r];
  cache_valid_ = true;
}

void DenseNet::backward(std::span<const double> grad_y, std::span<double> grad_x) {
  if (!cache_valid_) throw UsageError("DenseNet::backward without pending forward_cached");
  if (static_cast<int>(grad_y.size()) != out_dim())
    throw UsageError("DenseNet::backward: gradient dimension mismatch");
  std::vector<double> up(grad_y.begin(), grad_y.end());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    Layer& l = layers_[li];
    std::vector<double> dz(l.out);
    for (int r = 0; r < l.out; ++r) dz[r] = up[r] * activate_grad(l.act, l.z[r]);
    std::vector<double> down(l.in, 0.0);
    for (int r = 0; r < l.out; ++r) {
      const double* wr = l.w.data() + static_cast<std::size_t>(r) * l.in;
      double* gwr = l.gw.data() + static_cast<std::size_t>(r) * l.in;
      for (int c = 0; c < l.in; ++c) {
        gwr[c] += dz[r] * l.x_in[c];
        down[c] += dz[r] * wr[c];
      }
      l.gb[r] += dz[r];
    }
    up = std::move(down);
  }
  if (!grad_x.empty()) {
    if (grad_x.size() != up.size())
      throw UsageError("DenseNet::backward: grad_x dimension mismatch");
    for (std::size_t i = 0; i < up.size(); ++i) grad_x[i] = up[i];
  }
  cache_valid_ = false;
}

void DenseNet::zero_grad() {
  for (Layer& l : layers_) {
    std::fill(l.gw.begin(), l.gw.end(), 0.0);
    std::fill(l.gb.begin(), l.gb.end(), 0.0);
  }
}

void DenseNet::collect_blocks(const std::string& prefix, std::vector<ParamBlock>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Layer& l = layers_[i];
    const std::string base = prefix + ".l" + std::to_string(i);
    out.push_back({base + ".w", l.w.data(), l.gw.data(), l.w.size()});
    out.push_back({base + ".b", l.b.data(), l.gb.data(), l.b.size()});
  }
}

void PiActor::forward(const double* o, double* u) const {
  const double kp = std::abs(kp_);
  const double ki = std::abs(ki_);
  u[0] = kp * o[0] + ki * o[1] + o[4] - wl_ * o[7];
  u[1] = kp * o[2] + ki * o[3] + o[5] + wl_ * o[6];
}

void PiActor::forward_cached(const double* o, double* u) {
  forward(o, u);
  cache_[0] = o[0];
  cache_[1] = o[1];
  cache_[2] = o[2];
  cache_[3] = o[3];
  cache_valid_ = true;
}

void PiActor::backward(const double* gu) {
  if (!cache_valid_) throw UsageError("PiActor::backward without pending forward_cached");
  // |w| has subgradient sign(w), taken as 0 at exactly 0.
  const double skp = kp_ > 0.0 ? 1.0 : (kp_ < 0.0 ? -1.0 : 0.0);
  const double ski = ki_ > 0.0 ? 1.0 : (ki_ < 0.0 ? -1.0 : 0.0);
  gkp_ += skp * (gu[0] * cache_[0] + gu[1] * cache_[2]);
  gki_ += ski * (gu[0] * cache_[1] + gu[1] * cache_[3]);
  cache_valid_ = false;
}

void PiActor::collect_blocks(const std::string& prefix, std::vector<ParamBlock>& out) {
  out.push_back({prefix + ".kp", &kp_, &gkp_, 1});
  out.push_back({prefix + ".ki", &ki_, &gki_, 1});
}

double gaussian_logp(std::span<const double> mean, std::span<const double> log_std,
                     std::span<const double> x) {
  double lp = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double s = std::exp(log_std[i]);
    const double z = (x[i] - mean[i]) / s;
    lp += -0.5 * z * z - log_std[i] - 0.5 * kLog2Pi;
  }
  return lp;
}

double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double ls : log_std) h += ls + 0.5 * (kLog2Pi + 1.0);
  return h;
}

double squash(double raw, BoundScale b) {
  return b.lo + (b.hi - b.lo) * 0.5 * (std::tanh(raw) + 1.0);
}

double squash_log_det(double raw, BoundScale b) {
  // log(1 - tanh^2 x) = 2 (log 2 - x - softplus(-2x)), stable for large |x|
  const double log_sech2 = 2.0 * (std::log(2.0) - raw - softplus(-2.0 * raw));
  return std::log((b.hi - b.lo) * 0.5) + log_sech2;
}

double squash_log_det_grad(double raw) { return -2.0 * std::tanh(raw); }

}  // namespace gridtune
