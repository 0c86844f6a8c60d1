#pragma once

#include <span>
#include <string>
#include <vector>

#include "gridtune/errors.hpp"
#include "gridtune/rng.hpp"

namespace gridtune {

// A view onto one named parameter tensor and its gradient accumulator. The
// optimizer and the checkpoint writer only ever see this shape.
struct ParamBlock {
  std::string name;
  double* w = nullptr;
  double* g = nullptr;
  std::size_t n = 0;
};

enum class Act { identity, relu, tanh };

// Plain fully connected net, doubles everywhere, explicit backward pass.
// The const forward() is reentrant and allocation-free so rollout workers can
// share one instance; the cached forward/backward pair is for training only.
class DenseNet {
 public:
  static constexpr int kMaxWidth = 128;

  DenseNet() = default;
  // dims = {in, h1, ..., out}; acts has dims.size()-1 entries.
  // Orthogonal-style init, hidden layers scaled sqrt(2), final layer
  // final_scale (0.01 for policy heads, 1.0 for value heads).
  DenseNet(const std::vector<int>& dims, const std::vector<Act>& acts, Rng& rng,
           double final_scale);

  int in_dim() const { return dims_.front(); }
  int out_dim() const { return dims_.back(); }

  void forward(std::span<const double> x, std::span<double> y) const;
  void forward_cached(std::span<const double> x, std::span<double> y);
  // Accumulates parameter gradients; grad_x may be empty when not needed.
  // Requires a pending forward_cached, which it consumes.
  void backward(std::span<const double> grad_y, std::span<double> grad_x);

  void zero_grad();
  void collect_blocks(const std::string& prefix, std::vector<ParamBlock>& out);

 private:
  struct Layer {
    int in = 0, out = 0;
    Act act = Act::identity;
    std::vector<double> w, b;    // w is out x in, row-major
    std::vector<double> gw, gb;
    std::vector<double> x_in, z;  // training cache: input and pre-activation
  };

  void layer_forward(const Layer& l, const double* x, double* y) const;

  std::vector<int> dims_;
  std::vector<Layer> layers_;
  bool cache_valid_ = false;
};

// The current controller written as a two-output network: proportional and
// integral weights are trainable (used through their absolute value), the
// voltage feedforward and the omega*L cross-coupling are fixed connections.
//   u_d = |kp| e_d + |ki| int_e_d + v_d - wl * i_q
//   u_q = |kp| e_q + |ki| int_e_q + v_q + wl * i_d
// Observation layout matches FixedObs.
class PiActor {
 public:
  PiActor(double kp_init, double ki_init, double omega_l)
      : kp_(kp_init), ki_(ki_init), wl_(omega_l) {}

  void forward(const double* obs, double* u) const;
  void forward_cached(const double* obs, double* u);
  void backward(const double* grad_u);  // consumes the cache

  double kp_raw() const { return kp_; }
  double ki_raw() const { return ki_; }
  double omega_l() const { return wl_; }
  void zero_grad() { gkp_ = gki_ = 0.0; }
  void collect_blocks(const std::string& prefix, std::vector<ParamBlock>& out);

 private:
  double kp_, ki_, wl_;
  double gkp_ = 0.0, gki_ = 0.0;
  double cache_[4] = {0, 0, 0, 0};  // e_d, int_e_d, e_q, int_e_q
  bool cache_valid_ = false;
};

// Diagonal Gaussian head with state-independent log standard deviations.
double gaussian_logp(std::span<const double> mean, std::span<const double> log_std,
                     std::span<const double> x);
double gaussian_entropy(std::span<const double> log_std);

// Affine-tanh squash mapping an unbounded raw action into [lo, hi].
struct BoundScale {
  double lo = 0.0;
  double hi = 0.0;
};
double squash(double raw, BoundScale b);
// log |d squash / d raw|; subtracted from the raw-space log-density.
double squash_log_det(double raw, BoundScale b);
// d/d raw of squash_log_det (equals -2 tanh(raw)).
double squash_log_det_grad(double raw);

}  // namespace gridtune
