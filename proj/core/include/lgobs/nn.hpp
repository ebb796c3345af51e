#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

// Dense recurrent network used by the observer: two stacked GRU layers and
// a linear head, with reverse-mode gradients through time and AdamW.

namespace lgobs {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct NetworkDims {
  Index input = 36;
  Index hidden = 512;
  Index output = 12;

  bool operator==(const NetworkDims&) const = default;
};

/// GRU layer with gate blocks stacked in (reset, update, candidate) order:
///   r  = sigmoid(W_r x + b_ir + U_r h + b_hr)
///   z  = sigmoid(W_z x + b_iz + U_z h + b_hz)
///   n  = tanh(W_n x + b_in + r * (U_n h + b_hn))
///   h' = (1 - z) * n + z * h
struct GruLayerParams {
  MatrixXd w_ih;  // 3H x D
  MatrixXd w_hh;  // 3H x H
  VectorXd b_ih;  // 3H
  VectorXd b_hh;  // 3H

  static GruLayerParams zeros(Index input, Index hidden);
  Index input_size() const { return w_ih.cols(); }
  Index hidden_size() const { return w_hh.cols(); }
};

struct LinearParams {
  MatrixXd w;  // O x H
  VectorXd b;  // O

  static LinearParams zeros(Index input, Index output);
};

/// All trainable weights. Tensor order, used by checkpoints and the flat
/// views below: gru1.{w_ih, w_hh, b_ih, b_hh}, gru2.{...}, head.{w, b};
/// matrices are flattened column-major.
struct ObserverParams {
  GruLayerParams gru1;
  GruLayerParams gru2;
  LinearParams head;

  static ObserverParams zeros(const NetworkDims& dims);

  NetworkDims dims() const;
  std::vector<Eigen::Map<VectorXd>> tensors();
  std::vector<Eigen::Map<const VectorXd>> tensors() const;
  static std::vector<std::string> tensor_names();

  Index size() const;
  VectorXd flatten() const;
  void assign(const VectorXd& flat);
  bool all_finite() const;
};

double squared_norm(const ObserverParams& p);

/// Uniform U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight matrix, zero
/// biases. fan_in is D for w_ih, H for w_hh and the head.
ObserverParams init_params(std::mt19937_64& rng, const NetworkDims& dims);

VectorXd gru_forward(const GruLayerParams& p, const VectorXd& x, const VectorXd& h);
VectorXd linear_forward(const LinearParams& p, const VectorXd& h);

/// Per-step activations of one GRU layer, one column per step.
struct GruTape {
  MatrixXd x, h_prev, r, z, n, hn;  // hn = U_n h + b_hn

  GruTape() = default;
  GruTape(Index input, Index hidden, Index steps);
};

/// Forward step that also records activations into column `step` of `tape`.
VectorXd gru_forward(const GruLayerParams& p, const VectorXd& x, const VectorXd& h,
                     GruTape& tape, Index step);

struct NetworkOutput {
  VectorXd v;   // head output
  VectorXd h1;  // updated hidden states
  VectorXd h2;
};

NetworkOutput network_forward(const ObserverParams& p, const VectorXd& x, const VectorXd& h1,
                              const VectorXd& h2);

struct NetworkTape {
  GruTape gru1, gru2;
  MatrixXd head_in;  // h2 after each step

  NetworkTape() = default;
  NetworkTape(const NetworkDims& dims, Index steps);
  Index steps() const { return head_in.cols(); }
};

NetworkOutput network_forward(const ObserverParams& p, const VectorXd& x, const VectorXd& h1,
                              const VectorXd& h2, NetworkTape& tape, Index step);

/// Reverse sweep over a recorded rollout. Call step() for k = steps-1 down
/// to 0 with dL/dv_k; each call returns dL/dx_k. Recurrent adjoints are
/// carried internally. gradients() assembles the parameter gradients.
class NetworkBackward {
 public:
  NetworkBackward(const ObserverParams& params, const NetworkTape& tape);

  VectorXd step(Index k, const VectorXd& grad_v);
  ObserverParams gradients() const;

 private:
  VectorXd gru_step(const GruLayerParams& p, const GruTape& t, Index k, const VectorXd& grad_h,
                    VectorXd& grad_h_prev, MatrixXd& gi, MatrixXd& gh) const;

  const ObserverParams& params_;
  const NetworkTape& tape_;
  VectorXd grad_h1_, grad_h2_;
  MatrixXd gi1_, gh1_, gi2_, gh2_;  // gate pre-activation adjoints per step
  MatrixXd grad_v_;
  Index next_ = 0;
};

struct AdamWConfig {
  double lr = 3e-4;
  double weight_decay = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  ObserverParams m;
  ObserverParams v;
  std::uint64_t step = 0;

  static OptimizerState zeros(const NetworkDims& dims);
};

/// theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta).
/// Throws NumericError, leaving params and state untouched, when any
/// gradient is non-finite.
void adamw_step(ObserverParams& params, const ObserverParams& grads, OptimizerState& opt,
                const AdamWConfig& cfg);

/// Rescales grads in place so the global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(ObserverParams& grads, double max_norm);

}  // namespace lgobs
