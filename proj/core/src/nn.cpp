#include "lgobs/nn.hpp"

#include <cmath>
#include <sstream>

#include "lgobs/errors.hpp"

namespace lgobs {

namespace {

Eigen::Map<VectorXd> as_vector(MatrixXd& m) { return {m.data(), m.size()}; }
Eigen::Map<VectorXd> as_vector(VectorXd& v) { return {v.data(), v.size()}; }
Eigen::Map<const VectorXd> as_vector(const MatrixXd& m) { return {m.data(), m.size()}; }
Eigen::Map<const VectorXd> as_vector(const VectorXd& v) { return {v.data(), v.size()}; }

VectorXd sigmoid(const VectorXd& a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

void check_shapes(const GruLayerParams& p, const VectorXd& x, const VectorXd& h) {
  const Index H = p.hidden_size();
  if (p.w_ih.rows() != 3 * H || p.w_hh.rows() != 3 * H || p.b_ih.size() != 3 * H ||
      p.b_hh.size() != 3 * H || x.size() != p.input_size() || h.size() != H) {
    std::ostringstream os;
    os << "gru_forward: shape mismatch (D=" << p.input_size() << ", H=" << H
       << ", x=" << x.size() << ", h=" << h.size() << ")";
    throw ValidationError(os.str());
  }
}

struct GruActivations {
  VectorXd r, z, n, hn, h_next;
};

GruActivations gru_compute(const GruLayerParams& p, const VectorXd& x, const VectorXd& h) {
  check_shapes(p, x, h);
  const Index H = p.hidden_size();
  const VectorXd gi = p.w_ih * x + p.b_ih;
  const VectorXd gh = p.w_hh * h + p.b_hh;
  GruActivations a;
  a.r = sigmoid(gi.segment(0, H) + gh.segment(0, H));
  a.z = sigmoid(gi.segment(H, H) + gh.segment(H, H));
  a.hn = gh.segment(2 * H, H);
  a.n = (gi.segment(2 * H, H).array() + a.r.array() * a.hn.array()).tanh().matrix();
  a.h_next = ((1.0 - a.z.array()) * a.n.array() + a.z.array() * h.array()).matrix();
  return a;
}

}  // namespace

GruLayerParams GruLayerParams::zeros(Index input, Index hidden) {
  return {MatrixXd::Zero(3 * hidden, input), MatrixXd::Zero(3 * hidden, hidden),
          VectorXd::Zero(3 * hidden), VectorXd::Zero(3 * hidden)};
}

LinearParams LinearParams::zeros(Index input, Index output) {
  return {MatrixXd::Zero(output, input), VectorXd::Zero(output)};
}

ObserverParams ObserverParams::zeros(const NetworkDims& d) {
  return {GruLayerParams::zeros(d.input, d.hidden), GruLayerParams::zeros(d.hidden, d.hidden),
          LinearParams::zeros(d.hidden, d.output)};
}

NetworkDims ObserverParams::dims() const {
  return {gru1.input_size(), gru1.hidden_size(), head.w.rows()};
}

std::vector<Eigen::Map<VectorXd>> ObserverParams::tensors() {
  return {as_vector(gru1.w_ih), as_vector(gru1.w_hh), as_vector(gru1.b_ih), as_vector(gru1.b_hh),
          as_vector(gru2.w_ih), as_vector(gru2.w_hh), as_vector(gru2.b_ih), as_vector(gru2.b_hh),
          as_vector(head.w),    as_vector(head.b)};
}

std::vector<Eigen::Map<const VectorXd>> ObserverParams::tensors() const {
  return {as_vector(gru1.w_ih), as_vector(gru1.w_hh), as_vector(gru1.b_ih), as_vector(gru1.b_hh),
          as_vector(gru2.w_ih), as_vector(gru2.w_hh), as_vector(gru2.b_ih), as_vector(gru2.b_hh),
          as_vector(head.w),    as_vector(head.b)};
}

std::vector<std::string> ObserverParams::tensor_names() {
  return {"gru1.w_ih", "gru1.w_hh", "gru1.b_ih", "gru1.b_hh", "gru2.w_ih",
          "gru2.w_hh", "gru2.b_ih", "gru2.b_hh", "head.w",    "head.b"};
}

Index ObserverParams::size() const {
  Index n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

VectorXd ObserverParams::flatten() const {
  VectorXd flat(size());
  Index off = 0;
  for (const auto& t : tensors()) {
    flat.segment(off, t.size()) = t;
    off += t.size();
  }
  return flat;
}

void ObserverParams::assign(const VectorXd& flat) {
  if (flat.size() != size()) throw ValidationError("ObserverParams::assign: size mismatch");
  Index off = 0;
  for (auto t : tensors()) {
    t = flat.segment(off, t.size());
    off += t.size();
  }
}

bool ObserverParams::all_finite() const {
  for (const auto& t : tensors())
    if (!t.allFinite()) return false;
  return true;
}

double squared_norm(const ObserverParams& p) {
  double s = 0.0;
  for (const auto& t : p.tensors()) s += t.squaredNorm();
  return s;
}

ObserverParams init_params(std::mt19937_64& rng, const NetworkDims& dims) {
  auto p = ObserverParams::zeros(dims);
  auto fill = [&rng](MatrixXd& w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Index j = 0; j < w.cols(); ++j)
      for (Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
  };
  fill(p.gru1.w_ih);
  fill(p.gru1.w_hh);
  fill(p.gru2.w_ih);
  fill(p.gru2.w_hh);
  fill(p.head.w);
  return p;
}

VectorXd gru_forward(const GruLayerParams& p, const VectorXd& x, const VectorXd& h) {
  return gru_compute(p, x, h).h_next;
}

VectorXd linear_forward(const LinearParams& p, const VectorXd& h) {
  if (p.w.cols() != h.size() || p.b.size() != p.w.rows())
    throw ValidationError("linear_forward: shape mismatch");
  return p.w * h + p.b;
}

GruTape::GruTape(Index input, Index hidden, Index steps)
    : x(input, steps),
      h_prev(hidden, steps),
      r(hidden, steps),
      z(hidden, steps),
      n(hidden, steps),
      hn(hidden, steps) {}

VectorXd gru_forward(const GruLayerParams& p, const VectorXd& x, const VectorXd& h, GruTape& tape,
                     Index step) {
  auto a = gru_compute(p, x, h);
  tape.x.col(step) = x;
  tape.h_prev.col(step) = h;
  tape.r.col(step) = a.r;
  tape.z.col(step) = a.z;
  tape.n.col(step) = a.n;
  tape.hn.col(step) = a.hn;
  return std::move(a.h_next);
}

NetworkOutput network_forward(const ObserverParams& p, const VectorXd& x, const VectorXd& h1,
                              const VectorXd& h2) {
  NetworkOutput out;
  out.h1 = gru_forward(p.gru1, x, h1);
  out.h2 = gru_forward(p.gru2, out.h1, h2);
  out.v = linear_forward(p.head, out.h2);
  return out;
}

NetworkTape::NetworkTape(const NetworkDims& d, Index steps)
    : gru1(d.input, d.hidden, steps), gru2(d.hidden, d.hidden, steps), head_in(d.hidden, steps) {}

NetworkOutput network_forward(const ObserverParams& p, const VectorXd& x, const VectorXd& h1,
                              const VectorXd& h2, NetworkTape& tape, Index step) {
  NetworkOutput out;
  out.h1 = gru_forward(p.gru1, x, h1, tape.gru1, step);
  out.h2 = gru_forward(p.gru2, out.h1, h2, tape.gru2, step);
  tape.head_in.col(step) = out.h2;
  out.v = linear_forward(p.head, out.h2);
  return out;
}

NetworkBackward::NetworkBackward(const ObserverParams& params, const NetworkTape& tape)
    : params_(params), tape_(tape), next_(tape.steps() - 1) {
  const auto d = params.dims();
  const Index steps = tape.steps();
  grad_h1_ = VectorXd::Zero(d.hidden);
  grad_h2_ = VectorXd::Zero(d.hidden);
  gi1_ = MatrixXd::Zero(3 * d.hidden, steps);
  gh1_ = MatrixXd::Zero(3 * d.hidden, steps);
  gi2_ = MatrixXd::Zero(3 * d.hidden, steps);
  gh2_ = MatrixXd::Zero(3 * d.hidden, steps);
  grad_v_ = MatrixXd::Zero(d.output, steps);
}

VectorXd NetworkBackward::gru_step(const GruLayerParams& p, const GruTape& t, Index k,
                                   const VectorXd& grad_h, VectorXd& grad_h_prev, MatrixXd& gi,
                                   MatrixXd& gh) const {
  const Index H = p.hidden_size();
  const auto r = t.r.col(k).array();
  const auto z = t.z.col(k).array();
  const auto n = t.n.col(k).array();
  const auto hn = t.hn.col(k).array();
  const auto h = t.h_prev.col(k).array();
  const auto g = grad_h.array();

  const Eigen::ArrayXd ga_n = g * (1.0 - z) * (1.0 - n * n);
  const Eigen::ArrayXd ga_z = g * (h - n) * z * (1.0 - z);
  const Eigen::ArrayXd ga_r = ga_n * hn * r * (1.0 - r);

  gi.col(k).segment(0, H) = ga_r.matrix();
  gi.col(k).segment(H, H) = ga_z.matrix();
  gi.col(k).segment(2 * H, H) = ga_n.matrix();
  gh.col(k).segment(0, H) = ga_r.matrix();
  gh.col(k).segment(H, H) = ga_z.matrix();
  gh.col(k).segment(2 * H, H) = (ga_n * r).matrix();

  grad_h_prev = (g * z).matrix();
  grad_h_prev.noalias() += p.w_hh.transpose() * gh.col(k);
  return p.w_ih.transpose() * gi.col(k);
}

VectorXd NetworkBackward::step(Index k, const VectorXd& grad_v) {
  if (k != next_ || k < 0) throw ValidationError("NetworkBackward::step: steps must run in reverse");
  --next_;
  grad_v_.col(k) = grad_v;

  VectorXd g2 = grad_h2_;
  g2.noalias() += params_.head.w.transpose() * grad_v;
  VectorXd g2_prev;
  VectorXd g1 = gru_step(params_.gru2, tape_.gru2, k, g2, g2_prev, gi2_, gh2_);
  grad_h2_ = std::move(g2_prev);

  g1 += grad_h1_;
  VectorXd g1_prev;
  VectorXd gx = gru_step(params_.gru1, tape_.gru1, k, g1, g1_prev, gi1_, gh1_);
  grad_h1_ = std::move(g1_prev);
  return gx;
}

ObserverParams NetworkBackward::gradients() const {
  ObserverParams g;
  auto layer = [](const GruTape& t, const MatrixXd& gi, const MatrixXd& gh) {
    GruLayerParams out;
    out.w_ih.noalias() = gi * t.x.transpose();
    out.w_hh.noalias() = gh * t.h_prev.transpose();
    out.b_ih = gi.rowwise().sum();
    out.b_hh = gh.rowwise().sum();
    return out;
  };
  g.gru1 = layer(tape_.gru1, gi1_, gh1_);
  g.gru2 = layer(tape_.gru2, gi2_, gh2_);
  g.head.w.noalias() = grad_v_ * tape_.head_in.transpose();
  g.head.b = grad_v_.rowwise().sum();
  return g;
}

OptimizerState OptimizerState::zeros(const NetworkDims& dims) {
  return {ObserverParams::zeros(dims), ObserverParams::zeros(dims), 0};
}

void adamw_step(ObserverParams& params, const ObserverParams& grads, OptimizerState& opt,
                const AdamWConfig& cfg) {
  if (grads.dims() != params.dims() || opt.m.dims() != params.dims())
    throw ValidationError("adamw_step: shape mismatch");
  if (!grads.all_finite()) throw NumericError("adamw_step: non-finite gradient, step aborted");

  opt.step += 1;
  const double t = static_cast<double>(opt.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);

  auto theta = params.tensors();
  const auto g = grads.tensors();
  auto m = opt.m.tensors();
  auto v = opt.v.tensors();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i].cwiseAbs2();
    const auto m_hat = m[i].array() / c1;
    const auto v_hat = v[i].array() / c2;
    theta[i].array() -= cfg.lr * (m_hat / (v_hat.sqrt() + cfg.eps) + cfg.weight_decay * theta[i].array());
  }
}

double clip_grad_norm(ObserverParams& grads, double max_norm) {
  const double norm = std::sqrt(squared_norm(grads));
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto t : grads.tensors()) t *= scale;
  }
  return norm;
}

}  // namespace lgobs
