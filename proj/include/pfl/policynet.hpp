#pragma once

// Shared policy/value network. Architectures (by variant):
//   Conv      rays -> circular conv, self-aware -> dense, concat -> shared dense,
//             then a policy branch (mu, log sigma) and a value branch.
//   2Dns      as Conv with a dense mapping embedding instead of the convolution.
//   1Dns      concatenated observation -> two dense layers -> branches.
//   Baseline  concatenated observation -> two independent three-layer branches.
//   *Ln       layer normalization after each embedding.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pfl/error.hpp"
#include "pfl/layers.hpp"
#include "pfl/observation.hpp"

namespace pfl {

enum class Variant { Conv, ConvLn, Dense2, Dense2Ln, Dense1, Dense1Ln, Baseline };

inline constexpr std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Conv: return "Conv";
    case Variant::ConvLn: return "ConvLn";
    case Variant::Dense2: return "2Dns";
    case Variant::Dense2Ln: return "2DnsLn";
    case Variant::Dense1: return "1Dns";
    case Variant::Dense1Ln: return "1DnsLn";
    case Variant::Baseline: return "Baseline";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  for (Variant v : {Variant::Conv, Variant::ConvLn, Variant::Dense2, Variant::Dense2Ln,
                    Variant::Dense1, Variant::Dense1Ln, Variant::Baseline}) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown network variant '" + std::string(s) + "'");
}

inline constexpr std::array<Variant, 7> kAllVariants = {
    Variant::Conv,     Variant::ConvLn,   Variant::Dense2,  Variant::Dense2Ln,
    Variant::Dense1,   Variant::Dense1Ln, Variant::Baseline};

inline bool uses_layer_norm(Variant v) {
  return v == Variant::ConvLn || v == Variant::Dense2Ln || v == Variant::Dense1Ln;
}

struct NetConfig {
  Variant variant = Variant::Conv;
  int filters = 32;
  int kernel = 5;
  int self_width = 64;
  int shared_width = 256;
  int branch_width = 256;
  int mapping_width = 0;  // dense mapping embedding of 2Dns; 0 means rays * filters
  int merged_width = 1024;  // first layer of 1Dns
  nn::Activation activation = nn::Activation::Tanh;

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

inline void validate(const NetConfig& c) {
  if (c.kernel < 1 || c.kernel % 2 == 0) throw Error(ErrorCode::InvalidConfig, "kernel must be odd");
  if (c.filters < 1 || c.self_width < 1 || c.shared_width < 1 || c.branch_width < 1 ||
      c.merged_width < 1 || c.mapping_width < 0) {
    throw Error(ErrorCode::InvalidConfig, "layer widths must be positive");
  }
}

// Observation layout the network consumes.
struct ObsShape {
  int rows = 0;      // rays (or 1 for origin/size mapping)
  int channels = 0;
  int self_size = 0;
  bool rays = true;  // whether rows form a circular sequence

  int mapping_size() const { return rows * channels; }
  int size() const { return mapping_size() + self_size; }

  static ObsShape of(const ObsConfig& c) {
    return {c.mapping_rows(), c.channels(), c.self_size(), c.mapping == MappingKind::Rays};
  }
  friend bool operator==(const ObsShape&, const ObsShape&) = default;
};

struct PolicyOutput {
  double mu = 0.0;
  double log_sigma = 0.0;
  double value = 0.0;

  double sigma() const { return std::exp(log_sigma); }
};

struct ActionSample {
  double raw = 0.0;      // drawn from the Gaussian, used for log-probabilities
  double clipped = 0.0;  // applied to the environment
};

template <class Rng>
ActionSample sample_action(const PolicyOutput& out, Rng& rng) {
  std::normal_distribution<double> normal(out.mu, out.sigma());
  ActionSample a;
  a.raw = normal(rng);
  a.clipped = std::clamp(a.raw, -1.0, 1.0);
  return a;
}

inline double log_prob(const PolicyOutput& out, double action) {
  const double z = (action - out.mu) / out.sigma();
  return -0.5 * z * z - out.log_sigma - 0.5 * std::log(2.0 * std::numbers::pi);
}

namespace detail {

// Embedding = (dense | circular conv) -> activation -> optional layer norm.
struct Block {
  bool conv = false;
  nn::Dense dense;
  nn::CircularConv circ;
  std::optional<nn::LayerNorm> norm;

  int out_size() const { return conv ? circ.out_size() : dense.out; }
};

template <class T>
struct BlockCache {
  nn::Mat<T> input;  // dense input, or im2col columns for conv
  nn::Mat<T> act;
  nn::Mat<T> xhat;
  nn::RowVec<T> inv_std;
  nn::Mat<T> out;
};

inline Block dense_block(nn::Manifest& m, const std::string& name, int in, int out, bool ln) {
  Block b;
  b.dense = nn::Dense::create(m, name, in, out);
  if (ln) b.norm = nn::LayerNorm::create(m, name + ".norm", out);
  return b;
}

}  // namespace detail

// Forward activations kept for the backward pass.
template <class T>
struct NetCache {
  int batch = 0;
  nn::Mat<T> mapping;
  nn::Mat<T> self_aware;
  std::optional<detail::BlockCache<T>> map_block;
  std::optional<detail::BlockCache<T>> self_block;
  nn::Mat<T> features;
  std::vector<detail::BlockCache<T>> trunk;
  std::vector<detail::BlockCache<T>> policy;
  std::vector<detail::BlockCache<T>> value;
  nn::Mat<T> policy_out;  // 2 x batch
  nn::Mat<T> value_out;   // 1 x batch
};

template <class T>
class PolicyValueNet {
 public:
  using Matrix = nn::Mat<T>;

  PolicyValueNet(const NetConfig& config, const ObsShape& shape) : config_(config), shape_(shape) {
    validate(config_);
    build();
  }
  PolicyValueNet(const NetConfig& config, const ObsConfig& obs)
      : PolicyValueNet(config, ObsShape::of(obs)) {}

  const NetConfig& config() const { return config_; }
  const ObsShape& shape() const { return shape_; }
  const nn::Manifest& manifest() const { return manifest_; }
  std::size_t param_count() const { return manifest_.total; }

  std::vector<T> zero_params() const { return std::vector<T>(param_count(), T(0)); }

  // Orthogonal initialization: hidden layers with gain sqrt(2), the policy
  // output with a small gain, the value output with unit gain; zero biases,
  // unit layer-norm gains.
  template <class Rng>
  std::vector<T> init_params(Rng& rng) const {
    std::vector<T> p(param_count(), T(0));
    const double hidden = std::sqrt(2.0);
    auto init_block = [&](const detail::Block& b) {
      if (b.conv) {
        orthogonal(p, b.circ.w, b.circ.filters, b.circ.kernel * b.circ.channels, hidden, rng);
      } else {
        orthogonal(p, b.dense.w, b.dense.out, b.dense.in, hidden, rng);
      }
      if (b.norm) std::fill_n(p.begin() + std::ptrdiff_t(b.norm->gain), b.norm->size, T(1));
    };
    if (map_block_) init_block(*map_block_);
    if (self_block_) init_block(*self_block_);
    for (const auto& b : trunk_) init_block(b);
    for (const auto& b : policy_) init_block(b);
    for (const auto& b : value_) init_block(b);
    orthogonal(p, policy_head_.w, policy_head_.out, policy_head_.in, 0.01, rng);
    orthogonal(p, value_head_.w, value_head_.out, value_head_.in, 1.0, rng);
    return p;
  }

  // Batch of observations as column matrices.
  void pack(std::span<const Observation> obs, Matrix& mapping, Matrix& self_aware) const {
    const int batch = int(obs.size());
    mapping.resize(shape_.mapping_size(), batch);
    self_aware.resize(shape_.self_size, batch);
    for (int s = 0; s < batch; ++s) {
      const Observation& o = obs[std::size_t(s)];
      if (int(o.mapping.size()) != shape_.mapping_size() ||
          int(o.self_aware.size()) != shape_.self_size) {
        throw Error(ErrorCode::Shape, "observation shape does not match the network: got " +
                                          std::to_string(o.mapping.size()) + "+" +
                                          std::to_string(o.self_aware.size()) + ", expected " +
                                          std::to_string(shape_.mapping_size()) + "+" +
                                          std::to_string(shape_.self_size));
      }
      for (int i = 0; i < shape_.mapping_size(); ++i) mapping(i, s) = T(o.mapping[std::size_t(i)]);
      for (int i = 0; i < shape_.self_size; ++i) self_aware(i, s) = T(o.self_aware[std::size_t(i)]);
    }
  }

  void forward(std::span<const T> params, NetCache<T>& c) const {
    check_params(params);
    const T* p = params.data();
    c.batch = int(c.self_aware.cols() > 0 ? c.self_aware.cols() : c.mapping.cols());
    if (c.mapping.rows() != shape_.mapping_size() || c.self_aware.rows() != shape_.self_size) {
      throw Error(ErrorCode::Shape, "input batch does not match the network shape");
    }

    if (map_block_ || self_block_) {
      const int m_out = map_block_ ? map_block_->out_size() : 0;
      const int s_out = self_block_ ? self_block_->out_size() : 0;
      c.features.resize(m_out + s_out, c.batch);
      if (map_block_) {
        c.map_block.emplace();
        run_block(*map_block_, p, c.mapping, *c.map_block);
        c.features.topRows(m_out) = c.map_block->out;
      }
      if (self_block_) {
        c.self_block.emplace();
        run_block(*self_block_, p, c.self_aware, *c.self_block);
        c.features.bottomRows(s_out) = c.self_block->out;
      }
    } else {
      c.features.resize(shape_.size(), c.batch);
      c.features.topRows(shape_.mapping_size()) = c.mapping;
      c.features.bottomRows(shape_.self_size) = c.self_aware;
    }

    const Matrix* x = &c.features;
    c.trunk.assign(trunk_.size(), {});
    for (std::size_t i = 0; i < trunk_.size(); ++i) {
      run_block(trunk_[i], p, *x, c.trunk[i]);
      x = &c.trunk[i].out;
    }
    const Matrix& shared = *x;

    const Matrix* xp = &shared;
    c.policy.assign(policy_.size(), {});
    for (std::size_t i = 0; i < policy_.size(); ++i) {
      run_block(policy_[i], p, *xp, c.policy[i]);
      xp = &c.policy[i].out;
    }
    c.policy_out = policy_head_.forward(p, *xp);

    const Matrix* xv = &shared;
    c.value.assign(value_.size(), {});
    for (std::size_t i = 0; i < value_.size(); ++i) {
      run_block(value_[i], p, *xv, c.value[i]);
      xv = &c.value[i].out;
    }
    c.value_out = value_head_.forward(p, *xv);
  }

  PolicyOutput output(const NetCache<T>& c, int sample) const {
    return {double(c.policy_out(0, sample)), double(c.policy_out(1, sample)),
            double(c.value_out(0, sample))};
  }

  std::vector<PolicyOutput> forward(std::span<const T> params,
                                    std::span<const Observation> obs) const {
    NetCache<T> c;
    pack(obs, c.mapping, c.self_aware);
    forward(params, c);
    std::vector<PolicyOutput> out(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) out[i] = output(c, int(i));
    return out;
  }

  PolicyOutput forward(std::span<const T> params, const Observation& obs) const {
    return forward(params, std::span<const Observation>(&obs, 1)).front();
  }

  // Gradients of a scalar loss given dL/dmu, dL/dlog_sigma (rows of
  // d_policy, 2 x batch) and dL/dv (d_value, 1 x batch); accumulated into grad.
  void backward(std::span<const T> params, const NetCache<T>& c, const Matrix& d_policy,
                const Matrix& d_value, std::span<T> grad) const {
    check_params(params);
    if (grad.size() != param_count()) throw Error(ErrorCode::Shape, "gradient buffer size mismatch");
    const T* p = params.data();
    T* g = grad.data();

    const Matrix& shared = trunk_.empty() ? c.features : c.trunk.back().out;

    const Matrix& policy_in = policy_.empty() ? shared : c.policy.back().out;
    Matrix dp = policy_head_.backward(p, g, policy_in, d_policy, true);
    for (std::size_t i = policy_.size(); i-- > 0;) {
      dp = back_block(policy_[i], p, g, c.policy[i], dp, true);
    }

    const Matrix& value_in = value_.empty() ? shared : c.value.back().out;
    Matrix dv = value_head_.backward(p, g, value_in, d_value, true);
    for (std::size_t i = value_.size(); i-- > 0;) {
      dv = back_block(value_[i], p, g, c.value[i], dv, true);
    }

    Matrix d = dp + dv;
    for (std::size_t i = trunk_.size(); i-- > 0;) {
      d = back_block(trunk_[i], p, g, c.trunk[i], d, i > 0 || map_block_ || self_block_);
    }
    if (map_block_ || self_block_) {
      const int m_out = map_block_ ? map_block_->out_size() : 0;
      const int s_out = self_block_ ? self_block_->out_size() : 0;
      if (map_block_) back_block(*map_block_, p, g, *c.map_block, d.topRows(m_out), false);
      if (self_block_) back_block(*self_block_, p, g, *c.self_block, d.bottomRows(s_out), false);
    }
  }

 private:
  void check_params(std::span<const T> params) const {
    if (params.size() != param_count()) {
      throw Error(ErrorCode::Shape, "parameter vector has " + std::to_string(params.size()) +
                                        " entries, network expects " +
                                        std::to_string(param_count()));
    }
  }

  void build() {
    const Variant v = config_.variant;
    const bool ln = uses_layer_norm(v);
    const int in_all = shape_.size();
    const int w = config_.branch_width;
    if (v == Variant::Conv || v == Variant::ConvLn || v == Variant::Dense2 ||
        v == Variant::Dense2Ln) {
      const bool conv = (v == Variant::Conv || v == Variant::ConvLn) && shape_.rays &&
                        config_.kernel <= shape_.rows;
      int m_out = 0;
      if (shape_.mapping_size() > 0) {
        detail::Block b;
        if (conv) {
          b.conv = true;
          b.circ = nn::CircularConv::create(manifest_, "mapping.conv", shape_.channels, shape_.rows,
                                            config_.kernel, config_.filters);
          if (ln) b.norm = nn::LayerNorm::create(manifest_, "mapping.norm", b.circ.out_size());
        } else {
          const int width = config_.mapping_width > 0 ? config_.mapping_width
                                                      : shape_.rows * config_.filters;
          b = detail::dense_block(manifest_, "mapping.dense", shape_.mapping_size(), width, ln);
        }
        m_out = b.out_size();
        map_block_ = b;
      }
      int s_out = 0;
      if (shape_.self_size > 0) {
        self_block_ =
            detail::dense_block(manifest_, "self.dense", shape_.self_size, config_.self_width, ln);
        s_out = config_.self_width;
      }
      trunk_.push_back(
          detail::dense_block(manifest_, "shared.dense", m_out + s_out, config_.shared_width, false));
      policy_.push_back(detail::dense_block(manifest_, "policy.dense", config_.shared_width, w, false));
      value_.push_back(detail::dense_block(manifest_, "value.dense", config_.shared_width, w, false));
    } else if (v == Variant::Dense1 || v == Variant::Dense1Ln) {
      trunk_.push_back(detail::dense_block(manifest_, "merged.dense0", in_all, config_.merged_width, ln));
      trunk_.push_back(detail::dense_block(manifest_, "merged.dense1", config_.merged_width,
                                           config_.shared_width, ln));
      policy_.push_back(detail::dense_block(manifest_, "policy.dense", config_.shared_width, w, false));
      value_.push_back(detail::dense_block(manifest_, "value.dense", config_.shared_width, w, false));
    } else {
      policy_.push_back(detail::dense_block(manifest_, "policy.dense0", in_all, w, false));
      policy_.push_back(detail::dense_block(manifest_, "policy.dense1", w, w, false));
      value_.push_back(detail::dense_block(manifest_, "value.dense0", in_all, w, false));
      value_.push_back(detail::dense_block(manifest_, "value.dense1", w, w, false));
    }
    policy_head_ = nn::Dense::create(manifest_, "policy.out", w, 2);
    value_head_ = nn::Dense::create(manifest_, "value.out", w, 1);
  }

  void run_block(const detail::Block& b, const T* p, const Matrix& x,
                 detail::BlockCache<T>& c) const {
    if (b.conv) {
      c.input = b.circ.im2col(x);
      c.act = b.circ.forward(p, c.input, int(x.cols()));
    } else {
      c.input = x;
      c.act = b.dense.forward(p, x);
    }
    nn::activate(c.act, config_.activation);
    if (b.norm) {
      c.out = b.norm->forward(p, c.act, c.xhat, c.inv_std);
    } else {
      c.out = c.act;
    }
  }

  Matrix back_block(const detail::Block& b, const T* p, T* g, const detail::BlockCache<T>& c,
                    const Matrix& dout, bool want_dx) const {
    Matrix dact = b.norm ? b.norm->backward(p, g, c.xhat, c.inv_std, dout) : dout;
    const Matrix dpre = nn::activation_backward(c.act, dact, config_.activation);
    if (b.conv) return b.circ.backward(p, g, c.input, dpre, want_dx);
    return b.dense.backward(p, g, c.input, dpre, want_dx);
  }

  template <class Rng>
  static void orthogonal(std::vector<T>& p, std::size_t offset, int rows, int cols, double gain,
                         Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const int big = std::max(rows, cols);
    const int small = std::min(rows, cols);
    Eigen::MatrixXd a(big, small);
    for (int j = 0; j < small; ++j) {
      for (int i = 0; i < big; ++i) a(i, j) = normal(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    const Eigen::MatrixXd r = qr.matrixQR();
    for (int j = 0; j < small; ++j) {
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    Eigen::Map<nn::Mat<T>> w(p.data() + offset, rows, cols);
    if (rows >= cols) {
      w = (gain * q).template cast<T>();
    } else {
      w = (gain * q.transpose()).template cast<T>();
    }
  }

  NetConfig config_;
  ObsShape shape_;
  nn::Manifest manifest_;
  std::optional<detail::Block> map_block_;
  std::optional<detail::Block> self_block_;
  std::vector<detail::Block> trunk_;
  std::vector<detail::Block> policy_;
  std::vector<detail::Block> value_;
  nn::Dense policy_head_;
  nn::Dense value_head_;
};

template <class T>
std::size_t param_count(const NetConfig& net, const ObsConfig& obs) {
  return PolicyValueNet<T>(net, obs).param_count();
}

// Circular convolution of one sequence: input is length x channels
// (row-major), weights are filters x (kernel * channels) with tap-major
// columns, output is length x filters (row-major).
inline std::vector<double> circular_conv1d(std::span<const double> input, int length, int channels,
                                           std::span<const double> weights,
                                           std::span<const double> bias, int kernel) {
  const int filters = int(bias.size());
  if (kernel > length) throw Error(ErrorCode::Shape, "kernel wider than the sequence");
  if (int(input.size()) != length * channels ||
      int(weights.size()) != filters * kernel * channels) {
    throw Error(ErrorCode::Shape, "circular_conv1d: inconsistent sizes");
  }
  nn::Manifest m;
  const nn::CircularConv conv = nn::CircularConv::create(m, "conv", channels, length, kernel, filters);
  std::vector<double> p(m.total);
  Eigen::Map<nn::Mat<double>> W(p.data() + conv.w, filters, kernel * channels);
  for (int f = 0; f < filters; ++f) {
    for (int k = 0; k < kernel * channels; ++k) W(f, k) = weights[std::size_t(f * kernel * channels + k)];
  }
  std::copy(bias.begin(), bias.end(), p.begin() + std::ptrdiff_t(conv.b));
  nn::Mat<double> x(length * channels, 1);
  for (int i = 0; i < length * channels; ++i) x(i, 0) = input[std::size_t(i)];
  const nn::Mat<double> y = conv.forward(p.data(), conv.im2col(x), 1);
  return std::vector<double>(y.data(), y.data() + y.size());
}

}  // namespace pfl
