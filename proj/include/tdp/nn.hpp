#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tdp/error.hpp"
#include "tdp/rng.hpp"
#include "tdp/tape.hpp"
#include "tdp/tensor.hpp"

namespace tdp {

// Named, ordered collection of parameters. Addresses stay stable as the set
// grows, so models keep plain Parameter pointers.
class ParameterSet {
 public:
  Parameter& add(std::string name, Shape shape) {
    require(find(name) == nullptr, "duplicate parameter name: " + name);
    params_.emplace_back(std::move(name), Tensor(std::move(shape)));
    return params_.back();
  }

  // Uniform init in [-range, range]; the toolkit-era default.
  Parameter& add_uniform(std::string name, Shape shape, Rng& rng,
                         double range = 0.1) {
    Parameter& p = add(std::move(name), std::move(shape));
    for (double& v : p.value.data) v = uniform(rng, -range, range);
    return p;
  }

  Parameter* find(std::string_view name) {
    for (Parameter& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }

  Parameter& get(std::string_view name) {
    Parameter* p = find(name);
    if (!p) fail("unknown parameter: " + std::string(name));
    return *p;
  }

  void zero_grads() {
    for (Parameter& p : params_) p.zero_grad();
  }

  std::vector<Tensor> snapshot_values() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const Parameter& p : params_) out.push_back(p.value);
    return out;
  }

  void restore_values(const std::vector<Tensor>& values) {
    require(values.size() == params_.size(),
            "restore_values: snapshot size mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      check_same_shape("restore_values", params_[i].value, values[i]);
      params_[i].value = values[i];
    }
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

 private:
  std::deque<Parameter> params_;
};

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. One shared step count; first/second moment
/// tensors per parameter. step() consumes and zeroes the gradients.
class Adam {
 public:
  explicit Adam(ParameterSet& params, AdamConfig config = {})
      : params_(&params), config_(config) {
    for (Parameter& p : params) {
      moments_.push_back({Tensor(p.value.shape), Tensor(p.value.shape)});
    }
  }

  void step() {
    require(moments_.size() == params_->size(),
            "Adam: parameter set changed after optimizer construction");
    ++step_;
    const double bc1 = 1.0 - std::pow(config_.beta1, double(step_));
    const double bc2 = 1.0 - std::pow(config_.beta2, double(step_));
    std::size_t k = 0;
    for (Parameter& p : *params_) {
      Moments& mom = moments_[k++];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        mom.m[i] = config_.beta1 * mom.m[i] + (1.0 - config_.beta1) * g;
        mom.v[i] = config_.beta2 * mom.v[i] + (1.0 - config_.beta2) * g * g;
        const double mhat = mom.m[i] / bc1;
        const double vhat = mom.v[i] / bc2;
        p.value[i] -=
            config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
      }
      p.zero_grad();
    }
  }

  std::uint64_t step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct Moments {
    Tensor m, v;
  };

  ParameterSet* params_;
  AdamConfig config_;
  std::vector<Moments> moments_;
  std::uint64_t step_ = 0;
};

/// One LSTM cell. Gates read the concatenation [x, h_prev]; the forget-gate
/// bias starts at 1.0 and everything else uniform in [-0.1, 0.1].
struct LstmCell {
  Parameter* wi = nullptr;
  Parameter* wf = nullptr;
  Parameter* wo = nullptr;
  Parameter* wg = nullptr;
  Parameter* bi = nullptr;
  Parameter* bf = nullptr;
  Parameter* bo = nullptr;
  Parameter* bg = nullptr;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  static LstmCell create(ParameterSet& params, const std::string& prefix,
                         std::size_t input_dim, std::size_t hidden_dim,
                         Rng& rng, double init_range = 0.1) {
    LstmCell c;
    c.input_dim = input_dim;
    c.hidden_dim = hidden_dim;
    const Shape w_shape{hidden_dim, input_dim + hidden_dim};
    const Shape b_shape{hidden_dim};
    c.wi = &params.add_uniform(prefix + ".wi", w_shape, rng, init_range);
    c.wf = &params.add_uniform(prefix + ".wf", w_shape, rng, init_range);
    c.wo = &params.add_uniform(prefix + ".wo", w_shape, rng, init_range);
    c.wg = &params.add_uniform(prefix + ".wg", w_shape, rng, init_range);
    c.bi = &params.add(prefix + ".bi", b_shape);
    c.bf = &params.add(prefix + ".bf", b_shape);
    c.bo = &params.add(prefix + ".bo", b_shape);
    c.bg = &params.add(prefix + ".bg", b_shape);
    c.bf->value.fill(1.0);
    return c;
  }

  // Rebind to already-present parameters (checkpoint loading).
  static LstmCell locate(ParameterSet& params, const std::string& prefix,
                         std::size_t input_dim, std::size_t hidden_dim) {
    LstmCell c;
    c.input_dim = input_dim;
    c.hidden_dim = hidden_dim;
    c.wi = &params.get(prefix + ".wi");
    c.wf = &params.get(prefix + ".wf");
    c.wo = &params.get(prefix + ".wo");
    c.wg = &params.get(prefix + ".wg");
    c.bi = &params.get(prefix + ".bi");
    c.bf = &params.get(prefix + ".bf");
    c.bo = &params.get(prefix + ".bo");
    c.bg = &params.get(prefix + ".bg");
    return c;
  }

  // i = sig(Wi z + bi), f = sig(Wf z + bf), o = sig(Wo z + bo),
  // g = tanh(Wg z + bg), c = f*c_prev + i*g, h = o*tanh(c), z = [x, h_prev].
  std::pair<Var, Var> step(Tape& tape, Var x, Var h_prev, Var c_prev) const {
    const Var z = tape.concat({x, h_prev});
    const Var i = tape.sigmoid(tape.add(tape.matvec(tape.param(*wi), z),
                                        tape.param(*bi)));
    const Var f = tape.sigmoid(tape.add(tape.matvec(tape.param(*wf), z),
                                        tape.param(*bf)));
    const Var o = tape.sigmoid(tape.add(tape.matvec(tape.param(*wo), z),
                                        tape.param(*bo)));
    const Var g = tape.tanh(tape.add(tape.matvec(tape.param(*wg), z),
                                     tape.param(*bg)));
    const Var c = tape.add(tape.mul(f, c_prev), tape.mul(i, g));
    const Var h = tape.mul(o, tape.tanh(c));
    return {h, c};
  }

  // Hidden states for the whole sequence, indexed by input position.
  std::vector<Var> run(Tape& tape, std::span<const Var> xs,
                       bool reverse) const {
    std::vector<Var> hs(xs.size());
    Var h = tape.constant(Tensor({hidden_dim}));
    Var c = tape.constant(Tensor({hidden_dim}));
    for (std::size_t step_idx = 0; step_idx < xs.size(); ++step_idx) {
      const std::size_t k = reverse ? xs.size() - 1 - step_idx : step_idx;
      auto [h2, c2] = step(tape, xs[k], h, c);
      h = h2;
      c = c2;
      hs[k] = h;
    }
    return hs;
  }
};

/// Bi-directional LSTM encoder. The configured output size splits evenly
/// across the two directions; output k is concat(fwd_h_k, bwd_h_k).
struct BiLstm {
  LstmCell fwd, bwd;

  std::size_t output_dim() const { return 2 * fwd.hidden_dim; }

  static BiLstm create(ParameterSet& params, const std::string& prefix,
                       std::size_t input_dim, std::size_t output_dim, Rng& rng,
                       double init_range = 0.1) {
    if (output_dim == 0 || output_dim % 2 != 0)
      fail("Bi-LSTM output size must be positive and even, got " +
           std::to_string(output_dim));
    BiLstm b;
    b.fwd = LstmCell::create(params, prefix + ".fwd", input_dim,
                             output_dim / 2, rng, init_range);
    b.bwd = LstmCell::create(params, prefix + ".bwd", input_dim,
                             output_dim / 2, rng, init_range);
    return b;
  }

  static BiLstm locate(ParameterSet& params, const std::string& prefix,
                       std::size_t input_dim, std::size_t output_dim) {
    if (output_dim == 0 || output_dim % 2 != 0)
      fail("Bi-LSTM output size must be positive and even, got " +
           std::to_string(output_dim));
    BiLstm b;
    b.fwd = LstmCell::locate(params, prefix + ".fwd", input_dim,
                             output_dim / 2);
    b.bwd = LstmCell::locate(params, prefix + ".bwd", input_dim,
                             output_dim / 2);
    return b;
  }

  std::vector<Var> encode(Tape& tape, std::span<const Var> xs) const {
    require(!xs.empty(), "Bi-LSTM: cannot encode an empty sequence");
    const std::vector<Var> f = fwd.run(tape, xs, /*reverse=*/false);
    const std::vector<Var> b = bwd.run(tape, xs, /*reverse=*/true);
    std::vector<Var> out(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k)
      out[k] = tape.concat({f[k], b[k]});
    return out;
  }
};

}  // namespace tdp
