#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "groves/representation.hpp"

namespace groves {

// Dense row-major 64-bit float tensor; just enough structure for the
// payment networks and their optimizer state.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> extents);
  std::size_t numel() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  void fill(double value);
  bool all_finite() const;
  bool operator==(const Tensor&) const = default;
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};
struct NamedTensorView {
  std::string name;
  const Tensor* tensor;
};

// Payment network over the counterfactual tensor:
//
//   y = rect(dec(sum over players of mlp(embed2(embed1(column)))))
//
// embed1 maps each (bundle, player) channel vector to 64 features, embed2
// maps a player's |K| x 64 block to 64 features, the shared two-layer MLP
// rectifies after each affine map, columns are sum-pooled, and a rectified
// affine decoder emits one non-negative payment term. Parameter count is
// independent of the player count; the pooled sum makes the output invariant
// to reordering the other players.
struct PaymentNetwork {
  int bundles = 0;   // |K|
  int channels = 0;  // 2|K| + 1
  int hidden = 64;

  Tensor e1_w, e1_b;    // (hidden, channels), (hidden)
  Tensor e2_w, e2_b;    // (hidden, bundles*hidden), (hidden)
  Tensor m1_w, m1_b;    // (hidden, hidden), (hidden)
  Tensor m2_w, m2_b;    // (hidden, hidden), (hidden)
  Tensor dec_w, dec_b;  // (1, hidden), (1)

  std::vector<NamedTensor> named_parameters();
  std::vector<NamedTensorView> named_parameters() const;
  // Same shapes, all zeros; the gradient accumulator for backward().
  PaymentNetwork zeros_like() const;
  std::size_t parameter_count() const;
  bool operator==(const PaymentNetwork&) const = default;
};

// Scaled-uniform fan-in initialization: weights U(-a, a) with a^2/3 =
// 2/fan_in, biases zero. Deterministic in `seed`.
PaymentNetwork init_network(int bundles, int channels, std::uint64_t seed);

// Intermediates kept by forward() so backward() can replay the graph.
struct ForwardTrace {
  int players = 0;
  std::vector<double> a1;  // players x (bundles*hidden), post embed1
  std::vector<double> z2;  // players x hidden, post embed2
  std::vector<double> u1, r1;  // players x hidden, first MLP layer pre/post
  std::vector<double> u2, r2;  // players x hidden, second MLP layer pre/post
  std::vector<double> pooled;  // hidden
  double pre_decoder = 0.0;
  double output = 0.0;
};

double forward(const PaymentNetwork& net, const AuctionTensor& x,
               ForwardTrace* trace = nullptr);

// Accumulates upstream * d(output)/d(parameter) into `grads`, which must
// have been created by zeros_like(). The rectifier subgradient at exactly 0
// is 0. Requires the trace produced by forward() on the same input.
void backward(const PaymentNetwork& net, const AuctionTensor& x,
              const ForwardTrace& trace, double upstream,
              PaymentNetwork& grads);

// Fixed-n baseline backbone: input -> 128 rectified units -> rectified
// scalar. Only accepts the input width it was built with.
struct FlatNet {
  int input_dim = 0;
  int hidden = 128;
  Tensor l1_w, l1_b;  // (hidden, input_dim), (hidden)
  Tensor l2_w, l2_b;  // (1, hidden), (1)

  std::vector<NamedTensor> named_parameters();
  std::vector<NamedTensorView> named_parameters() const;
  FlatNet zeros_like() const;
  std::size_t parameter_count() const;
  bool operator==(const FlatNet&) const = default;
};

FlatNet init_flat_net(int input_dim, std::uint64_t seed);

struct FlatTrace {
  std::vector<double> u1, r1;
  double pre_out = 0.0;
  double output = 0.0;
};

double flat_forward(const FlatNet& net, const std::vector<double>& x,
                    FlatTrace* trace = nullptr);
void flat_backward(const FlatNet& net, const std::vector<double>& x,
                   const FlatTrace& trace, double upstream, FlatNet& grads);

// Adam with bias correction. State tensors align with named_parameters()
// order of the network they were created for.
struct AdamState {
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<Tensor> m, v;
};

AdamState adam_state_for(const std::vector<NamedTensorView>& params);

// One update over all parameters; throws on non-finite gradients, naming
// the offending tensor.
void adam_step(const std::vector<NamedTensor>& params,
               const std::vector<NamedTensorView>& grads, AdamState& state,
               double lr);

}  // namespace groves
