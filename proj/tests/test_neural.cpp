#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "groves/neural.hpp"
#include "groves/rng.hpp"

using namespace groves;

namespace {

AuctionTensor random_tensor(int bundles, int players, SplitMix64& rng) {
  AuctionTensor x;
  x.bundles = bundles;
  x.players = players;
  x.channels = 2 * bundles + 1;
  x.data.resize(static_cast<std::size_t>(bundles) * players * x.channels);
  for (double& v : x.data) v = rng.next_unit();
  return x;
}

std::vector<double> random_vector(int count, SplitMix64& rng) {
  std::vector<double> v(count);
  for (double& x : v) x = rng.next_unit();
  return v;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-2});
}

void zero_parameters(PaymentNetwork& net) {
  for (auto& p : net.named_parameters()) p.tensor->fill(0.0);
}

// Central finite differences against the accumulated reverse-mode gradient,
// checked for every parameter of the network.
template <typename Net, typename EvalFn, typename BackFn>
void check_gradients(Net& net, EvalFn eval, BackFn back) {
  Net grads = net.zeros_like();
  back(grads);
  const double step = 1e-5;
  auto params = net.named_parameters();
  auto grad_views = grads.named_parameters();
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& tensor = *params[t].tensor;
    for (std::size_t k = 0; k < tensor.numel(); ++k) {
      const double saved = tensor.data[k];
      tensor.data[k] = saved + step;
      const double up = eval();
      tensor.data[k] = saved - step;
      const double down = eval();
      tensor.data[k] = saved;
      const double fd = (up - down) / (2.0 * step);
      const double analytic = grad_views[t].tensor->data[k];
      INFO(params[t].name, "[", k, "] fd=", fd, " analytic=", analytic);
      REQUIRE(relative_error(fd, analytic) <= 1e-4);
    }
  }
}

}  // namespace

TEST_CASE("an all-zero network outputs zero") {
  PaymentNetwork net = init_network(2, 5, 1);
  zero_parameters(net);
  SplitMix64 rng(2ULL);
  for (int trial = 0; trial < 5; ++trial)
    CHECK(forward(net, random_tensor(2, 3, rng)) == 0.0);
}

TEST_CASE("pooling is a sum over player columns") {
  PaymentNetwork net = init_network(2, 5, 3);
  SplitMix64 rng(4ULL);
  const AuctionTensor one = random_tensor(2, 1, rng);
  AuctionTensor two = one;
  two.players = 2;
  two.data.resize(one.data.size() * 2);
  for (int m = 0; m < 2; ++m)
    for (int c = 0; c < 5; ++c) {
      two.data[(static_cast<std::size_t>(m) * 2 + 0) * 5 + c] =
          one.at(m, 0, c);
      two.data[(static_cast<std::size_t>(m) * 2 + 1) * 5 + c] =
          one.at(m, 0, c);
    }

  ForwardTrace single, duplicated;
  forward(net, one, &single);
  forward(net, two, &duplicated);
  REQUIRE(single.pooled.size() == duplicated.pooled.size());
  for (std::size_t h = 0; h < single.pooled.size(); ++h)
    CHECK(duplicated.pooled[h] ==
          doctest::Approx(2.0 * single.pooled[h]).epsilon(1e-12));
}

TEST_CASE("output ignores the order of player columns") {
  PaymentNetwork net = init_network(3, 7, 5);
  SplitMix64 rng(6ULL);
  for (int trial = 0; trial < 100; ++trial) {
    const AuctionTensor x = random_tensor(3, 4, rng);
    AuctionTensor permuted = x;
    const int order[4] = {2, 0, 3, 1};
    for (int m = 0; m < 3; ++m)
      for (int j = 0; j < 4; ++j)
        for (int c = 0; c < 7; ++c)
          permuted.data[(static_cast<std::size_t>(m) * 4 + j) * 7 + c] =
              x.at(m, order[j], c);
    CHECK(std::abs(forward(net, x) - forward(net, permuted)) <= 1e-9);
  }
}

TEST_CASE("one network serves any number of other players") {
  PaymentNetwork net = init_network(2, 5, 7);
  SplitMix64 rng(8ULL);
  for (int players : {1, 2, 9, 10}) {
    const double y = forward(net, random_tensor(2, players, rng));
    CHECK(std::isfinite(y));
    CHECK(y >= 0.0);
  }
}

TEST_CASE("shape mismatches are rejected") {
  PaymentNetwork net = init_network(2, 5, 9);
  SplitMix64 rng(10ULL);
  CHECK_THROWS(forward(net, random_tensor(3, 2, rng)));
}

TEST_CASE("reverse-mode gradients match finite differences") {
  SplitMix64 rng(0xabcdULL);
  for (std::uint64_t seed = 11; seed < 16; ++seed) {
    PaymentNetwork net = init_network(2, 5, seed);
    const AuctionTensor x = random_tensor(2, 3, rng);
    ForwardTrace trace;
    forward(net, x, &trace);
    check_gradients(
        net, [&] { return forward(net, x); },
        [&](PaymentNetwork& grads) {
          ForwardTrace t;
          forward(net, x, &t);
          backward(net, x, t, 1.0, grads);
        });
  }
}

TEST_CASE("flat net gradients match finite differences") {
  SplitMix64 rng(0xbeefULL);
  for (std::uint64_t seed = 21; seed < 26; ++seed) {
    FlatNet net = init_flat_net(6, seed);
    const std::vector<double> x = random_vector(6, rng);
    check_gradients(
        net, [&] { return flat_forward(net, x); },
        [&](FlatNet& grads) {
          FlatTrace t;
          flat_forward(net, x, &t);
          flat_backward(net, x, t, 1.0, grads);
        });
  }
}

TEST_CASE("decoder bias gradient is the upstream signal when active") {
  PaymentNetwork net = init_network(2, 5, 31);
  SplitMix64 rng(32ULL);
  AuctionTensor x = random_tensor(2, 2, rng);
  ForwardTrace trace;
  double y = forward(net, x, &trace);
  int guard = 0;
  while (trace.pre_decoder <= 0.0 && guard++ < 50) {
    x = random_tensor(2, 2, rng);
    y = forward(net, x, &trace);
  }
  REQUIRE(trace.pre_decoder > 0.0);
  CHECK(y == trace.pre_decoder);

  PaymentNetwork grads = net.zeros_like();
  backward(net, x, trace, 2.5, grads);
  CHECK(grads.dec_b.data[0] == 2.5);
}

TEST_CASE("an inactive output rectifier kills every gradient") {
  PaymentNetwork net = init_network(2, 5, 33);
  net.dec_b.fill(-100.0);
  SplitMix64 rng(34ULL);
  const AuctionTensor x = random_tensor(2, 2, rng);
  ForwardTrace trace;
  CHECK(forward(net, x, &trace) == 0.0);
  REQUIRE(trace.pre_decoder < 0.0);

  PaymentNetwork grads = net.zeros_like();
  backward(net, x, trace, 1.0, grads);
  for (const auto& p :
       static_cast<const PaymentNetwork&>(grads).named_parameters())
    for (double g : p.tensor->data) CHECK(g == 0.0);
}

TEST_CASE("flat net refuses the wrong input width") {
  FlatNet net = init_flat_net(6, 41);
  SplitMix64 rng(42ULL);
  CHECK_THROWS(flat_forward(net, random_vector(5, rng)));
  CHECK(flat_forward(net, random_vector(6, rng)) >= 0.0);
}

TEST_CASE("initialization is deterministic per seed") {
  CHECK(init_network(3, 7, 5) == init_network(3, 7, 5));
  CHECK(!(init_network(3, 7, 5) == init_network(3, 7, 6)));
  CHECK(init_flat_net(8, 5) == init_flat_net(8, 5));
  CHECK(init_network(2, 5, 5).parameter_count() ==
        init_network(2, 5, 99).parameter_count());
}

TEST_CASE("initial weights carry the fan-in variance") {
  const PaymentNetwork net = init_network(4, 9, 1234);
  const Tensor& w = net.e2_w;  // fan-in 4*64 = 256, 16384 weights
  REQUIRE(w.numel() >= 10000);
  double mean = 0.0;
  for (double v : w.data) mean += v;
  mean /= w.numel();
  double variance = 0.0;
  for (double v : w.data) variance += (v - mean) * (v - mean);
  variance /= w.numel();
  const double target = 2.0 / 256.0;
  CHECK(variance >= 0.8 * target);
  CHECK(variance <= 1.2 * target);
  for (double b : net.e2_b.data) CHECK(b == 0.0);
}

TEST_CASE("optimizer leaves parameters alone on zero gradients") {
  PaymentNetwork net = init_network(2, 5, 51);
  const PaymentNetwork before = net;
  PaymentNetwork grads = net.zeros_like();
  auto params = net.named_parameters();
  auto grad_views =
      static_cast<const PaymentNetwork&>(grads).named_parameters();
  AdamState state = adam_state_for(grad_views);
  adam_step(params, grad_views, state, 1e-3);
  CHECK(net == before);
  CHECK(state.step == 1);
}

TEST_CASE("first optimizer step has unit bias-corrected magnitude") {
  Tensor param({2});
  param.data = {1.0, -1.0};
  Tensor grad({2});
  grad.data = {0.3, -0.7};
  std::vector<NamedTensor> params{{"p", &param}};
  std::vector<NamedTensorView> grads{{"p", &grad}};
  AdamState state = adam_state_for(grads);
  adam_step(params, grads, state, 0.01);
  CHECK(param.data[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
  CHECK(param.data[1] == doctest::Approx(-1.0 + 0.01).epsilon(1e-6));
}

TEST_CASE("constant gradients drive steps toward lr times sign") {
  Tensor param({1});
  param.data = {0.0};
  Tensor grad({1});
  grad.data = {2.0};
  std::vector<NamedTensor> params{{"p", &param}};
  std::vector<NamedTensorView> grads{{"p", &grad}};
  AdamState state = adam_state_for(grads);
  double previous = param.data[0];
  double last_step = 0.0;
  for (int i = 0; i < 200; ++i) {
    adam_step(params, grads, state, 0.01);
    last_step = param.data[0] - previous;
    previous = param.data[0];
  }
  CHECK(last_step == doctest::Approx(-0.01).epsilon(1e-3));
}

TEST_CASE("non-finite gradients abort and name the tensor") {
  PaymentNetwork net = init_network(2, 5, 61);
  PaymentNetwork grads = net.zeros_like();
  grads.m1_w.data[0] = std::numeric_limits<double>::quiet_NaN();
  auto params = net.named_parameters();
  auto grad_views =
      static_cast<const PaymentNetwork&>(grads).named_parameters();
  AdamState state = adam_state_for(grad_views);
  CHECK_THROWS_WITH_AS(adam_step(params, grad_views, state, 1e-3),
                       doctest::Contains("m1_w"), std::runtime_error);
}

TEST_CASE("forward on random inputs stays finite and non-negative") {
  SplitMix64 rng(71ULL);
  PaymentNetwork net = init_network(3, 7, 72);
  for (int trial = 0; trial < 50; ++trial) {
    const double y = forward(net, random_tensor(3, 5, rng));
    CHECK(std::isfinite(y));
    CHECK(y >= 0.0);
  }
}
