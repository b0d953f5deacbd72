#include "groves/neural.hpp"

#include <cmath>
#include <stdexcept>

#include "groves/rng.hpp"

namespace groves {
namespace {

double rect(double v) { return v > 0.0 ? v : 0.0; }
// Subgradient at exactly 0 is 0.
double rect_grad(double pre) { return pre > 0.0 ? 1.0 : 0.0; }

void init_tensor(Tensor& t, int fan_in, SplitMix64& rng) {
  // Uniform(-a, a) with variance 2 / fan_in.
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& w : t.data) w = rng.next_uniform(-a, a);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> extents) : shape(std::move(extents)) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  data.assign(n, 0.0);
}

void Tensor::fill(double value) {
  for (double& v : data) v = value;
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::vector<NamedTensor> PaymentNetwork::named_parameters() {
  return {{"e1_w", &e1_w}, {"e1_b", &e1_b}, {"e2_w", &e2_w}, {"e2_b", &e2_b},
          {"m1_w", &m1_w}, {"m1_b", &m1_b}, {"m2_w", &m2_w}, {"m2_b", &m2_b},
          {"dec_w", &dec_w}, {"dec_b", &dec_b}};
}

std::vector<NamedTensorView> PaymentNetwork::named_parameters() const {
  return {{"e1_w", &e1_w}, {"e1_b", &e1_b}, {"e2_w", &e2_w}, {"e2_b", &e2_b},
          {"m1_w", &m1_w}, {"m1_b", &m1_b}, {"m2_w", &m2_w}, {"m2_b", &m2_b},
          {"dec_w", &dec_w}, {"dec_b", &dec_b}};
}

PaymentNetwork PaymentNetwork::zeros_like() const {
  PaymentNetwork z = *this;
  for (auto& p : z.named_parameters()) p.tensor->fill(0.0);
  return z;
}

std::size_t PaymentNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : named_parameters()) n += p.tensor->numel();
  return n;
}

PaymentNetwork init_network(int bundles, int channels, std::uint64_t seed) {
  if (bundles < 1 || channels != 2 * bundles + 1)
    throw std::invalid_argument(
        "init_network: channels must equal 2*bundles+1");
  PaymentNetwork net;
  net.bundles = bundles;
  net.channels = channels;
  const std::size_t h = static_cast<std::size_t>(net.hidden);
  net.e1_w = Tensor({h, static_cast<std::size_t>(channels)});
  net.e1_b = Tensor({h});
  net.e2_w = Tensor({h, static_cast<std::size_t>(bundles) * h});
  net.e2_b = Tensor({h});
  net.m1_w = Tensor({h, h});
  net.m1_b = Tensor({h});
  net.m2_w = Tensor({h, h});
  net.m2_b = Tensor({h});
  net.dec_w = Tensor({1, h});
  net.dec_b = Tensor({1});

  SplitMix64 rng(SplitMix64::mix(seed, 0x6e657477ULL));
  init_tensor(net.e1_w, channels, rng);
  init_tensor(net.e2_w, bundles * net.hidden, rng);
  init_tensor(net.m1_w, net.hidden, rng);
  init_tensor(net.m2_w, net.hidden, rng);
  init_tensor(net.dec_w, net.hidden, rng);
  return net;
}

double forward(const PaymentNetwork& net, const AuctionTensor& x,
               ForwardTrace* trace) {
  if (x.bundles != net.bundles || x.channels != net.channels)
    throw std::invalid_argument("forward: tensor shape does not match net");
  const int K = net.bundles, C = net.channels, H = net.hidden;
  const int P = x.players;

  ForwardTrace local;
  ForwardTrace& t = trace ? *trace : local;
  t.players = P;
  t.a1.assign(static_cast<std::size_t>(P) * K * H, 0.0);
  t.z2.assign(static_cast<std::size_t>(P) * H, 0.0);
  t.u1.assign(static_cast<std::size_t>(P) * H, 0.0);
  t.r1.assign(static_cast<std::size_t>(P) * H, 0.0);
  t.u2.assign(static_cast<std::size_t>(P) * H, 0.0);
  t.r2.assign(static_cast<std::size_t>(P) * H, 0.0);
  t.pooled.assign(H, 0.0);

  for (int j = 0; j < P; ++j) {
    double* a1 = &t.a1[static_cast<std::size_t>(j) * K * H];
    // embed1: one affine map per (bundle, player) cell over the channels
    for (int m = 0; m < K; ++m) {
      const double* cell = &x.data[(static_cast<std::size_t>(m) * P + j) * C];
      double* out = a1 + static_cast<std::size_t>(m) * H;
      for (int h = 0; h < H; ++h) {
        const double* w = &net.e1_w.data[static_cast<std::size_t>(h) * C];
        double acc = net.e1_b.data[h];
        for (int c = 0; c < C; ++c) acc += w[c] * cell[c];
        out[h] = acc;
      }
    }
    // embed2: per-player affine map over the player's K*H block
    double* z2 = &t.z2[static_cast<std::size_t>(j) * H];
    const int KH = K * H;
    for (int h = 0; h < H; ++h) {
      const double* w = &net.e2_w.data[static_cast<std::size_t>(h) * KH];
      double acc = net.e2_b.data[h];
      for (int k = 0; k < KH; ++k) acc += w[k] * a1[k];
      z2[h] = acc;
    }
    // shared MLP, rectified after each layer
    double* u1 = &t.u1[static_cast<std::size_t>(j) * H];
    double* r1 = &t.r1[static_cast<std::size_t>(j) * H];
    for (int h = 0; h < H; ++h) {
      const double* w = &net.m1_w.data[static_cast<std::size_t>(h) * H];
      double acc = net.m1_b.data[h];
      for (int k = 0; k < H; ++k) acc += w[k] * z2[k];
      u1[h] = acc;
      r1[h] = rect(acc);
    }
    double* u2 = &t.u2[static_cast<std::size_t>(j) * H];
    double* r2 = &t.r2[static_cast<std::size_t>(j) * H];
    for (int h = 0; h < H; ++h) {
      const double* w = &net.m2_w.data[static_cast<std::size_t>(h) * H];
      double acc = net.m2_b.data[h];
      for (int k = 0; k < H; ++k) acc += w[k] * r1[k];
      u2[h] = acc;
      r2[h] = rect(acc);
    }
    for (int h = 0; h < H; ++h) t.pooled[h] += r2[h];
  }

  double pre = net.dec_b.data[0];
  for (int h = 0; h < H; ++h) pre += net.dec_w.data[h] * t.pooled[h];
  t.pre_decoder = pre;
  t.output = rect(pre);
  if (!std::isfinite(t.output))
    throw std::runtime_error("forward: non-finite network output");
  return t.output;
}

void backward(const PaymentNetwork& net, const AuctionTensor& x,
              const ForwardTrace& trace, double upstream,
              PaymentNetwork& grads) {
  const int K = net.bundles, C = net.channels, H = net.hidden;
  const int P = trace.players;

  const double d_pre = upstream * rect_grad(trace.pre_decoder);
  grads.dec_b.data[0] += d_pre;
  std::vector<double> d_pooled(H);
  for (int h = 0; h < H; ++h) {
    grads.dec_w.data[h] += d_pre * trace.pooled[h];
    d_pooled[h] = d_pre * net.dec_w.data[h];
  }

  std::vector<double> du2(H), dr1(H), du1(H), dz2(H), da1(K * H);
  for (int j = 0; j < P; ++j) {
    const double* u1 = &trace.u1[static_cast<std::size_t>(j) * H];
    const double* r1 = &trace.r1[static_cast<std::size_t>(j) * H];
    const double* u2 = &trace.u2[static_cast<std::size_t>(j) * H];
    const double* z2 = &trace.z2[static_cast<std::size_t>(j) * H];
    const double* a1 = &trace.a1[static_cast<std::size_t>(j) * K * H];

    for (int h = 0; h < H; ++h) du2[h] = d_pooled[h] * rect_grad(u2[h]);
    for (int h = 0; h < H; ++h) {
      if (du2[h] == 0.0) continue;
      double* wg = &grads.m2_w.data[static_cast<std::size_t>(h) * H];
      for (int k = 0; k < H; ++k) wg[k] += du2[h] * r1[k];
      grads.m2_b.data[h] += du2[h];
    }
    for (int k = 0; k < H; ++k) {
      double acc = 0.0;
      for (int h = 0; h < H; ++h)
        acc += net.m2_w.data[static_cast<std::size_t>(h) * H + k] * du2[h];
      dr1[k] = acc;
    }

    for (int h = 0; h < H; ++h) du1[h] = dr1[h] * rect_grad(u1[h]);
    for (int h = 0; h < H; ++h) {
      if (du1[h] == 0.0) continue;
      double* wg = &grads.m1_w.data[static_cast<std::size_t>(h) * H];
      for (int k = 0; k < H; ++k) wg[k] += du1[h] * z2[k];
      grads.m1_b.data[h] += du1[h];
    }
    for (int k = 0; k < H; ++k) {
      double acc = 0.0;
      for (int h = 0; h < H; ++h)
        acc += net.m1_w.data[static_cast<std::size_t>(h) * H + k] * du1[h];
      dz2[k] = acc;
    }

    const int KH = K * H;
    for (int h = 0; h < H; ++h) {
      if (dz2[h] == 0.0) continue;
      double* wg = &grads.e2_w.data[static_cast<std::size_t>(h) * KH];
      for (int k = 0; k < KH; ++k) wg[k] += dz2[h] * a1[k];
      grads.e2_b.data[h] += dz2[h];
    }
    for (int k = 0; k < KH; ++k) {
      double acc = 0.0;
      for (int h = 0; h < H; ++h)
        acc += net.e2_w.data[static_cast<std::size_t>(h) * KH + k] * dz2[h];
      da1[k] = acc;
    }

    for (int m = 0; m < K; ++m) {
      const double* cell = &x.data[(static_cast<std::size_t>(m) * P + j) * C];
      const double* d = da1.data() + static_cast<std::size_t>(m) * H;
      for (int h = 0; h < H; ++h) {
        if (d[h] == 0.0) continue;
        double* wg = &grads.e1_w.data[static_cast<std::size_t>(h) * C];
        for (int c = 0; c < C; ++c) wg[c] += d[h] * cell[c];
        grads.e1_b.data[h] += d[h];
      }
    }
  }
}

std::vector<NamedTensor> FlatNet::named_parameters() {
  return {{"l1_w", &l1_w}, {"l1_b", &l1_b}, {"l2_w", &l2_w}, {"l2_b", &l2_b}};
}

std::vector<NamedTensorView> FlatNet::named_parameters() const {
  return {{"l1_w", &l1_w}, {"l1_b", &l1_b}, {"l2_w", &l2_w}, {"l2_b", &l2_b}};
}

FlatNet FlatNet::zeros_like() const {
  FlatNet z = *this;
  for (auto& p : z.named_parameters()) p.tensor->fill(0.0);
  return z;
}

std::size_t FlatNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : named_parameters()) n += p.tensor->numel();
  return n;
}

FlatNet init_flat_net(int input_dim, std::uint64_t seed) {
  if (input_dim < 1)
    throw std::invalid_argument("init_flat_net: input_dim must be positive");
  FlatNet net;
  net.input_dim = input_dim;
  const std::size_t h = static_cast<std::size_t>(net.hidden);
  net.l1_w = Tensor({h, static_cast<std::size_t>(input_dim)});
  net.l1_b = Tensor({h});
  net.l2_w = Tensor({1, h});
  net.l2_b = Tensor({1});
  SplitMix64 rng(SplitMix64::mix(seed, 0x666c6174ULL));
  init_tensor(net.l1_w, input_dim, rng);
  init_tensor(net.l2_w, net.hidden, rng);
  return net;
}

double flat_forward(const FlatNet& net, const std::vector<double>& x,
                    FlatTrace* trace) {
  if (static_cast<int>(x.size()) != net.input_dim)
    throw std::invalid_argument("flat_forward: input width mismatch");
  const int H = net.hidden, D = net.input_dim;
  FlatTrace local;
  FlatTrace& t = trace ? *trace : local;
  t.u1.assign(H, 0.0);
  t.r1.assign(H, 0.0);
  for (int h = 0; h < H; ++h) {
    const double* w = &net.l1_w.data[static_cast<std::size_t>(h) * D];
    double acc = net.l1_b.data[h];
    for (int k = 0; k < D; ++k) acc += w[k] * x[k];
    t.u1[h] = acc;
    t.r1[h] = rect(acc);
  }
  double pre = net.l2_b.data[0];
  for (int h = 0; h < H; ++h) pre += net.l2_w.data[h] * t.r1[h];
  t.pre_out = pre;
  t.output = rect(pre);
  if (!std::isfinite(t.output))
    throw std::runtime_error("flat_forward: non-finite network output");
  return t.output;
}

void flat_backward(const FlatNet& net, const std::vector<double>& x,
                   const FlatTrace& trace, double upstream, FlatNet& grads) {
  const int H = net.hidden, D = net.input_dim;
  const double d_pre = upstream * rect_grad(trace.pre_out);
  grads.l2_b.data[0] += d_pre;
  for (int h = 0; h < H; ++h) {
    grads.l2_w.data[h] += d_pre * trace.r1[h];
    const double du1 = d_pre * net.l2_w.data[h] * rect_grad(trace.u1[h]);
    if (du1 == 0.0) continue;
    double* wg = &grads.l1_w.data[static_cast<std::size_t>(h) * D];
    for (int k = 0; k < D; ++k) wg[k] += du1 * x[k];
    grads.l1_b.data[h] += du1;
  }
}

AdamState adam_state_for(const std::vector<NamedTensorView>& params) {
  AdamState state;
  state.m.reserve(params.size());
  state.v.reserve(params.size());
  for (const auto& p : params) {
    state.m.emplace_back(p.tensor->shape);
    state.v.emplace_back(p.tensor->shape);
  }
  return state;
}

void adam_step(const std::vector<NamedTensor>& params,
               const std::vector<NamedTensorView>& grads, AdamState& state,
               double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter/state shape mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!grads[i].tensor->all_finite())
      throw std::runtime_error("adam_step: non-finite gradient in " +
                               grads[i].name);

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, state.step);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i].tensor;
    const Tensor& g = *grads[i].tensor;
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t k = 0; k < p.numel(); ++k) {
      m.data[k] = state.beta1 * m.data[k] + (1.0 - state.beta1) * g.data[k];
      v.data[k] =
          state.beta2 * v.data[k] + (1.0 - state.beta2) * g.data[k] * g.data[k];
      const double mhat = m.data[k] / bc1;
      const double vhat = v.data[k] / bc2;
      p.data[k] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace groves
