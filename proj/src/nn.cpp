#include "resrl/nn.hpp"

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace resrl {

Mlp make_mlp(const std::vector<int>& sizes, OutputActivation out_act, double out_scale,
             Rng& rng, bool zero_final_layer) {
  if (sizes.size() < 2) throw std::invalid_argument("mlp: need at least two layer sizes");
  for (int s : sizes) {
    if (s < 1) throw std::invalid_argument("mlp: layer sizes must be >= 1");
  }
  Mlp net;
  net.out_act = out_act;
  net.out_scale = out_scale;
  const int layers = static_cast<int>(sizes.size()) - 1;
  for (int l = 0; l < layers; ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    Eigen::MatrixXd w(out, in);
    Eigen::VectorXd b(out);
    const bool zero = zero_final_layer && l == layers - 1;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) w(r, c) = zero ? 0.0 : rng.uniform(-bound, bound);
    }
    for (int r = 0; r < out; ++r) b(r) = zero ? 0.0 : rng.uniform(-bound, bound);
    net.w.push_back(std::move(w));
    net.b.push_back(std::move(b));
  }
  return net;
}

Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& input, ForwardCache* cache) {
  if (input.rows() != net.input_dim()) {
    throw std::invalid_argument("mlp forward: input dimension mismatch");
  }
  if (cache) {
    cache->input = input;
    cache->pre.clear();
    cache->post.clear();
  }
  Eigen::MatrixXd x = input;
  const int layers = net.layer_count();
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = (net.w[l] * x).colwise() + net.b[l];
    if (cache) cache->pre.push_back(z);
    if (l + 1 < layers) {
      x = z.cwiseMax(0.0);  // rectifier
      if (cache) cache->post.push_back(x);
    } else if (net.out_act == OutputActivation::kTanhScaled) {
      x = net.out_scale * z.array().tanh();
    } else {
      x = std::move(z);
    }
  }
  return x;
}

Eigen::VectorXd forward1(const Mlp& net, const Eigen::VectorXd& input) {
  return forward(net, Eigen::MatrixXd(input), nullptr).col(0);
}

Eigen::MatrixXd backward(const Mlp& net, const ForwardCache& cache,
                         const Eigen::MatrixXd& dy, Gradients* grads) {
  const int layers = net.layer_count();
  if (static_cast<int>(cache.pre.size()) != layers || cache.input.rows() != net.input_dim()) {
    throw std::invalid_argument("mlp backward: cache does not match this network");
  }
  if (dy.rows() != net.output_dim() || dy.cols() != cache.input.cols()) {
    throw std::invalid_argument("mlp backward: output gradient shape mismatch");
  }
  if (grads) {
    grads->dw.assign(layers, Eigen::MatrixXd());
    grads->db.assign(layers, Eigen::VectorXd());
  }
  Eigen::MatrixXd delta;
  if (net.out_act == OutputActivation::kTanhScaled) {
    const Eigen::ArrayXXd t = cache.pre.back().array().tanh();
    delta = dy.array() * net.out_scale * (1.0 - t.square());
  } else {
    delta = dy;
  }
  for (int l = layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd& below = l == 0 ? cache.input : cache.post[l - 1];
    if (grads) {
      grads->dw[l] = delta * below.transpose();
      grads->db[l] = delta.rowwise().sum();
    }
    Eigen::MatrixXd dx = net.w[l].transpose() * delta;
    if (l > 0) {
      delta = (cache.pre[l - 1].array() > 0.0).cast<double>() * dx.array();
    } else {
      return dx;
    }
  }
  return {};
}

AdamState make_adam(const Mlp& net, double lr) {
  AdamState s;
  s.lr = lr;
  for (int l = 0; l < net.layer_count(); ++l) {
    s.mw.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
    s.vw.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
    s.mb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
    s.vb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
  }
  return s;
}

void adam_step(Mlp& net, const Gradients& grads, AdamState& opt) {
  const int layers = net.layer_count();
  if (static_cast<int>(grads.dw.size()) != layers ||
      static_cast<int>(opt.mw.size()) != layers) {
    throw std::invalid_argument("adam: layer count mismatch");
  }
  opt.step += 1;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (int l = 0; l < layers; ++l) {
    if (grads.dw[l].rows() != net.w[l].rows() || grads.dw[l].cols() != net.w[l].cols() ||
        grads.db[l].size() != net.b[l].size()) {
      throw std::invalid_argument("adam: gradient shape mismatch");
    }
    opt.mw[l] = opt.beta1 * opt.mw[l] + (1.0 - opt.beta1) * grads.dw[l];
    opt.vw[l] = opt.beta2 * opt.vw[l].array() + (1.0 - opt.beta2) * grads.dw[l].array().square();
    opt.mb[l] = opt.beta1 * opt.mb[l] + (1.0 - opt.beta1) * grads.db[l];
    opt.vb[l] = opt.beta2 * opt.vb[l].array() + (1.0 - opt.beta2) * grads.db[l].array().square();
    net.w[l].array() -=
        opt.lr * (opt.mw[l].array() / c1) / ((opt.vw[l].array() / c2).sqrt() + opt.eps);
    net.b[l].array() -=
        opt.lr * (opt.mb[l].array() / c1) / ((opt.vb[l].array() / c2).sqrt() + opt.eps);
  }
}

namespace {

constexpr std::uint32_t kMagic = 0x4d4c5031;  // "MLP1"

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("mlp load: truncated stream");
  return v;
}

}  // namespace

void save_mlp(const Mlp& net, std::ostream& out) {
  write_pod(out, kMagic);
  write_pod<std::int32_t>(out, net.out_act == OutputActivation::kTanhScaled ? 1 : 0);
  write_pod(out, net.out_scale);
  write_pod<std::int32_t>(out, net.layer_count());
  for (int l = 0; l < net.layer_count(); ++l) {
    write_pod<std::int32_t>(out, static_cast<std::int32_t>(net.w[l].rows()));
    write_pod<std::int32_t>(out, static_cast<std::int32_t>(net.w[l].cols()));
    out.write(reinterpret_cast<const char*>(net.w[l].data()),
              static_cast<std::streamsize>(sizeof(double) * net.w[l].size()));
    out.write(reinterpret_cast<const char*>(net.b[l].data()),
              static_cast<std::streamsize>(sizeof(double) * net.b[l].size()));
  }
  if (!out) throw std::runtime_error("mlp save: write failed");
}

Mlp load_mlp(std::istream& in) {
  if (read_pod<std::uint32_t>(in) != kMagic) {
    throw std::runtime_error("mlp load: bad magic");
  }
  Mlp net;
  net.out_act = read_pod<std::int32_t>(in) == 1 ? OutputActivation::kTanhScaled
                                                : OutputActivation::kLinear;
  net.out_scale = read_pod<double>(in);
  const int layers = read_pod<std::int32_t>(in);
  if (layers < 1 || layers > 64) throw std::runtime_error("mlp load: bad layer count");
  for (int l = 0; l < layers; ++l) {
    const int rows = read_pod<std::int32_t>(in);
    const int cols = read_pod<std::int32_t>(in);
    if (rows < 1 || cols < 1 || rows > 65536 || cols > 65536) {
      throw std::runtime_error("mlp load: bad layer shape");
    }
    Eigen::MatrixXd w(rows, cols);
    Eigen::VectorXd b(rows);
    in.read(reinterpret_cast<char*>(w.data()),
            static_cast<std::streamsize>(sizeof(double) * w.size()));
    in.read(reinterpret_cast<char*>(b.data()),
            static_cast<std::streamsize>(sizeof(double) * b.size()));
    if (!in) throw std::runtime_error("mlp load: truncated stream");
    net.w.push_back(std::move(w));
    net.b.push_back(std::move(b));
  }
  return net;
}

}  // namespace resrl
