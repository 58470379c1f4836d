#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

#include "resrl/rng.hpp"

namespace resrl {

// Dense multilayer perceptron with rectifier hidden units, exact reverse-mode
// gradients and Adam updates. Double precision throughout.

enum class OutputActivation { kLinear, kTanhScaled };

struct Mlp {
  std::vector<Eigen::MatrixXd> w;  // w[l] maps layer l activations to layer l+1
  std::vector<Eigen::VectorXd> b;
  OutputActivation out_act = OutputActivation::kLinear;
  double out_scale = 1.0;  // range of the tanh-scaled output

  int input_dim() const { return w.empty() ? 0 : static_cast<int>(w.front().cols()); }
  int output_dim() const { return w.empty() ? 0 : static_cast<int>(w.back().rows()); }
  int layer_count() const { return static_cast<int>(w.size()); }
};

// Uniform fan-in initialization; when zero_final_layer is set the last layer
// starts at exactly zero so the network output is identically zero.
Mlp make_mlp(const std::vector<int>& sizes, OutputActivation out_act, double out_scale,
             Rng& rng, bool zero_final_layer = false);

struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;   // pre-activations per layer
  std::vector<Eigen::MatrixXd> post;  // activations fed to the next layer
};

// Columns are samples. Throws on input dimension mismatch.
Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& input,
                        ForwardCache* cache = nullptr);

Eigen::VectorXd forward1(const Mlp& net, const Eigen::VectorXd& input);

struct Gradients {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
};

// Exact gradients of sum_j <dy_j, y_j> with respect to parameters and input;
// dy has one column per sample matching the cached forward call. Throws when
// the cache does not match the network.
Eigen::MatrixXd backward(const Mlp& net, const ForwardCache& cache,
                         const Eigen::MatrixXd& dy, Gradients* grads);

struct AdamState {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(const Mlp& net, double lr);

// Bias-corrected adaptive-moment descent step. Throws on shape mismatch.
void adam_step(Mlp& net, const Gradients& grads, AdamState& opt);

// Exact binary round-trip: load(save(net)) reproduces every parameter bit.
void save_mlp(const Mlp& net, std::ostream& out);
Mlp load_mlp(std::istream& in);

}  // namespace resrl
