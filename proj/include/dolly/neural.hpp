#pragma once

#include <iosfwd>
#include <vector>

#include "dolly/rng.hpp"

namespace dolly {

/// Dense network parameters. Hidden layers use ReLU; the output layer is
/// either tanh scaled by the action bound (actor) or linear (critic).
struct Mlp {
    enum class Output { tanh_scaled, linear };

    std::vector<int> sizes;  // [input, hidden..., output]
    Output output = Output::linear;
    double output_scale = 1.0;

    struct Layer {
        int in = 0;
        int out = 0;
        std::vector<double> w;  // row-major, out x in
        std::vector<double> b;
    };
    std::vector<Layer> layers;

    int input_dim() const { return sizes.front(); }
    int output_dim() const { return sizes.back(); }
    std::size_t parameter_count() const;
    bool all_finite() const;
};

/// Uniform +-1/sqrt(fan_in) init per layer; the final layer of an actor is
/// drawn from +-final_layer_scale so initial actions sit near zero.
Mlp make_mlp(const std::vector<int>& sizes, Mlp::Output output, Rng& rng,
             double output_scale = 1.0, double final_layer_scale = 0.0);

/// Activations recorded by forward() for one batch; act[0] is the input.
struct ForwardCache {
    int batch = 0;
    std::vector<std::vector<double>> pre;  // pre-activation per layer
    std::vector<std::vector<double>> act;  // post-activation, act[0] = input
};

/// Batched forward pass; input is row-major batch x input_dim, output
/// batch x output_dim. The cache may be null for inference.
void forward(const Mlp& net, const double* input, int batch, double* output,
             ForwardCache* cache);

/// Single-sample convenience wrapper.
std::vector<double> forward(const Mlp& net, const std::vector<double>& input,
                            ForwardCache* cache = nullptr);

/// Parameter gradients plus the gradient with respect to the input batch
/// (needed to push critic gradients through the action input).
struct Gradients {
    std::vector<Mlp::Layer> layer;  // dW, db in layer shapes
    std::vector<double> input;      // batch x input_dim
};

/// Exact reverse-mode gradients of forward(). output_grad is d(loss)/d(output),
/// row-major batch x output_dim. Throws std::logic_error when the cache does
/// not structurally match the network.
Gradients backward(const Mlp& net, const ForwardCache& cache, const double* output_grad);

/// Adam optimizer state for one network.
class Adam {
  public:
    Adam() = default;
    explicit Adam(const Mlp& net, double lr = 0.0005, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    /// One update. Returns false (leaving parameters untouched) when the
    /// gradient contains a non-finite value.
    bool step(Mlp& net, const Gradients& grads);

    long step_count() const { return step_count_; }
    double learning_rate() const { return lr_; }

    void save(std::ostream& os) const;
    void load(std::istream& is);

  private:
    double lr_ = 0.0005;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    long step_count_ = 0;
    std::vector<Mlp::Layer> m_;
    std::vector<Mlp::Layer> v_;
};

/// target <- (1 - tau) * target + tau * online, elementwise.
void polyak_blend(Mlp& target, const Mlp& online, double tau);

/// Versioned text serialization; floats printed at 17 significant digits so
/// the round trip is bit-faithful.
void save_mlp(std::ostream& os, const Mlp& net);
Mlp load_mlp(std::istream& is);

}  // namespace dolly
