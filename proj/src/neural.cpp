#include "dolly/neural.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace dolly {

namespace {

void write_doubles(std::ostream& os, const std::vector<double>& v) {
    char buf[32];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v[i]);
        os << buf << ((i + 1) % 8 == 0 ? '\n' : ' ');
    }
    if (v.size() % 8 != 0) os << '\n';
}

void read_doubles(std::istream& is, std::vector<double>& v) {
    for (auto& x : v)
        if (!(is >> x)) throw std::runtime_error("mlp load: truncated float array");
}

bool finite_all(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
}

bool Mlp::all_finite() const {
    for (const auto& l : layers)
        if (!finite_all(l.w) || !finite_all(l.b)) return false;
    return true;
}

Mlp make_mlp(const std::vector<int>& sizes, Mlp::Output output, Rng& rng,
             double output_scale, double final_layer_scale) {
    if (sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output sizes");
    for (int s : sizes)
        if (s <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");

    Mlp net;
    net.sizes = sizes;
    net.output = output;
    net.output_scale = output_scale;
    net.layers.resize(sizes.size() - 1);
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        auto& l = net.layers[li];
        l.in = sizes[li];
        l.out = sizes[li + 1];
        l.w.resize(static_cast<std::size_t>(l.in) * l.out);
        l.b.resize(static_cast<std::size_t>(l.out));
        const bool final_layer = li + 1 == net.layers.size();
        const double bound = (final_layer && final_layer_scale > 0.0)
                                 ? final_layer_scale
                                 : 1.0 / std::sqrt(static_cast<double>(l.in));
        for (auto& w : l.w) w = rng.uniform(-bound, bound);
        for (auto& b : l.b) b = rng.uniform(-bound, bound);
    }
    return net;
}

void forward(const Mlp& net, const double* input, int batch, double* output,
             ForwardCache* cache) {
    const std::size_t n_layers = net.layers.size();
    if (cache) {
        cache->batch = batch;
        cache->pre.assign(n_layers, {});
        cache->act.assign(n_layers + 1, {});
        cache->act[0].assign(input, input + static_cast<std::size_t>(batch) * net.input_dim());
    }

    std::vector<double> cur(input, input + static_cast<std::size_t>(batch) * net.input_dim());
    std::vector<double> next;
    for (std::size_t li = 0; li < n_layers; ++li) {
        const auto& l = net.layers[li];
        next.assign(static_cast<std::size_t>(batch) * l.out, 0.0);
        for (int bi = 0; bi < batch; ++bi) {
            const double* x = cur.data() + static_cast<std::size_t>(bi) * l.in;
            double* y = next.data() + static_cast<std::size_t>(bi) * l.out;
            for (int o = 0; o < l.out; ++o) {
                const double* wrow = l.w.data() + static_cast<std::size_t>(o) * l.in;
                double acc = l.b[static_cast<std::size_t>(o)];
                for (int i = 0; i < l.in; ++i) acc += wrow[i] * x[i];
                y[o] = acc;
            }
        }
        if (cache) cache->pre[li] = next;

        const bool last = li + 1 == n_layers;
        if (!last) {
            for (auto& v : next) v = v > 0.0 ? v : 0.0;  // ReLU
        } else if (net.output == Mlp::Output::tanh_scaled) {
            for (auto& v : next) v = net.output_scale * std::tanh(v);
        }
        if (cache) cache->act[li + 1] = next;
        cur.swap(next);
    }
    std::copy(cur.begin(), cur.end(), output);
}

std::vector<double> forward(const Mlp& net, const std::vector<double>& input,
                            ForwardCache* cache) {
    if (static_cast<int>(input.size()) != net.input_dim())
        throw std::invalid_argument("mlp forward: input length mismatch");
    std::vector<double> out(static_cast<std::size_t>(net.output_dim()));
    forward(net, input.data(), 1, out.data(), cache);
    return out;
}

Gradients backward(const Mlp& net, const ForwardCache& cache, const double* output_grad) {
    const std::size_t n_layers = net.layers.size();
    if (cache.act.size() != n_layers + 1 || cache.pre.size() != n_layers)
        throw std::logic_error("mlp backward: cache does not match network");
    for (std::size_t li = 0; li < n_layers; ++li) {
        const auto& l = net.layers[li];
        if (cache.pre[li].size() != static_cast<std::size_t>(cache.batch) * l.out ||
            cache.act[li].size() != static_cast<std::size_t>(cache.batch) * l.in)
            throw std::logic_error("mlp backward: cache does not match network");
    }

    const int batch = cache.batch;
    Gradients g;
    g.layer.resize(n_layers);
    for (std::size_t li = 0; li < n_layers; ++li) {
        g.layer[li].in = net.layers[li].in;
        g.layer[li].out = net.layers[li].out;
        g.layer[li].w.assign(net.layers[li].w.size(), 0.0);
        g.layer[li].b.assign(net.layers[li].b.size(), 0.0);
    }

    // delta starts as d(loss)/d(pre-activation) of the output layer.
    std::vector<double> delta(output_grad,
                              output_grad + static_cast<std::size_t>(batch) * net.output_dim());
    if (net.output == Mlp::Output::tanh_scaled) {
        const auto& pre = cache.pre[n_layers - 1];
        for (std::size_t i = 0; i < delta.size(); ++i) {
            const double t = std::tanh(pre[i]);
            delta[i] *= net.output_scale * (1.0 - t * t);
        }
    }

    std::vector<double> prev_delta;
    for (std::size_t li = n_layers; li-- > 0;) {
        const auto& l = net.layers[li];
        auto& gl = g.layer[li];
        const std::vector<double>& below = cache.act[li];

        for (int bi = 0; bi < batch; ++bi) {
            const double* d = delta.data() + static_cast<std::size_t>(bi) * l.out;
            const double* x = below.data() + static_cast<std::size_t>(bi) * l.in;
            for (int o = 0; o < l.out; ++o) {
                gl.b[static_cast<std::size_t>(o)] += d[o];
                double* gw = gl.w.data() + static_cast<std::size_t>(o) * l.in;
                for (int i = 0; i < l.in; ++i) gw[i] += d[o] * x[i];
            }
        }

        prev_delta.assign(static_cast<std::size_t>(batch) * l.in, 0.0);
        for (int bi = 0; bi < batch; ++bi) {
            const double* d = delta.data() + static_cast<std::size_t>(bi) * l.out;
            double* pd = prev_delta.data() + static_cast<std::size_t>(bi) * l.in;
            for (int o = 0; o < l.out; ++o) {
                const double* wrow = l.w.data() + static_cast<std::size_t>(o) * l.in;
                for (int i = 0; i < l.in; ++i) pd[i] += d[o] * wrow[i];
            }
        }
        if (li > 0) {
            const auto& pre_below = cache.pre[li - 1];
            for (std::size_t i = 0; i < prev_delta.size(); ++i)
                if (pre_below[i] <= 0.0) prev_delta[i] = 0.0;  // ReLU gate
        }
        delta.swap(prev_delta);
    }
    g.input = std::move(delta);
    return g;
}

Adam::Adam(const Mlp& net, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(net.layers.size());
    v_.resize(net.layers.size());
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const auto& l = net.layers[li];
        for (auto* s : {&m_[li], &v_[li]}) {
            s->in = l.in;
            s->out = l.out;
            s->w.assign(l.w.size(), 0.0);
            s->b.assign(l.b.size(), 0.0);
        }
    }
}

bool Adam::step(Mlp& net, const Gradients& grads) {
    if (grads.layer.size() != net.layers.size() || m_.size() != net.layers.size())
        throw std::logic_error("adam: shape mismatch");
    for (const auto& gl : grads.layer)
        if (!finite_all(gl.w) || !finite_all(gl.b)) return false;

    step_count_ += 1;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));

    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        auto& l = net.layers[li];
        const auto& gl = grads.layer[li];
        if (gl.w.size() != l.w.size() || gl.b.size() != l.b.size())
            throw std::logic_error("adam: gradient shape mismatch");
        auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                          std::vector<double>& m, std::vector<double>& v) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                p[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        };
        update(l.w, gl.w, m_[li].w, v_[li].w);
        update(l.b, gl.b, m_[li].b, v_[li].b);
    }
    return true;
}

void Adam::save(std::ostream& os) const {
    os.precision(17);
    os << "adam " << lr_ << ' ' << beta1_ << ' ' << beta2_ << ' ' << eps_ << ' '
       << step_count_ << ' ' << m_.size() << '\n';
    for (std::size_t li = 0; li < m_.size(); ++li) {
        write_doubles(os, m_[li].w);
        write_doubles(os, m_[li].b);
        write_doubles(os, v_[li].w);
        write_doubles(os, v_[li].b);
    }
}

void Adam::load(std::istream& is) {
    std::string tag;
    std::size_t n = 0;
    if (!(is >> tag >> lr_ >> beta1_ >> beta2_ >> eps_ >> step_count_ >> n) || tag != "adam")
        throw std::runtime_error("adam load: bad header");
    if (m_.size() != n) throw std::runtime_error("adam load: layer count mismatch");
    for (std::size_t li = 0; li < n; ++li) {
        read_doubles(is, m_[li].w);
        read_doubles(is, m_[li].b);
        read_doubles(is, v_[li].w);
        read_doubles(is, v_[li].b);
    }
}

void polyak_blend(Mlp& target, const Mlp& online, double tau) {
    if (!(tau > 0.0) || !(tau <= 1.0)) throw std::invalid_argument("polyak: tau must lie in (0, 1]");
    if (target.sizes != online.sizes) throw std::logic_error("polyak: shape mismatch");
    for (std::size_t li = 0; li < target.layers.size(); ++li) {
        auto& t = target.layers[li];
        const auto& o = online.layers[li];
        for (std::size_t i = 0; i < t.w.size(); ++i)
            t.w[i] = (1.0 - tau) * t.w[i] + tau * o.w[i];
        for (std::size_t i = 0; i < t.b.size(); ++i)
            t.b[i] = (1.0 - tau) * t.b[i] + tau * o.b[i];
    }
}

void save_mlp(std::ostream& os, const Mlp& net) {
    os << "mlp 1\n";
    os << "sizes " << net.sizes.size();
    for (int s : net.sizes) os << ' ' << s;
    os << '\n';
    os << "output " << (net.output == Mlp::Output::tanh_scaled ? "tanh_scaled" : "linear");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", net.output_scale);
    os << ' ' << buf << '\n';
    for (const auto& l : net.layers) {
        os << "layer " << l.out << ' ' << l.in << '\n';
        write_doubles(os, l.w);
        write_doubles(os, l.b);
    }
}

Mlp load_mlp(std::istream& is) {
    std::string tag;
    int version = 0;
    if (!(is >> tag >> version) || tag != "mlp" || version != 1)
        throw std::runtime_error("mlp load: bad header");

    Mlp net;
    std::size_t n_sizes = 0;
    if (!(is >> tag >> n_sizes) || tag != "sizes" || n_sizes < 2)
        throw std::runtime_error("mlp load: bad sizes");
    net.sizes.resize(n_sizes);
    for (auto& s : net.sizes) is >> s;

    std::string act;
    if (!(is >> tag >> act >> net.output_scale) || tag != "output")
        throw std::runtime_error("mlp load: bad output spec");
    if (act == "tanh_scaled")
        net.output = Mlp::Output::tanh_scaled;
    else if (act == "linear")
        net.output = Mlp::Output::linear;
    else
        throw std::runtime_error("mlp load: unknown activation " + act);

    net.layers.resize(n_sizes - 1);
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        auto& l = net.layers[li];
        if (!(is >> tag >> l.out >> l.in) || tag != "layer")
            throw std::runtime_error("mlp load: bad layer header");
        if (l.in != net.sizes[li] || l.out != net.sizes[li + 1])
            throw std::runtime_error("mlp load: layer shape mismatch");
        l.w.resize(static_cast<std::size_t>(l.in) * l.out);
        l.b.resize(static_cast<std::size_t>(l.out));
        read_doubles(is, l.w);
        read_doubles(is, l.b);
    }
    return net;
}

}  // namespace dolly
