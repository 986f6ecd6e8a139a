#include "synthtab/nn.hpp"

#include <algorithm>
#include <cmath>

#include "synthtab/errors.hpp"

namespace synthtab {

namespace {

double activate(double x, Activation a) {
    switch (a) {
        case Activation::ReLU: return x > 0.0 ? x : 0.0;
        case Activation::Tanh: return std::tanh(x);
        case Activation::Identity: return x;
    }
    return x;
}

double activate_grad(double pre, Activation a) {
    switch (a) {
        case Activation::ReLU: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(pre);
            return 1.0 - t * t;
        }
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

} // namespace

DenseLayer make_layer(size_t in, size_t out, Activation act, Rng& rng) {
    DenseLayer layer;
    layer.weights = Matrix(out, in);
    layer.bias.assign(out, 0.0);
    layer.activation = act;
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : layer.weights.data) w = rng.uniform(-bound, bound);
    return layer;
}

Matrix forward(std::span<const DenseLayer> layers, const Matrix& input, ForwardCache* cache) {
    if (input.rows == 0) throw ValidationError("forward: empty batch");
    if (cache) {
        cache->input = input;
        cache->pre.clear();
        cache->post.clear();
    }
    Matrix cur = input;
    for (size_t li = 0; li < layers.size(); ++li) {
        const DenseLayer& layer = layers[li];
        if (cur.cols != layer.in_dim()) {
            throw ValidationError("forward: layer " + std::to_string(li) + " expects " +
                                  std::to_string(layer.in_dim()) + " inputs, got " +
                                  std::to_string(cur.cols));
        }
        Matrix pre = matmul_transb(cur, layer.weights);
        for (size_t i = 0; i < pre.rows; ++i) {
            double* row = pre.data.data() + i * pre.cols;
            for (size_t j = 0; j < pre.cols; ++j) row[j] += layer.bias[j];
        }
        Matrix post(pre.rows, pre.cols);
        for (size_t i = 0; i < pre.data.size(); ++i) {
            post.data[i] = activate(pre.data[i], layer.activation);
        }
        if (cache) {
            cache->pre.push_back(pre);
            cache->post.push_back(post);
        }
        cur = std::move(post);
    }
    return cur;
}

BackwardResult backward(std::span<const DenseLayer> layers, const ForwardCache& cache,
                        const Matrix& output_grad) {
    if (cache.pre.size() != layers.size()) {
        throw ValidationError("backward: cache holds " + std::to_string(cache.pre.size()) +
                              " layers, stack has " + std::to_string(layers.size()));
    }
    if (!layers.empty()) {
        const Matrix& last = cache.pre.back();
        if (output_grad.rows != last.rows || output_grad.cols != last.cols) {
            throw ValidationError("backward: output gradient shape does not match cached forward");
        }
    }
    BackwardResult result;
    result.layers.resize(layers.size());

    Matrix delta = output_grad;
    for (size_t li = layers.size(); li-- > 0;) {
        const DenseLayer& layer = layers[li];
        const Matrix& pre = cache.pre[li];
        // delta * act'(pre)
        for (size_t i = 0; i < delta.data.size(); ++i) {
            delta.data[i] *= activate_grad(pre.data[i], layer.activation);
        }
        const Matrix& in = cache.layer_input(li);
        LayerGrads g;
        g.weights = matmul_transa(delta, in); // delta' * input = out x in
        g.bias.assign(layer.out_dim(), 0.0);
        for (size_t i = 0; i < delta.rows; ++i) {
            const double* row = delta.data.data() + i * delta.cols;
            for (size_t j = 0; j < delta.cols; ++j) g.bias[j] += row[j];
        }
        result.layers[li] = std::move(g);
        delta = matmul(delta, layer.weights); // batch x in
    }
    result.input = std::move(delta);
    return result;
}

void adam_init(AdamState& state, const std::vector<std::span<double>>& params) {
    state.step = 0;
    state.m.clear();
    state.v.clear();
    for (const auto& p : params) {
        state.m.emplace_back(p.size(), 0.0);
        state.v.emplace_back(p.size(), 0.0);
    }
}

void adam_step(const std::vector<std::span<double>>& params,
               const std::vector<std::span<const double>>& grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw ValidationError("adam_step: parameter/gradient/state count mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t t = 0; t < params.size(); ++t) {
        auto p = params[t];
        auto g = grads[t];
        if (p.size() != g.size() || p.size() != state.m[t].size()) {
            throw ValidationError("adam_step: tensor " + std::to_string(t) + " shape mismatch");
        }
        auto& m = state.m[t];
        auto& v = state.v[t];
        for (size_t i = 0; i < p.size(); ++i) {
            double gi = g[i];
            if (!std::isfinite(gi)) {
                throw NumericError("adam_step: non-finite gradient in tensor " +
                                   std::to_string(t) + " entry " + std::to_string(i));
            }
            gi += state.weight_decay * p[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

double gradient_check(const std::function<double()>& loss,
                      const std::vector<std::span<double>>& params,
                      const std::vector<std::vector<double>>& analytic_grads, double epsilon) {
    if (params.size() != analytic_grads.size()) {
        throw ValidationError("gradient_check: parameter/gradient count mismatch");
    }
    double worst = 0.0;
    for (size_t t = 0; t < params.size(); ++t) {
        auto p = params[t];
        const auto& g = analytic_grads[t];
        for (size_t i = 0; i < p.size(); ++i) {
            const double saved = p[i];
            p[i] = saved + epsilon;
            const double up = loss();
            p[i] = saved - epsilon;
            const double down = loss();
            p[i] = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double analytic = g[i];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(analytic - numeric) / denom);
        }
    }
    return worst;
}

} // namespace synthtab
