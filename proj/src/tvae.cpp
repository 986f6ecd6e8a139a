#include "synthtab/tvae.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "synthtab/errors.hpp"

namespace synthtab {

namespace {

constexpr uint16_t kModelFormatVersion = 1;
constexpr double kLogScaleClamp = 4.0;

void softmax_row(const double* logits, size_t count, double* out) {
    double best = logits[0];
    for (size_t j = 1; j < count; ++j) best = std::max(best, logits[j]);
    double denom = 0.0;
    for (size_t j = 0; j < count; ++j) {
        out[j] = std::exp(logits[j] - best);
        denom += out[j];
    }
    for (size_t j = 0; j < count; ++j) out[j] /= denom;
}

double log_sum_exp_row(const double* logits, size_t count) {
    double best = logits[0];
    for (size_t j = 1; j < count; ++j) best = std::max(best, logits[j]);
    double acc = 0.0;
    for (size_t j = 0; j < count; ++j) acc += std::exp(logits[j] - best);
    return best + std::log(acc);
}

} // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw ValidationError("train config: batch size must be >= 1");
    if (embedding_dim < 1) throw ValidationError("train config: embedding dimension must be >= 1");
    if (gmm_components < 1) throw ValidationError("train config: mixture components must be >= 1");
    if (!(loss_factor > 0.0)) throw ValidationError("train config: loss factor must be > 0");
    if (!(learning_rate > 0.0)) throw ValidationError("train config: learning rate must be > 0");
    if (l2_scale < 0.0) throw ValidationError("train config: l2 scale must be >= 0");
    for (size_t w : encoder_widths) {
        if (w < 1) throw ValidationError("train config: encoder widths must be >= 1");
    }
    for (size_t w : decoder_widths) {
        if (w < 1) throw ValidationError("train config: decoder widths must be >= 1");
    }
}

std::vector<SlotGroup> TvaeModel::slot_groups() const {
    std::vector<SlotGroup> groups;
    size_t off = 0;
    size_t scale = 0;
    for (const auto& enc : transformer.encodings) {
        SlotGroup g;
        if (enc.kind == ColumnKind::Continuous) {
            g.continuous = true;
            g.alpha_slot = off;
            g.scale_index = scale++;
            g.logit_offset = off + 1;
            g.logit_count = enc.gmm.k();
        } else {
            g.continuous = false;
            g.logit_offset = off;
            g.logit_count = enc.categories.size();
        }
        groups.push_back(g);
        off += enc.width();
    }
    return groups;
}

ElboTerms elbo_loss(const Matrix& batch, const Matrix& decoder_raw, const Matrix& mu,
                    const Matrix& logvar, std::span<const double> log_scales,
                    std::span<const SlotGroup> groups, double loss_factor) {
    if (batch.rows != decoder_raw.rows || batch.cols != decoder_raw.cols) {
        throw ValidationError("elbo_loss: batch/decoder shape mismatch");
    }
    if (mu.rows != batch.rows || logvar.rows != batch.rows || mu.cols != logvar.cols) {
        throw ValidationError("elbo_loss: latent shape mismatch");
    }
    const size_t n = batch.rows;
    const double inv_n = 1.0 / static_cast<double>(n);

    double kl = 0.0;
    for (size_t i = 0; i < mu.data.size(); ++i) {
        const double m = mu.data[i];
        const double lv = logvar.data[i];
        // 0.5 * (mu^2 + e^lv - 1 - lv); the expm1 form keeps it non-negative in
        // floating point as well
        kl += 0.5 * (m * m + (std::expm1(lv) - lv));
    }
    kl *= inv_n;

    double rec = 0.0;
    std::vector<double> probs;
    for (size_t r = 0; r < n; ++r) {
        const double* target = batch.data.data() + r * batch.cols;
        const double* raw = decoder_raw.data.data() + r * decoder_raw.cols;
        for (const SlotGroup& g : groups) {
            if (g.continuous) {
                const double s = log_scales[g.scale_index];
                const double sigma = std::exp(s);
                const double xhat = std::tanh(raw[g.alpha_slot]);
                const double d = target[g.alpha_slot] - xhat;
                rec += d * d / (2.0 * sigma * sigma) + s;
            }
            const double lse = log_sum_exp_row(raw + g.logit_offset, g.logit_count);
            double dot = 0.0;
            for (size_t j = 0; j < g.logit_count; ++j) {
                dot += target[g.logit_offset + j] * raw[g.logit_offset + j];
            }
            rec += lse - dot;
        }
    }
    rec *= inv_n;

    ElboTerms terms;
    terms.reconstruction = rec;
    terms.kl = kl;
    terms.total = loss_factor * rec + kl;
    if (!std::isfinite(terms.total)) throw NumericError("elbo_loss: non-finite loss");
    return terms;
}

TvaeModel init_model(const DataTable& table, const TrainConfig& config) {
    config.validate();
    if (table.rows() == 0) throw ValidationError("init_model: empty table");
    TvaeModel model;
    model.config = config;
    model.transformer = fit_transformer(table, config.gmm_components, config.seed);
    const size_t width = model.transformer.width();

    Rng rng(mix_key(config.seed, 0x696e6974));
    size_t in = width;
    for (size_t w : config.encoder_widths) {
        model.encoder.push_back(make_layer(in, w, Activation::ReLU, rng));
        in = w;
    }
    model.mu_head = make_layer(in, config.embedding_dim, Activation::Identity, rng);
    model.logvar_head = make_layer(in, config.embedding_dim, Activation::Identity, rng);
    in = config.embedding_dim;
    for (size_t w : config.decoder_widths) {
        model.decoder.push_back(make_layer(in, w, Activation::ReLU, rng));
        in = w;
    }
    model.decoder.push_back(make_layer(in, width, Activation::Identity, rng));

    size_t continuous = 0;
    for (const auto& enc : model.transformer.encodings) {
        if (enc.kind == ColumnKind::Continuous) ++continuous;
    }
    model.log_scales.assign(continuous, 0.0);
    return model;
}

std::vector<std::span<double>> model_params(TvaeModel& model) {
    std::vector<std::span<double>> params;
    auto push_layer = [&](DenseLayer& l) {
        params.emplace_back(l.weights.data);
        params.emplace_back(l.bias);
    };
    for (auto& l : model.encoder) push_layer(l);
    push_layer(model.mu_head);
    push_layer(model.logvar_head);
    for (auto& l : model.decoder) push_layer(l);
    params.emplace_back(model.log_scales);
    return params;
}

std::vector<std::span<const double>> model_params(const TvaeModel& model) {
    std::vector<std::span<const double>> params;
    auto push_layer = [&](const DenseLayer& l) {
        params.emplace_back(l.weights.data);
        params.emplace_back(l.bias);
    };
    for (const auto& l : model.encoder) push_layer(l);
    push_layer(model.mu_head);
    push_layer(model.logvar_head);
    for (const auto& l : model.decoder) push_layer(l);
    params.emplace_back(model.log_scales);
    return params;
}

namespace {

struct TvaePass {
    ForwardCache enc_cache;
    ForwardCache mu_cache;
    ForwardCache lv_cache;
    ForwardCache dec_cache;
    Matrix mu, logvar, z;
    Matrix decoder_raw;
};

TvaePass forward_pass(const TvaeModel& model, const Matrix& batch, const Matrix& noise) {
    if (batch.cols != model.model_width()) {
        throw ValidationError("tvae forward: batch width " + std::to_string(batch.cols) +
                              " does not match model width " +
                              std::to_string(model.model_width()));
    }
    if (noise.rows != batch.rows || noise.cols != model.config.embedding_dim) {
        throw ValidationError("tvae forward: noise shape mismatch");
    }
    TvaePass pass;
    const Matrix h = forward(model.encoder, batch, &pass.enc_cache);
    pass.mu = forward(std::span<const DenseLayer>(&model.mu_head, 1), h, &pass.mu_cache);
    pass.logvar = forward(std::span<const DenseLayer>(&model.logvar_head, 1), h, &pass.lv_cache);
    pass.z = Matrix(batch.rows, model.config.embedding_dim);
    for (size_t i = 0; i < pass.z.data.size(); ++i) {
        pass.z.data[i] = pass.mu.data[i] + std::exp(0.5 * pass.logvar.data[i]) * noise.data[i];
    }
    pass.decoder_raw = forward(model.decoder, pass.z, &pass.dec_cache);
    return pass;
}

} // namespace

double loss_only(const TvaeModel& model, const Matrix& batch, const Matrix& noise) {
    const TvaePass pass = forward_pass(model, batch, noise);
    const auto groups = model.slot_groups();
    return elbo_loss(batch, pass.decoder_raw, pass.mu, pass.logvar, model.log_scales, groups,
                     model.config.loss_factor)
        .total;
}

double min_relu_preactivation_gap(const TvaeModel& model, const Matrix& batch,
                                  const Matrix& noise) {
    const TvaePass pass = forward_pass(model, batch, noise);
    double gap = 1e300;
    auto scan = [&](std::span<const DenseLayer> layers, const ForwardCache& cache) {
        for (size_t li = 0; li < layers.size(); ++li) {
            if (layers[li].activation != Activation::ReLU) continue;
            for (double pre : cache.pre[li].data) gap = std::min(gap, std::abs(pre));
        }
    };
    scan(model.encoder, pass.enc_cache);
    scan(model.decoder, pass.dec_cache);
    return gap;
}

TvaeStep loss_and_gradients(const TvaeModel& model, const Matrix& batch, const Matrix& noise) {
    const TvaePass pass = forward_pass(model, batch, noise);
    const auto groups = model.slot_groups();
    TvaeStep step;
    step.terms = elbo_loss(batch, pass.decoder_raw, pass.mu, pass.logvar, model.log_scales,
                           groups, model.config.loss_factor);

    const size_t n = batch.rows;
    const double lf_n = model.config.loss_factor / static_cast<double>(n);
    const double inv_n = 1.0 / static_cast<double>(n);

    // reconstruction gradient w.r.t. raw decoder outputs, plus log-scale grads
    Matrix draw(pass.decoder_raw.rows, pass.decoder_raw.cols);
    std::vector<double> dscales(model.log_scales.size(), 0.0);
    std::vector<double> probs;
    for (size_t r = 0; r < n; ++r) {
        const double* target = batch.data.data() + r * batch.cols;
        const double* raw = pass.decoder_raw.data.data() + r * pass.decoder_raw.cols;
        double* out = draw.data.data() + r * draw.cols;
        for (const SlotGroup& g : groups) {
            if (g.continuous) {
                const double s = model.log_scales[g.scale_index];
                const double sigma2 = std::exp(2.0 * s);
                const double xhat = std::tanh(raw[g.alpha_slot]);
                const double d = xhat - target[g.alpha_slot];
                out[g.alpha_slot] = lf_n * d * (1.0 - xhat * xhat) / sigma2;
                dscales[g.scale_index] += lf_n * (1.0 - d * d / sigma2);
            }
            probs.resize(g.logit_count);
            softmax_row(raw + g.logit_offset, g.logit_count, probs.data());
            for (size_t j = 0; j < g.logit_count; ++j) {
                out[g.logit_offset + j] = lf_n * (probs[j] - target[g.logit_offset + j]);
            }
        }
    }

    BackwardResult dec_back = backward(model.decoder, pass.dec_cache, draw);

    // z = mu + exp(lv/2)*eps, plus the KL terms on mu and logvar directly
    Matrix dmu(pass.mu.rows, pass.mu.cols);
    Matrix dlv(pass.logvar.rows, pass.logvar.cols);
    for (size_t i = 0; i < dmu.data.size(); ++i) {
        const double gz = dec_back.input.data[i];
        dmu.data[i] = gz + inv_n * pass.mu.data[i];
        dlv.data[i] = gz * 0.5 * std::exp(0.5 * pass.logvar.data[i]) * noise.data[i] +
                      inv_n * 0.5 * std::expm1(pass.logvar.data[i]);
    }

    BackwardResult mu_back =
        backward(std::span<const DenseLayer>(&model.mu_head, 1), pass.mu_cache, dmu);
    BackwardResult lv_back =
        backward(std::span<const DenseLayer>(&model.logvar_head, 1), pass.lv_cache, dlv);
    Matrix dh = mu_back.input;
    add_inplace(dh, lv_back.input);
    BackwardResult enc_back = backward(model.encoder, pass.enc_cache, dh);

    auto push_layer = [&](const LayerGrads& g) {
        step.grads.push_back(g.weights.data);
        step.grads.push_back(g.bias);
    };
    for (const auto& g : enc_back.layers) push_layer(g);
    push_layer(mu_back.layers[0]);
    push_layer(lv_back.layers[0]);
    for (const auto& g : dec_back.layers) push_layer(g);
    step.grads.push_back(std::move(dscales));
    return step;
}

std::pair<TvaeModel, LossTrace> train_tvae(const DataTable& table, const TrainConfig& config) {
    TvaeModel model = init_model(table, config);
    LossTrace trace;
    if (config.epochs == 0) return {std::move(model), std::move(trace)};

    const Matrix encoded = apply(model.transformer, table, ModeAssignment::Sampled,
                                 mix_key(config.seed, 0x746d6f64));
    const size_t n = encoded.rows;
    const size_t batches = (n + config.batch_size - 1) / config.batch_size;

    AdamState adam;
    adam.learning_rate = config.learning_rate;
    adam.weight_decay = config.l2_scale;
    auto params = model_params(model);
    adam_init(adam, params);

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(mix_key(config.seed ^ 0x73687566ull, epoch));
        shuffle_rng.shuffle(order);

        double sum_total = 0.0, sum_rec = 0.0, sum_kl = 0.0;
        for (size_t b = 0; b < batches; ++b) {
            const size_t lo = b * config.batch_size;
            const size_t hi = std::min(n, lo + config.batch_size);
            const size_t rows = hi - lo;
            Matrix batch(rows, encoded.cols);
            for (size_t r = 0; r < rows; ++r) {
                const double* src = encoded.data.data() + order[lo + r] * encoded.cols;
                std::copy(src, src + encoded.cols, batch.data.data() + r * batch.cols);
            }
            Matrix noise(rows, config.embedding_dim);
            Rng noise_rng(mix_key(config.seed ^ 0x6e6f6973ull, epoch, b));
            for (double& v : noise.data) v = noise_rng.normal();

            TvaeStep step;
            try {
                step = loss_and_gradients(model, batch, noise);
                std::vector<std::span<const double>> grad_views;
                grad_views.reserve(step.grads.size());
                for (const auto& g : step.grads) grad_views.emplace_back(g);
                adam_step(params, grad_views, adam);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(b) + ")");
            }
            for (double& s : model.log_scales) {
                s = std::clamp(s, -kLogScaleClamp, kLogScaleClamp);
            }

            const double w = static_cast<double>(rows);
            sum_total += step.terms.total * w;
            sum_rec += step.terms.reconstruction * w;
            sum_kl += step.terms.kl * w;
        }
        trace.total.push_back(sum_total / static_cast<double>(n));
        trace.reconstruction.push_back(sum_rec / static_cast<double>(n));
        trace.kl.push_back(sum_kl / static_cast<double>(n));
    }
    return {std::move(model), std::move(trace)};
}

DataTable sample(const TvaeModel& model, size_t n, uint64_t seed) {
    if (n == 0) {
        DataTable empty = DataTable::empty(model.transformer.schema);
        for (size_t ci = 0; ci < model.transformer.encodings.size(); ++ci) {
            if (model.transformer.encodings[ci].kind == ColumnKind::Categorical) {
                empty.code_maps[ci] = model.transformer.encodings[ci].categories;
            }
        }
        return empty;
    }
    Rng rng(mix_key(seed, 0x73616d70));
    const size_t width = model.model_width();
    const auto groups = model.slot_groups();

    DataTable out = DataTable::empty(model.transformer.schema);
    // decode in blocks to bound memory on large sample counts
    const size_t block = 8192;
    for (size_t done = 0; done < n; done += block) {
        const size_t rows = std::min(block, n - done);
        Matrix z(rows, model.config.embedding_dim);
        for (double& v : z.data) v = rng.normal();
        Matrix raw = forward(model.decoder, z);
        ensure_finite(raw, "sample: decoder output");
        Matrix modelspace(rows, width);
        for (size_t r = 0; r < rows; ++r) {
            const double* src = raw.data.data() + r * raw.cols;
            double* dst = modelspace.data.data() + r * modelspace.cols;
            for (const SlotGroup& g : groups) {
                if (g.continuous) dst[g.alpha_slot] = std::tanh(src[g.alpha_slot]);
                for (size_t j = 0; j < g.logit_count; ++j) {
                    dst[g.logit_offset + j] = src[g.logit_offset + j];
                }
            }
        }
        DataTable chunk = invert(model.transformer, modelspace);
        for (size_t ci = 0; ci < out.schema.size(); ++ci) {
            if (out.schema.columns[ci].kind == ColumnKind::Continuous) {
                out.reals[ci].insert(out.reals[ci].end(), chunk.reals[ci].begin(),
                                     chunk.reals[ci].end());
            } else {
                out.code_maps[ci] = chunk.code_maps[ci];
                out.codes[ci].insert(out.codes[ci].end(), chunk.codes[ci].begin(),
                                     chunk.codes[ci].end());
            }
        }
    }
    out.validate();
    return out;
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
    return nlohmann::json{{"epochs", c.epochs},
                          {"batch_size", c.batch_size},
                          {"encoder_widths", c.encoder_widths},
                          {"decoder_widths", c.decoder_widths},
                          {"embedding_dim", c.embedding_dim},
                          {"l2_scale", c.l2_scale},
                          {"loss_factor", c.loss_factor},
                          {"learning_rate", c.learning_rate},
                          {"seed", c.seed},
                          {"gmm_components", c.gmm_components}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.epochs = j.at("epochs").get<size_t>();
    c.batch_size = j.at("batch_size").get<size_t>();
    c.encoder_widths = j.at("encoder_widths").get<std::vector<size_t>>();
    c.decoder_widths = j.at("decoder_widths").get<std::vector<size_t>>();
    c.embedding_dim = j.at("embedding_dim").get<size_t>();
    c.l2_scale = j.at("l2_scale").get<double>();
    c.loss_factor = j.at("loss_factor").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.seed = j.at("seed").get<uint64_t>();
    c.gmm_components = j.at("gmm_components").get<size_t>();
    return c;
}

namespace {

void write_u16(std::ofstream& out, uint16_t v) {
    const unsigned char bytes[2] = {static_cast<unsigned char>(v & 0xff),
                                    static_cast<unsigned char>((v >> 8) & 0xff)};
    out.write(reinterpret_cast<const char*>(bytes), 2);
}

void write_u64(std::ofstream& out, uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

uint16_t read_u16(std::ifstream& in, const std::string& path) {
    unsigned char bytes[2];
    if (!in.read(reinterpret_cast<char*>(bytes), 2)) {
        throw FormatError(path + ": truncated model file");
    }
    return static_cast<uint16_t>(bytes[0] | (bytes[1] << 8));
}

uint64_t read_u64(std::ifstream& in, const std::string& path) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
        throw FormatError(path + ": truncated model file");
    }
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
    return v;
}

void write_tensor(std::ofstream& out, std::span<const double> t) {
    write_u64(out, t.size());
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
}

std::vector<double> read_tensor(std::ifstream& in, const std::string& path) {
    const uint64_t count = read_u64(in, path);
    std::vector<double> t(count);
    if (!in.read(reinterpret_cast<char*>(t.data()),
                 static_cast<std::streamsize>(count * sizeof(double)))) {
        throw FormatError(path + ": truncated model file");
    }
    return t;
}

} // namespace

void save_model(const TvaeModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write("TVAE", 4);
    write_u16(out, kModelFormatVersion);

    nlohmann::json header{{"config", train_config_to_json(model.config)},
                          {"transformer", transformer_to_json(model.transformer)},
                          {"log_scale_count", model.log_scales.size()}};
    const std::string header_text = header.dump();
    write_u64(out, header_text.size());
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));

    for (const auto& p : model_params(model)) write_tensor(out, p);
    if (!out) throw IoError("write failed: " + path);
}

TvaeModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "TVAE", 4) != 0) {
        throw FormatError(path + ": not a model file");
    }
    const uint16_t version = read_u16(in, path);
    if (version != kModelFormatVersion) {
        throw FormatError(path + ": model file format version " + std::to_string(version) +
                          " is not the supported version " + std::to_string(kModelFormatVersion));
    }
    const uint64_t header_len = read_u64(in, path);
    std::string header_text(header_len, '\0');
    if (!in.read(header_text.data(), static_cast<std::streamsize>(header_len))) {
        throw FormatError(path + ": truncated model file");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": bad model header: " + e.what());
    }

    TvaeModel model;
    model.config = train_config_from_json(header.at("config"));
    model.config.validate();
    model.transformer = transformer_from_json(header.at("transformer"));

    const size_t width = model.transformer.width();
    Rng dummy(0);
    size_t in_dim = width;
    for (size_t w : model.config.encoder_widths) {
        model.encoder.push_back(make_layer(in_dim, w, Activation::ReLU, dummy));
        in_dim = w;
    }
    model.mu_head = make_layer(in_dim, model.config.embedding_dim, Activation::Identity, dummy);
    model.logvar_head =
        make_layer(in_dim, model.config.embedding_dim, Activation::Identity, dummy);
    in_dim = model.config.embedding_dim;
    for (size_t w : model.config.decoder_widths) {
        model.decoder.push_back(make_layer(in_dim, w, Activation::ReLU, dummy));
        in_dim = w;
    }
    model.decoder.push_back(make_layer(in_dim, width, Activation::Identity, dummy));
    model.log_scales.assign(header.at("log_scale_count").get<size_t>(), 0.0);

    for (auto& p : model_params(model)) {
        const std::vector<double> t = read_tensor(in, path);
        if (t.size() != p.size()) {
            throw FormatError(path + ": tensor size " + std::to_string(t.size()) +
                              " does not match expected " + std::to_string(p.size()));
        }
        std::copy(t.begin(), t.end(), p.begin());
    }
    return model;
}

} // namespace synthtab
