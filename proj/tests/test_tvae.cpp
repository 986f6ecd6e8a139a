#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "synthtab/errors.hpp"
#include "synthtab/ingest.hpp"
#include "synthtab/tvae.hpp"

using namespace synthtab;

namespace {

std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "synthtab_tvae_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

TrainConfig small_config(uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 64;
    cfg.encoder_widths = {16, 16};
    cfg.decoder_widths = {16, 16};
    cfg.embedding_dim = 8;
    cfg.gmm_components = 3;
    cfg.seed = seed;
    return cfg;
}

// one categorical group of two, no continuous slots
std::vector<SlotGroup> single_cat_group() {
    SlotGroup g;
    g.continuous = false;
    g.logit_offset = 0;
    g.logit_count = 2;
    return {g};
}

} // namespace

TEST_CASE("kl term is zero at the standard normal and 0.5 at unit mean") {
    Matrix batch(1, 2);
    batch.at(0, 0) = 1.0; // one-hot target
    Matrix raw(1, 2);
    raw.at(0, 0) = 30.0; // saturated logits: cross-entropy ~ 0
    raw.at(0, 1) = -30.0;

    Matrix mu(1, 1);
    Matrix logvar(1, 1);
    const ElboTerms zero = elbo_loss(batch, raw, mu, logvar, {}, single_cat_group(), 2.0);
    CHECK(zero.kl == doctest::Approx(0.0));

    mu.at(0, 0) = 1.0;
    const ElboTerms unit = elbo_loss(batch, raw, mu, logvar, {}, single_cat_group(), 2.0);
    CHECK(unit.kl == doctest::Approx(0.5));
}

TEST_CASE("kl is non-negative for arbitrary latent tensors") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t rows = 1 + rng.below(4);
        const size_t dims = 1 + rng.below(6);
        Matrix batch(rows, 2);
        for (size_t r = 0; r < rows; ++r) batch.at(r, 0) = 1.0;
        Matrix raw(rows, 2);
        Matrix mu(rows, dims);
        Matrix logvar(rows, dims);
        for (double& v : mu.data) v = rng.uniform(-3.0, 3.0);
        for (double& v : logvar.data) v = rng.uniform(-4.0, 4.0);
        const ElboTerms terms = elbo_loss(batch, raw, mu, logvar, {}, single_cat_group(), 1.0);
        CHECK(terms.kl >= 0.0);
    }
}

TEST_CASE("perfect reconstruction drives the reconstruction term to zero") {
    // continuous slot reproduced exactly with sigma = 1 contributes
    // (x-x)^2/2 + log 1 = 0; saturated correct logits contribute ~0
    std::vector<SlotGroup> groups;
    SlotGroup cont;
    cont.continuous = true;
    cont.alpha_slot = 0;
    cont.scale_index = 0;
    cont.logit_offset = 1;
    cont.logit_count = 2;
    groups.push_back(cont);

    Matrix batch(1, 3);
    batch.at(0, 0) = 0.0; // alpha target; tanh(0) = 0 reproduces it exactly
    batch.at(0, 1) = 1.0;
    Matrix raw(1, 3);
    raw.at(0, 0) = 0.0;
    raw.at(0, 1) = 40.0;
    raw.at(0, 2) = -40.0;
    const std::vector<double> log_scales = {0.0};

    Matrix mu(1, 1);
    Matrix logvar(1, 1);
    const ElboTerms terms = elbo_loss(batch, raw, mu, logvar, log_scales, groups, 2.0);
    CHECK(terms.reconstruction == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(terms.total == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("loss factor multiplies the reconstruction term only") {
    Matrix batch(1, 2);
    batch.at(0, 0) = 1.0;
    Matrix raw(1, 2); // uniform logits: cross-entropy = log 2
    Matrix mu(1, 1);
    mu.at(0, 0) = 1.0;
    Matrix logvar(1, 1);
    const ElboTerms t1 = elbo_loss(batch, raw, mu, logvar, {}, single_cat_group(), 1.0);
    const ElboTerms t2 = elbo_loss(batch, raw, mu, logvar, {}, single_cat_group(), 2.0);
    CHECK(t1.reconstruction == doctest::Approx(std::log(2.0)));
    CHECK(t2.reconstruction == doctest::Approx(std::log(2.0)));
    CHECK(t1.total == doctest::Approx(std::log(2.0) + 0.5));
    CHECK(t2.total == doctest::Approx(2.0 * std::log(2.0) + 0.5));
}

TEST_CASE("full loss gradient passes the finite-difference check") {
    const DataTable table = generate_surrogate(64, 3);
    TrainConfig cfg = small_config(12);
    cfg.encoder_widths = {6, 6};
    cfg.decoder_widths = {6, 6};
    cfg.embedding_dim = 4;
    cfg.gmm_components = 2;
    TvaeModel model = init_model(table, cfg);

    const Matrix encoded = apply(model.transformer, table, ModeAssignment::Argmax);
    Matrix batch(8, encoded.cols);
    for (size_t r = 0; r < 8; ++r) {
        std::copy(encoded.row(r).begin(), encoded.row(r).end(), batch.row(r).begin());
    }
    Matrix noise(8, cfg.embedding_dim);
    Rng rng(55);
    for (double& v : noise.data) v = rng.normal();
    REQUIRE(min_relu_preactivation_gap(model, batch, noise) > 2e-4);

    const TvaeStep step = loss_and_gradients(model, batch, noise);
    auto params = model_params(model);
    auto loss = [&]() { return loss_only(model, batch, noise); };
    const double err = gradient_check(loss, params, step.grads, 1e-5);
    CHECK(err < 1e-4);
}

TEST_CASE("decoder softmax gradients sum to zero per group") {
    // softmax(logits) - onehot sums to 0 over each group: a valid simplex
    const DataTable table = generate_surrogate(32, 5);
    TrainConfig cfg = small_config(3);
    cfg.gmm_components = 2;
    TvaeModel model = init_model(table, cfg);
    const Matrix encoded = apply(model.transformer, table, ModeAssignment::Argmax);
    Matrix batch(4, encoded.cols);
    for (size_t r = 0; r < 4; ++r) {
        std::copy(encoded.row(r).begin(), encoded.row(r).end(), batch.row(r).begin());
    }
    Matrix noise(4, cfg.embedding_dim);
    Rng rng(9);
    for (double& v : noise.data) v = rng.normal();

    // the output-layer bias gradient aggregates softmax-minus-target over the
    // batch, so each group's slice must sum to ~0
    const TvaeStep step = loss_and_gradients(model, batch, noise);
    const auto& out_bias_grad = step.grads[step.grads.size() - 2];
    for (const SlotGroup& g : model.slot_groups()) {
        double acc = 0.0;
        for (size_t j = 0; j < g.logit_count; ++j) acc += out_bias_grad[g.logit_offset + j];
        CHECK(std::abs(acc) < 1e-9);
    }
}

TEST_CASE("zero epochs yields an initialized model that still samples") {
    const DataTable table = generate_surrogate(100, 4);
    TrainConfig cfg = small_config(7);
    cfg.epochs = 0;
    auto [model, trace] = train_tvae(table, cfg);
    CHECK(trace.total.empty());
    const DataTable synth = sample(model, 20, 1);
    CHECK(synth.rows() == 20);
    CHECK(synth.schema == table.schema);
    synth.validate();
}

TEST_CASE("training is bit-deterministic per seed") {
    const DataTable table = generate_surrogate(200, 6);
    auto [m1, t1] = train_tvae(table, small_config(42));
    auto [m2, t2] = train_tvae(table, small_config(42));
    const auto p1 = model_params(m1);
    const auto p2 = model_params(m2);
    REQUIRE(p1.size() == p2.size());
    for (size_t i = 0; i < p1.size(); ++i) {
        REQUIRE(p1[i].size() == p2[i].size());
        for (size_t j = 0; j < p1[i].size(); ++j) CHECK(p1[i][j] == p2[i][j]);
    }
    CHECK(t1.total == t2.total);

    auto [m3, t3] = train_tvae(table, small_config(43));
    bool any_diff = false;
    const auto p3 = model_params(m3);
    for (size_t i = 0; i < p1.size() && !any_diff; ++i) {
        for (size_t j = 0; j < p1[i].size(); ++j) {
            if (p1[i][j] != p3[i][j]) {
                any_diff = true;
                break;
            }
        }
    }
    CHECK(any_diff);
}

TEST_CASE("loss trace records every epoch with non-negative kl") {
    const DataTable table = generate_surrogate(300, 10);
    TrainConfig cfg = small_config(5);
    cfg.epochs = 4;
    auto [model, trace] = train_tvae(table, cfg);
    CHECK(trace.total.size() == 4);
    CHECK(trace.reconstruction.size() == 4);
    CHECK(trace.kl.size() == 4);
    for (double k : trace.kl) CHECK(k >= 0.0);
}

TEST_CASE("training loss decreases on the surrogate") {
    const DataTable table = generate_surrogate(2000, 18);
    TrainConfig cfg = small_config(2);
    cfg.epochs = 10;
    cfg.batch_size = 250;
    auto [model, trace] = train_tvae(table, cfg);
    CHECK(trace.total.back() < trace.total.front());
}

TEST_CASE("sampling is deterministic, schema-valid and size-exact") {
    const DataTable table = generate_surrogate(300, 2);
    auto [model, trace] = train_tvae(table, small_config(8));

    const DataTable empty = sample(model, 0, 9);
    CHECK(empty.rows() == 0);
    CHECK(empty.schema == table.schema);

    const DataTable a = sample(model, 123, 9);
    const DataTable b = sample(model, 123, 9);
    CHECK(a == b);
    CHECK(a.rows() == 123);
    a.validate();
    for (size_t ci = 0; ci < a.schema.size(); ++ci) {
        if (a.schema.columns[ci].kind == ColumnKind::Continuous) {
            for (double v : a.reals[ci]) CHECK(std::isfinite(v));
        }
    }

    const DataTable c = sample(model, 123, 10);
    CHECK(!(a == c));
}

TEST_CASE("sampling scales to the full published row count") {
    const DataTable table = generate_surrogate(200, 27);
    TrainConfig cfg = small_config(3);
    cfg.epochs = 0;
    auto [model, trace] = train_tvae(table, cfg);
    const DataTable synth = sample(model, 144036, 5);
    CHECK(synth.rows() == 144036);
    synth.validate();
}

TEST_CASE("save/load reproduces sampling bit-exactly") {
    const DataTable table = generate_surrogate(200, 14);
    auto [model, trace] = train_tvae(table, small_config(4));
    const std::string path = temp_path("model.tvae");
    save_model(model, path);
    const TvaeModel loaded = load_model(path);
    const DataTable a = sample(model, 64, 77);
    const DataTable b = sample(loaded, 64, 77);
    CHECK(a == b);
}

TEST_CASE("model loader rejects foreign and damaged files") {
    const std::string not_model = temp_path("not_model.bin");
    {
        std::ofstream out(not_model, std::ios::binary);
        out << "GIF89a definitely not a model";
    }
    CHECK_THROWS_WITH_AS(load_model(not_model), doctest::Contains("not a model file"),
                         FormatError);

    // future format version: version bytes patched to 2
    const DataTable table = generate_surrogate(100, 1);
    TrainConfig cfg = small_config(1);
    cfg.epochs = 0;
    auto [model, trace] = train_tvae(table, cfg);
    const std::string future = temp_path("future.tvae");
    save_model(model, future);
    {
        std::fstream patch(future, std::ios::in | std::ios::out | std::ios::binary);
        patch.seekp(4);
        const char version2[2] = {2, 0};
        patch.write(version2, 2);
    }
    CHECK_THROWS_WITH_AS(load_model(future), doctest::Contains("version 2"), FormatError);

    // truncation
    const std::string truncated = temp_path("truncated.tvae");
    {
        std::ifstream in(future, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        bytes[4] = 1; // restore version
        bytes.resize(bytes.size() / 2);
        std::ofstream out(truncated, std::ios::binary);
        out << bytes;
    }
    CHECK_THROWS_AS(load_model(truncated), FormatError);
}

TEST_CASE("train rejects an empty table") {
    DataTable empty = DataTable::empty(processed_schema());
    empty.code_maps[empty.schema.index_of("road_encoded")] = {"asphalt"};
    CHECK_THROWS_AS(train_tvae(empty, small_config(1)), ValidationError);
}
