#include <doctest.h>

#include "synthtab/config.hpp"
#include "synthtab/errors.hpp"

using namespace synthtab;

namespace {

const char* kSurrogateConfig = R"(
# surrogate pipeline
[paths]
source = "surrogate"
out_dir = "out"

[surrogate]
rows = 600
seed = 7

[train]
epochs = 3
batch_size = 128
encoder = [16, 16]
decoder = [16, 16]
embedding = 8
l2_scale = 1e-5
loss_factor = 2
learning_rate = 0.001
seed = 42
gmm_components = 3

[split]
fraction = 0.2
seed = 17

[sample]
rows = 0
seed = 99

[classifiers]
specs = ["knn", "tree"]
knn_k = 5

[privacy]
grid_cell_degrees = 0.001
)";

} // namespace

TEST_CASE("a full surrogate config parses with defaults applied") {
    const PipelineConfig cfg = PipelineConfig::from_text(kSurrogateConfig);
    CHECK(cfg.source == "surrogate");
    CHECK(cfg.surrogate_rows == 600);
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.train.encoder_widths == std::vector<size_t>{16, 16});
    CHECK(cfg.train.loss_factor == 2.0);
    CHECK(cfg.train.l2_scale == doctest::Approx(1e-5));
    CHECK(cfg.holdout_fraction == doctest::Approx(0.2));
    CHECK(cfg.classifier_specs.size() == 2);
    CHECK(cfg.classifier_specs[0].kind == ClassifierSpec::Kind::Knn);
    CHECK(cfg.resolved_model_file() == "out/model.tvae");
    CHECK(!cfg.anonymize.enabled);
}

TEST_CASE("defaults mirror the published hyperparameters") {
    const PipelineConfig cfg = PipelineConfig::from_text(
        "[paths]\nsource = \"surrogate\"\n");
    CHECK(cfg.train.epochs == 200);
    CHECK(cfg.train.batch_size == 500);
    CHECK(cfg.train.encoder_widths == std::vector<size_t>{128, 128});
    CHECK(cfg.train.decoder_widths == std::vector<size_t>{128, 128});
    CHECK(cfg.train.embedding_dim == 128);
    CHECK(cfg.train.l2_scale == doctest::Approx(1e-5));
    CHECK(cfg.train.loss_factor == 2.0);
}

TEST_CASE("unknown keys and sections are rejected") {
    CHECK_THROWS_WITH_AS(
        PipelineConfig::from_text("[paths]\nsource = \"surrogate\"\ntypo_key = 3\n"),
        doctest::Contains("typo_key"), ValidationError);
    CHECK_THROWS_WITH_AS(PipelineConfig::from_text("[mystery]\nx = 1\n"),
                         doctest::Contains("mystery"), ValidationError);
}

TEST_CASE("statically checkable mistakes fail at load time") {
    CHECK_THROWS_AS(PipelineConfig::from_text("[paths]\nsource = \"csv\"\n"), ValidationError);
    CHECK_THROWS_AS(PipelineConfig::from_text(
                        "[paths]\nsource = \"surrogate\"\n[split]\nfraction = 1.5\n"),
                    ValidationError);
    CHECK_THROWS_AS(PipelineConfig::from_text(
                        "[paths]\nsource = \"surrogate\"\n[train]\nloss_factor = 0\n"),
                    ValidationError);
    CHECK_THROWS_AS(PipelineConfig::from_text(
                        "[paths]\nsource = \"surrogate\"\n[surrogate]\nrows = 10\n"),
                    ValidationError);
    CHECK_THROWS_AS(PipelineConfig::from_text(
                        "[paths]\nsource = \"surrogate\"\n[classifiers]\nspecs = [\"svm\"]\n"),
                    ValidationError);
    // malformed syntax
    CHECK_THROWS_AS(parse_config_text("key_without_section = 1\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("[a]\nkey = unquoted\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("[a]\nkey = [1, 2\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("[a]\nx = 1\nx = 2\n"), ValidationError);
}

TEST_CASE("mapping section distinguishes groups from passthrough") {
    const PipelineConfig cfg = PipelineConfig::from_text(R"(
[paths]
source = "csv"
raw_csv = "raw.csv"

[mapping]
latitude = "lat"
longitude = "lon"
speed = "v"
acceleration = ["ax", "ay"]
gyro = ["gx"]
mag = ["mx"]
label = "road"
)");
    CHECK(cfg.mapping.passthrough.at("latitude") == "lat");
    CHECK(cfg.mapping.groups.at("acceleration") == std::vector<std::string>{"ax", "ay"});
    CHECK(cfg.mapping.label_column == "road");

    CHECK_THROWS_AS(PipelineConfig::from_text(R"(
[paths]
source = "csv"
raw_csv = "raw.csv"

[mapping]
latitude = "lat"
label = "road"
)"),
                    ValidationError);
}

TEST_CASE("semantic hash ignores paths but tracks parameters") {
    const PipelineConfig a = PipelineConfig::from_text(kSurrogateConfig);
    PipelineConfig b = a;
    b.out_dir = "elsewhere";
    b.raw_csv = "different.csv";
    CHECK(a.semantic_hash() == b.semantic_hash());

    PipelineConfig c = a;
    c.train.epochs = 4;
    CHECK(a.semantic_hash() != c.semantic_hash());
    PipelineConfig d = a;
    d.sample_seed = 1234;
    CHECK(a.semantic_hash() != d.semantic_hash());
}

TEST_CASE("arrays may span lines") {
    const PipelineConfig cfg = PipelineConfig::from_text(R"(
[paths]
source = "surrogate"

[train]
encoder = [
  32,
  16,
]

[anonymize]
input_csv = "demo.csv"
rules = [
  "Age: bins 10,30,50",
  "Sex: keep",
]
)");
    CHECK(cfg.train.encoder_widths == std::vector<size_t>{32, 16});
    CHECK(cfg.anonymize.rule_lines.size() == 2);
    CHECK_THROWS_WITH_AS(parse_config_text("[a]\nx = [1,\n2\n"),
                         doctest::Contains("unterminated"), ValidationError);
}

TEST_CASE("anonymize section is validated eagerly") {
    const char* good = R"(
[paths]
source = "surrogate"

[anonymize]
input_csv = "demo.csv"
quasi = ["Age", "Sex", "ZIP"]
sensitive = "Disease"
rules = ["Age: bins 10,30,50", "Sex: suppress_when Age=10--29", "ZIP: suppress", "Disease: keep"]
)";
    const PipelineConfig cfg = PipelineConfig::from_text(good);
    CHECK(cfg.anonymize.enabled);
    CHECK(cfg.anonymize.quasi_identifiers.size() == 3);
    CHECK(cfg.anonymize.rule_lines.size() == 4);

    const char* bad_rule = R"(
[paths]
source = "surrogate"

[anonymize]
input_csv = "demo.csv"
rules = ["Age: frobnicate"]
)";
    CHECK_THROWS_AS(PipelineConfig::from_text(bad_rule), ValidationError);
}
