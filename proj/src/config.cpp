#include "synthtab/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "synthtab/anonymize.hpp"
#include "synthtab/errors.hpp"

namespace synthtab {

namespace {

std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r");
    const size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

ConfigValue parse_scalar(const std::string& raw, size_t lineno) {
    ConfigValue v;
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
        v.kind = ConfigValue::Kind::String;
        v.str = raw.substr(1, raw.size() - 2);
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.kind = ConfigValue::Kind::Boolean;
        v.boolean = raw == "true";
        return v;
    }
    try {
        size_t consumed = 0;
        const double num = std::stod(raw, &consumed);
        if (consumed == raw.size()) {
            v.kind = ConfigValue::Kind::Number;
            v.num = num;
            return v;
        }
    } catch (...) {
    }
    throw ValidationError("config line " + std::to_string(lineno) + ": cannot parse value '" +
                          raw + "' (strings must be quoted)");
}

ConfigValue parse_value(const std::string& raw, size_t lineno) {
    if (!raw.empty() && raw.front() == '[') {
        if (raw.back() != ']') {
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": unterminated array");
        }
        ConfigValue v;
        v.kind = ConfigValue::Kind::Array;
        const std::string inner = raw.substr(1, raw.size() - 2);
        size_t pos = 0;
        bool in_quotes = false;
        std::string tok;
        auto flush = [&]() {
            const std::string t = trim(tok);
            if (!t.empty()) v.array.push_back(parse_scalar(t, lineno));
            tok.clear();
        };
        for (; pos < inner.size(); ++pos) {
            const char c = inner[pos];
            if (c == '"') in_quotes = !in_quotes;
            if (c == ',' && !in_quotes) {
                flush();
            } else {
                tok += c;
            }
        }
        flush();
        return v;
    }
    return parse_scalar(raw, lineno);
}

// strips a trailing comment that is not inside quotes
std::string strip_comment(const std::string& line) {
    bool in_quotes = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_quotes = !in_quotes;
        if (line[i] == '#' && !in_quotes) return line.substr(0, i);
    }
    return line;
}

} // namespace

std::string ConfigValue::as_string(const std::string& where) const {
    if (kind != Kind::String) throw ValidationError(where + ": expected a quoted string");
    return str;
}

double ConfigValue::as_number(const std::string& where) const {
    if (kind != Kind::Number) throw ValidationError(where + ": expected a number");
    return num;
}

bool ConfigValue::as_bool(const std::string& where) const {
    if (kind != Kind::Boolean) throw ValidationError(where + ": expected true/false");
    return boolean;
}

int64_t ConfigValue::as_int(const std::string& where) const {
    const double v = as_number(where);
    if (v != std::floor(v)) throw ValidationError(where + ": expected an integer");
    return static_cast<int64_t>(v);
}

std::vector<std::string> ConfigValue::as_string_array(const std::string& where) const {
    if (kind != Kind::Array) throw ValidationError(where + ": expected an array");
    std::vector<std::string> out;
    for (const auto& v : array) out.push_back(v.as_string(where));
    return out;
}

std::vector<double> ConfigValue::as_number_array(const std::string& where) const {
    if (kind != Kind::Array) throw ValidationError(where + ": expected an array");
    std::vector<double> out;
    for (const auto& v : array) out.push_back(v.as_number(where));
    return out;
}

namespace {

// bracket balance outside quoted strings; arrays may span lines
int bracket_delta(const std::string& s) {
    int depth = 0;
    bool in_quotes = false;
    for (char c : s) {
        if (c == '"') in_quotes = !in_quotes;
        if (in_quotes) continue;
        if (c == '[') ++depth;
        if (c == ']') --depth;
    }
    return depth;
}

} // namespace

ConfigSections parse_config_text(const std::string& text) {
    ConfigSections sections;
    std::istringstream in(text);
    std::string line;
    std::string current;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            // a section header, unless this is the opening of an array value
            if (line.back() == ']' && line.find('=') == std::string::npos) {
                current = trim(line.substr(1, line.size() - 2));
                if (current.empty()) {
                    throw ValidationError("config line " + std::to_string(lineno) +
                                          ": empty section name");
                }
                sections[current];
                continue;
            }
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": malformed section header");
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
        }
        if (current.empty()) {
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": key outside any [section]");
        }
        const std::string key = trim(line.substr(0, eq));
        std::string raw = trim(line.substr(eq + 1));
        if (key.empty() || raw.empty()) {
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": empty key or value");
        }
        const size_t value_line = lineno;
        int depth = bracket_delta(raw);
        while (depth > 0 && std::getline(in, line)) {
            ++lineno;
            const std::string more = trim(strip_comment(line));
            raw += ' ';
            raw += more;
            depth += bracket_delta(more);
        }
        if (depth > 0) {
            throw ValidationError("config line " + std::to_string(value_line) +
                                  ": unterminated array");
        }
        if (!sections[current].emplace(key, parse_value(raw, value_line)).second) {
            throw ValidationError("config line " + std::to_string(value_line) +
                                  ": duplicate key '" + key + "'");
        }
    }
    return sections;
}

namespace {

class SectionReader {
public:
    SectionReader(const ConfigSections& sections, const std::string& name)
        : name_(name) {
        auto it = sections.find(name);
        if (it != sections.end()) entries_ = &it->second;
    }

    bool present() const { return entries_ != nullptr; }

    const ConfigValue* find(const std::string& key) {
        used_.insert(key);
        if (!entries_) return nullptr;
        auto it = entries_->find(key);
        return it == entries_->end() ? nullptr : &it->second;
    }

    void finish() const {
        if (!entries_) return;
        for (const auto& [key, value] : *entries_) {
            if (!used_.count(key)) {
                throw ValidationError("config: unknown key '" + key + "' in [" + name_ + "]");
            }
        }
    }

    std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

private:
    std::string name_;
    const std::map<std::string, ConfigValue>* entries_ = nullptr;
    std::set<std::string> used_;
};

} // namespace

PipelineConfig PipelineConfig::from_text(const std::string& text) {
    const ConfigSections sections = parse_config_text(text);
    const std::set<std::string> known = {"paths",  "surrogate",   "mapping",  "train",
                                         "split",  "sample",      "classifiers", "privacy",
                                         "anonymize"};
    for (const auto& [name, entries] : sections) {
        if (!known.count(name)) {
            throw ValidationError("config: unknown section [" + name + "]");
        }
    }

    PipelineConfig cfg;

    SectionReader paths(sections, "paths");
    if (const auto* v = paths.find("source")) cfg.source = v->as_string(paths.where("source"));
    if (const auto* v = paths.find("raw_csv")) cfg.raw_csv = v->as_string(paths.where("raw_csv"));
    if (const auto* v = paths.find("out_dir")) cfg.out_dir = v->as_string(paths.where("out_dir"));
    if (const auto* v = paths.find("model_file")) {
        cfg.model_file = v->as_string(paths.where("model_file"));
    }
    paths.finish();

    SectionReader surrogate(sections, "surrogate");
    if (const auto* v = surrogate.find("rows")) {
        cfg.surrogate_rows = static_cast<size_t>(v->as_int(surrogate.where("rows")));
    }
    if (const auto* v = surrogate.find("seed")) {
        cfg.surrogate_seed = static_cast<uint64_t>(v->as_int(surrogate.where("seed")));
    }
    surrogate.finish();

    SectionReader mapping(sections, "mapping");
    if (mapping.present()) {
        ColumnMapping m;
        for (const char* feature : {"latitude", "longitude", "speed", "acceleration", "gyro",
                                    "mag"}) {
            const auto* v = mapping.find(feature);
            if (!v) {
                throw ValidationError("config: [mapping] must resolve feature " +
                                      std::string(feature));
            }
            if (v->kind == ConfigValue::Kind::Array) {
                m.groups[feature] = v->as_string_array(mapping.where(feature));
            } else {
                m.passthrough[feature] = v->as_string(mapping.where(feature));
            }
        }
        const auto* label = mapping.find("label");
        if (!label) throw ValidationError("config: [mapping] must name the label column");
        m.label_column = label->as_string(mapping.where("label"));
        cfg.mapping = std::move(m);
    }
    mapping.finish();

    SectionReader train(sections, "train");
    if (const auto* v = train.find("epochs")) {
        cfg.train.epochs = static_cast<size_t>(v->as_int(train.where("epochs")));
    }
    if (const auto* v = train.find("batch_size")) {
        cfg.train.batch_size = static_cast<size_t>(v->as_int(train.where("batch_size")));
    }
    auto widths = [&](const char* key, std::vector<size_t>& out) {
        if (const auto* v = train.find(key)) {
            out.clear();
            for (double d : v->as_number_array(train.where(key))) {
                out.push_back(static_cast<size_t>(d));
            }
        }
    };
    widths("encoder", cfg.train.encoder_widths);
    widths("decoder", cfg.train.decoder_widths);
    if (const auto* v = train.find("embedding")) {
        cfg.train.embedding_dim = static_cast<size_t>(v->as_int(train.where("embedding")));
    }
    if (const auto* v = train.find("l2_scale")) {
        cfg.train.l2_scale = v->as_number(train.where("l2_scale"));
    }
    if (const auto* v = train.find("loss_factor")) {
        cfg.train.loss_factor = v->as_number(train.where("loss_factor"));
    }
    if (const auto* v = train.find("learning_rate")) {
        cfg.train.learning_rate = v->as_number(train.where("learning_rate"));
    }
    if (const auto* v = train.find("seed")) {
        cfg.train.seed = static_cast<uint64_t>(v->as_int(train.where("seed")));
    }
    if (const auto* v = train.find("gmm_components")) {
        cfg.train.gmm_components = static_cast<size_t>(v->as_int(train.where("gmm_components")));
    }
    train.finish();

    SectionReader split(sections, "split");
    if (const auto* v = split.find("fraction")) {
        cfg.holdout_fraction = v->as_number(split.where("fraction"));
    }
    if (const auto* v = split.find("seed")) {
        cfg.split_seed = static_cast<uint64_t>(v->as_int(split.where("seed")));
    }
    split.finish();

    SectionReader sample(sections, "sample");
    if (const auto* v = sample.find("rows")) {
        cfg.sample_rows = static_cast<size_t>(v->as_int(sample.where("rows")));
    }
    if (const auto* v = sample.find("seed")) {
        cfg.sample_seed = static_cast<uint64_t>(v->as_int(sample.where("seed")));
    }
    sample.finish();

    SectionReader cls(sections, "classifiers");
    {
        size_t knn_k = 5, tree_depth = 12, tree_leaf = 4;
        size_t boost_rounds = 40, boost_depth = 4;
        double boost_lr = 0.25;
        std::vector<std::string> kinds = {"knn", "tree", "boost"};
        if (const auto* v = cls.find("specs")) {
            kinds = v->as_string_array(cls.where("specs"));
        }
        if (const auto* v = cls.find("knn_k")) {
            knn_k = static_cast<size_t>(v->as_int(cls.where("knn_k")));
        }
        if (const auto* v = cls.find("tree_max_depth")) {
            tree_depth = static_cast<size_t>(v->as_int(cls.where("tree_max_depth")));
        }
        if (const auto* v = cls.find("tree_min_leaf")) {
            tree_leaf = static_cast<size_t>(v->as_int(cls.where("tree_min_leaf")));
        }
        if (const auto* v = cls.find("boost_rounds")) {
            boost_rounds = static_cast<size_t>(v->as_int(cls.where("boost_rounds")));
        }
        if (const auto* v = cls.find("boost_depth")) {
            boost_depth = static_cast<size_t>(v->as_int(cls.where("boost_depth")));
        }
        if (const auto* v = cls.find("boost_learning_rate")) {
            boost_lr = v->as_number(cls.where("boost_learning_rate"));
        }
        for (const auto& kind : kinds) {
            if (kind == "knn") {
                cfg.classifier_specs.push_back(ClassifierSpec::knn(knn_k));
            } else if (kind == "tree") {
                cfg.classifier_specs.push_back(
                    ClassifierSpec::decision_tree(tree_depth, tree_leaf));
            } else if (kind == "boost") {
                cfg.classifier_specs.push_back(
                    ClassifierSpec::boosted_trees(boost_rounds, boost_depth, boost_lr));
            } else {
                throw ValidationError("config: unknown classifier kind '" + kind +
                                      "' (expected knn/tree/boost)");
            }
        }
    }
    cls.finish();

    SectionReader privacy(sections, "privacy");
    if (const auto* v = privacy.find("grid_cell_degrees")) {
        cfg.grid_cell_degrees = v->as_number(privacy.where("grid_cell_degrees"));
    }
    if (const auto* v = privacy.find("min_endpoint_distance_m")) {
        cfg.min_endpoint_distance_m = v->as_number(privacy.where("min_endpoint_distance_m"));
    }
    if (const auto* v = privacy.find("min_dcr_5th_percentile")) {
        cfg.min_dcr_p5 = v->as_number(privacy.where("min_dcr_5th_percentile"));
    }
    privacy.finish();

    SectionReader anon(sections, "anonymize");
    if (anon.present()) {
        cfg.anonymize.enabled = true;
        if (const auto* v = anon.find("input_csv")) {
            cfg.anonymize.input_csv = v->as_string(anon.where("input_csv"));
        }
        if (const auto* v = anon.find("output_csv")) {
            cfg.anonymize.output_csv = v->as_string(anon.where("output_csv"));
        }
        if (const auto* v = anon.find("quasi")) {
            cfg.anonymize.quasi_identifiers = v->as_string_array(anon.where("quasi"));
        }
        if (const auto* v = anon.find("sensitive")) {
            cfg.anonymize.sensitive_column = v->as_string(anon.where("sensitive"));
        }
        if (const auto* v = anon.find("rules")) {
            cfg.anonymize.rule_lines = v->as_string_array(anon.where("rules"));
        }
    }
    anon.finish();

    // environment overrides, paths only
    if (const char* env = std::getenv("SYNTHTAB_RAW_CSV")) cfg.raw_csv = env;
    if (const char* env = std::getenv("SYNTHTAB_OUT_DIR")) cfg.out_dir = env;
    if (const char* env = std::getenv("SYNTHTAB_MODEL_FILE")) cfg.model_file = env;

    cfg.validate();
    return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("config file not found: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

void PipelineConfig::validate() const {
    if (source != "csv" && source != "surrogate") {
        throw ValidationError("config: source must be \"csv\" or \"surrogate\"");
    }
    if (source == "csv" && raw_csv.empty()) {
        throw ValidationError("config: source=csv requires raw_csv");
    }
    if (source == "surrogate" && surrogate_rows < 30) {
        throw ValidationError("config: surrogate rows must be >= 30");
    }
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
        throw ValidationError("config: split fraction must be in (0, 1)");
    }
    if (out_dir.empty()) throw ValidationError("config: out_dir must not be empty");
    mapping.validate();
    train.validate();
    for (const auto& spec : classifier_specs) spec.validate();
    if (!(grid_cell_degrees > 0.0)) {
        throw ValidationError("config: grid_cell_degrees must be > 0");
    }
    if (anonymize.enabled) {
        if (anonymize.input_csv.empty()) {
            throw ValidationError("config: [anonymize] requires input_csv");
        }
        if (anonymize.rule_lines.empty()) {
            throw ValidationError("config: [anonymize] requires rules");
        }
        parse_rules(anonymize.rule_lines); // fail now, not mid-pipeline
    }
}

uint64_t fnv1a64(const std::string& text) {
    uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

uint64_t PipelineConfig::semantic_hash() const {
    std::ostringstream s;
    s << "source=" << source << ';';
    s << "surrogate=" << surrogate_rows << ',' << surrogate_seed << ';';
    s << "mapping=";
    for (const auto& [f, cols] : mapping.groups) {
        s << f << ':';
        for (const auto& c : cols) s << c << ',';
        s << '|';
    }
    for (const auto& [f, c] : mapping.passthrough) s << f << ':' << c << '|';
    s << mapping.label_column << ';';
    s << "train=" << train.epochs << ',' << train.batch_size << ',';
    for (size_t w : train.encoder_widths) s << w << '_';
    s << ',';
    for (size_t w : train.decoder_widths) s << w << '_';
    s << ',' << train.embedding_dim << ',' << train.l2_scale << ',' << train.loss_factor << ','
      << train.learning_rate << ',' << train.seed << ',' << train.gmm_components << ';';
    s << "split=" << holdout_fraction << ',' << split_seed << ';';
    s << "sample=" << sample_rows << ',' << sample_seed << ';';
    s << "classifiers=";
    for (const auto& spec : classifier_specs) s << spec.name() << ',';
    s << ';';
    s << "privacy=" << grid_cell_degrees << ',' << min_endpoint_distance_m << ',' << min_dcr_p5
      << ';';
    return fnv1a64(s.str());
}

std::string PipelineConfig::resolved_model_file() const {
    if (!model_file.empty()) return model_file;
    return out_dir + "/model.tvae";
}

} // namespace synthtab
