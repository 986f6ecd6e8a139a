#include "synthtab/transform.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "synthtab/errors.hpp"

namespace synthtab {

size_t ColumnTransformer::width() const {
    size_t w = 0;
    for (const auto& e : encodings) w += e.width();
    return w;
}

size_t ColumnTransformer::column_offset(size_t col) const {
    size_t off = 0;
    for (size_t i = 0; i < col; ++i) off += encodings[i].width();
    return off;
}

NormalizedColumn normalize_column(std::span<const double> values, const GmmParams& gmm,
                                  ModeAssignment mode, Rng* rng) {
    if (gmm.k() == 0) throw ValidationError("normalize_column: unfitted mixture");
    if (mode == ModeAssignment::Sampled && rng == nullptr) {
        throw ValidationError("normalize_column: sampled mode assignment needs an rng");
    }
    NormalizedColumn out;
    out.alphas.reserve(values.size());
    out.modes.reserve(values.size());
    for (double x : values) {
        const std::vector<double> resp = gmm_responsibilities(x, gmm);
        size_t m = 0;
        if (mode == ModeAssignment::Argmax) {
            for (size_t j = 1; j < resp.size(); ++j) {
                if (resp[j] > resp[m]) m = j;
            }
        } else {
            double target = rng->next_double();
            for (size_t j = 0; j < resp.size(); ++j) {
                target -= resp[j];
                if (target <= 0.0) {
                    m = j;
                    break;
                }
                m = j;
            }
        }
        const double alpha = (x - gmm.means[m]) / (4.0 * gmm.stds[m]);
        out.alphas.push_back(std::clamp(alpha, -1.0, 1.0));
        out.modes.push_back(static_cast<int>(m));
    }
    return out;
}

std::vector<double> denormalize_column(std::span<const double> alphas,
                                       std::span<const int> modes, const GmmParams& gmm) {
    if (alphas.size() != modes.size()) {
        throw ValidationError("denormalize_column: alpha/mode length mismatch");
    }
    std::vector<double> out;
    out.reserve(alphas.size());
    for (size_t i = 0; i < alphas.size(); ++i) {
        const size_t m = static_cast<size_t>(modes[i]);
        if (m >= gmm.k()) throw ValidationError("denormalize_column: mode index out of range");
        out.push_back(alphas[i] * 4.0 * gmm.stds[m] + gmm.means[m]);
    }
    return out;
}

ColumnTransformer fit_transformer(const DataTable& table, size_t k, uint64_t seed) {
    table.validate();
    if (table.rows() == 0) throw ValidationError("fit_transformer: empty table");
    ColumnTransformer t;
    t.schema = table.schema;
    for (size_t ci = 0; ci < table.schema.size(); ++ci) {
        ColumnEncoding enc;
        enc.kind = table.schema.columns[ci].kind;
        if (enc.kind == ColumnKind::Continuous) {
            GmmFitOptions opts;
            opts.k = k;
            opts.seed = mix_key(seed, 0x636f6c, ci);
            enc.gmm = fit_gmm(table.reals[ci], opts);
        } else {
            enc.categories = table.code_maps[ci];
            if (enc.categories.empty()) {
                throw ValidationError("fit_transformer: categorical column " +
                                      table.schema.columns[ci].name + " has an empty code map");
            }
        }
        t.encodings.push_back(std::move(enc));
    }
    return t;
}

Matrix apply(const ColumnTransformer& t, const DataTable& table, ModeAssignment mode,
             uint64_t seed) {
    if (table.schema.size() != t.encodings.size()) {
        throw ValidationError("apply: table has " + std::to_string(table.schema.size()) +
                              " columns, transformer " + std::to_string(t.encodings.size()));
    }
    const size_t n = table.rows();
    Matrix m(n, t.width());
    Rng rng(mix_key(seed, 0x6d6f6465));
    size_t off = 0;
    for (size_t ci = 0; ci < t.encodings.size(); ++ci) {
        const ColumnEncoding& enc = t.encodings[ci];
        if (enc.kind == ColumnKind::Continuous) {
            NormalizedColumn norm = normalize_column(table.reals[ci], enc.gmm, mode,
                                                     mode == ModeAssignment::Sampled ? &rng
                                                                                     : nullptr);
            for (size_t r = 0; r < n; ++r) {
                m.at(r, off) = norm.alphas[r];
                m.at(r, off + 1 + static_cast<size_t>(norm.modes[r])) = 1.0;
            }
        } else {
            const auto& codes = table.codes[ci];
            for (size_t r = 0; r < n; ++r) {
                const size_t code = static_cast<size_t>(codes[r]);
                if (code >= enc.categories.size()) {
                    throw ValidationError("apply: code outside transformer categories in column " +
                                          t.schema.columns[ci].name);
                }
                m.at(r, off + code) = 1.0;
            }
        }
        off += enc.width();
    }
    return m;
}

DataTable invert(const ColumnTransformer& t, const Matrix& m) {
    if (m.cols != t.width()) {
        throw ValidationError("invert: matrix width " + std::to_string(m.cols) +
                              " does not match transformer width " + std::to_string(t.width()));
    }
    DataTable table = DataTable::empty(t.schema);
    size_t off = 0;
    for (size_t ci = 0; ci < t.encodings.size(); ++ci) {
        const ColumnEncoding& enc = t.encodings[ci];
        if (enc.kind == ColumnKind::Continuous) {
            auto& out = table.reals[ci];
            out.reserve(m.rows);
            for (size_t r = 0; r < m.rows; ++r) {
                const double alpha = m.at(r, off);
                size_t mode = 0;
                for (size_t j = 1; j < enc.gmm.k(); ++j) {
                    if (m.at(r, off + 1 + j) > m.at(r, off + 1 + mode)) mode = j;
                }
                out.push_back(alpha * 4.0 * enc.gmm.stds[mode] + enc.gmm.means[mode]);
            }
        } else {
            table.code_maps[ci] = enc.categories;
            auto& out = table.codes[ci];
            out.reserve(m.rows);
            for (size_t r = 0; r < m.rows; ++r) {
                size_t code = 0;
                for (size_t j = 1; j < enc.categories.size(); ++j) {
                    if (m.at(r, off + j) > m.at(r, off + code)) code = j;
                }
                out.push_back(static_cast<int>(code));
            }
        }
        off += enc.width();
    }
    return table;
}

nlohmann::json transformer_to_json(const ColumnTransformer& t) {
    nlohmann::json cols = nlohmann::json::array();
    for (size_t ci = 0; ci < t.encodings.size(); ++ci) {
        const auto& desc = t.schema.columns[ci];
        const auto& enc = t.encodings[ci];
        nlohmann::json col{{"name", desc.name},
                           {"unit", desc.unit},
                           {"kind", enc.kind == ColumnKind::Continuous ? "continuous"
                                                                       : "categorical"}};
        if (enc.kind == ColumnKind::Continuous) {
            col["weights"] = enc.gmm.weights;
            col["means"] = enc.gmm.means;
            col["stds"] = enc.gmm.stds;
        } else {
            col["categories"] = enc.categories;
        }
        cols.push_back(std::move(col));
    }
    return nlohmann::json{{"columns", std::move(cols)}};
}

ColumnTransformer transformer_from_json(const nlohmann::json& j) {
    ColumnTransformer t;
    if (!j.contains("columns")) throw FormatError("transformer json: missing 'columns'");
    for (const auto& col : j.at("columns")) {
        ColumnDesc desc;
        desc.name = col.at("name").get<std::string>();
        desc.unit = col.value("unit", "");
        ColumnEncoding enc;
        const std::string kind = col.at("kind").get<std::string>();
        if (kind == "continuous") {
            desc.kind = ColumnKind::Continuous;
            enc.kind = ColumnKind::Continuous;
            enc.gmm.weights = col.at("weights").get<std::vector<double>>();
            enc.gmm.means = col.at("means").get<std::vector<double>>();
            enc.gmm.stds = col.at("stds").get<std::vector<double>>();
            if (enc.gmm.weights.size() != enc.gmm.means.size() ||
                enc.gmm.weights.size() != enc.gmm.stds.size()) {
                throw FormatError("transformer json: mixture arrays disagree for " + desc.name);
            }
        } else if (kind == "categorical") {
            desc.kind = ColumnKind::Categorical;
            enc.kind = ColumnKind::Categorical;
            enc.categories = col.at("categories").get<std::vector<std::string>>();
        } else {
            throw FormatError("transformer json: unknown column kind '" + kind + "'");
        }
        t.schema.columns.push_back(std::move(desc));
        t.encodings.push_back(std::move(enc));
    }
    return t;
}

} // namespace synthtab
