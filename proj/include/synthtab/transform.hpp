#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "synthtab/data_table.hpp"
#include "synthtab/gmm.hpp"
#include "synthtab/matrix.hpp"
#include "synthtab/rng.hpp"

namespace synthtab {

/// Per-column model-space encoding: continuous columns become a normalized
/// scalar plus one-hot mode indicators, categorical columns become one-hots.
struct ColumnEncoding {
    ColumnKind kind = ColumnKind::Continuous;
    GmmParams gmm;                       // continuous only
    std::vector<std::string> categories; // categorical only

    size_t width() const {
        return kind == ColumnKind::Continuous ? 1 + gmm.k() : categories.size();
    }
};

struct ColumnTransformer {
    TableSchema schema;
    std::vector<ColumnEncoding> encodings;

    size_t width() const;
    size_t column_offset(size_t col) const; // first model-space slot of the column
};

enum class ModeAssignment {
    Argmax,  // deterministic: highest posterior responsibility
    Sampled, // training path: mode drawn proportionally to responsibility
};

struct NormalizedColumn {
    std::vector<double> alphas; // in [-1, 1]
    std::vector<int> modes;
};

// alpha = (x - mean_mode) / (4 * std_mode), clipped to [-1, 1]
NormalizedColumn normalize_column(std::span<const double> values, const GmmParams& gmm,
                                  ModeAssignment mode, Rng* rng = nullptr);

// x = alpha * 4 * std_mode + mean_mode (no clipping on the way back)
std::vector<double> denormalize_column(std::span<const double> alphas,
                                       std::span<const int> modes, const GmmParams& gmm);

ColumnTransformer fit_transformer(const DataTable& table, size_t k, uint64_t seed);

Matrix apply(const ColumnTransformer& t, const DataTable& table,
             ModeAssignment mode = ModeAssignment::Argmax, uint64_t seed = 0);

// Mode/category slots are resolved by argmax, so soft indicator rows
// (decoder outputs) invert directly.
DataTable invert(const ColumnTransformer& t, const Matrix& m);

nlohmann::json transformer_to_json(const ColumnTransformer& t);
ColumnTransformer transformer_from_json(const nlohmann::json& j);

} // namespace synthtab
