#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace synthtab {

enum class ColumnKind { Continuous, Categorical };

struct ColumnDesc {
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
    std::string unit; // "as-published" where the source does not state one

    bool operator==(const ColumnDesc&) const = default;
};

struct TableSchema {
    std::vector<ColumnDesc> columns;

    size_t size() const { return columns.size(); }
    int index_of(const std::string& name) const;
    bool operator==(const TableSchema&) const = default;
};

/// Columnar dataset: the unit every pipeline stage exchanges. Continuous
/// columns hold reals, categorical columns hold small-integer codes plus a
/// code -> label map. Storage is parallel to the schema; only the vector
/// matching the column kind is populated.
struct DataTable {
    TableSchema schema;
    std::vector<std::vector<double>> reals;
    std::vector<std::vector<int>> codes;
    std::vector<std::vector<std::string>> code_maps;

    static DataTable empty(TableSchema schema);

    size_t rows() const;

    std::vector<double>& continuous(size_t col);
    const std::vector<double>& continuous(size_t col) const;
    const std::vector<double>& continuous(const std::string& name) const;
    std::vector<int>& categorical(size_t col);
    const std::vector<int>& categorical(size_t col) const;
    const std::vector<int>& categorical(const std::string& name) const;
    const std::vector<std::string>& code_map(size_t col) const;
    const std::vector<std::string>& code_map(const std::string& name) const;

    // equal column lengths, codes inside their maps, continuous values finite
    void validate() const;

    // sub-table of the given row indices, order preserved
    DataTable take(std::span<const size_t> indices) const;

    bool operator==(const DataTable&) const = default;
};

void write_csv(const DataTable& table, const std::string& path);
// schema and code maps come from the sidecar; cells are parsed accordingly
DataTable read_csv(const std::string& path, const TableSchema& schema,
                   const std::vector<std::vector<std::string>>& code_maps);

/// Untyped text table for raw CSV ingestion and the anonymization demo.
struct TextTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const;
};

TextTable read_csv_text(const std::string& path);
void write_csv_text(const TextTable& table, const std::string& path);
std::string csv_text_to_string(const TextTable& table);

// shortest-roundtrip decimal form, identical across runs
std::string format_double(double v);

} // namespace synthtab
