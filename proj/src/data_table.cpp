#include "synthtab/data_table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "synthtab/errors.hpp"

namespace synthtab {

int TableSchema::index_of(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

DataTable DataTable::empty(TableSchema schema) {
    DataTable t;
    t.schema = std::move(schema);
    t.reals.resize(t.schema.size());
    t.codes.resize(t.schema.size());
    t.code_maps.resize(t.schema.size());
    return t;
}

size_t DataTable::rows() const {
    for (size_t i = 0; i < schema.size(); ++i) {
        if (schema.columns[i].kind == ColumnKind::Continuous) return reals[i].size();
        return codes[i].size();
    }
    return 0;
}

namespace {

size_t checked_index(const DataTable& t, const std::string& name, ColumnKind kind) {
    const int idx = t.schema.index_of(name);
    if (idx < 0) throw ValidationError("column not found: " + name);
    if (t.schema.columns[idx].kind != kind) {
        throw ValidationError("column " + name + " has the wrong kind for this access");
    }
    return static_cast<size_t>(idx);
}

} // namespace

std::vector<double>& DataTable::continuous(size_t col) { return reals[col]; }
const std::vector<double>& DataTable::continuous(size_t col) const { return reals[col]; }
const std::vector<double>& DataTable::continuous(const std::string& name) const {
    return reals[checked_index(*this, name, ColumnKind::Continuous)];
}
std::vector<int>& DataTable::categorical(size_t col) { return codes[col]; }
const std::vector<int>& DataTable::categorical(size_t col) const { return codes[col]; }
const std::vector<int>& DataTable::categorical(const std::string& name) const {
    return codes[checked_index(*this, name, ColumnKind::Categorical)];
}
const std::vector<std::string>& DataTable::code_map(size_t col) const { return code_maps[col]; }
const std::vector<std::string>& DataTable::code_map(const std::string& name) const {
    return code_maps[checked_index(*this, name, ColumnKind::Categorical)];
}

void DataTable::validate() const {
    const size_t n = rows();
    for (size_t i = 0; i < schema.size(); ++i) {
        const auto& desc = schema.columns[i];
        if (desc.kind == ColumnKind::Continuous) {
            if (reals[i].size() != n) {
                throw ValidationError("column " + desc.name + " length differs from table");
            }
            for (double v : reals[i]) {
                if (!std::isfinite(v)) {
                    throw NumericError("column " + desc.name + " contains a non-finite value");
                }
            }
        } else {
            if (codes[i].size() != n) {
                throw ValidationError("column " + desc.name + " length differs from table");
            }
            for (int c : codes[i]) {
                if (c < 0 || static_cast<size_t>(c) >= code_maps[i].size()) {
                    throw ValidationError("column " + desc.name + " has code " +
                                          std::to_string(c) + " outside its code map");
                }
            }
        }
    }
}

DataTable DataTable::take(std::span<const size_t> indices) const {
    DataTable out = DataTable::empty(schema);
    out.code_maps = code_maps;
    for (size_t i = 0; i < schema.size(); ++i) {
        if (schema.columns[i].kind == ColumnKind::Continuous) {
            out.reals[i].reserve(indices.size());
            for (size_t r : indices) out.reals[i].push_back(reals[i][r]);
        } else {
            out.codes[i].reserve(indices.size());
            for (size_t r : indices) out.codes[i].push_back(codes[i][r]);
        }
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_csv(const DataTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (size_t i = 0; i < table.schema.size(); ++i) {
        if (i) out << ',';
        out << table.schema.columns[i].name;
    }
    out << '\n';
    const size_t n = table.rows();
    for (size_t r = 0; r < n; ++r) {
        for (size_t i = 0; i < table.schema.size(); ++i) {
            if (i) out << ',';
            if (table.schema.columns[i].kind == ColumnKind::Continuous) {
                out << format_double(table.reals[i][r]);
            } else {
                out << table.codes[i][r];
            }
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

DataTable read_csv(const std::string& path, const TableSchema& schema,
                   const std::vector<std::vector<std::string>>& code_maps) {
    TextTable text = read_csv_text(path);
    if (text.header.size() != schema.size()) {
        throw FormatError(path + ": expected " + std::to_string(schema.size()) +
                          " columns, found " + std::to_string(text.header.size()));
    }
    for (size_t i = 0; i < schema.size(); ++i) {
        if (text.header[i] != schema.columns[i].name) {
            throw FormatError(path + ": column " + std::to_string(i) + " is '" +
                              text.header[i] + "', expected '" + schema.columns[i].name + "'");
        }
    }
    DataTable table = DataTable::empty(schema);
    table.code_maps = code_maps;
    table.code_maps.resize(schema.size());
    for (size_t r = 0; r < text.rows.size(); ++r) {
        const auto& row = text.rows[r];
        for (size_t i = 0; i < schema.size(); ++i) {
            const std::string& cell = row[i];
            if (schema.columns[i].kind == ColumnKind::Continuous) {
                double v = 0.0;
                auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
                    throw FormatError(path + ": unparseable real at row " + std::to_string(r + 2) +
                                      ", column " + schema.columns[i].name);
                }
                table.reals[i].push_back(v);
            } else {
                int v = 0;
                auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
                    throw FormatError(path + ": unparseable code at row " + std::to_string(r + 2) +
                                      ", column " + schema.columns[i].name);
                }
                table.codes[i].push_back(v);
            }
        }
    }
    table.validate();
    return table;
}

int TextTable::column_index(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line, const std::string& path,
                                        size_t lineno) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"' && cell.empty()) {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    if (quoted) {
        throw FormatError(path + ": unterminated quote at line " + std::to_string(lineno));
    }
    cells.push_back(std::move(cell));
    return cells;
}

} // namespace

TextTable read_csv_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    TextTable table;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && lineno > 1) continue;
        auto cells = split_csv_line(line, path, lineno);
        if (lineno == 1) {
            table.header = std::move(cells);
        } else {
            if (cells.size() != table.header.size()) {
                throw FormatError(path + ": line " + std::to_string(lineno) + " has " +
                                  std::to_string(cells.size()) + " cells, header has " +
                                  std::to_string(table.header.size()));
            }
            table.rows.push_back(std::move(cells));
        }
    }
    if (table.header.empty()) throw FormatError(path + ": empty file or missing header");
    return table;
}

namespace {

void append_csv_cell(std::string& out, const std::string& cell) {
    if (cell.find_first_of(",\"\n") != std::string::npos) {
        out += '"';
        for (char c : cell) {
            if (c == '"') out += '"';
            out += c;
        }
        out += '"';
    } else {
        out += cell;
    }
}

} // namespace

std::string csv_text_to_string(const TextTable& table) {
    std::string out;
    for (size_t i = 0; i < table.header.size(); ++i) {
        if (i) out += ',';
        append_csv_cell(out, table.header[i]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            append_csv_cell(out, row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_csv_text(const TextTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << csv_text_to_string(table);
    if (!out) throw IoError("write failed: " + path);
}

} // namespace synthtab
