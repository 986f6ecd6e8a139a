#include "synthtab/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "synthtab/errors.hpp"
#include "synthtab/rng.hpp"

namespace synthtab {

void ColumnMapping::validate() const {
    if (label_column.empty()) throw ValidationError("mapping: label column not set");
    std::set<std::string> raw_seen;
    for (const auto& [feature, cols] : groups) {
        if (cols.empty()) throw ValidationError("mapping: group " + feature + " is empty");
        for (const auto& c : cols) {
            if (!raw_seen.insert(c).second) {
                throw ValidationError("mapping: raw column " + c + " appears in two groups");
            }
        }
    }
    const TableSchema schema = processed_schema();
    for (const auto& desc : schema.columns) {
        if (desc.kind == ColumnKind::Categorical) continue;
        const bool in_groups = groups.count(desc.name) > 0;
        const bool in_pass = passthrough.count(desc.name) > 0;
        if (in_groups == in_pass) {
            throw ValidationError("mapping: feature " + desc.name +
                                  " must be resolved by exactly one of group/passthrough");
        }
    }
}

ColumnMapping ColumnMapping::pvs_default() {
    ColumnMapping m;
    m.passthrough = {{"latitude", "latitude"}, {"longitude", "longitude"}, {"speed", "speed"}};
    m.groups["acceleration"] = {
        "acc_x_dashboard",        "acc_y_dashboard",        "acc_z_dashboard",
        "acc_x_above_suspension", "acc_y_above_suspension", "acc_z_above_suspension",
        "acc_x_below_suspension", "acc_y_below_suspension", "acc_z_below_suspension"};
    m.groups["gyro"] = {
        "gyro_x_dashboard",        "gyro_y_dashboard",        "gyro_z_dashboard",
        "gyro_x_above_suspension", "gyro_y_above_suspension", "gyro_z_above_suspension",
        "gyro_x_below_suspension", "gyro_y_below_suspension", "gyro_z_below_suspension"};
    m.groups["mag"] = {"mag_x_dashboard", "mag_y_dashboard", "mag_z_dashboard"};
    m.label_column = "road";
    return m;
}

TableSchema processed_schema() {
    TableSchema s;
    s.columns = {
        {"latitude", ColumnKind::Continuous, "degrees"},
        {"longitude", ColumnKind::Continuous, "degrees"},
        {"speed", ColumnKind::Continuous, "as-published"},
        {"acceleration", ColumnKind::Continuous, "as-published"},
        {"gyro", ColumnKind::Continuous, "as-published"},
        {"mag", ColumnKind::Continuous, "as-published"},
        {"road_encoded", ColumnKind::Categorical, ""},
    };
    return s;
}

RawTable load_csv(const std::string& path, const ColumnMapping& mapping) {
    mapping.validate();
    TextTable text = read_csv_text(path);
    if (text.rows.empty()) throw FormatError(path + ": no data rows");

    const int label_idx = text.column_index(mapping.label_column);
    if (label_idx < 0) throw ValidationError(path + ": label column not found: " + mapping.label_column);

    struct NumericRef {
        std::string feature;
        bool grouped = false;
        size_t slot = 0; // index within the group
        size_t col = 0;  // raw column index
    };
    std::vector<NumericRef> refs;
    RawTable raw;
    for (const auto& [feature, cols] : mapping.groups) {
        raw.group_values[feature].resize(cols.size());
        for (size_t s = 0; s < cols.size(); ++s) {
            const int idx = text.column_index(cols[s]);
            if (idx < 0) throw ValidationError(path + ": raw column not found: " + cols[s]);
            refs.push_back({feature, true, s, static_cast<size_t>(idx)});
        }
    }
    for (const auto& [feature, col] : mapping.passthrough) {
        const int idx = text.column_index(col);
        if (idx < 0) throw ValidationError(path + ": raw column not found: " + col);
        refs.push_back({feature, false, 0, static_cast<size_t>(idx)});
    }

    for (const auto& desc : processed_schema().columns) {
        if (desc.kind == ColumnKind::Continuous) raw.feature_names.push_back(desc.name);
    }

    raw.raw_rows = text.rows.size();
    std::vector<double> parsed(refs.size());
    for (size_t r = 0; r < text.rows.size(); ++r) {
        const auto& row = text.rows[r];
        bool missing = row[static_cast<size_t>(label_idx)].empty();
        for (size_t i = 0; i < refs.size() && !missing; ++i) {
            const std::string& cell = row[refs[i].col];
            if (cell.empty()) {
                missing = true;
                break;
            }
            auto res = std::from_chars(cell.data(), cell.data() + cell.size(), parsed[i]);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
                throw FormatError(path + ": unparseable cell at row " + std::to_string(r + 2) +
                                  ", column " + text.header[refs[i].col]);
            }
        }
        if (missing) {
            ++raw.rejected_rows;
            continue;
        }
        for (size_t i = 0; i < refs.size(); ++i) {
            if (refs[i].grouped) {
                raw.group_values[refs[i].feature][refs[i].slot].push_back(parsed[i]);
            } else {
                raw.passthrough_values[refs[i].feature].push_back(parsed[i]);
            }
        }
        raw.labels.push_back(row[static_cast<size_t>(label_idx)]);
        ++raw.kept_rows;
    }
    return raw;
}

std::pair<std::vector<int>, std::vector<std::string>> encode_labels(
    const std::vector<std::string>& labels) {
    if (labels.empty()) throw ValidationError("encode_labels: empty label column");
    std::vector<std::string> code_map = {"asphalt", "cobblestone", "dirt"};
    std::vector<int> codes;
    codes.reserve(labels.size());
    for (const auto& label : labels) {
        int code = -1;
        for (size_t i = 0; i < code_map.size(); ++i) {
            if (code_map[i] == label) {
                code = static_cast<int>(i);
                break;
            }
        }
        if (code < 0) {
            code = static_cast<int>(code_map.size());
            code_map.push_back(label);
        }
        codes.push_back(code);
    }
    return {std::move(codes), std::move(code_map)};
}

DataTable reduce_features(const RawTable& raw, const ColumnMapping& mapping) {
    mapping.validate();
    DataTable table = DataTable::empty(processed_schema());
    const size_t n = raw.kept_rows;
    for (size_t ci = 0; ci < table.schema.size(); ++ci) {
        const auto& desc = table.schema.columns[ci];
        if (desc.kind == ColumnKind::Categorical) continue;
        auto& out = table.reals[ci];
        out.resize(n);
        if (auto git = raw.group_values.find(desc.name); git != raw.group_values.end()) {
            const auto& cols = git->second;
            if (cols.empty()) throw ValidationError("reduce_features: empty group " + desc.name);
            for (size_t r = 0; r < n; ++r) {
                double acc = 0.0;
                for (const auto& col : cols) acc += std::abs(col[r]);
                out[r] = acc / static_cast<double>(cols.size());
            }
        } else {
            const auto& col = raw.passthrough_values.at(desc.name);
            out = col;
        }
    }
    auto [codes, code_map] = encode_labels(raw.labels);
    const int road = table.schema.index_of("road_encoded");
    table.codes[road] = std::move(codes);
    table.code_maps[road] = std::move(code_map);
    table.validate();
    return table;
}

std::pair<DataTable, DataTable> split(const DataTable& table, double holdout_fraction,
                                      uint64_t seed) {
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
        throw ValidationError("split: holdout fraction must be in (0, 1)");
    }
    const int road = table.schema.index_of("road_encoded");
    if (road < 0) throw ValidationError("split: table has no road_encoded column");
    const auto& codes = table.codes[road];
    const size_t n = table.rows();

    std::map<int, std::vector<size_t>> by_class;
    for (size_t r = 0; r < n; ++r) by_class[codes[r]].push_back(r);
    for (const auto& [cls, members] : by_class) {
        if (members.size() < 2) {
            throw ValidationError("split: class " + std::to_string(cls) + " has fewer than 2 rows");
        }
    }

    // largest-remainder allocation keeps the exact total and every class
    // within one row of its proportional share
    const size_t total_holdout = static_cast<size_t>(
        std::llround(static_cast<double>(n) * holdout_fraction));
    struct Share {
        int cls;
        size_t base;
        double frac;
    };
    std::vector<Share> shares;
    size_t allocated = 0;
    for (const auto& [cls, members] : by_class) {
        const double exact = static_cast<double>(members.size()) * holdout_fraction;
        const size_t base = std::min(static_cast<size_t>(exact), members.size());
        shares.push_back({cls, base, exact - static_cast<double>(base)});
        allocated += base;
    }
    std::stable_sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
        if (a.frac != b.frac) return a.frac > b.frac;
        return a.cls < b.cls;
    });
    std::map<int, size_t> holdout_count;
    for (const auto& s : shares) holdout_count[s.cls] = s.base;
    for (auto& s : shares) {
        if (allocated >= total_holdout) break;
        if (s.base < by_class[s.cls].size()) {
            holdout_count[s.cls] += 1;
            ++allocated;
        }
    }

    std::vector<char> in_holdout(n, 0);
    for (auto& [cls, members] : by_class) {
        Rng rng(mix_key(seed, 0x73706c69, static_cast<uint64_t>(cls)));
        std::vector<size_t> shuffled = members;
        rng.shuffle(shuffled);
        for (size_t i = 0; i < holdout_count[cls] && i < shuffled.size(); ++i) {
            in_holdout[shuffled[i]] = 1;
        }
    }
    std::vector<size_t> train_idx, holdout_idx;
    for (size_t r = 0; r < n; ++r) {
        (in_holdout[r] ? holdout_idx : train_idx).push_back(r);
    }
    return {table.take(train_idx), table.take(holdout_idx)};
}

namespace {

struct SegmentProfile {
    double speed_mean, speed_std;
    double acc_mean, acc_std;
    double gyro_mean, gyro_std;
    double mag_mean, mag_std;
};

} // namespace

DataTable generate_surrogate(size_t rows, uint64_t seed) {
    if (rows < 30) throw ValidationError("generate_surrogate: need at least 30 rows");

    // Waypoints head north-west so latitude and longitude carry a strong
    // negative trend; per-segment direction changes keep the path trip-like.
    const double way_lat[4] = {-27.752, -27.718, -27.688, -27.652};
    const double way_lon[4] = {-51.048, -51.082, -51.108, -51.148};
    const SegmentProfile profiles[3] = {
        {13.0, 2.5, 3.45, 0.25, 0.10, 0.03, 24.2, 1.2}, // asphalt
        {7.5, 1.8, 4.40, 0.45, 0.55, 0.12, 25.6, 1.5},  // cobblestone
        {4.5, 1.2, 5.60, 0.70, 1.05, 0.25, 27.0, 1.8},  // dirt
    };

    DataTable table = DataTable::empty(processed_schema());
    const int road = table.schema.index_of("road_encoded");
    table.code_maps[road] = {"asphalt", "cobblestone", "dirt"};
    for (size_t ci = 0; ci < table.schema.size(); ++ci) {
        if (table.schema.columns[ci].kind == ColumnKind::Continuous) table.reals[ci].reserve(rows);
    }
    table.codes[road].reserve(rows);

    Rng rng(mix_key(seed, 0x73757272));
    auto& lat = table.reals[0];
    auto& lon = table.reals[1];
    auto& speed = table.reals[2];
    auto& acc = table.reals[3];
    auto& gyro = table.reals[4];
    auto& mag = table.reals[5];

    for (size_t r = 0; r < rows; ++r) {
        const double t = static_cast<double>(r) / static_cast<double>(rows);
        const size_t seg = std::min<size_t>(2, static_cast<size_t>(t * 3.0));
        const double local = t * 3.0 - static_cast<double>(seg);
        const SegmentProfile& p = profiles[seg];

        lat.push_back(way_lat[seg] + (way_lat[seg + 1] - way_lat[seg]) * local +
                      rng.normal() * 3e-4);
        lon.push_back(way_lon[seg] + (way_lon[seg + 1] - way_lon[seg]) * local +
                      rng.normal() * 3e-4);
        speed.push_back(std::max(0.01, p.speed_mean + rng.normal() * p.speed_std));
        acc.push_back(std::abs(p.acc_mean + rng.normal() * p.acc_std));
        gyro.push_back(std::abs(p.gyro_mean + rng.normal() * p.gyro_std));
        mag.push_back(std::abs(p.mag_mean + rng.normal() * p.mag_std));
        table.codes[road].push_back(static_cast<int>(seg));
    }
    table.validate();
    return table;
}

} // namespace synthtab
