#include "mrecnn/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mrecnn/error.hpp"
#include "mrecnn/preprocess.hpp"

namespace mrecnn {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

int parse_label(const std::string& s, const std::string& path, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("\"" + path + "\" line " + std::to_string(line_no) + ": bad label \"" + s +
                        "\"");
    }
}

std::vector<std::vector<std::string>> read_csv(const std::string& path, const std::string& header,
                                               std::size_t fields) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest \"" + path + "\"");
    std::string line;
    if (!std::getline(in, line)) throw DataError("\"" + path + "\": empty manifest");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) {
        throw DataError("\"" + path + "\": expected header \"" + header + "\", got \"" + line + "\"");
    }
    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != fields) {
            throw DataError("\"" + path + "\" line " + std::to_string(line_no) + ": expected " +
                            std::to_string(fields) + " fields, got " + std::to_string(cells.size()));
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

// manifest-relative paths resolve against the manifest's directory
std::string resolve(const std::string& manifest_path, const std::string& p) {
    std::filesystem::path fp(p);
    if (fp.is_absolute()) return p;
    return (std::filesystem::path(manifest_path).parent_path() / fp).string();
}

} // namespace

std::vector<ManifestRow> read_dataset_manifest(const std::string& path) {
    std::vector<ManifestRow> rows;
    std::size_t line_no = 1;
    for (auto& cells : read_csv(path, "image,landmarks,label,clip_id", 4)) {
        ++line_no;
        ManifestRow row;
        row.image = resolve(path, cells[0]);
        row.landmarks = resolve(path, cells[1].empty() ? cells[0] + ".pts68" : cells[1]);
        row.label = parse_label(cells[2], path, line_no);
        row.clip_id = cells[3];
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<PairRow> read_pair_manifest(const std::string& path) {
    std::vector<PairRow> rows;
    std::size_t line_no = 1;
    for (auto& cells : read_csv(path, "face,region,label,clip_id", 4)) {
        ++line_no;
        PairRow row;
        row.face = resolve(path, cells[0]);
        row.region = resolve(path, cells[1]);
        row.label = parse_label(cells[2], path, line_no);
        row.clip_id = cells[3];
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_pair_manifest(const std::vector<PairRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open \"" + path + "\" for writing");
    out << "face,region,label,clip_id\n";
    for (const auto& row : rows) {
        out << row.face << "," << row.region << "," << row.label << "," << row.clip_id << "\n";
    }
    if (!out) throw DataError("write to \"" + path + "\" failed");
}

std::vector<RegionSample> load_pair_dataset(const std::string& manifest_path, int input_size) {
    std::vector<RegionSample> samples;
    for (const auto& row : read_pair_manifest(manifest_path)) {
        RegionSample s;
        s.face = bilinear_resize(read_pnm(row.face), input_size, input_size);
        s.region = bilinear_resize(read_pnm(row.region), input_size, input_size);
        if (row.label < 0) throw DataError("\"" + row.face + "\": negative label");
        s.label = row.label;
        s.clip_id = row.clip_id;
        samples.push_back(std::move(s));
    }
    return samples;
}

} // namespace mrecnn
