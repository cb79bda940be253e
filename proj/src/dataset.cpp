#include "gradapt/dataset.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "gradapt/common.hpp"

namespace gradapt {

void LabeledDataset::validate() const {
    if (features.rows < 0 || features.cols < 0) throw ShapeError("dataset has negative dimensions");
    if (static_cast<std::size_t>(features.rows) * features.cols != features.data.size())
        throw ShapeError("dataset feature buffer size mismatch");
    if (has_labels()) {
        if (static_cast<int>(labels.size()) != size()) throw ShapeError("dataset label count mismatch");
        if (num_classes < 1) throw ShapeError("labeled dataset needs num_classes >= 1");
        for (int y : labels)
            if (y < 0 || y >= num_classes) throw ShapeError("label out of range");
    }
    if (has_shift() && static_cast<int>(shift_values.size()) != size())
        throw ShapeError("dataset shift annotation count mismatch");
}

LabeledDataset select_examples(const LabeledDataset& data, const std::vector<int>& idx) {
    LabeledDataset out;
    out.num_classes = data.num_classes;
    out.features = select_rows(data.features, idx);
    if (data.has_labels()) {
        out.labels.reserve(idx.size());
        for (int i : idx) out.labels.push_back(data.labels.at(static_cast<std::size_t>(i)));
    }
    if (data.has_shift()) {
        out.shift_values.reserve(idx.size());
        for (int i : idx) out.shift_values.push_back(data.shift_values.at(static_cast<std::size_t>(i)));
    }
    return out;
}

LabeledDataset strip_labels(const LabeledDataset& data) {
    LabeledDataset out = data;
    out.labels.clear();
    return out;
}

MatF one_hot(const std::vector<int>& labels, int num_classes) {
    if (num_classes < 1) throw ShapeError("one_hot needs num_classes >= 1");
    MatF t(static_cast<int>(labels.size()), num_classes);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] < 0 || labels[r] >= num_classes) throw ShapeError("label out of range");
        t.at(static_cast<int>(r), labels[r]) = 1.0f;
    }
    return t;
}

// ---------------------------------------------------------------------------
// Binary format
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'G', 'D', 'A', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

float get_f32(std::istream& in) {
    const std::uint32_t bits = get_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void save_dataset_binary(const LabeledDataset& data, const std::string& path) {
    data.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open dataset for writing: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    put_u32(out, static_cast<std::uint32_t>(data.dim()));
    put_u32(out, static_cast<std::uint32_t>(data.num_classes));
    const unsigned char flags[4] = {static_cast<unsigned char>(data.has_labels() ? 1 : 0),
                                    static_cast<unsigned char>(data.has_shift() ? 1 : 0), 0, 0};
    out.write(reinterpret_cast<const char*>(flags), 4);
    for (float v : data.features.data) put_f32(out, v);
    if (data.has_labels())
        for (int y : data.labels) put_u32(out, static_cast<std::uint32_t>(y));
    if (data.has_shift())
        for (float v : data.shift_values) put_f32(out, v);
    if (!out) throw ConfigError("write failed: " + path);
}

LabeledDataset load_dataset_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dataset: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError("not a binary dataset file: " + path);
    if (get_u32(in) != kVersion) throw ConfigError("unsupported dataset version: " + path);
    const std::uint32_t n = get_u32(in);
    const std::uint32_t d = get_u32(in);
    const std::uint32_t k = get_u32(in);
    unsigned char flags[4];
    in.read(reinterpret_cast<char*>(flags), 4);
    if (!in) throw ConfigError("truncated dataset header: " + path);

    LabeledDataset data;
    data.num_classes = static_cast<int>(k);
    data.features = MatF(static_cast<int>(n), static_cast<int>(d));
    for (float& v : data.features.data) v = get_f32(in);
    if (flags[0]) {
        data.labels.resize(n);
        for (int& y : data.labels) y = static_cast<int>(get_u32(in));
    }
    if (flags[1]) {
        data.shift_values.resize(n);
        for (float& v : data.shift_values) v = get_f32(in);
    }
    if (!in) throw ConfigError("truncated dataset payload: " + path);
    data.validate();
    return data;
}

// ---------------------------------------------------------------------------
// JSON format
// ---------------------------------------------------------------------------

void save_dataset_json(const LabeledDataset& data, const std::string& path) {
    data.validate();
    nlohmann::json j;
    j["format"] = "gradapt-dataset";
    j["version"] = 1;
    j["n"] = data.size();
    j["d"] = data.dim();
    j["k"] = data.num_classes;
    j["features"] = data.features.data;
    if (data.has_labels()) j["labels"] = data.labels;
    if (data.has_shift()) j["shift_values"] = data.shift_values;
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open dataset for writing: " + path);
    out << j.dump() << '\n';
    if (!out) throw ConfigError("write failed: " + path);
}

LabeledDataset load_dataset_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("dataset JSON parse error in " + path + ": " + e.what());
    }
    if (j.value("format", "") != "gradapt-dataset") throw ConfigError("not a dataset file: " + path);
    if (j.value("version", 0) != 1) throw ConfigError("unsupported dataset version: " + path);
    LabeledDataset data;
    const int n = j.at("n").get<int>();
    const int d = j.at("d").get<int>();
    data.num_classes = j.at("k").get<int>();
    data.features = MatF(n, d);
    data.features.data = j.at("features").get<std::vector<float>>();
    if (static_cast<std::size_t>(n) * d != data.features.data.size())
        throw ConfigError("dataset feature count mismatch: " + path);
    if (j.contains("labels")) data.labels = j.at("labels").get<std::vector<int>>();
    if (j.contains("shift_values")) data.shift_values = j.at("shift_values").get<std::vector<float>>();
    data.validate();
    return data;
}

void save_dataset(const LabeledDataset& data, const std::string& path) {
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0)
        save_dataset_json(data, path);
    else
        save_dataset_binary(data, path);
}

LabeledDataset load_dataset(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw ConfigError("cannot open dataset: " + path);
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    probe.close();
    if (std::memcmp(magic, kMagic, 4) == 0) return load_dataset_binary(path);
    return load_dataset_json(path);
}

}  // namespace gradapt
