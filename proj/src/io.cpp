#include "otfuse/io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace otfuse {

namespace {

void put_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw DataError("truncated tensor file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32le(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32le(os, bits);
}

float get_f32le(std::istream& is) {
    std::uint32_t bits = get_u32le(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ofstream os(path, mode);
    if (!os) throw DataError("cannot open for writing: " + path.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ifstream is(path, mode);
    if (!is) throw DataError("cannot open for reading: " + path.string());
    return is;
}

// 32-bit storage precision for all file formats
std::string fmt_f32(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(static_cast<float>(v)));
    return buf;
}

void write_vec(std::ostream& os, const Vec& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ' ';
        os << fmt_f32(v[i]);
    }
}

Vec parse_floats(std::istringstream& iss, std::size_t n, const char* what) {
    Vec v(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x;
        if (!(iss >> x)) throw DataError(std::string("malformed ") + what);
        v[i] = static_cast<double>(static_cast<float>(x));
    }
    return v;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string join_commas(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += v[i];
    }
    return out;
}

}  // namespace

void write_feature_map(const std::filesystem::path& path, const FeatureMap& fm) {
    std::ofstream os = open_out(path, std::ios::binary);
    os.write("FTN1", 4);
    put_u32le(os, static_cast<std::uint32_t>(fm.height));
    put_u32le(os, static_cast<std::uint32_t>(fm.width));
    put_u32le(os, static_cast<std::uint32_t>(fm.channels));
    for (double v : fm.data) put_f32le(os, static_cast<float>(v));
    if (!os) throw DataError("write failed: " + path.string());
}

FeatureMap read_feature_map(const std::filesystem::path& path) {
    std::ifstream is = open_in(path, std::ios::binary);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FTN1", 4) != 0)
        throw DataError("not a FTN1 tensor file: " + path.string());
    std::uint32_t h = get_u32le(is), w = get_u32le(is), c = get_u32le(is);
    FeatureMap fm(h, w, c);
    for (double& v : fm.data) v = static_cast<double>(get_f32le(is));
    return fm;
}

namespace {

void write_head(std::ostream& os, const char* name, const LinearHead& head,
                const std::vector<std::string>& categories) {
    os << "temperature " << name << ' ' << fmt_f32(head.tau) << '\n';
    for (std::size_t i = 0; i < head.text_embeddings.rows; ++i) {
        os << "text_embeddings " << name << ' ' << categories[i] << ' ';
        write_vec(os, head.text_embeddings.row(i));
        os << '\n';
    }
}

}  // namespace

void write_prototype_bundle(const std::filesystem::path& path, const PrototypeBundle& b) {
    b.table.validate();
    std::ofstream os = open_out(path, std::ios::out);
    const PrototypeTable& t = b.table;
    os << "otfuse-prototype-table v1\n";
    os << "version 1\n";
    os << "embedding_dim " << t.embedding_dim << '\n';
    os << "classes " << t.num_classes << '\n';
    os << "attributes weather " << join_commas(t.attribute_space.weather) << '\n';
    os << "attributes time_of_day " << join_commas(t.attribute_space.time_of_day) << '\n';
    os << "attributes road_type " << join_commas(t.attribute_space.road_type) << '\n';
    write_head(os, "weather", b.weather, t.attribute_space.weather);
    write_head(os, "time_of_day", b.time_of_day, t.attribute_space.time_of_day);
    write_head(os, "road_type", b.road_type, t.attribute_space.road_type);
    for (std::size_t k = 0; k < t.num_classes; ++k) {
        os << "meta " << k << ' ';
        write_vec(os, t.meta[k]);
        os << '\n';
    }
    for (std::size_t s = 0; s < t.prototypes.size(); ++s) {
        const std::string key = t.attribute_space.combination_key(s);
        for (std::size_t k = 0; k < t.num_classes; ++k) {
            os << "prototype " << key << ' ' << k << ' ';
            write_vec(os, t.prototypes[s][k]);
            os << '\n';
        }
    }
    for (std::size_t s = 0; s < t.frozen_text_cls.size(); ++s) {
        os << "frozen " << t.attribute_space.combination_key(s) << ' ';
        write_vec(os, t.frozen_text_cls[s]);
        os << '\n';
    }
    if (!os) throw DataError("write failed: " + path.string());
}

PrototypeBundle read_prototype_bundle(const std::filesystem::path& path) {
    std::ifstream is = open_in(path, std::ios::in);
    std::string header;
    std::getline(is, header);
    if (header != "otfuse-prototype-table v1")
        throw DataError("not a prototype table file: " + path.string());

    PrototypeBundle b;
    PrototypeTable& t = b.table;
    std::size_t dim = 0, classes = 0;
    std::string line;
    std::vector<std::pair<std::string, std::pair<std::size_t, Vec>>> proto_lines;
    std::vector<std::pair<std::string, Vec>> frozen_lines;
    struct HeadLines {
        double tau = 0.07;
        std::vector<std::pair<std::string, Vec>> rows;
    };
    HeadLines head_lines[3];
    auto head_slot = [&](const std::string& name) -> HeadLines& {
        if (name == "weather") return head_lines[0];
        if (name == "time_of_day") return head_lines[1];
        if (name == "road_type") return head_lines[2];
        throw DataError("unknown attribute name: " + name);
    };

    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream iss(line);
        std::string key;
        iss >> key;
        if (key == "version") {
            int v;
            iss >> v;
            if (v != 1) throw DataError("unsupported prototype table version");
        } else if (key == "embedding_dim") {
            iss >> dim;
        } else if (key == "classes") {
            iss >> classes;
        } else if (key == "attributes") {
            std::string name, list;
            iss >> name >> list;
            auto cats = split_commas(list);
            if (name == "weather")
                t.attribute_space.weather = cats;
            else if (name == "time_of_day")
                t.attribute_space.time_of_day = cats;
            else if (name == "road_type")
                t.attribute_space.road_type = cats;
            else
                throw DataError("unknown attribute name: " + name);
        } else if (key == "temperature") {
            std::string name;
            double tau;
            iss >> name >> tau;
            head_slot(name).tau = static_cast<double>(static_cast<float>(tau));
        } else if (key == "text_embeddings") {
            std::string name, category;
            iss >> name >> category;
            head_slot(name).rows.emplace_back(category, parse_floats(iss, dim, "text embedding"));
        } else if (key == "meta") {
            std::size_t k;
            iss >> k;
            if (t.meta.size() <= k) t.meta.resize(k + 1);
            t.meta[k] = parse_floats(iss, dim, "meta embedding");
        } else if (key == "prototype") {
            std::string combo;
            std::size_t k;
            iss >> combo >> k;
            proto_lines.push_back({combo, {k, parse_floats(iss, dim, "prototype")}});
        } else if (key == "frozen") {
            std::string combo;
            iss >> combo;
            frozen_lines.push_back({combo, parse_floats(iss, dim, "frozen embedding")});
        } else {
            throw DataError("unknown key in prototype table: " + key);
        }
    }

    t.embedding_dim = dim;
    t.num_classes = classes;
    t.attribute_space.validate();

    // resolve composite keys to weather-major combination indices
    const std::size_t combos = t.attribute_space.combination_count();
    auto combo_index = [&](const std::string& key) {
        for (std::size_t s = 0; s < combos; ++s)
            if (t.attribute_space.combination_key(s) == key) return s;
        throw DataError("unknown scene combination key: " + key);
    };
    t.prototypes.assign(combos, std::vector<Vec>(classes));
    for (auto& [combo, entry] : proto_lines) {
        auto& [k, vec] = entry;
        if (k >= classes) throw DataError("prototype class index out of range");
        t.prototypes[combo_index(combo)][k] = std::move(vec);
    }
    if (!frozen_lines.empty()) {
        t.frozen_text_cls.assign(combos, Vec());
        for (auto& [combo, vec] : frozen_lines)
            t.frozen_text_cls[combo_index(combo)] = std::move(vec);
    }

    LinearHead* heads[3] = {&b.weather, &b.time_of_day, &b.road_type};
    const std::vector<std::string>* cats[3] = {&t.attribute_space.weather,
                                               &t.attribute_space.time_of_day,
                                               &t.attribute_space.road_type};
    for (int a = 0; a < 3; ++a) {
        heads[a]->tau = head_lines[a].tau;
        heads[a]->text_embeddings = Matrix(cats[a]->size(), dim);
        for (auto& [category, vec] : head_lines[a].rows) {
            auto it = std::find(cats[a]->begin(), cats[a]->end(), category);
            if (it == cats[a]->end()) throw DataError("unknown category: " + category);
            std::size_t row = static_cast<std::size_t>(it - cats[a]->begin());
            for (std::size_t c = 0; c < dim; ++c)
                heads[a]->text_embeddings(row, c) = vec[c];
        }
    }

    t.validate();
    return b;
}

void write_heads(const std::filesystem::path& path, const LinearHead& weather,
                 const LinearHead& time_of_day, const LinearHead& road_type) {
    std::ofstream os = open_out(path, std::ios::out);
    os << "otfuse-heads v1\n";
    const LinearHead* heads[3] = {&weather, &time_of_day, &road_type};
    const char* names[3] = {"weather", "time_of_day", "road_type"};
    for (int a = 0; a < 3; ++a) {
        os << "head " << names[a] << ' ' << heads[a]->text_embeddings.rows << ' '
           << heads[a]->text_embeddings.cols << ' ' << fmt_f32(heads[a]->tau) << '\n';
        for (std::size_t i = 0; i < heads[a]->text_embeddings.rows; ++i) {
            write_vec(os, heads[a]->text_embeddings.row(i));
            os << '\n';
        }
    }
    if (!os) throw DataError("write failed: " + path.string());
}

void read_heads(const std::filesystem::path& path, LinearHead& weather,
                LinearHead& time_of_day, LinearHead& road_type) {
    std::ifstream is = open_in(path, std::ios::in);
    std::string header;
    std::getline(is, header);
    if (header != "otfuse-heads v1") throw DataError("not a heads file: " + path.string());
    LinearHead* heads[3] = {&weather, &time_of_day, &road_type};
    const char* names[3] = {"weather", "time_of_day", "road_type"};
    for (int a = 0; a < 3; ++a) {
        std::string key, name;
        std::size_t rows, cols;
        double tau;
        is >> key >> name >> rows >> cols >> tau;
        if (!is || key != "head" || name != names[a])
            throw DataError("malformed heads file: " + path.string());
        heads[a]->tau = static_cast<double>(static_cast<float>(tau));
        heads[a]->text_embeddings = Matrix(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t c = 0; c < cols; ++c) {
                double x;
                if (!(is >> x)) throw DataError("malformed heads file: " + path.string());
                heads[a]->text_embeddings(i, c) = static_cast<double>(static_cast<float>(x));
            }
    }
}

void write_mask_pgm(const std::filesystem::path& path, const TraversabilityMask& mask) {
    std::ofstream os = open_out(path, std::ios::binary);
    os << "P5\n" << mask.width << ' ' << mask.height << "\n65535\n";
    for (double v : mask.soft) {
        auto q = static_cast<std::uint16_t>(std::min(65535.0, std::max(0.0, v * 65535.0 + 0.5)));
        unsigned char b[2] = {static_cast<unsigned char>(q >> 8),
                              static_cast<unsigned char>(q & 0xff)};
        os.write(reinterpret_cast<const char*>(b), 2);
    }
    if (!os) throw DataError("write failed: " + path.string());
}

void write_mask_pbm(const std::filesystem::path& path, const TraversabilityMask& mask) {
    std::ofstream os = open_out(path, std::ios::binary);
    os << "P4\n" << mask.width << ' ' << mask.height << '\n';
    for (std::size_t y = 0; y < mask.height; ++y) {
        for (std::size_t x = 0; x < mask.width; x += 8) {
            unsigned char byte = 0;
            for (std::size_t bit = 0; bit < 8 && x + bit < mask.width; ++bit)
                if (mask.binary[y * mask.width + x + bit]) byte |= 0x80u >> bit;
            os.put(static_cast<char>(byte));
        }
    }
    if (!os) throw DataError("write failed: " + path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os = open_out(path, std::ios::binary);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw DataError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream is = open_in(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace otfuse
