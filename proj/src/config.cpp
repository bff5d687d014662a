#include "otfuse/config.hpp"

#include <algorithm>
#include <sstream>

#include "otfuse/io.hpp"

namespace otfuse {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string join(const std::vector<std::string>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

}  // namespace

void ExperimentConfig::validate() const {
    attributes.validate();
    if (embedding_dim == 0) throw DataError("config: embedding_dim must be positive");
    if (grid_height == 0 || grid_width == 0) throw DataError("config: empty grid");
    if (!(sinkhorn.epsilon > 0.0)) throw DataError("config: epsilon must be positive");
    if (!(sinkhorn.tolerance > 0.0)) throw DataError("config: tolerance must be positive");
    if (lambda < 0.0 || lambda > 1.0) throw DataError("config: lambda outside [0,1]");
    loss_weights.validate();
    if (samples_per_combination == 0) throw DataError("config: samples_per_combination zero");
    train_combination_indices();  // throws on unknown combination keys
}

std::vector<std::size_t> ExperimentConfig::train_combination_indices() const {
    std::vector<std::size_t> out;
    const std::size_t combos = attributes.combination_count();
    for (const std::string& key : train_combinations) {
        bool found = false;
        for (std::size_t s = 0; s < combos; ++s) {
            if (attributes.combination_key(s) == key) {
                out.push_back(s);
                found = true;
                break;
            }
        }
        if (!found) throw DataError("config: train combination not in attribute space: " + key);
    }
    return out;
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream os;
    os << "otfuse-config v1\n";
    os << "weather " << join(attributes.weather, ',') << '\n';
    os << "time_of_day " << join(attributes.time_of_day, ',') << '\n';
    os << "road_type " << join(attributes.road_type, ',') << '\n';
    os << "embedding_dim " << embedding_dim << '\n';
    os << "grid " << grid_height << 'x' << grid_width << '\n';
    os << "epsilon " << sinkhorn.epsilon << '\n';
    os << "max_iters " << sinkhorn.max_iters << '\n';
    os << "tolerance " << sinkhorn.tolerance << '\n';
    os << "lambda " << lambda << '\n';
    os << "lambda_cls " << loss_weights.lambda_cls << '\n';
    os << "lambda_bce " << loss_weights.lambda_bce << '\n';
    os << "lambda_dice " << loss_weights.lambda_dice << '\n';
    os << "lambda_1 " << loss_weights.lambda_1 << '\n';
    os << "lambda_2 " << loss_weights.lambda_2 << '\n';
    os << "lambda_3 " << loss_weights.lambda_3 << '\n';
    os << "seed " << seed << '\n';
    os << "train_combinations " << join(train_combinations, ',') << '\n';
    os << "samples_per_combination " << samples_per_combination << '\n';
    os << "output_dir " << output_dir << '\n';
    return os.str();
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    std::istringstream is(text);
    std::string header;
    std::getline(is, header);
    if (header != "otfuse-config v1") throw DataError("config: missing version header");

    ExperimentConfig cfg;
    cfg.train_combinations.clear();
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream iss(line);
        std::string key, value;
        iss >> key;
        std::getline(iss, value);
        if (!value.empty() && value.front() == ' ') value.erase(0, 1);
        if (key == "weather")
            cfg.attributes.weather = split(value, ',');
        else if (key == "time_of_day")
            cfg.attributes.time_of_day = split(value, ',');
        else if (key == "road_type")
            cfg.attributes.road_type = split(value, ',');
        else if (key == "embedding_dim")
            cfg.embedding_dim = std::stoul(value);
        else if (key == "grid") {
            auto parts = split(value, 'x');
            if (parts.size() != 2) throw DataError("config: grid must be HxW");
            cfg.grid_height = std::stoul(parts[0]);
            cfg.grid_width = std::stoul(parts[1]);
        } else if (key == "epsilon")
            cfg.sinkhorn.epsilon = std::stod(value);
        else if (key == "max_iters")
            cfg.sinkhorn.max_iters = std::stoul(value);
        else if (key == "tolerance")
            cfg.sinkhorn.tolerance = std::stod(value);
        else if (key == "lambda")
            cfg.lambda = std::stod(value);
        else if (key == "lambda_cls")
            cfg.loss_weights.lambda_cls = std::stod(value);
        else if (key == "lambda_bce")
            cfg.loss_weights.lambda_bce = std::stod(value);
        else if (key == "lambda_dice")
            cfg.loss_weights.lambda_dice = std::stod(value);
        else if (key == "lambda_1")
            cfg.loss_weights.lambda_1 = std::stod(value);
        else if (key == "lambda_2")
            cfg.loss_weights.lambda_2 = std::stod(value);
        else if (key == "lambda_3")
            cfg.loss_weights.lambda_3 = std::stod(value);
        else if (key == "seed")
            cfg.seed = std::stoull(value);
        else if (key == "train_combinations")
            cfg.train_combinations = value.empty() ? std::vector<std::string>{} : split(value, ',');
        else if (key == "samples_per_combination")
            cfg.samples_per_combination = std::stoul(value);
        else if (key == "output_dir")
            cfg.output_dir = value;
        else
            throw DataError("config: unknown key: " + key);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    return parse(read_text_file(path));
}

}  // namespace otfuse
