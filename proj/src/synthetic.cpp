#include "otfuse/synthetic.hpp"

#include <cmath>

#include "otfuse/tensor.hpp"

namespace otfuse {

std::uint64_t Rng::next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double Rng::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    Rng r(seed ^ (stream * 0xd1342543de82ef95ull) ^ (index * 0xaf251af3b0f025b5ull));
    return r.next_u64();
}

namespace {

constexpr double kMetaScale = 8.0;       // meta embeddings dominate the base
constexpr double kAttrScale = 1.0;       // attribute direction norm
constexpr double kFeatureNoise = 0.05;
constexpr double kClsNoise = 0.05;
constexpr double kFocal = 100.0;
constexpr double kRampSlope = 0.02;      // focal * slope = 2 per pixel
constexpr double kNormalZThreshold = 0.6;

Vec random_direction(Rng& rng, std::size_t dim, double scale) {
    Vec v(dim);
    for (double& x : v) x = rng.next_gaussian();
    double n = norm2(v);
    for (double& x : v) x = x / n * scale;
    return v;
}

}  // namespace

PrototypeBundle make_prototype_bundle(const ExperimentConfig& cfg) {
    const AttributeSpace& sp = cfg.attributes;
    const std::size_t dim = cfg.embedding_dim;
    Rng rng(mix_seed(cfg.seed, 1, 0));

    std::vector<Vec> wdir, ddir, rdir;
    for (std::size_t i = 0; i < sp.weather.size(); ++i)
        wdir.push_back(random_direction(rng, dim, kAttrScale));
    for (std::size_t i = 0; i < sp.time_of_day.size(); ++i)
        ddir.push_back(random_direction(rng, dim, kAttrScale));
    for (std::size_t i = 0; i < sp.road_type.size(); ++i)
        rdir.push_back(random_direction(rng, dim, kAttrScale));

    // two opposed meta embeddings along one dominant axis
    Vec axis = random_direction(rng, dim, 1.0);
    Vec meta0(dim), meta1(dim);
    for (std::size_t c = 0; c < dim; ++c) {
        meta0[c] = kMetaScale * axis[c];
        meta1[c] = -kMetaScale * axis[c];
    }

    PrototypeBundle b;
    b.table.attribute_space = sp;
    b.table.embedding_dim = dim;
    b.table.num_classes = 2;
    b.table.meta = {meta0, meta1};
    const std::size_t combos = sp.combination_count();
    b.table.prototypes.assign(combos, std::vector<Vec>(2));
    for (std::size_t s = 0; s < combos; ++s) {
        auto [w, d, r] = sp.combination_unpack(s);
        for (std::size_t k = 0; k < 2; ++k) {
            Vec p(dim);
            const Vec& meta = k == 0 ? meta0 : meta1;
            for (std::size_t c = 0; c < dim; ++c)
                p[c] = wdir[w][c] + ddir[d][c] + rdir[r][c] + meta[c];
            b.table.prototypes[s][k] = std::move(p);
        }
    }

    auto build_head = [&](const std::vector<Vec>& dirs) {
        LinearHead head;
        head.tau = 0.07;
        head.text_embeddings = Matrix(dirs.size(), dim);
        for (std::size_t i = 0; i < dirs.size(); ++i)
            for (std::size_t c = 0; c < dim; ++c) head.text_embeddings(i, c) = dirs[i][c];
        return head;
    };
    b.weather = build_head(wdir);
    b.time_of_day = build_head(ddir);
    b.road_type = build_head(rdir);
    b.table.validate();
    return b;
}

SyntheticScene generate_scene(const ExperimentConfig& cfg, const PrototypeBundle& bundle,
                              std::size_t combination, std::size_t sample_index) {
    const std::size_t h = cfg.grid_height, w = cfg.grid_width, dim = cfg.embedding_dim;
    Rng rng(mix_seed(cfg.seed, 2 + combination, sample_index));
    auto [wi, di, ri] = cfg.attributes.combination_unpack(combination);

    SyntheticScene scene;
    scene.combination = combination;

    // CLS embedding: sum of attribute directions plus noise
    scene.cls_embedding.assign(dim, 0.0);
    for (std::size_t c = 0; c < dim; ++c)
        scene.cls_embedding[c] = bundle.weather.text_embeddings(wi, c) +
                                 bundle.time_of_day.text_embeddings(di, c) +
                                 bundle.road_type.text_embeddings(ri, c) +
                                 kClsNoise * rng.next_gaussian();

    // ground truth: traversable band at the bottom of the grid
    std::size_t horizon = h / 4 + static_cast<std::size_t>(rng.next_uniform() *
                                                           static_cast<double>(h / 2));
    scene.ground_truth.resize(h * w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            scene.ground_truth[y * w + x] = y >= horizon;

    // depth ramp: flat ground below the horizon, rising slope above it
    double base_depth = 4.0 + 2.0 * rng.next_uniform();
    scene.depth = Matrix(h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            scene.depth(y, x) = y >= horizon
                                    ? base_depth
                                    : base_depth + kRampSlope * static_cast<double>(horizon - y);

    FeatureMap normals = depth_to_normal(scene.depth, kFocal, kFocal);

    const std::size_t combos = cfg.attributes.combination_count();
    const auto& protos = bundle.table.prototypes[combination];
    (void)combos;

    scene.features_img = FeatureMap(h, w, dim);
    scene.features_normal = FeatureMap(h, w, dim);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t gt_class = scene.ground_truth[y * w + x] ? 0 : 1;
            const std::size_t n_class = normals.at(y, x, 2) > kNormalZThreshold ? 0 : 1;
            for (std::size_t c = 0; c < dim; ++c) {
                scene.features_img.at(y, x, c) =
                    protos[gt_class][c] + kFeatureNoise * rng.next_gaussian();
                scene.features_normal.at(y, x, c) =
                    protos[n_class][c] + kFeatureNoise * rng.next_gaussian();
            }
        }
    }

    // pre-segmentation probabilities: one-hot on the ground truth
    auto one_hot_probs = [&]() {
        PreSegProbs p;
        p.height = h;
        p.width = w;
        p.maps.assign(2, std::vector<double>(h * w, 0.0));
        for (std::size_t i = 0; i < h * w; ++i) {
            p.maps[scene.ground_truth[i] ? 0 : 1][i] = 1.0;
        }
        return p;
    };
    scene.probs_img = one_hot_probs();
    scene.probs_normal = one_hot_probs();
    return scene;
}

std::vector<LabeledEmbedding> generate_head_dataset(const ExperimentConfig& cfg,
                                                    const PrototypeBundle& bundle,
                                                    std::size_t per_combination) {
    std::vector<LabeledEmbedding> out;
    const std::size_t combos = cfg.attributes.combination_count();
    for (std::size_t s = 0; s < combos; ++s) {
        auto [wi, di, ri] = cfg.attributes.combination_unpack(s);
        for (std::size_t i = 0; i < per_combination; ++i) {
            Rng rng(mix_seed(cfg.seed, 1000 + s, i));
            Vec cls(cfg.embedding_dim);
            for (std::size_t c = 0; c < cfg.embedding_dim; ++c)
                cls[c] = bundle.weather.text_embeddings(wi, c) +
                         bundle.time_of_day.text_embeddings(di, c) +
                         bundle.road_type.text_embeddings(ri, c) +
                         kClsNoise * rng.next_gaussian();
            out.push_back(LabeledEmbedding{std::move(cls), wi, di, ri});
        }
    }
    return out;
}

}  // namespace otfuse
