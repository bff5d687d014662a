#include "otfuse/runner.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "otfuse/tensor.hpp"

namespace otfuse {

namespace fs = std::filesystem;

namespace {

std::string sample_stem(std::size_t id) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%05zu", id);
    return buf;
}

FeatureMap probs_to_map(const PreSegProbs& p) {
    FeatureMap fm(p.height, p.width, p.maps.size());
    for (std::size_t k = 0; k < p.maps.size(); ++k)
        for (std::size_t i = 0; i < p.maps[k].size(); ++i)
            fm.data[i * p.maps.size() + k] = p.maps[k][i];
    return fm;
}

PreSegProbs map_to_probs(const FeatureMap& fm) {
    PreSegProbs p;
    p.height = fm.height;
    p.width = fm.width;
    p.maps.assign(fm.channels, std::vector<double>(fm.pixels(), 0.0));
    for (std::size_t k = 0; k < fm.channels; ++k)
        for (std::size_t i = 0; i < fm.pixels(); ++i) p.maps[k][i] = fm.data[i * fm.channels + k];
    p.validate();
    return p;
}

FeatureMap mask_to_map(const std::vector<bool>& mask, std::size_t h, std::size_t w) {
    FeatureMap fm(h, w, 1);
    for (std::size_t i = 0; i < mask.size(); ++i) fm.data[i] = mask[i] ? 1.0 : 0.0;
    return fm;
}

std::vector<bool> map_to_mask(const FeatureMap& fm) {
    std::vector<bool> mask(fm.pixels());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = fm.data[i] >= 0.5;
    return mask;
}

}  // namespace

Dataset write_dataset(const ExperimentConfig& cfg, const fs::path& dir) {
    cfg.validate();
    fs::create_directories(dir / "samples");

    Dataset ds;
    ds.config = cfg;
    ds.root = dir;
    ds.bundle = make_prototype_bundle(cfg);

    write_text_file(dir / "config.txt", cfg.serialize());
    write_prototype_bundle(dir / "prototypes.txt", ds.bundle);

    std::ostringstream manifest;
    manifest << "id,combination_key,combination_index\n";
    const std::size_t combos = cfg.attributes.combination_count();
    std::size_t id = 0;
    for (std::size_t s = 0; s < combos; ++s) {
        for (std::size_t i = 0; i < cfg.samples_per_combination; ++i, ++id) {
            SyntheticScene scene = generate_scene(cfg, ds.bundle, s, i);
            const std::string stem = sample_stem(id);
            const fs::path base = dir / "samples" / stem;
            write_feature_map(fs::path(base.string() + "_img.ftn"), scene.features_img);
            write_feature_map(fs::path(base.string() + "_nrm.ftn"), scene.features_normal);
            write_feature_map(fs::path(base.string() + "_pimg.ftn"), probs_to_map(scene.probs_img));
            write_feature_map(fs::path(base.string() + "_pnrm.ftn"), probs_to_map(scene.probs_normal));
            FeatureMap cls(1, 1, scene.cls_embedding.size());
            cls.data = scene.cls_embedding;
            write_feature_map(fs::path(base.string() + "_cls.ftn"), cls);
            write_feature_map(fs::path(base.string() + "_gt.ftn"),
                              mask_to_map(scene.ground_truth, cfg.grid_height, cfg.grid_width));
            manifest << id << ',' << cfg.attributes.combination_key(s) << ',' << s << '\n';
            ds.entries.push_back(DatasetEntry{id, s, stem});
        }
    }
    write_text_file(dir / "manifest.csv", manifest.str());
    return ds;
}

Dataset load_dataset(const fs::path& dir) {
    Dataset ds;
    ds.root = dir;
    ds.config = ExperimentConfig::load(dir / "config.txt");
    ds.bundle = read_prototype_bundle(dir / "prototypes.txt");

    std::istringstream manifest(read_text_file(dir / "manifest.csv"));
    std::string line;
    std::getline(manifest, line);  // header
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        std::istringstream iss(line);
        DatasetEntry e;
        char comma;
        std::string key;
        iss >> e.id >> comma;
        std::getline(iss, key, ',');
        iss >> e.combination;
        e.stem = sample_stem(e.id);
        ds.entries.push_back(e);
    }
    if (ds.entries.empty()) throw DataError("empty dataset manifest: " + dir.string());
    return ds;
}

SyntheticScene load_scene(const Dataset& ds, const DatasetEntry& e) {
    const fs::path base = ds.root / "samples" / e.stem;
    SyntheticScene scene;
    scene.combination = e.combination;
    scene.features_img = read_feature_map(fs::path(base.string() + "_img.ftn"));
    scene.features_normal = read_feature_map(fs::path(base.string() + "_nrm.ftn"));
    scene.probs_img = map_to_probs(read_feature_map(fs::path(base.string() + "_pimg.ftn")));
    scene.probs_normal = map_to_probs(read_feature_map(fs::path(base.string() + "_pnrm.ftn")));
    scene.cls_embedding = read_feature_map(fs::path(base.string() + "_cls.ftn")).data;
    scene.ground_truth = map_to_mask(read_feature_map(fs::path(base.string() + "_gt.ftn")));
    return scene;
}

RunOutput run_pipeline(const Dataset& ds, const RunOptions& opts) {
    const ExperimentConfig& cfg = ds.config;

    LinearHead weather = ds.bundle.weather;
    LinearHead time_of_day = ds.bundle.time_of_day;
    LinearHead road_type = ds.bundle.road_type;
    if (!opts.heads_path.empty()) read_heads(opts.heads_path, weather, time_of_day, road_type);

    if (opts.dump_plans) fs::create_directories(opts.plan_dir);

    const std::size_t n = ds.entries.size();
    std::vector<EvalSample> results(n);
    std::vector<std::string> plan_dumps(n);

    auto process = [&](std::size_t idx) {
        const DatasetEntry& e = ds.entries[idx];
        SyntheticScene scene;
        try {
            scene = load_scene(ds, e);
        } catch (const std::exception& ex) {
            throw DataError("sample " + e.stem + ": " + ex.what());
        }
        ScenePosterior posterior =
            infer_scene_posterior(scene.cls_embedding, weather, time_of_day, road_type);
        Matrix anchors = synthesize_anchor(posterior, ds.bundle.table);

        FuseOptions fo;
        fo.lambda = cfg.lambda;
        fo.sinkhorn = cfg.sinkhorn;
        FeatureMap fused;
        try {
            fused = fuse(scene.features_img, scene.features_normal, scene.probs_img,
                         scene.probs_normal, anchors, fo);
        } catch (const std::exception& ex) {
            throw DataError("sample " + e.stem + ": " + ex.what());
        }

        Matrix positional(anchors.rows, anchors.cols);  // zero: no learned encoding
        Matrix queries = init_queries(anchors, positional);
        std::vector<TraversabilityMask> masks = predict_mask(queries, fused);
        // class 0 is traversable
        results[idx] =
            EvalSample{e.combination, count_confusion(masks[0].binary, scene.ground_truth)};

        if (opts.dump_plans) {
            auto [mu, rows] = build_source(scene.features_img);
            std::vector<Vec> anchor_rows;
            for (std::size_t r = 0; r < anchors.rows; ++r) anchor_rows.push_back(anchors.row(r));
            CostMatrix cost = build_cost_matrix(rows, anchor_rows);
            DiscreteDistribution nu = build_target(scene.probs_img, scene.probs_normal);
            TransportPlan plan = sinkhorn(mu, nu, cost, cfg.sinkhorn);
            plan_dumps[idx] = dump_plan(plan, cfg.sinkhorn.epsilon);
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, opts.parallel);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) process(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                        process(i);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& err : errors)
            if (err) std::rethrow_exception(err);
    }

    if (opts.dump_plans) {
        for (std::size_t i = 0; i < n; ++i)
            write_text_file(opts.plan_dir / (ds.entries[i].stem + "_plan.csv"), plan_dumps[i]);
    }

    RunOutput out;
    out.samples = std::move(results);
    out.report = split_evaluate(out.samples, cfg.train_combination_indices());
    return out;
}

std::string render_delta_svg(const EvalReport& report) {
    struct Bar {
        std::string label;
        double value;
    };
    std::vector<Bar> bars;
    if (report.known) bars.push_back({"known mIoU", report.known->mIoU});
    if (report.unknown) bars.push_back({"unknown mIoU", report.unknown->mIoU});
    if (report.delta) bars.push_back({"delta mIoU", report.delta->mIoU});
    if (bars.empty()) bars.push_back({"overall mIoU", report.overall.mIoU});

    const int bar_w = 120, gap = 40, h = 260, base_y = 220;
    const int width = gap + static_cast<int>(bars.size()) * (bar_w + gap);
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << h
        << "\">\n";
    svg << "<line x1=\"0\" y1=\"" << base_y << "\" x2=\"" << width << "\" y2=\"" << base_y
        << "\" stroke=\"black\"/>\n";
    char buf[256];
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const int x = gap + static_cast<int>(i) * (bar_w + gap);
        const double v = bars[i].value;
        const double scale = 1.8;  // 100% -> 180 px
        const int height = static_cast<int>(std::abs(v) * scale + 0.5);
        const int y = v >= 0 ? base_y - height : base_y;
        std::snprintf(buf, sizeof(buf),
                      "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\"/>\n", x, y,
                      bar_w, height, v >= 0 ? "#4a7fbd" : "#bd4a4a");
        svg << buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%d\" y=\"%d\" font-size=\"13\" text-anchor=\"middle\">%s</text>\n",
                      x + bar_w / 2, base_y + 18, bars[i].label.c_str());
        svg << buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%d\" y=\"%d\" font-size=\"13\" text-anchor=\"middle\">%.2f</text>\n",
                      x + bar_w / 2, y - 6, v);
        svg << buf;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace otfuse
