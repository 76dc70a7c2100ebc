#include "mrecnn/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mrecnn/checkpoint.hpp"
#include "mrecnn/error.hpp"
#include "mrecnn/loss.hpp"
#include "mrecnn/preprocess.hpp"

namespace fs = std::filesystem;

namespace mrecnn {

namespace {

std::string two_digits(int v) {
    std::ostringstream out;
    out << std::setw(2) << std::setfill('0') << v;
    return out.str();
}

std::string four_digits(std::size_t v) {
    std::ostringstream out;
    out << std::setw(4) << std::setfill('0') << v;
    return out.str();
}

std::string sanitize(const std::string& name) {
    std::string out = name;
    for (char& c : out) {
        if (c == '/' || c == '\\') c = '_';
    }
    return out;
}

void copy_into_batch(const Tensor& sample, Tensor& batch, int row) {
    const std::size_t plane = sample.numel();
    std::copy(sample.data(), sample.data() + plane,
              batch.data() + static_cast<std::size_t>(row) * plane);
}

// forward a loaded pair dataset through one sub-network, in chunks
Tensor score_samples(SubNetwork& net, const std::vector<RegionSample>& samples, int batch_size,
                     const std::array<float, 3>& mean) {
    const int size = net.spec().input_size;
    const int total = static_cast<int>(samples.size());
    Tensor scores({total, net.spec().num_classes});
    for (int start = 0; start < total; start += batch_size) {
        const int n = std::min(batch_size, total - start);
        Tensor faces({n, 3, size, size});
        Tensor regions({n, 3, size, size});
        for (int b = 0; b < n; ++b) {
            copy_into_batch(to_tensor(samples[static_cast<std::size_t>(start + b)].face, mean), faces, b);
            copy_into_batch(to_tensor(samples[static_cast<std::size_t>(start + b)].region, mean),
                            regions, b);
        }
        const Tensor probs = softmax(net.forward(faces, regions, false));
        std::copy(probs.data(), probs.data() + probs.numel(),
                  scores.data() + static_cast<std::size_t>(start) * net.spec().num_classes);
    }
    return scores;
}

RegionSample load_sample(const PairRow& row, int input_size) {
    RegionSample s;
    s.face = bilinear_resize(read_pnm(row.face), input_size, input_size);
    s.region = bilinear_resize(read_pnm(row.region), input_size, input_size);
    s.label = row.label;
    s.clip_id = row.clip_id;
    return s;
}

} // namespace

EnsembleWeights parse_weights(const std::string& spec) {
    if (spec.find(',') == std::string::npos) return EnsembleWeights::preset(spec);
    std::istringstream in(spec);
    double v[3];
    char comma1 = 0, comma2 = 0;
    if (!(in >> v[0] >> comma1 >> v[1] >> comma2 >> v[2]) || comma1 != ',' || comma2 != ',') {
        throw UsageError("weights must be a preset name or \"eye,nose,mouth\" values, got \"" + spec +
                         "\"");
    }
    return EnsembleWeights::from_values(v[0], v[1], v[2]);
}

int run_preprocess(const PreprocessArgs& args, std::ostream& log) {
    if (args.out_size < 1) throw UsageError("--size must be positive");
    const auto rows = read_dataset_manifest(args.manifest);
    const Landmarks68 tmpl = canonical_template(args.out_size);

    fs::create_directories(args.out_dir);
    for (const auto& name : region_names()) {
        fs::create_directories(fs::path(args.out_dir) / name);
    }

    // pair manifests for the three sub-region datasets
    std::array<std::vector<PairRow>, 3> pairs; // left_eye, nose, mouth
    const std::array<std::string, 3> pair_regions = {"left_eye", "nose", "mouth"};

    int failures = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        try {
            const ImageBuffer img = read_pnm(row.image);
            const Landmarks68 landmarks = read_pts68(row.landmarks);
            const SimilarityTransform t = estimate_similarity(landmarks, tmpl);
            const ImageBuffer aligned = warp_resize(img, t, args.out_size);

            const std::string stem = fs::path(row.image).stem().string();
            const std::string ext = img.channels == 1 ? ".pgm" : ".ppm";
            std::array<std::vector<std::string>, 4> emitted; // per region, relative paths

            for (std::size_t r = 0; r < region_names().size(); ++r) {
                const auto& region = region_names()[r];
                const ImageBuffer crop = crop_region(aligned, region_def(region), tmpl, args.out_size);
                std::vector<ImageBuffer> variants{crop};
                if (args.augment_offline) {
                    auto extra = offline_augment(crop, Rng::derive(args.seed, i * 4 + r));
                    variants.insert(variants.end(), extra.begin(), extra.end());
                }
                for (std::size_t v = 0; v < variants.size(); ++v) {
                    const std::string rel = region + "/r" + four_digits(i) + "_" + stem + "_v" +
                                            two_digits(static_cast<int>(v)) + ext;
                    write_pnm(variants[v], (fs::path(args.out_dir) / rel).string());
                    emitted[r].push_back(rel);
                }
            }

            // face variant k pairs with region variant k
            for (std::size_t p = 0; p < pair_regions.size(); ++p) {
                const std::size_t region_idx = p + 1; // region_names() order: whole_face first
                for (std::size_t v = 0; v < emitted[0].size(); ++v) {
                    pairs[p].push_back({emitted[0][v], emitted[region_idx][v], row.label, row.clip_id});
                }
            }
        } catch (const std::exception& e) {
            ++failures;
            log << "preprocess: row " << i + 1 << " (" << row.image << "): " << e.what() << "\n";
        }
    }

    for (std::size_t p = 0; p < pair_regions.size(); ++p) {
        write_pair_manifest(pairs[p],
                            (fs::path(args.out_dir) / ("pairs_" + pair_regions[p] + ".csv")).string());
    }
    log << "preprocess: " << rows.size() - static_cast<std::size_t>(failures) << "/" << rows.size()
        << " rows written to " << args.out_dir << "\n";
    if (args.strict && failures > 0) {
        throw DataError(std::to_string(failures) + " manifest rows failed");
    }
    return failures;
}

void run_train(const TrainArgs& args, std::ostream& log) {
    const RunConfig& cfg = args.config;
    if (cfg.manifest.empty()) throw UsageError("train requires a pair manifest (--manifest)");
    if (cfg.out_dir.empty()) throw UsageError("train requires an output directory (--out)");

    const auto dataset = load_pair_dataset(cfg.manifest, cfg.input_size);
    const TrainResult result = train(cfg.train_options(), dataset);

    fs::create_directories(cfg.out_dir);
    {
        std::ofstream trace((fs::path(cfg.out_dir) / "trace.csv").string());
        if (!trace) throw DataError("cannot write trace.csv in \"" + cfg.out_dir + "\"");
        write_trace_csv(trace, result.trace);
    }
    save_checkpoint(result.net, result.opt, (fs::path(cfg.out_dir) / "checkpoint.mre").string());
    {
        std::ofstream cfg_out((fs::path(cfg.out_dir) / "config.json").string());
        if (!cfg_out) throw DataError("cannot write config.json in \"" + cfg.out_dir + "\"");
        cfg_out << cfg.to_json_text();
    }

    if (!result.trace.empty()) {
        const auto& last = result.trace.back();
        log << "train: " << result.trace.size() << " iterations, final loss " << last.loss
            << ", batch accuracy " << last.accuracy << "\n";
    }
    log << "train: checkpoint written to " << cfg.out_dir << "/checkpoint.mre\n";
}

void run_eval(const EvalArgs& args, std::ostream& log) {
    const EnsembleWeights weights = parse_weights(args.weights);
    if (args.protocol != "still" && args.protocol != "clip") {
        throw UsageError("protocol must be still or clip, got \"" + args.protocol + "\"");
    }
    if (args.batch_size < 1) throw UsageError("batch size must be positive");

    static const std::array<Region, 3> slots = {Region::left_eye, Region::nose, Region::mouth};
    std::vector<SubNetwork> nets;
    for (int i = 0; i < 3; ++i) {
        auto [net, opt] = load_checkpoint(args.checkpoints[static_cast<std::size_t>(i)]);
        if (net.region() != slots[static_cast<std::size_t>(i)]) {
            throw DataError("checkpoint \"" + args.checkpoints[static_cast<std::size_t>(i)] +
                            "\" is a " + to_string(net.region()) + " network; expected " +
                            to_string(slots[static_cast<std::size_t>(i)]));
        }
        nets.push_back(std::move(net));
    }
    const int num_classes = nets[0].spec().num_classes;
    for (const auto& net : nets) {
        if (net.spec().num_classes != num_classes) {
            throw DataError("checkpoints disagree on the number of classes");
        }
    }

    std::array<std::vector<PairRow>, 3> rows;
    for (int i = 0; i < 3; ++i) {
        rows[static_cast<std::size_t>(i)] = read_pair_manifest(args.manifests[static_cast<std::size_t>(i)]);
    }
    for (int i = 1; i < 3; ++i) {
        const auto& a = rows[0];
        const auto& b = rows[static_cast<std::size_t>(i)];
        if (a.size() != b.size()) {
            throw DataError("manifests disagree on sample count: " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()) + " (" +
                            args.manifests[static_cast<std::size_t>(i)] + ")");
        }
        for (std::size_t j = 0; j < a.size(); ++j) {
            const bool same = fs::path(a[j].face).filename() == fs::path(b[j].face).filename() &&
                              a[j].label == b[j].label && a[j].clip_id == b[j].clip_id;
            if (!same) {
                throw DataError("manifests diverge at row " + std::to_string(j + 2) + ": \"" +
                                a[j].face + "\" vs \"" + b[j].face + "\"");
            }
        }
    }

    std::array<Tensor, 3> scores;
    for (int i = 0; i < 3; ++i) {
        std::vector<RegionSample> samples;
        for (const auto& row : rows[static_cast<std::size_t>(i)]) {
            samples.push_back(load_sample(row, nets[static_cast<std::size_t>(i)].spec().input_size));
        }
        scores[static_cast<std::size_t>(i)] =
            score_samples(nets[static_cast<std::size_t>(i)], samples, args.batch_size, args.mean);
    }

    const Tensor combined = ensemble_predict(scores, weights);
    std::vector<int> labels;
    for (const auto& row : rows[0]) labels.push_back(row.label);

    ConfusionMatrix cm(num_classes);
    if (args.protocol == "still") {
        cm = confusion(argmax_rows(combined), labels, num_classes);
    } else {
        std::vector<std::string> clip_ids;
        for (std::size_t j = 0; j < rows[0].size(); ++j) {
            if (rows[0][j].clip_id.empty()) {
                throw DataError("clip protocol requires a clip_id on every row; row " +
                                std::to_string(j + 2) + " has none");
            }
            clip_ids.push_back(rows[0][j].clip_id);
        }
        const ClipScores clips = clip_average(combined, clip_ids);
        std::vector<int> clip_labels;
        for (const auto& id : clips.clip_ids) {
            int label = -1;
            for (std::size_t j = 0; j < clip_ids.size(); ++j) {
                if (clip_ids[j] != id) continue;
                if (label == -1) {
                    label = labels[j];
                } else if (label != labels[j]) {
                    throw DataError("clip \"" + id + "\" has inconsistent labels");
                }
            }
            clip_labels.push_back(label);
        }
        cm = confusion(argmax_rows(clips.scores), clip_labels, num_classes);
    }

    if (args.report_path.empty()) {
        write_report_csv(log, cm);
    } else {
        std::ofstream report(args.report_path);
        if (!report) throw DataError("cannot write report \"" + args.report_path + "\"");
        write_report_csv(report, cm);
        std::vector<int> skipped;
        const double md = mean_diagonal(cm, &skipped);
        log << "eval: mean_diagonal " << md << " over " << cm.total() << " samples ("
            << args.protocol << " protocol)";
        if (!skipped.empty()) {
            log << "; warning: " << skipped.size() << " empty classes excluded";
        }
        log << "\n";
    }
}

void run_predict(const PredictArgs& args, std::ostream& out) {
    const EnsembleWeights weights = parse_weights(args.weights);
    static const std::array<Region, 3> slots = {Region::left_eye, Region::nose, Region::mouth};

    std::array<Tensor, 3> scores;
    for (int i = 0; i < 3; ++i) {
        auto [net, opt] = load_checkpoint(args.checkpoints[static_cast<std::size_t>(i)]);
        if (net.region() != slots[static_cast<std::size_t>(i)]) {
            throw DataError("checkpoint \"" + args.checkpoints[static_cast<std::size_t>(i)] +
                            "\" is a " + to_string(net.region()) + " network; expected " +
                            to_string(slots[static_cast<std::size_t>(i)]));
        }
        const int size = net.spec().input_size;
        const Tensor face = to_tensor(bilinear_resize(read_pnm(args.face), size, size), args.mean);
        const Tensor region = to_tensor(
            bilinear_resize(read_pnm(args.regions[static_cast<std::size_t>(i)]), size, size),
            args.mean);
        scores[static_cast<std::size_t>(i)] = softmax(net.forward(face, region, false));
    }

    const Tensor combined = ensemble_predict(scores, weights);
    out << "class," << argmax_row(combined, 0) << "\n";
    out << "scores";
    out.precision(6);
    out << std::fixed;
    for (int j = 0; j < combined.extent(1); ++j) out << "," << combined.at2(0, j);
    out << "\n";
}

void run_inspect_features(const InspectArgs& args, std::ostream& log) {
    auto [net, opt] = load_checkpoint(args.checkpoint);
    const int size = net.spec().input_size;
    const Tensor face = to_tensor(bilinear_resize(read_pnm(args.face), size, size), args.mean);
    const Tensor region = to_tensor(bilinear_resize(read_pnm(args.region), size, size), args.mean);

    Tensor act;
    try {
        act = net.activation(args.layer, face, region);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const int channels = act.extent(1), h = act.extent(2), w = act.extent(3);
    fs::create_directories(args.out_dir);
    const std::string base = sanitize(args.layer);

    auto normalize_channel = [&](int c, ImageBuffer& tile) {
        float lo = act.at4(0, c, 0, 0), hi = lo;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                lo = std::min(lo, act.at4(0, c, y, x));
                hi = std::max(hi, act.at4(0, c, y, x));
            }
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                // a constant map normalizes to 0
                const double v = hi > lo ? (act.at4(0, c, y, x) - lo) / (hi - lo) : 0.0;
                tile.at(x, y, 0) = static_cast<std::uint8_t>(std::lround(255.0 * v));
            }
        }
    };

    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(channels))));
    const int grid_rows = (channels + cols - 1) / cols;
    ImageBuffer grid(cols * w, grid_rows * h, 1);

    for (int c = 0; c < channels; ++c) {
        ImageBuffer tile(w, h, 1);
        normalize_channel(c, tile);
        write_pnm(tile, (fs::path(args.out_dir) / (base + "_c" + two_digits(c) + ".pgm")).string());
        const int gx = (c % cols) * w, gy = (c / cols) * h;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                grid.at(gx + x, gy + y, 0) = tile.at(x, y, 0);
            }
        }
    }
    write_pnm(grid, (fs::path(args.out_dir) / (base + "_grid.pgm")).string());
    log << "inspect-features: wrote " << channels << " tiles for " << args.layer << " to "
        << args.out_dir << "\n";
}

} // namespace mrecnn
