#include "mrecnn/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mrecnn/error.hpp"

namespace mrecnn {

namespace {

using nlohmann::json;

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

} // namespace

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str(), path);
}

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw UsageError("config \"" + origin + "\": " + e.what());
    }
    if (!j.is_object()) throw UsageError("config \"" + origin + "\" must be a JSON object");

    static const std::set<std::string> known = {
        "arch",        "input_size", "channel_scale", "fc_widths",     "num_classes",
        "region",      "base_lr",    "iterations",    "batch_size",    "momentum",
        "weight_decay", "decay_lr",  "augment",       "augment_margin", "seed",
        "dataset_mean", "manifest",  "out_dir",
    };
    for (const auto& item : j.items()) {
        if (!known.count(item.key())) {
            throw UsageError("config \"" + origin + "\": unknown key \"" + item.key() + "\"");
        }
    }

    RunConfig cfg;
    try {
        take(j, "arch", cfg.arch);
        take(j, "input_size", cfg.input_size);
        take(j, "channel_scale", cfg.channel_scale);
        take(j, "fc_widths", cfg.fc_widths);
        take(j, "num_classes", cfg.num_classes);
        take(j, "region", cfg.region);
        take(j, "base_lr", cfg.base_lr);
        take(j, "iterations", cfg.iterations);
        take(j, "batch_size", cfg.batch_size);
        take(j, "momentum", cfg.momentum);
        take(j, "weight_decay", cfg.weight_decay);
        take(j, "decay_lr", cfg.decay_lr);
        take(j, "augment", cfg.augment);
        take(j, "augment_margin", cfg.augment_margin);
        take(j, "seed", cfg.seed);
        if (j.contains("dataset_mean")) {
            auto mean = j.at("dataset_mean").get<std::vector<float>>();
            if (mean.size() != 3) throw UsageError("dataset_mean must have 3 entries");
            cfg.dataset_mean = {mean[0], mean[1], mean[2]};
        }
        take(j, "manifest", cfg.manifest);
        take(j, "out_dir", cfg.out_dir);
    } catch (const json::exception& e) {
        throw UsageError("config \"" + origin + "\": " + e.what());
    }
    return cfg;
}

std::string RunConfig::to_json_text() const {
    json j;
    j["arch"] = arch;
    j["input_size"] = input_size;
    j["channel_scale"] = channel_scale;
    j["fc_widths"] = fc_widths;
    j["num_classes"] = num_classes;
    j["region"] = region;
    j["base_lr"] = base_lr;
    j["iterations"] = iterations;
    j["batch_size"] = batch_size;
    j["momentum"] = momentum;
    j["weight_decay"] = weight_decay;
    j["decay_lr"] = decay_lr;
    j["augment"] = augment;
    j["augment_margin"] = augment_margin;
    j["seed"] = seed;
    j["dataset_mean"] = std::vector<float>{dataset_mean[0], dataset_mean[1], dataset_mean[2]};
    j["manifest"] = manifest;
    j["out_dir"] = out_dir;
    return j.dump(2) + "\n";
}

ArchSpec RunConfig::arch_spec() const {
    ArchSpec spec;
    try {
        spec.family = arch_family_from_string(arch);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    spec.input_size = input_size;
    spec.channel_scale = channel_scale;
    spec.fc_widths = fc_widths;
    spec.num_classes = num_classes;
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return spec;
}

TrainOptions RunConfig::train_options() const {
    TrainOptions opt;
    opt.arch = arch_spec();
    try {
        opt.region = region_from_string(region);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    opt.base_lr = base_lr;
    opt.momentum = momentum;
    opt.weight_decay = weight_decay;
    opt.batch_size = batch_size;
    opt.iterations = iterations;
    opt.decay_lr = decay_lr;
    opt.augment = augment;
    opt.augment_margin = augment_margin;
    opt.mean = dataset_mean;
    opt.seed = seed;
    return opt;
}

} // namespace mrecnn
