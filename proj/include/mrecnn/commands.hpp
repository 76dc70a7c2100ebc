#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>

#include "mrecnn/config.hpp"
#include "mrecnn/ensemble.hpp"

namespace mrecnn {

struct PreprocessArgs {
    std::string manifest;
    std::string out_dir;
    int out_size = 224;
    bool augment_offline = false;
    bool strict = false;
    std::uint64_t seed = 0;
};
// Writes aligned whole-face and region crops plus the three per-region pair
// manifests. Returns the number of failed rows (0 when all succeeded);
// throws under --strict if any row failed.
int run_preprocess(const PreprocessArgs& args, std::ostream& log);

struct TrainArgs {
    RunConfig config;
};
// Trains one sub-network; writes checkpoint.mre, trace.csv and the effective
// config.json into config.out_dir.
void run_train(const TrainArgs& args, std::ostream& log);

struct EvalArgs {
    std::array<std::string, 3> checkpoints; // left_eye, nose, mouth
    std::array<std::string, 3> manifests;   // aligned per-region pair manifests
    std::string weights = "vgg";            // preset name or "a,b,c"
    std::string protocol = "still";         // still | clip
    std::string report_path;
    int batch_size = 16;
    std::array<float, 3> mean = {0.0f, 0.0f, 0.0f};
};
void run_eval(const EvalArgs& args, std::ostream& log);

struct PredictArgs {
    std::array<std::string, 3> checkpoints;        // left_eye, nose, mouth
    std::string face;                              // whole-face image
    std::array<std::string, 3> regions;            // eye, nose, mouth crops
    std::string weights = "vgg";
    std::array<float, 3> mean = {0.0f, 0.0f, 0.0f};
};
void run_predict(const PredictArgs& args, std::ostream& out);

struct InspectArgs {
    std::string checkpoint;
    std::string face;
    std::string region;
    std::string layer;
    std::string out_dir;
    std::array<float, 3> mean = {0.0f, 0.0f, 0.0f};
};
// Writes one min-max normalized PGM tile per channel plus a combined grid.
void run_inspect_features(const InspectArgs& args, std::ostream& log);

EnsembleWeights parse_weights(const std::string& spec);

} // namespace mrecnn
