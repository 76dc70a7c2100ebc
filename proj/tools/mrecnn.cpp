// mrecnn: multi-region ensemble CNN pipeline
//   preprocess        landmark alignment and region cropping
//   train             one dual-input sub-network
//   eval              three-subnet weighted ensemble, still or clip protocol
//   predict           single sample through the ensemble
//   inspect-features  feature-map export
//
// Exit status: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <iostream>

#include <CLI11.hpp>

#include "mrecnn/checkpoint.hpp"
#include "mrecnn/commands.hpp"
#include "mrecnn/error.hpp"

namespace {

std::array<float, 3> parse_mean(const std::vector<double>& v) {
    if (v.empty()) return {0.0f, 0.0f, 0.0f};
    if (v.size() != 3) throw mrecnn::UsageError("--mean expects three values");
    return {static_cast<float>(v[0]), static_cast<float>(v[1]), static_cast<float>(v[2])};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-region ensemble CNN for 7-class facial expression recognition"};
    app.require_subcommand(1);

    // preprocess
    mrecnn::PreprocessArgs pre;
    auto* cmd_pre = app.add_subcommand("preprocess", "align faces and crop regions");
    cmd_pre->add_option("--manifest", pre.manifest, "CSV: image,landmarks,label,clip_id")->required();
    cmd_pre->add_option("--out", pre.out_dir, "output directory")->required();
    cmd_pre->add_option("--size", pre.out_size, "crop size in pixels");
    cmd_pre->add_flag("--augment-offline", pre.augment_offline, "emit the 15 offline variants per crop");
    cmd_pre->add_flag("--strict", pre.strict, "fail if any manifest row fails");
    cmd_pre->add_option("--seed", pre.seed, "seed for augmentation noise");

    // train
    std::string train_config_path;
    mrecnn::RunConfig cfg;
    std::vector<double> train_mean;
    auto* cmd_train = app.add_subcommand("train", "train one sub-network");
    cmd_train->add_option("--config", train_config_path, "JSON run config");
    auto* opt_manifest = cmd_train->add_option("--manifest", cfg.manifest, "pair manifest CSV");
    auto* opt_out = cmd_train->add_option("--out", cfg.out_dir, "output directory");
    auto* opt_arch = cmd_train->add_option("--arch", cfg.arch, "vgg16 | alexnet");
    auto* opt_size = cmd_train->add_option("--input-size", cfg.input_size, "square input extent");
    auto* opt_scale = cmd_train->add_option("--channel-scale", cfg.channel_scale, "channel multiplier in (0,1]");
    auto* opt_region = cmd_train->add_option("--region", cfg.region, "left_eye | nose | mouth");
    auto* opt_lr = cmd_train->add_option("--base-lr", cfg.base_lr, "base learning rate");
    auto* opt_iters = cmd_train->add_option("--iterations", cfg.iterations, "training iterations");
    auto* opt_batch = cmd_train->add_option("--batch-size", cfg.batch_size, "mini-batch size");
    auto* opt_momentum = cmd_train->add_option("--momentum", cfg.momentum, "SGD momentum");
    auto* opt_wd = cmd_train->add_option("--weight-decay", cfg.weight_decay, "weight decay");
    auto* opt_seed = cmd_train->add_option("--seed", cfg.seed, "run seed");
    auto* opt_augment = cmd_train->add_flag("--augment", cfg.augment, "on-the-fly crop + flip");
    auto* opt_no_decay = cmd_train->add_flag("--no-lr-decay", "keep the learning rate constant");
    auto* opt_train_mean = cmd_train->add_option("--mean", train_mean, "per-channel dataset mean");

    // eval
    mrecnn::EvalArgs ev;
    std::vector<std::string> eval_ckpts, eval_manifests;
    std::vector<double> eval_mean;
    auto* cmd_eval = app.add_subcommand("eval", "evaluate the three-subnet ensemble");
    cmd_eval->add_option("--checkpoints", eval_ckpts, "left_eye, nose, mouth checkpoints")
        ->required()
        ->expected(3)
        ->delimiter(',');
    cmd_eval->add_option("--manifests", eval_manifests, "left_eye, nose, mouth pair manifests")
        ->required()
        ->expected(3)
        ->delimiter(',');
    cmd_eval->add_option("--weights", ev.weights, "preset (vgg | alexnet) or \"eye,nose,mouth\"");
    cmd_eval->add_option("--protocol", ev.protocol, "still | clip");
    cmd_eval->add_option("--out", ev.report_path, "report CSV path (stdout when omitted)");
    cmd_eval->add_option("--batch-size", ev.batch_size, "inference batch size");
    cmd_eval->add_option("--mean", eval_mean, "per-channel dataset mean");

    // predict
    mrecnn::PredictArgs pr;
    std::vector<std::string> pred_ckpts;
    std::vector<double> pred_mean;
    auto* cmd_pred = app.add_subcommand("predict", "classify one sample");
    cmd_pred->add_option("--checkpoints", pred_ckpts, "left_eye, nose, mouth checkpoints")
        ->required()
        ->expected(3)
        ->delimiter(',');
    cmd_pred->add_option("--face", pr.face, "whole-face image")->required();
    cmd_pred->add_option("--eye", pr.regions[0], "left-eye crop")->required();
    cmd_pred->add_option("--nose", pr.regions[1], "nose crop")->required();
    cmd_pred->add_option("--mouth", pr.regions[2], "mouth crop")->required();
    cmd_pred->add_option("--weights", pr.weights, "preset or \"eye,nose,mouth\"");
    cmd_pred->add_option("--mean", pred_mean, "per-channel dataset mean");

    // inspect-features
    mrecnn::InspectArgs ins;
    std::vector<double> ins_mean;
    auto* cmd_ins = app.add_subcommand("inspect-features", "export feature maps as PGM tiles");
    cmd_ins->add_option("--checkpoint", ins.checkpoint, "sub-network checkpoint")->required();
    cmd_ins->add_option("--face", ins.face, "whole-face image")->required();
    cmd_ins->add_option("--region", ins.region, "region image")->required();
    cmd_ins->add_option("--layer", ins.layer, "e.g. face/conv1_1")->required();
    cmd_ins->add_option("--out", ins.out_dir, "output directory")->required();
    cmd_ins->add_option("--mean", ins_mean, "per-channel dataset mean");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 1;
    }

    try {
        if (cmd_pre->parsed()) {
            mrecnn::run_preprocess(pre, std::cerr);
        } else if (cmd_train->parsed()) {
            mrecnn::RunConfig effective;
            if (!train_config_path.empty()) {
                effective = mrecnn::RunConfig::from_json_file(train_config_path);
            }
            // flags override config-file values
            if (opt_manifest->count()) effective.manifest = cfg.manifest;
            if (opt_out->count()) effective.out_dir = cfg.out_dir;
            if (opt_arch->count()) effective.arch = cfg.arch;
            if (opt_size->count()) effective.input_size = cfg.input_size;
            if (opt_scale->count()) effective.channel_scale = cfg.channel_scale;
            if (opt_region->count()) effective.region = cfg.region;
            if (opt_lr->count()) effective.base_lr = cfg.base_lr;
            if (opt_iters->count()) effective.iterations = cfg.iterations;
            if (opt_batch->count()) effective.batch_size = cfg.batch_size;
            if (opt_momentum->count()) effective.momentum = cfg.momentum;
            if (opt_wd->count()) effective.weight_decay = cfg.weight_decay;
            if (opt_seed->count()) effective.seed = cfg.seed;
            if (opt_augment->count()) effective.augment = true;
            if (opt_no_decay->count()) effective.decay_lr = false;
            if (opt_train_mean->count()) effective.dataset_mean = parse_mean(train_mean);
            mrecnn::run_train({effective}, std::cerr);
        } else if (cmd_eval->parsed()) {
            std::copy(eval_ckpts.begin(), eval_ckpts.end(), ev.checkpoints.begin());
            std::copy(eval_manifests.begin(), eval_manifests.end(), ev.manifests.begin());
            ev.mean = parse_mean(eval_mean);
            mrecnn::run_eval(ev, ev.report_path.empty() ? std::cout : std::cerr);
        } else if (cmd_pred->parsed()) {
            std::copy(pred_ckpts.begin(), pred_ckpts.end(), pr.checkpoints.begin());
            pr.mean = parse_mean(pred_mean);
            mrecnn::run_predict(pr, std::cout);
        } else if (cmd_ins->parsed()) {
            ins.mean = parse_mean(ins_mean);
            mrecnn::run_inspect_features(ins, std::cerr);
        }
    } catch (const mrecnn::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const mrecnn::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const mrecnn::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const mrecnn::CheckpointError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::logic_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
