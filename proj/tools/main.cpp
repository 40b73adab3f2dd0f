#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "commands.hpp"

using cisnet::cli::AblateOptions;
using cisnet::cli::CamOptions;
using cisnet::cli::CommonOptions;
using cisnet::cli::EvalOptions;
using cisnet::cli::PrepareOptions;
using cisnet::cli::TrainOptions;
using cisnet::cli::UsageError;

namespace {

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--out-dir", common.out_dir, "Output directory");
  cmd->add_option("--config", common.config_path, "key = value config file");
  cmd->add_option("--set", common.overrides, "Override a config key (section.key=value)");
  cmd->add_option("--seed", common.seed, "Master seed")->each([&common](const std::string&) {
    common.seed_given = true;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CIS-Net steganalysis toolkit"};
  app.require_subcommand(1);

  CommonOptions common;
  int result = 0;

  // verify-variance
  std::string alphas = "0.5,1,2", scales = "0.5,1,2", thresholds = "1,3,5";
  int64_t samples = 1000000;
  CLI::App* verify = app.add_subcommand(
      "verify-variance", "Check the truncation variance identities on a parameter grid");
  add_common(verify, common);
  verify->add_option("--alpha", alphas, "Comma list of shape parameters");
  verify->add_option("--s", scales, "Comma list of scale parameters");
  verify->add_option("--T", thresholds, "Comma list of truncation thresholds");
  verify->add_option("--samples", samples, "Monte-Carlo draws per grid row");
  verify->callback([&] {
    result = cisnet::cli::cmd_verify_variance(common, alphas, scales, thresholds, samples);
  });

  // prepare
  PrepareOptions prepare_opts;
  CLI::App* prepare =
      app.add_subcommand("prepare", "Materialize cover/stego datasets and manifests");
  add_common(prepare, common);
  prepare->add_option("--covers", prepare_opts.covers_dir, "Directory of P5 .pgm covers");
  prepare->add_option("--synthetic", prepare_opts.synthetic,
                      "Generate this many synthetic covers instead");
  prepare->add_option("--size", prepare_opts.size,
                      "Cover extent (synthetic size / center-crop target)");
  prepare->add_option("--payloads", prepare_opts.payloads,
                      "Comma list of payloads (bpp), strictly decreasing");
  prepare->add_option("--train-fraction", prepare_opts.train_fraction, "Training split share");
  prepare->add_flag("--augment", prepare_opts.augment,
                    "Add 90/180/270-degree rotations of training covers before embedding");
  prepare->add_option("--embedder", prepare_opts.embedder, "adaptive | lsb");
  prepare->callback([&] { result = cisnet::cli::cmd_prepare(common, prepare_opts); });

  // train
  TrainOptions train_opts;
  CLI::App* train = app.add_subcommand("train", "Train a detector on a prepared manifest");
  add_common(train, common);
  train->add_option("--manifest", train_opts.manifest, "Training manifest");
  train->add_option("--resume", train_opts.resume, "Checkpoint to continue from");
  train->add_option("--curriculum", train_opts.curriculum,
                    "Payload chain high->low (uses --data-dir manifests)");
  train->add_option("--data-dir", train_opts.data_dir, "prepare output dir (curriculum)");
  train->add_option("--epochs", train_opts.epochs_override, "Override train.epochs");
  train->callback([&] { result = cisnet::cli::cmd_train(common, train_opts); });

  // ablate
  AblateOptions ablate_opts;
  CLI::App* ablate = app.add_subcommand("ablate", "Sweep T or (gamma1,gamma2) and report P_E");
  add_common(ablate, common);
  ablate->add_option("--axis", ablate_opts.axis, "T | gamma")->required();
  ablate->add_option("--values", ablate_opts.values,
                     "T: comma list (inf allowed); gamma: comma list of g1:g2");
  ablate->add_option("--manifest", ablate_opts.manifest, "Training manifest");
  ablate->add_option("--test-manifest", ablate_opts.test_manifest, "Held-out manifest");
  ablate->add_option("--epochs", ablate_opts.epochs_override, "Override train.epochs");
  ablate->callback([&] { result = cisnet::cli::cmd_ablate(common, ablate_opts); });

  // eval
  EvalOptions eval_opts;
  CLI::App* evaluate = app.add_subcommand("eval", "Score a manifest and report P_E/ROC/AUC");
  add_common(evaluate, common);
  evaluate->add_option("--checkpoint", eval_opts.checkpoint, "Trained checkpoint");
  evaluate->add_option("--manifest", eval_opts.manifest, "Manifest to score");
  evaluate->add_option("--train-manifest", eval_opts.train_manifest,
                       "Also score the training manifest and report the gap");
  evaluate->callback([&] { result = cisnet::cli::cmd_eval(common, eval_opts); });

  // cam
  CamOptions cam_opts;
  CLI::App* cam = app.add_subcommand("cam", "Export class activation maps as PGM heat images");
  add_common(cam, common);
  cam->add_option("--checkpoint", cam_opts.checkpoint, "Trained checkpoint");
  cam->add_option("--manifest", cam_opts.manifest, "Manifest of images to map");
  cam->add_option("--count", cam_opts.count, "Number of images (0 = all)");
  cam->add_option("--class-index", cam_opts.class_index, "0 cover, 1 stego");
  cam->add_flag("--post-map", cam_opts.post_map,
                "Apply the pooling post-map to the features before weighting");
  cam->callback([&] { result = cisnet::cli::cmd_cam(common, cam_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return result;
}
