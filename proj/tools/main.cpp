#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dabea/error.hpp"
#include "dabea/pipeline.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void add_augment_options(CLI::App* cmd, dabea::AugmentConfig& aug) {
  cmd->add_option("--k", aug.k, "augmented copies per image (copy 0 is the clean view)")
      ->capture_default_str();
  cmd->add_option("--crop-fraction", aug.crop_fraction, "crop size as a fraction of H and W")
      ->capture_default_str();
  cmd->add_option("--brightness", aug.brightness_delta_max,
                  "max brightness shift on the [0,255] scale")
      ->capture_default_str();
  cmd->add_option("--saturation-lo", aug.saturation_lo, "saturation factor lower bound")
      ->capture_default_str();
  cmd->add_option("--saturation-hi", aug.saturation_hi, "saturation factor upper bound")
      ->capture_default_str();
  cmd->add_option("--flip-prob", aug.flip_prob, "horizontal flip probability")
      ->capture_default_str();
  cmd->add_option("--seed", aug.seed, "augmentation seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dabea - data-augmentation and bagging ensemble pipeline\n"
      "Fuses per-model class-probability outputs with a trainable 1x1\n"
      "convolution and pools bagged predictions into final per-image scores."};
  app.require_subcommand(1);
  std::function<void()> run;

  // ---- pipeline ----
  dabea::PipelineConfig cfg;
  std::string channel_files_csv;
  auto* pipe = app.add_subcommand("pipeline", "run the full pipeline end to end");
  pipe->set_config("--config", "", "key = value config file; flags override keys");
  pipe->add_option("--mode", cfg.mode, "channel source: synth | stub | files")
      ->capture_default_str();
  pipe->add_option("--labels", cfg.labels, "label CSV (image_id,label)");
  pipe->add_option("--images", cfg.images, "image directory (stub mode)");
  pipe->add_option("--test-labels", cfg.test_labels, "held-out label CSV to score");
  pipe->add_option("--test-images", cfg.test_images, "held-out image directory");
  pipe->add_option("--channel-files", channel_files_csv,
                   "comma-separated prediction CSVs, one per channel (files mode)");
  pipe->add_option("--output-dir", cfg.output_dir, "artifact directory")->capture_default_str();
  pipe->add_option("--model-set", cfg.model_set, "unnorm | norm | both")->capture_default_str();
  pipe->add_option("--k", cfg.k, "augmented copies per image")->capture_default_str();
  pipe->add_option("--n", cfg.n, "bag slots per image")->capture_default_str();
  pipe->add_option("--epochs", cfg.epochs, "fusion training epochs")->capture_default_str();
  pipe->add_option("--lr", cfg.lr, "fusion Adam learning rate")->capture_default_str();
  pipe->add_option("--pool", cfg.pool, "avg | max | extreme")->capture_default_str();
  pipe->add_option("--seed", cfg.seed, "master seed; all stage seeds derive from it")
      ->capture_default_str();
  pipe->add_option("--threads", cfg.threads, "worker threads for fusion passes")
      ->capture_default_str();
  pipe->add_option("--crop-fraction", cfg.crop_fraction, "augmentation crop fraction")
      ->capture_default_str();
  pipe->add_option("--brightness", cfg.brightness_delta_max, "max brightness shift")
      ->capture_default_str();
  pipe->add_option("--saturation-lo", cfg.saturation_lo, "saturation lower bound")
      ->capture_default_str();
  pipe->add_option("--saturation-hi", cfg.saturation_hi, "saturation upper bound")
      ->capture_default_str();
  pipe->add_option("--flip-prob", cfg.flip_prob, "horizontal flip probability")
      ->capture_default_str();
  pipe->add_option("--synth-strength", cfg.synth_strength, "synthetic channel signal strength")
      ->capture_default_str();
  pipe->add_option("--synth-noise-sd", cfg.synth_noise_sd, "synthetic channel noise")
      ->capture_default_str();
  pipe->add_option("--stub-epochs", cfg.stub_epochs, "stub model training epochs")
      ->capture_default_str();
  pipe->add_option("--stub-lr0", cfg.stub_lr0, "stub model initial learning rate")
      ->capture_default_str();
  pipe->add_flag("--per-class-weights", cfg.per_class_weights,
                 "fusion extension: independent weights per class");
  pipe->add_flag("--renormalize", cfg.renormalize,
                 "renormalize ingested prediction rows instead of rejecting");
  pipe->callback([&] {
    run = [&] {
      cfg.channel_files = split_commas(channel_files_csv);
      const dabea::PipelineResult r = dabea::run_pipeline(cfg);
      std::cout << "predictions: " << r.predictions_csv << "\n"
                << "weights:     " << r.weights_file << "\n"
                << "report:      " << r.report_txt << "\n"
                << "balanced_accuracy = " << r.balanced_accuracy << "\n";
    };
  });

  // ---- augment ----
  auto* aug_cmd = app.add_subcommand("augment", "write k augmented copies of images");
  static dabea::AugmentArgs aug_args;
  aug_cmd->add_option("--input", aug_args.input, "image file or directory (.ppm/.dat)")
      ->required();
  aug_cmd->add_option("--output-dir", aug_args.out_dir, "output directory")->required();
  aug_cmd->add_option("--format", aug_args.format, "output format: dat | ppm")
      ->capture_default_str();
  aug_cmd->add_flag("--normalize", aug_args.normalize, "subtract the per-image mean first");
  add_augment_options(aug_cmd, aug_args.aug);
  aug_cmd->callback([&] { run = [&] { dabea::cmd_augment(aug_args); }; });

  // ---- split ----
  auto* split_cmd = app.add_subcommand("split", "stratified 90:10 train/validation split");
  static std::string split_labels, split_train_out, split_val_out;
  static std::uint64_t split_seed = 0;
  split_cmd->add_option("--labels", split_labels, "label CSV")->required();
  split_cmd->add_option("--seed", split_seed, "split seed")->capture_default_str();
  split_cmd->add_option("--train-out", split_train_out, "train label CSV")->required();
  split_cmd->add_option("--val-out", split_val_out, "validation label CSV")->required();
  split_cmd->callback([&] {
    run = [&] { dabea::cmd_split(split_labels, split_seed, split_train_out, split_val_out); };
  });

  // ---- stub-train ----
  auto* st_cmd = app.add_subcommand("stub-train", "train a stub base model");
  static dabea::StubTrainArgs st_args;
  st_cmd->add_option("--images", st_args.images_dir, "image directory")->required();
  st_cmd->add_option("--labels", st_args.labels_csv, "label CSV")->required();
  st_cmd->add_option("--feature-height", st_args.feature_height, "downsample height")
      ->capture_default_str();
  st_cmd->add_option("--feature-width", st_args.feature_width, "downsample width")
      ->capture_default_str();
  st_cmd->add_flag("--normalize", st_args.normalize, "train on per-image normalized pixels");
  st_cmd->add_option("--epochs", st_args.epochs, "training epochs")->capture_default_str();
  st_cmd->add_option("--lr0", st_args.lr0, "initial learning rate (0.94 staircase decay)")
      ->capture_default_str();
  st_cmd->add_option("--out", st_args.out_model, "model file")->required();
  st_cmd->callback([&] { run = [&] { dabea::cmd_stub_train(st_args); }; });

  // ---- stub-predict ----
  auto* sp_cmd = app.add_subcommand("stub-predict",
                                    "augment images and emit stub model predictions");
  static dabea::StubPredictArgs sp_args;
  sp_cmd->add_option("--model", sp_args.model_path, "model file")->required();
  sp_cmd->add_option("--images", sp_args.images_dir, "image directory")->required();
  sp_cmd->add_option("--labels", sp_args.labels_csv, "label CSV giving ids and order")
      ->required();
  sp_cmd->add_flag("--normalize", sp_args.normalize, "predict on per-image normalized pixels");
  sp_cmd->add_option("--model-id", sp_args.model_id, "model id written to the CSV")->required();
  sp_cmd->add_option("--out", sp_args.out_csv, "prediction CSV")->required();
  add_augment_options(sp_cmd, sp_args.aug);
  sp_cmd->callback([&] { run = [&] { dabea::cmd_stub_predict(sp_args); }; });

  // ---- synth ----
  auto* sy_cmd = app.add_subcommand("synth", "generate synthetic channel predictions");
  static std::string sy_labels, sy_model_id = "synth", sy_out;
  static std::size_t sy_k = 10;
  static double sy_strength = 1.2, sy_noise = 1.0;
  static std::uint64_t sy_seed = 0;
  sy_cmd->add_option("--labels", sy_labels, "label CSV")->required();
  sy_cmd->add_option("--k", sy_k, "rows per image")->capture_default_str();
  sy_cmd->add_option("--strength", sy_strength, "signal strength toward the true class")
      ->capture_default_str();
  sy_cmd->add_option("--noise-sd", sy_noise, "logit noise standard deviation")
      ->capture_default_str();
  sy_cmd->add_option("--seed", sy_seed, "generation seed")->capture_default_str();
  sy_cmd->add_option("--model-id", sy_model_id, "model id written to the CSV")
      ->capture_default_str();
  sy_cmd->add_option("--out", sy_out, "prediction CSV")->required();
  sy_cmd->callback([&] {
    run = [&] { dabea::cmd_synth(sy_labels, sy_k, sy_strength, sy_noise, sy_seed, sy_model_id, sy_out); };
  });

  // ---- bag ----
  auto* bag_cmd = app.add_subcommand("bag", "bag n output vectors per image and channel");
  static dabea::BagArgs bag_args;
  static std::string bag_preds_csv;
  bag_cmd->add_option("--predictions", bag_preds_csv,
                      "comma-separated prediction CSVs, one per channel")
      ->required();
  bag_cmd->add_option("--n", bag_args.n, "bag slots per image")->capture_default_str();
  bag_cmd->add_option("--seed", bag_args.seed, "bagging seed")->capture_default_str();
  bag_cmd->add_flag("--renormalize", bag_args.renormalize, "renormalize ingested rows");
  bag_cmd->add_option("--ids-from", bag_args.ids_from,
                      "label CSV: keep only these ids, in this order");
  bag_cmd->add_option("--out", bag_args.out_dat, "bag tensor (DAT1)")->required();
  bag_cmd->add_option("--manifest", bag_args.out_manifest, "bag manifest (JSON)")->required();
  bag_cmd->callback([&] {
    run = [&] {
      bag_args.prediction_csvs = split_commas(bag_preds_csv);
      dabea::cmd_bag(bag_args);
    };
  });

  // ---- fuse-train ----
  auto* ft_cmd = app.add_subcommand("fuse-train", "train the 1x1 convolution fusion layer");
  static dabea::FuseTrainArgs ft_args;
  ft_cmd->add_option("--bag", ft_args.bag_dat, "bag tensor (DAT1)")->required();
  ft_cmd->add_option("--manifest", ft_args.bag_manifest, "bag manifest (JSON)")->required();
  ft_cmd->add_option("--labels", ft_args.labels_csv, "label CSV")->required();
  ft_cmd->add_option("--epochs", ft_args.epochs, "training epochs")->capture_default_str();
  ft_cmd->add_option("--lr", ft_args.lr, "constant Adam learning rate")->capture_default_str();
  ft_cmd->add_option("--seed", ft_args.seed, "recorded in the weights file")
      ->capture_default_str();
  ft_cmd->add_flag("--per-class", ft_args.per_class, "independent weights per class");
  ft_cmd->add_option("--threads", ft_args.threads, "worker threads")->capture_default_str();
  ft_cmd->add_option("--out", ft_args.out_weights, "weights file")->required();
  ft_cmd->callback([&] { run = [&] { dabea::cmd_fuse_train(ft_args); }; });

  // ---- fuse-predict ----
  auto* fp_cmd = app.add_subcommand("fuse-predict", "apply fusion weights to a bag");
  static dabea::FusePredictArgs fp_args;
  fp_cmd->add_option("--bag", fp_args.bag_dat, "bag tensor (DAT1)")->required();
  fp_cmd->add_option("--manifest", fp_args.bag_manifest, "bag manifest (JSON)")->required();
  fp_cmd->add_option("--weights", fp_args.weights_path, "weights file")->required();
  fp_cmd->add_option("--threads", fp_args.threads, "worker threads")->capture_default_str();
  fp_cmd->add_option("--out", fp_args.out_dat, "fused probabilities (DAT1)")->required();
  fp_cmd->add_option("--out-manifest", fp_args.out_manifest, "fused manifest (JSON)")
      ->required();
  fp_cmd->callback([&] { run = [&] { dabea::cmd_fuse_predict(fp_args); }; });

  // ---- pool ----
  auto* pool_cmd = app.add_subcommand("pool", "pool fused per-slot probabilities per image");
  static std::string pool_dat, pool_manifest, pool_strategy = "avg", pool_out;
  pool_cmd->add_option("--input", pool_dat, "fused probabilities (DAT1)")->required();
  pool_cmd->add_option("--manifest", pool_manifest, "fused manifest (JSON)")->required();
  pool_cmd->add_option("--strategy", pool_strategy, "avg | max | extreme")
      ->capture_default_str();
  pool_cmd->add_option("--out", pool_out, "pooled predictions CSV")->required();
  pool_cmd->callback([&] {
    run = [&] {
      dabea::cmd_pool(pool_dat, pool_manifest,
                      dabea::pool_strategy_from_string(pool_strategy), pool_out);
    };
  });

  // ---- evaluate ----
  auto* ev_cmd = app.add_subcommand("evaluate", "score pooled predictions against labels");
  static std::string ev_preds, ev_labels, ev_txt, ev_json;
  ev_cmd->add_option("--predictions", ev_preds, "pooled predictions CSV")->required();
  ev_cmd->add_option("--labels", ev_labels, "label CSV")->required();
  ev_cmd->add_option("--report-out", ev_txt, "text report path")->required();
  ev_cmd->add_option("--json-out", ev_json, "JSON report path")->required();
  ev_cmd->callback([&] { run = [&] { dabea::cmd_evaluate(ev_preds, ev_labels, ev_txt, ev_json); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    run();
  } catch (const dabea::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const dabea::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
