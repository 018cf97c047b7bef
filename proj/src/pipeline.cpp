#include "dabea/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dabea/error.hpp"
#include "dabea/image_io.hpp"
#include "dabea/tensor_io.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;

namespace dabea {

using detail::fmt_double;
using detail::parse_double;
using detail::parse_long;
using detail::split;
using detail::strip_cr;

StageSeeds derive_stage_seeds(std::uint64_t master) {
  auto stage = [master](std::uint64_t tag) {
    return Rng::substream(master, {tag}).next_u64();
  };
  StageSeeds s;
  s.split = stage(1);
  s.augment = stage(2);
  s.synth_base = stage(3);
  s.bag_train = stage(4);
  s.bag_eval = stage(5);
  s.fuse = stage(6);
  s.stub_base = stage(7);
  return s;
}

void cmd_split(const std::string& labels_csv, std::uint64_t seed,
               const std::string& train_out, const std::string& val_out) {
  const LabelSet labels = load_labels(labels_csv);
  const auto [train, val] = split_90_10(labels, seed);
  save_labels(train, train_out);
  save_labels(val, val_out);
}

void cmd_synth(const std::string& labels_csv, std::size_t k, double strength,
               double noise_sd, std::uint64_t seed, const std::string& model_id,
               const std::string& out_csv) {
  const LabelSet labels = load_labels(labels_csv);
  save_predictions(synth_generate(labels, k, strength, noise_sd, seed, model_id), out_csv);
}

namespace {

// Pipeline ingest: <dir>/<id>.ppm or <id>.dat, at least 8x8.
ImageTensor load_image_for_id(const std::string& dir, const std::string& id) {
  const fs::path ppm = fs::path(dir) / (id + ".ppm");
  const fs::path dat = fs::path(dir) / (id + ".dat");
  std::string chosen;
  if (fs::exists(ppm))
    chosen = ppm.string();
  else if (fs::exists(dat))
    chosen = dat.string();
  else
    throw ValidationError("no image file for id '" + id + "' under " + dir +
                          " (.ppm or .dat)");
  ImageTensor img = image_load(chosen);
  if (img.height < 8 || img.width < 8)
    throw ValidationError(chosen + ": image smaller than 8x8");
  return img;
}

}  // namespace

void cmd_stub_train(const StubTrainArgs& args) {
  const LabelSet labels = load_labels(args.labels_csv);
  std::vector<ImageTensor> images;
  images.reserve(labels.size());
  for (const auto& id : labels.image_ids) {
    ImageTensor img = load_image_for_id(args.images_dir, id);
    images.push_back(args.normalize ? per_image_normalize(img) : std::move(img));
  }
  StubFitOptions opt;
  opt.feature_height = args.feature_height;
  opt.feature_width = args.feature_width;
  opt.epochs = args.epochs;
  opt.lr0 = args.lr0;
  stub_model_save(stub_fit(images, labels, opt), args.out_model);
}

void cmd_stub_predict(const StubPredictArgs& args) {
  const StubModel model = stub_model_load(args.model_path);
  const LabelSet labels = load_labels(args.labels_csv);
  AugmentConfig cfg = args.aug;
  cfg.clamp_to_ingest_range = !args.normalize;

  PredictionSet out;
  out.model_id = args.model_id;
  out.image_ids = labels.image_ids;
  out.k = cfg.k;
  out.probs.reserve(labels.size() * cfg.k * kNumClasses);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ImageTensor img = load_image_for_id(args.images_dir, labels.image_ids[i]);
    if (args.normalize) img = per_image_normalize(img);
    const auto copies = augment(img, cfg, i);
    const PredictionSet one =
        stub_predict(model, {copies}, {labels.image_ids[i]}, args.model_id);
    out.probs.insert(out.probs.end(), one.probs.begin(), one.probs.end());
  }
  out.validate();
  save_predictions(out, args.out_csv);
}

void cmd_augment(const AugmentArgs& args) {
  if (args.format != "dat" && args.format != "ppm")
    throw ValidationError("augment: format must be dat or ppm");
  if (args.format == "ppm" && args.normalize)
    throw ValidationError("augment: normalized output cannot be saved as ppm; use dat");

  std::vector<fs::path> inputs;
  if (fs::is_directory(args.input)) {
    for (const auto& e : fs::directory_iterator(args.input)) {
      const auto ext = e.path().extension().string();
      if (ext == ".ppm" || ext == ".dat") inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty())
      throw ValidationError("augment: no .ppm/.dat images under " + args.input);
  } else {
    inputs.emplace_back(args.input);
  }

  fs::create_directories(args.out_dir);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    ImageTensor img = image_load(inputs[i].string());
    if (args.normalize) img = per_image_normalize(img);
    const auto copies = augment(img, args.aug, i);
    for (std::size_t j = 0; j < copies.size(); ++j) {
      const fs::path out = fs::path(args.out_dir) /
                           (inputs[i].stem().string() + ".aug" + std::to_string(j) +
                            "." + args.format);
      image_save(copies[j], out.string());
    }
  }
}

void cmd_bag(const BagArgs& args) {
  if (args.prediction_csvs.empty())
    throw ValidationError("bag: at least one prediction file required");
  std::vector<PredictionSet> sets;
  sets.reserve(args.prediction_csvs.size());
  for (const auto& p : args.prediction_csvs) sets.push_back(load_predictions(p, args.renormalize));
  if (!args.ids_from.empty()) {
    const LabelSet ids = load_labels(args.ids_from);
    for (auto& s : sets) s = s.subset(ids.image_ids);
  }
  bag_save(bag(sets, args.n, args.seed), args.out_dat, args.out_manifest);
}

void cmd_fuse_train(const FuseTrainArgs& args) {
  const BagTensor b = bag_load(args.bag_dat, args.bag_manifest);
  const LabelSet labels = load_labels(args.labels_csv);
  FuseTrainOptions opt;
  opt.epochs = args.epochs;
  opt.lr = args.lr;
  opt.seed = args.seed;
  opt.per_class = args.per_class;
  opt.threads = args.threads;
  const FuseTrainResult r = fuse_train(b, labels, opt);

  FusionWeightsFile file;
  file.weights = r.weights;
  file.model_ids = b.source_model_ids;
  file.epochs = args.epochs;
  file.lr = args.lr;
  file.seed = args.seed;
  fusion_weights_save(file, args.out_weights);
}

namespace {

void fused_manifest_save(const std::vector<std::string>& image_ids, std::size_t n,
                         const std::string& path) {
  nlohmann::json j;
  j["format"] = "dabea-fused-manifest/1";
  j["n"] = n;
  j["image_ids"] = image_ids;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
  if (!os) throw ValidationError("write failed: " + path);
}

std::vector<std::string> fused_manifest_load(const std::string& path, std::size_t* n_out) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad JSON: " + e.what());
  }
  if (j.value("format", "") != "dabea-fused-manifest/1")
    throw ValidationError(path + ": unsupported format");
  try {
    if (n_out) *n_out = j.at("n").get<std::size_t>();
    return j.at("image_ids").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace

void cmd_fuse_predict(const FusePredictArgs& args) {
  const BagTensor b = bag_load(args.bag_dat, args.bag_manifest);
  const FusionWeightsFile file = fusion_weights_load(args.weights_path);
  if (file.model_ids != b.source_model_ids) {
    std::string want, have;
    for (const auto& id : file.model_ids) want += (want.empty() ? "" : ",") + id;
    for (const auto& id : b.source_model_ids) have += (have.empty() ? "" : ",") + id;
    throw ValidationError("fuse-predict: weights trained for models [" + want +
                          "] but bag holds [" + have + "]");
  }
  const DenseArray fused = fusion_forward(b, file.weights, args.threads);
  dat1_save(fused, args.out_dat);
  fused_manifest_save(b.image_ids, b.n, args.out_manifest);
}

void cmd_pool(const std::string& fused_dat, const std::string& fused_manifest,
              PoolStrategy strategy, const std::string& out_csv) {
  std::size_t n = 0;
  const auto ids = fused_manifest_load(fused_manifest, &n);
  const DenseArray fused = dat1_load(fused_dat);
  if (fused.shape()[1] != n)
    throw ValidationError(fused_dat + ": slot count does not match manifest");
  pooled_csv_save(predict(pool(fused, ids, strategy)), out_csv);
}

void pooled_csv_save(const Predictions& p, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << "image_id,pred,p0,p1,p2,p3,p4,p5,p6\n";
  for (std::size_t i = 0; i < p.image_ids.size(); ++i) {
    os << p.image_ids[i] << ',' << p.classes[i];
    for (std::size_t c = 0; c < kNumClasses; ++c)
      os << ',' << fmt_double(p.scores[i * kNumClasses + c]);
    os << "\n";
  }
  if (!os) throw ValidationError("write failed: " + path);
}

Predictions pooled_csv_load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line) || strip_cr(line) != "image_id,pred,p0,p1,p2,p3,p4,p5,p6")
    throw ValidationError(path + ": line 1: bad pooled predictions header");
  Predictions out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::string where = path + ": line " + std::to_string(line_no);
    const auto cols = split(line, ',');
    if (cols.size() != 9) throw ValidationError(where + ": expected 9 columns");
    out.image_ids.push_back(cols[0]);
    const long cls = parse_long(cols[1], where);
    if (cls < 0 || cls >= static_cast<long>(kNumClasses))
      throw ValidationError(where + ": pred out of range [0,6]");
    out.classes.push_back(static_cast<std::size_t>(cls));
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const double v = parse_double(cols[2 + c], where);
      out.scores.push_back(v);
      out.binary.push_back(v >= 0.5 ? 1 : 0);
    }
  }
  if (out.image_ids.empty()) throw ValidationError(path + ": no prediction rows");
  return out;
}

namespace {

MetricsReport evaluate_to_report(const std::string& pooled_csv, const std::string& labels_csv) {
  const Predictions p = pooled_csv_load(pooled_csv);
  const LabelSet labels = load_labels(labels_csv);
  return report(confusion(p.image_ids, p.classes, labels), labels.class_names);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << content;
  if (!os) throw ValidationError("write failed: " + path);
}

}  // namespace

void cmd_evaluate(const std::string& pooled_csv, const std::string& labels_csv,
                  const std::string& report_txt, const std::string& report_json) {
  const MetricsReport r = evaluate_to_report(pooled_csv, labels_csv);
  write_text_file(report_txt, r.to_text());
  write_text_file(report_json, r.to_json());
}

void PipelineConfig::validate() const {
  if (mode != "synth" && mode != "stub" && mode != "files")
    throw ValidationError("pipeline: mode must be synth, stub or files");
  if (model_set != "unnorm" && model_set != "norm" && model_set != "both")
    throw ValidationError("pipeline: model_set must be unnorm, norm or both");
  pool_strategy_from_string(pool);
  if (labels.empty()) throw ValidationError("pipeline: labels path required");
  if (!fs::exists(labels)) throw ValidationError("pipeline: labels file not found: " + labels);
  if (mode == "stub") {
    if (images.empty()) throw ValidationError("pipeline: stub mode requires images dir");
    if (!fs::is_directory(images))
      throw ValidationError("pipeline: images dir not found: " + images);
  }
  if (mode == "files" && channel_files.empty())
    throw ValidationError("pipeline: files mode requires channel prediction files");
  for (const auto& f : channel_files)
    if (!fs::exists(f)) throw ValidationError("pipeline: prediction file not found: " + f);
  if (!test_labels.empty() && !fs::exists(test_labels))
    throw ValidationError("pipeline: test labels file not found: " + test_labels);
  if (k < 1 || n < 1) throw ValidationError("pipeline: k and n must be >= 1");
  if (threads < 1) throw ValidationError("pipeline: threads must be >= 1");
}

namespace {

struct StubChannelSpec {
  std::string id;
  std::size_t feature_h, feature_w;
  bool normalize;
};

std::vector<StubChannelSpec> stub_channels(const std::string& model_set) {
  // Two stub "architectures" per set, distinguished by feature resolution.
  std::vector<StubChannelSpec> out;
  if (model_set == "unnorm" || model_set == "both") {
    out.push_back({"stub-a-unnorm", 8, 8, false});
    out.push_back({"stub-b-unnorm", 6, 6, false});
  }
  if (model_set == "norm" || model_set == "both") {
    out.push_back({"stub-a-norm", 8, 8, true});
    out.push_back({"stub-b-norm", 6, 6, true});
  }
  return out;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  fs::create_directories(config.output_dir);
  const StageSeeds seeds = derive_stage_seeds(config.seed);
  const auto out = [&](const std::string& name) {
    return (fs::path(config.output_dir) / name).string();
  };

  std::vector<std::pair<std::string, std::string>> artifacts;  // name -> path
  std::string failed_stage;

  auto write_manifest = [&]() {
    std::ostringstream os;
    os << "format = dabea-pipeline-manifest/1\n";
    os << "mode = " << config.mode << "\n";
    os << "model_set = " << config.model_set << "\n";
    os << "pool = " << config.pool << "\n";
    os << "k = " << config.k << "\n";
    os << "n = " << config.n << "\n";
    os << "epochs = " << config.epochs << "\n";
    os << "lr = " << fmt_double(config.lr) << "\n";
    os << "seed = " << config.seed << "\n";
    os << "seed_split = " << seeds.split << "\n";
    os << "seed_augment = " << seeds.augment << "\n";
    os << "seed_synth_base = " << seeds.synth_base << "\n";
    os << "seed_bag_train = " << seeds.bag_train << "\n";
    os << "seed_bag_eval = " << seeds.bag_eval << "\n";
    os << "seed_fuse = " << seeds.fuse << "\n";
    os << "seed_stub_base = " << seeds.stub_base << "\n";
    os << "fusion_train_split = internal_validation\n";
    os << "scored_split = " << (config.test_labels.empty() ? "internal_validation" : "test")
       << "\n";
    os << "status = " << (failed_stage.empty() ? "ok" : "failed") << "\n";
    if (!failed_stage.empty()) {
      os << "failed_stage = " << failed_stage << "\n";
      os << "artifacts_are_partial = 1\n";
    }
    for (const auto& [name, path] : artifacts) os << "artifact_" << name << " = " << path << "\n";
    write_text_file(out("pipeline_manifest.txt"), os.str());
  };

  auto stage = [&](const std::string& name, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      failed_stage = name;
      write_manifest();
      const std::string msg = "pipeline stage '" + name + "': " + e.what();
      if (dynamic_cast<const NumericError*>(&e)) throw NumericError(msg);
      throw ValidationError(msg);
    }
  };

  PipelineResult result;
  const std::string train_labels = out("train_labels.csv");
  const std::string val_labels = out("val_labels.csv");

  stage("split", [&] {
    cmd_split(config.labels, seeds.split, train_labels, val_labels);
    artifacts.emplace_back("train_labels", train_labels);
    artifacts.emplace_back("val_labels", val_labels);
  });

  // Channel predictions over a label file; files mode bags the ingested CSVs
  // directly (subset via ids_from), other modes generate one CSV per channel.
  auto channel_csvs = [&](const std::string& labels_csv, const std::string& prefix,
                          const std::string& images_dir) -> std::vector<std::string> {
    std::vector<std::string> csvs;
    if (config.mode == "synth") {
      const std::size_t m = config.model_set == "both" ? 4 : 2;
      for (std::size_t c = 0; c < m; ++c) {
        const std::string id = "synth-" + std::to_string(c);
        const std::string path = out(prefix + "_" + id + ".csv");
        cmd_synth(labels_csv, config.k, config.synth_strength, config.synth_noise_sd,
                  seeds.synth_base + c, id, path);
        csvs.push_back(path);
      }
    } else if (config.mode == "stub") {
      const auto specs = stub_channels(config.model_set);
      for (const auto& spec : specs) {
        StubPredictArgs args;
        args.model_path = out("model_" + spec.id + ".txt");
        args.images_dir = images_dir;
        args.labels_csv = labels_csv;
        args.aug.k = config.k;
        args.aug.crop_fraction = config.crop_fraction;
        args.aug.brightness_delta_max = config.brightness_delta_max;
        args.aug.saturation_lo = config.saturation_lo;
        args.aug.saturation_hi = config.saturation_hi;
        args.aug.flip_prob = config.flip_prob;
        args.aug.seed = seeds.augment;
        args.normalize = spec.normalize;
        args.model_id = spec.id;
        args.out_csv = out(prefix + "_" + spec.id + ".csv");
        cmd_stub_predict(args);
        csvs.push_back(args.out_csv);
      }
    } else {
      csvs = config.channel_files;
    }
    return csvs;
  };

  if (config.mode == "stub") {
    stage("stub-train", [&] {
      for (const auto& spec : stub_channels(config.model_set)) {
        StubTrainArgs args;
        args.images_dir = config.images;
        args.labels_csv = train_labels;
        args.feature_height = spec.feature_h;
        args.feature_width = spec.feature_w;
        args.normalize = spec.normalize;
        args.epochs = config.stub_epochs;
        args.lr0 = config.stub_lr0;
        args.out_model = out("model_" + spec.id + ".txt");
        cmd_stub_train(args);
        artifacts.emplace_back("model_" + spec.id, args.out_model);
      }
    });
  }

  std::vector<std::string> val_csvs;
  stage("channel-predictions-val", [&] {
    val_csvs = channel_csvs(val_labels, "val", config.images);
    for (const auto& p : val_csvs)
      if (config.mode != "files")
        artifacts.emplace_back(fs::path(p).stem().string(), p);
  });

  const std::string bag_train_dat = out("bag_train.dat");
  const std::string bag_train_json = out("bag_train.json");
  stage("bag-train", [&] {
    BagArgs args;
    args.prediction_csvs = val_csvs;
    args.n = config.n;
    args.seed = seeds.bag_train;
    args.renormalize = config.renormalize;
    if (config.mode == "files") args.ids_from = val_labels;
    args.out_dat = bag_train_dat;
    args.out_manifest = bag_train_json;
    cmd_bag(args);
    artifacts.emplace_back("bag_train", bag_train_dat);
    artifacts.emplace_back("bag_train_manifest", bag_train_json);
  });

  result.weights_file = out("fusion_weights.txt");
  stage("fuse-train", [&] {
    FuseTrainArgs args;
    args.bag_dat = bag_train_dat;
    args.bag_manifest = bag_train_json;
    args.labels_csv = val_labels;
    args.epochs = config.epochs;
    args.lr = config.lr;
    args.seed = seeds.fuse;
    args.per_class = config.per_class_weights;
    args.threads = config.threads;
    args.out_weights = result.weights_file;
    cmd_fuse_train(args);
    artifacts.emplace_back("fusion_weights", result.weights_file);
  });

  const std::string scored_labels = config.test_labels.empty() ? val_labels : config.test_labels;

  const std::string scored_images =
      config.test_labels.empty() || config.test_images.empty() ? config.images
                                                               : config.test_images;
  std::vector<std::string> eval_csvs;
  stage("channel-predictions-eval", [&] {
    eval_csvs = channel_csvs(scored_labels, "eval", scored_images);
    for (const auto& p : eval_csvs)
      if (config.mode != "files")
        artifacts.emplace_back(fs::path(p).stem().string(), p);
  });

  const std::string bag_eval_dat = out("bag_eval.dat");
  const std::string bag_eval_json = out("bag_eval.json");
  stage("bag-eval", [&] {
    BagArgs args;
    args.prediction_csvs = eval_csvs;
    args.n = config.n;
    args.seed = seeds.bag_eval;
    args.renormalize = config.renormalize;
    if (config.mode == "files") args.ids_from = scored_labels;
    args.out_dat = bag_eval_dat;
    args.out_manifest = bag_eval_json;
    cmd_bag(args);
    artifacts.emplace_back("bag_eval", bag_eval_dat);
    artifacts.emplace_back("bag_eval_manifest", bag_eval_json);
  });

  const std::string fused_dat = out("fused_eval.dat");
  const std::string fused_json = out("fused_eval.json");
  stage("fuse-predict", [&] {
    FusePredictArgs args;
    args.bag_dat = bag_eval_dat;
    args.bag_manifest = bag_eval_json;
    args.weights_path = result.weights_file;
    args.threads = config.threads;
    args.out_dat = fused_dat;
    args.out_manifest = fused_json;
    cmd_fuse_predict(args);
    artifacts.emplace_back("fused_eval", fused_dat);
    artifacts.emplace_back("fused_eval_manifest", fused_json);
  });

  result.predictions_csv = out("predictions.csv");
  stage("pool", [&] {
    cmd_pool(fused_dat, fused_json, pool_strategy_from_string(config.pool),
             result.predictions_csv);
    artifacts.emplace_back("predictions", result.predictions_csv);
  });

  result.report_txt = out("report.txt");
  result.report_json = out("report.json");
  stage("evaluate", [&] {
    cmd_evaluate(result.predictions_csv, scored_labels, result.report_txt, result.report_json);
    artifacts.emplace_back("report_txt", result.report_txt);
    artifacts.emplace_back("report_json", result.report_json);
    result.balanced_accuracy =
        evaluate_to_report(result.predictions_csv, scored_labels).balanced_accuracy;
  });

  write_manifest();
  result.manifest = out("pipeline_manifest.txt");
  return result;
}

}  // namespace dabea
