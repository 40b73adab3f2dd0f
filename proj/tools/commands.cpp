#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "cisnet/checkpoint.hpp"
#include "cisnet/config.hpp"
#include "cisnet/eval.hpp"
#include "cisnet/laplace.hpp"
#include "cisnet/model.hpp"
#include "cisnet/pgm.hpp"
#include "cisnet/rng.hpp"
#include "cisnet/srm.hpp"
#include "cisnet/stego.hpp"
#include "cisnet/train.hpp"

namespace fs = std::filesystem;

namespace cisnet::cli {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> parse_double_list(const std::string& text, bool allow_inf = false) {
  std::vector<double> values;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) throw UsageError("empty entry in list '" + text + "'");
    if (allow_inf && (tok == "inf" || tok == "+inf")) {
      values.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw UsageError("bad numeric value '" + tok + "'");
    values.push_back(v);
  }
  if (values.empty()) throw UsageError("empty list '" + text + "'");
  return values;
}

std::string payload_tag(double payload) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", payload);
  return buf;
}

struct Resolved {
  NetworkConfig network;
  TrainConfig train;
  uint64_t seed = 0;
};

std::string section_text(const KeyValueConfig& kv, const std::string& section) {
  std::string text;
  for (const auto& [k, v] : kv.entries(section)) text += k + " = " + v + "\n";
  return text;
}

/// Defaults -> config file -> --set overrides -> --seed; writes the resolved
/// snapshot next to the command outputs.
Resolved resolve_configs(const CommonOptions& common) {
  Resolved resolved;
  KeyValueConfig kv;
  const KeyValueConfig network_defaults = KeyValueConfig::parse(resolved.network.serialize());
  for (const auto& [k, v] : network_defaults.entries("")) kv.set("network", k, v);
  const KeyValueConfig train_defaults = KeyValueConfig::parse(resolved.train.serialize());
  for (const auto& [k, v] : train_defaults.entries("")) kv.set("train", k, v);
  kv.set("run", "seed", "0");

  if (!common.config_path.empty()) {
    KeyValueConfig file;
    try {
      file = KeyValueConfig::parse(read_file(common.config_path));
    } catch (const Error& e) {
      throw UsageError(std::string("config file: ") + e.what());
    }
    for (const std::string& section : file.sections()) {
      if (section != "network" && section != "train" && section != "run")
        throw UsageError("unknown config section [" + section + "]");
      for (const auto& [k, v] : file.entries(section)) {
        if (!kv.has(section, k))
          throw UsageError("unknown config key '" + k + "' in section [" + section + "]");
        kv.set(section, k, v);
      }
    }
  }
  for (const std::string& item : common.overrides) {
    const size_t eq = item.find('=');
    const size_t dot = item.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw UsageError("--set expects section.key=value, got '" + item + "'");
    const std::string section = item.substr(0, dot);
    const std::string key = item.substr(dot + 1, eq - dot - 1);
    const std::string value = item.substr(eq + 1);
    if (!kv.has(section, key))
      throw UsageError("unknown config key '" + section + "." + key + "'");
    kv.set(section, key, value);
  }
  if (common.seed_given) kv.set("run", "seed", std::to_string(common.seed));

  try {
    resolved.network = NetworkConfig::parse(section_text(kv, "network"));
    resolved.train = TrainConfig::parse(section_text(kv, "train"));
    resolved.seed = std::stoull(kv.get("run", "seed"));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  if (!common.out_dir.empty()) {
    fs::create_directories(common.out_dir);
    write_file_atomic((fs::path(common.out_dir) / "resolved_config.txt").string(),
                      kv.serialize());
  }
  return resolved;
}

void require_out_dir(const CommonOptions& common) {
  if (common.out_dir.empty()) throw UsageError("--out-dir is required");
}

std::vector<Tensor> covers_of(const std::vector<CoverStegoPair>& pairs) {
  std::vector<Tensor> covers;
  for (const CoverStegoPair& p : pairs) covers.push_back(p.cover);
  return covers;
}

std::vector<Tensor> stegos_of(const std::vector<CoverStegoPair>& pairs) {
  std::vector<Tensor> stegos;
  for (const CoverStegoPair& p : pairs) stegos.push_back(p.stego);
  return stegos;
}

EvalReport evaluate_manifest(const CisNet& net, const std::string& manifest) {
  const std::vector<CoverStegoPair> pairs = load_pairs(manifest);
  if (pairs.empty()) throw Error("manifest " + manifest + " is empty");
  std::vector<Tensor> images = covers_of(pairs);
  std::vector<Tensor> stegos = stegos_of(pairs);
  images.insert(images.end(), stegos.begin(), stegos.end());
  std::vector<int> labels(pairs.size(), 0);
  labels.insert(labels.end(), pairs.size(), 1);
  return detection_error(stego_scores(net, images), labels);
}

CisNet net_from_checkpoint(const std::string& path, TrainState* state = nullptr) {
  const Checkpoint ckpt = load_checkpoint(path);
  CisNet net = CisNet::build(ckpt.config);
  TrainState scratch;
  restore_checkpoint(ckpt, net, state ? *state : scratch);
  return net;
}

void calibrate_from_pairs(CisNet& net, const std::vector<CoverStegoPair>& data,
                          int64_t init_pairs) {
  const int64_t h = net.config().input_h, w = net.config().input_w;
  const int64_t count = std::min<int64_t>(init_pairs, static_cast<int64_t>(data.size()));
  if (count < 1) throw Error("bias calibration needs at least one pair");
  Tensor init_set(Shape{2 * count, 1, h, w});
  for (int64_t i = 0; i < count; ++i) {
    std::copy(data[static_cast<size_t>(i)].cover.data(),
              data[static_cast<size_t>(i)].cover.data() + h * w,
              init_set.data() + 2 * i * h * w);
    std::copy(data[static_cast<size_t>(i)].stego.data(),
              data[static_cast<size_t>(i)].stego.data() + h * w,
              init_set.data() + (2 * i + 1) * h * w);
  }
  net.calibrate_biases(init_set);
}

std::string rates_header() {
  std::string header;
  for (const std::string& g : param_groups()) header += ",lr_" + g;
  return header;
}

std::string rates_row(const std::vector<std::pair<std::string, double>>& rates) {
  std::string row;
  for (const auto& [group, rate] : rates) row += "," + fmt(rate);
  return row;
}

int train_one(CisNet& net, const std::vector<CoverStegoPair>& data, const TrainConfig& tc,
              TrainState& state, const std::string& out_dir, const std::string& log_name,
              const std::string& ckpt_name) {
  std::string log = "epoch,mean_loss" + rates_header() + "\n";
  const std::string log_path = (fs::path(out_dir) / log_name).string();
  const std::string ckpt_path = (fs::path(out_dir) / ckpt_name).string();
  while (state.completed_epochs < tc.epochs) {
    EpochLog entry;
    try {
      entry = train_epoch(net, data, tc, state);
    } catch (const Error& e) {
      // NaN abort: the last epoch's checkpoint stays on disk.
      write_file_atomic(log_path, log);
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
    log += std::to_string(entry.epoch) + "," + fmt(entry.mean_loss) + rates_row(entry.rates) +
           "\n";
    write_file_atomic(log_path, log);
    save_checkpoint(make_checkpoint(net, tc, state), ckpt_path);
    std::printf("epoch %lld: loss %.6f\n", static_cast<long long>(entry.epoch),
                entry.mean_loss);
  }
  return 0;
}

}  // namespace

int cmd_verify_variance(const CommonOptions& common, const std::string& alphas,
                        const std::string& scales, const std::string& thresholds,
                        int64_t samples) {
  require_out_dir(common);
  resolve_configs(common);
  const std::vector<double> alpha_list = parse_double_list(alphas);
  const std::vector<double> scale_list = parse_double_list(scales);
  const std::vector<double> threshold_list = parse_double_list(thresholds);
  for (double a : alpha_list)
    if (!(a > 0.0)) throw UsageError("alpha must be positive");
  for (double s : scale_list)
    if (!(s > 0.0)) throw UsageError("s must be positive");
  for (double t : threshold_list)
    if (!(t > 0.0)) throw UsageError("T must be positive");
  if (samples < 100000) throw UsageError("--samples must be at least 100000");

  std::string csv =
      "alpha,s,T,mu_s,var_b,var_s_direct,var_s_simplified,gap,empirical_gap,pass\n";
  bool all_pass = true;
  uint64_t draw_seed = common.seed;
  for (double alpha : alpha_list)
    for (double s : scale_list) {
      const GenLaplaceParams params = GenLaplaceParams::make(alpha, s);
      for (double threshold : threshold_list) {
        const TruncationStats st = truncation_stats(params, threshold);
        const EmpiricalTheoremReport emp =
            empirical_theorem_check(params, threshold, samples, draw_seed++);
        const double gap = st.var_b - st.var_s_direct;
        const bool identity_ok = std::fabs(st.var_s_direct - st.var_s_simplified) <=
                                 1e-8 * std::fabs(st.var_s_direct);
        const bool theorem_ok =
            std::fabs(st.var_s_direct - st.var_b + st.mu_s * st.mu_s) <= 1e-8 * st.var_b;
        const bool pass = identity_ok && theorem_ok && emp.gap_within_3se;
        all_pass = all_pass && pass;
        csv += fmt(alpha) + "," + fmt(s) + "," + fmt(threshold) + "," + fmt(st.mu_s) + "," +
               fmt(st.var_b) + "," + fmt(st.var_s_direct) + "," + fmt(st.var_s_simplified) +
               "," + fmt(gap) + "," + fmt(emp.gap) + "," + (pass ? "1" : "0") + "\n";
        std::printf("alpha=%-4g s=%-4g T=%-4g mu_s=%-12.6g gap=%-12.6g empirical=%-12.6g %s\n",
                    alpha, s, threshold, st.mu_s, gap, emp.gap, pass ? "pass" : "FAIL");
      }
    }
  write_file_atomic((fs::path(common.out_dir) / "verify_variance.csv").string(), csv);
  return all_pass ? 0 : 1;
}

int cmd_prepare(const CommonOptions& common, const PrepareOptions& opts) {
  require_out_dir(common);
  const Resolved resolved = resolve_configs(common);
  if (opts.covers_dir.empty() == (opts.synthetic == 0))
    throw UsageError("exactly one of --covers or --synthetic is required");
  if (opts.payloads.empty()) throw UsageError("--payloads is required");
  if (opts.embedder != "adaptive" && opts.embedder != "lsb")
    throw UsageError("--embedder must be adaptive or lsb");
  const std::vector<double> payloads = parse_double_list(opts.payloads);
  for (size_t i = 0; i < payloads.size(); ++i) {
    if (payloads[i] < 0.0 || payloads[i] > 1.0)
      throw UsageError("payloads must lie in [0,1]");
    if (i > 0 && payloads[i] >= payloads[i - 1])
      throw UsageError("payloads must be strictly decreasing");
  }
  if (!(opts.train_fraction > 0.0 && opts.train_fraction < 1.0))
    throw UsageError("--train-fraction must be in (0,1)");

  // Covers as named tensors, always materialized under covers/.
  std::vector<std::pair<std::string, Tensor>> covers;
  if (opts.synthetic > 0) {
    for (int64_t i = 0; i < opts.synthetic; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "cover_%05lld", static_cast<long long>(i));
      covers.emplace_back(
          name, synthetic_cover(opts.size, opts.size,
                                Rng::stream(resolved.seed, "cover", static_cast<uint64_t>(i)).key()));
    }
  } else {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(opts.covers_dir))
      if (entry.path().extension() == ".pgm") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw UsageError("no .pgm covers in " + opts.covers_dir);
    for (const fs::path& file : files) {
      Tensor img = load_pgm(file.string());
      if (opts.size > 0 && (img.dim(1) != opts.size || img.dim(2) != opts.size))
        img = center_crop(img, opts.size, opts.size);
      covers.emplace_back(file.stem().string(), std::move(img));
    }
  }
  for (size_t i = 1; i < covers.size(); ++i)
    for (size_t j = 0; j < i; ++j)
      if (covers[i].first == covers[j].first)
        throw Error("duplicate cover name '" + covers[i].first + "'");
  if (covers.size() < 2) throw UsageError("need at least two covers");

  // One split shared by every payload.
  std::vector<size_t> order(covers.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng = Rng::stream(resolved.seed, "split");
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[split_rng.below(i)]);
  const size_t train_count = std::max<size_t>(
      1, static_cast<size_t>(opts.train_fraction * static_cast<double>(covers.size())));

  std::vector<std::pair<std::string, Tensor>> train_covers, test_covers;
  for (size_t i = 0; i < order.size(); ++i) {
    auto& [name, img] = covers[order[i]];
    (i < train_count ? train_covers : test_covers).emplace_back(name, img);
  }
  if (test_covers.empty()) throw UsageError("split produced an empty test set");

  if (opts.augment) {
    // Rotations of the training covers, embedded like any other cover.
    std::vector<std::pair<std::string, Tensor>> augmented;
    for (auto& [name, img] : train_covers) {
      Tensor r90 = rotate90_ccw(img);
      Tensor r180 = rotate90_ccw(r90);
      Tensor r270 = rotate90_ccw(r180);
      augmented.emplace_back(name, img);
      augmented.emplace_back(name + "_r90", std::move(r90));
      augmented.emplace_back(name + "_r180", std::move(r180));
      augmented.emplace_back(name + "_r270", std::move(r270));
    }
    train_covers = std::move(augmented);
  }

  const fs::path out(common.out_dir);
  fs::create_directories(out / "covers");
  for (const auto* group : {&train_covers, &test_covers})
    for (const auto& [name, img] : *group)
      save_pgm(img, (out / "covers" / (name + ".pgm")).string());

  for (double payload : payloads) {
    const std::string tag = payload_tag(payload);
    fs::create_directories(out / "stegos" / ("p" + tag));
    for (const auto* group : {&train_covers, &test_covers}) {
      std::vector<ManifestEntry> entries;
      for (const auto& [name, img] : *group) {
        ManifestEntry entry;
        entry.cover_path = "covers/" + name + ".pgm";
        entry.seed = Rng::stream(resolved.seed, "embed:" + tag + ":" + name).key();
        entry.payload = payload;
        const CoverStegoPair pair = opts.embedder == "adaptive"
                                        ? embed_adaptive(img, payload, entry.seed)
                                        : embed_lsb_matching(img, payload, entry.seed);
        save_pgm(pair.stego, stego_path_for(out.string(), entry));
        save_prob_map(pair.prob_map, probmap_path_for(out.string(), entry));
        entries.push_back(entry);
      }
      const bool is_train = group == &train_covers;
      write_manifest((out / ((is_train ? "train_" : "test_") + tag + ".txt")).string(),
                     entries);
    }
    std::printf("payload %s: %zu train + %zu test pairs\n", tag.c_str(), train_covers.size(),
                test_covers.size());
  }
  return 0;
}

int cmd_train(const CommonOptions& common, const TrainOptions& opts) {
  require_out_dir(common);
  Resolved resolved = resolve_configs(common);
  if (opts.epochs_override >= 0) resolved.train.epochs = opts.epochs_override;

  if (!opts.curriculum.empty()) {
    if (opts.data_dir.empty())
      throw UsageError("curriculum training needs --data-dir (a prepare output directory)");
    const std::vector<double> payloads = parse_double_list(opts.curriculum);
    std::vector<std::vector<CoverStegoPair>> stages;
    for (double payload : payloads)
      stages.push_back(load_pairs(
          (fs::path(opts.data_dir) / ("train_" + payload_tag(payload) + ".txt")).string()));
    std::vector<std::vector<EpochLog>> logs;
    const std::vector<Checkpoint> chain = train_curriculum(
        resolved.network, resolved.train, payloads, stages, resolved.seed, &logs);
    for (size_t stage = 0; stage < chain.size(); ++stage) {
      const std::string tag = payload_tag(payloads[stage]);
      save_checkpoint(chain[stage],
                      (fs::path(common.out_dir) / ("checkpoint_p" + tag + ".ckpt")).string());
      std::string log = "epoch,mean_loss" + rates_header() + "\n";
      for (const EpochLog& entry : logs[stage])
        log += std::to_string(entry.epoch) + "," + fmt(entry.mean_loss) +
               rates_row(entry.rates) + "\n";
      write_file_atomic((fs::path(common.out_dir) / ("loss_log_p" + tag + ".csv")).string(),
                        log);
    }
    save_checkpoint(chain.back(), (fs::path(common.out_dir) / "checkpoint.ckpt").string());
    return 0;
  }

  if (opts.manifest.empty()) throw UsageError("--manifest is required");
  const std::vector<CoverStegoPair> data = load_pairs(opts.manifest);

  CisNet net = CisNet::build(resolved.network);
  TrainState state;
  state.seed = resolved.seed;
  if (!opts.resume.empty()) {
    const Checkpoint ckpt = load_checkpoint(opts.resume);
    net = CisNet::build(ckpt.config);
    restore_checkpoint(ckpt, net, state);
  } else {
    net.init_weights(resolved.seed);
    calibrate_from_pairs(net, data, resolved.train.bias_init_pairs);
  }
  return train_one(net, data, resolved.train, state, common.out_dir, "loss_log.csv",
                   "checkpoint.ckpt");
}

int cmd_ablate(const CommonOptions& common, const AblateOptions& opts) {
  require_out_dir(common);
  Resolved resolved = resolve_configs(common);
  if (opts.epochs_override >= 0) resolved.train.epochs = opts.epochs_override;
  if (opts.manifest.empty()) throw UsageError("--manifest is required");
  if (opts.axis != "T" && opts.axis != "gamma")
    throw UsageError("--axis must be T or gamma");

  struct Cell {
    std::string label;
    NetworkConfig config;
  };
  std::vector<Cell> cells;
  if (opts.axis == "T") {
    const std::string values = opts.values.empty() ? "1,3,5,7,11,inf" : opts.values;
    for (double threshold : parse_double_list(values, /*allow_inf=*/true)) {
      if (!(threshold > 0.0)) throw UsageError("T must be positive");
      NetworkConfig cfg = resolved.network;
      cfg.truncation.threshold = threshold;
      cells.push_back({std::isinf(threshold) ? "inf" : payload_tag(threshold), cfg});
    }
  } else {
    std::vector<std::pair<double, double>> gammas;
    if (opts.values.empty()) {
      const double grid[] = {0.6, 0.7, 0.8, 0.9, 1.0};
      for (double g1 : grid)
        for (double g2 : grid) gammas.emplace_back(g1, g2);
    } else {
      std::istringstream in(opts.values);
      std::string tok;
      while (std::getline(in, tok, ',')) {
        const size_t colon = tok.find(':');
        if (colon == std::string::npos)
          throw UsageError("gamma values use g1:g2 pairs, got '" + tok + "'");
        char* end = nullptr;
        const double g1 = std::strtod(tok.substr(0, colon).c_str(), &end);
        const double g2 = std::strtod(tok.substr(colon + 1).c_str(), &end);
        gammas.emplace_back(g1, g2);
      }
      if (gammas.empty()) throw UsageError("empty gamma list");
    }
    for (const auto& [g1, g2] : gammas) {
      if (!(g1 > 0.0 && g1 <= 1.0 && g2 > 0.0 && g2 <= 1.0))
        throw UsageError("gamma values must lie in (0,1]");
      NetworkConfig cfg = resolved.network;
      cfg.spl.gamma1 = g1;
      cfg.spl.gamma2 = g2;
      cells.push_back({payload_tag(g1) + ":" + payload_tag(g2), cfg});
    }
  }

  const std::vector<CoverStegoPair> data = load_pairs(opts.manifest);
  std::string csv = "axis,value,p_e_train,p_e_test\n";
  for (const Cell& cell : cells) {
    CisNet net = CisNet::build(cell.config);
    net.init_weights(resolved.seed);
    calibrate_from_pairs(net, data, resolved.train.bias_init_pairs);
    TrainState state;
    state.seed = resolved.seed;
    train(net, data, resolved.train, state);

    std::string label = cell.label;
    std::replace(label.begin(), label.end(), ':', '_');
    save_checkpoint(make_checkpoint(net, resolved.train, state),
                    (fs::path(common.out_dir) / ("checkpoint_" + opts.axis + label + ".ckpt"))
                        .string());

    std::vector<Tensor> images = covers_of(data);
    std::vector<Tensor> stegos = stegos_of(data);
    images.insert(images.end(), stegos.begin(), stegos.end());
    std::vector<int> labels(data.size(), 0);
    labels.insert(labels.end(), data.size(), 1);
    const double train_pe = detection_error(stego_scores(net, images), labels).p_e;
    double test_pe = std::numeric_limits<double>::quiet_NaN();
    if (!opts.test_manifest.empty())
      test_pe = evaluate_manifest(net, opts.test_manifest).p_e;
    csv += opts.axis + "," + cell.label + "," + fmt(train_pe) + "," + fmt(test_pe) + "\n";
    std::printf("%s = %s: train P_E %.4f test P_E %.4f\n", opts.axis.c_str(),
                cell.label.c_str(), train_pe, test_pe);
  }
  write_file_atomic((fs::path(common.out_dir) / "ablate.csv").string(), csv);
  return 0;
}

int cmd_eval(const CommonOptions& common, const EvalOptions& opts) {
  require_out_dir(common);
  resolve_configs(common);
  if (opts.checkpoint.empty() || opts.manifest.empty())
    throw UsageError("--checkpoint and --manifest are required");
  const CisNet net = net_from_checkpoint(opts.checkpoint);

  const std::vector<CoverStegoPair> pairs = load_pairs(opts.manifest);
  if (pairs.empty()) throw Error("manifest " + opts.manifest + " is empty");
  std::vector<Tensor> images = covers_of(pairs);
  std::vector<Tensor> stegos = stegos_of(pairs);
  images.insert(images.end(), stegos.begin(), stegos.end());
  std::vector<int> labels(pairs.size(), 0);
  labels.insert(labels.end(), pairs.size(), 1);
  const std::vector<double> scores = stego_scores(net, images);
  const EvalReport report = detection_error(scores, labels);

  const std::vector<ManifestEntry> entries = read_manifest(opts.manifest);
  std::string scores_csv = "image_id,score,label\n";
  for (size_t i = 0; i < images.size(); ++i) {
    const size_t pair_index = i % pairs.size();
    const std::string role = i < pairs.size() ? "_cover" : "_stego";
    const std::string stem = fs::path(entries[pair_index].cover_path).stem().string();
    scores_csv += stem + role + "," + fmt(scores[i]) + "," + std::to_string(labels[i]) + "\n";
  }
  write_file_atomic((fs::path(common.out_dir) / "scores.csv").string(), scores_csv);

  std::string roc_csv = "false_alarm,hit\n";
  for (const RocPoint& point : report.roc)
    roc_csv += fmt(point.false_alarm) + "," + fmt(point.hit) + "\n";
  write_file_atomic((fs::path(common.out_dir) / "roc.csv").string(), roc_csv);

  std::string summary = "split,p_e,auc,threshold\n";
  summary += "eval," + fmt(report.p_e) + "," + fmt(report.auc) + "," +
             fmt(report.best_threshold) + "\n";
  if (!opts.train_manifest.empty()) {
    const EvalReport train_report = evaluate_manifest(net, opts.train_manifest);
    summary += "train," + fmt(train_report.p_e) + "," + fmt(train_report.auc) + "," +
               fmt(train_report.best_threshold) + "\n";
    summary += "difference," + fmt(report.p_e - train_report.p_e) + ",,\n";
    std::printf("train P_E %.4f  eval P_E %.4f  gap %.4f\n", train_report.p_e, report.p_e,
                report.p_e - train_report.p_e);
  } else {
    std::printf("P_E %.4f  AUC %.4f  threshold %.6f\n", report.p_e, report.auc,
                report.best_threshold);
  }
  write_file_atomic((fs::path(common.out_dir) / "summary.csv").string(), summary);
  return 0;
}

int cmd_cam(const CommonOptions& common, const CamOptions& opts) {
  require_out_dir(common);
  resolve_configs(common);
  if (opts.checkpoint.empty() || opts.manifest.empty())
    throw UsageError("--checkpoint and --manifest are required");
  const CisNet net = net_from_checkpoint(opts.checkpoint);

  const std::string manifest_dir = fs::path(opts.manifest).parent_path().string();
  const std::vector<ManifestEntry> entries = read_manifest(opts.manifest);
  const int64_t count =
      opts.count > 0 ? std::min<int64_t>(opts.count, static_cast<int64_t>(entries.size()))
                     : static_cast<int64_t>(entries.size());

  std::string csv = "image_id,spearman,top_decile_overlap,constant_cam\n";
  int64_t exported = 0;
  for (int64_t i = 0; i < count; ++i) {
    const ManifestEntry& entry = entries[static_cast<size_t>(i)];
    const std::string stem = fs::path(entry.cover_path).stem().string();
    const Tensor stego = load_pgm(stego_path_for(manifest_dir, entry));
    const CamMap map = cam(net, stego, opts.class_index, opts.post_map);

    // Heat image scaled to [0,255]; flat maps export as black.
    double lo = map.upscaled.data()[0], hi = lo;
    for (int64_t j = 0; j < map.upscaled.numel(); ++j) {
      lo = std::min(lo, map.upscaled.data()[j]);
      hi = std::max(hi, map.upscaled.data()[j]);
    }
    Tensor heat(map.upscaled.shape());
    if (hi > lo)
      for (int64_t j = 0; j < heat.numel(); ++j)
        heat.data()[j] = std::round(255.0 * (map.upscaled.data()[j] - lo) / (hi - lo));
    save_pgm(heat, (fs::path(common.out_dir) / (stem + "_cam.pgm")).string());
    ++exported;

    const std::string pmap_path = probmap_path_for(manifest_dir, entry);
    if (fs::exists(pmap_path)) {
      const CamCorrelation corr = cam_vs_probmap(map, load_prob_map(pmap_path));
      csv += stem + "," + fmt(corr.spearman) + "," + fmt(corr.top_decile_overlap) + "," +
             (corr.constant_cam ? "1" : "0") + "\n";
    }
  }
  write_file_atomic((fs::path(common.out_dir) / "cam_summary.csv").string(), csv);
  std::printf("exported %lld attentional maps\n", static_cast<long long>(exported));
  return 0;
}

}  // namespace cisnet::cli
