// Command-line front end: synthetic data generation, view simulation,
// pairwise alignment, episodic training and evaluation.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "jeanie/alignment.hpp"
#include "jeanie/encoder.hpp"
#include "jeanie/fewshot.hpp"
#include "jeanie/geometry.hpp"
#include "jeanie/skeleton.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "jeanie 1.0.0";

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot read input file: " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write output file: " + path.string());
  }
  out << content;
}

// 9 significant digits, stable across runs
std::string fmt9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const json& resolved) {
  json manifest;
  manifest["command"] = command;
  manifest["tool_version"] = kToolVersion;
  manifest["config"] = resolved;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

jeanie::BaseDistanceKind base_from_name(const std::string& name) {
  if (name == "euclidean") return jeanie::BaseDistanceKind::EUCLIDEAN;
  if (name == "rbf") return jeanie::BaseDistanceKind::RBF;
  throw ConfigError("unknown base distance '" + name +
                    "' (expected euclidean or rbf)");
}

jeanie::GnnVariant gnn_from_name(const std::string& name) {
  if (name == "gcn") return jeanie::GnnVariant::GCN;
  if (name == "sgc") return jeanie::GnnVariant::SGC;
  if (name == "appnp") return jeanie::GnnVariant::APPNP;
  if (name == "s2gc") return jeanie::GnnVariant::S2GC;
  throw ConfigError("unknown gnn variant '" + name + "'");
}

jeanie::CameraPose parse_camera_json(const std::string& text,
                                     jeanie::CameraIntrinsics* intr_l,
                                     jeanie::CameraIntrinsics* intr_r) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("camera file: not valid JSON: ") + e.what());
  }
  auto mat3 = [](const json& j, const char* name) {
    if (!j.is_array() || j.size() != 3) {
      throw ConfigError(std::string("camera file: field '") + name +
                        "' must be a 3x3 row-major matrix");
    }
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m(r, c) = j.at(r).at(c).get<double>();
    }
    return m;
  };
  jeanie::CameraPose pose;
  pose.r.m = mat3(doc.at("rotation"), "rotation");
  const auto& t = doc.at("translation");
  pose.t << t.at(0).get<double>(), t.at(1).get<double>(),
      t.at(2).get<double>();
  if (intr_l != nullptr) intr_l->k = mat3(doc.at("intrinsics_l"), "intrinsics_l");
  if (intr_r != nullptr) intr_r->k = mat3(doc.at("intrinsics_r"), "intrinsics_r");
  return pose;
}

// Optional pipeline keys in the protocol JSON; every key has a default.
struct ResolvedProtocol {
  jeanie::EvalProtocol protocol;
  jeanie::TrainConfig train;
  jeanie::PipelineConfig pipeline;
  int d = 32;
  int d_prime = 50;
  jeanie::GnnVariant gnn = jeanie::GnnVariant::S2GC;
  int gnn_layers = 6;
  double alpha = 0.5;
  double dropout = 0.5;
  json resolved;
};

ResolvedProtocol parse_protocol(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("protocol file: not valid JSON: ") +
                      e.what());
  }
  ResolvedProtocol r;
  auto geti = [&](const char* key, int def) {
    return doc.contains(key) ? doc.at(key).get<int>() : def;
  };
  auto getd = [&](const char* key, double def) {
    return doc.contains(key) ? doc.at(key).get<double>() : def;
  };
  auto gets = [&](const char* key, std::string def) {
    return doc.contains(key) ? doc.at(key).get<std::string>() : def;
  };
  r.protocol.n_way = geti("n_way", 5);
  r.protocol.z_shot = geti("z_shot", 1);
  r.protocol.num_episodes = geti("episodes", 100);
  r.protocol.seed = static_cast<std::uint64_t>(geti("seed", 0));
  if (doc.contains("train_classes")) {
    r.protocol.train_classes = doc.at("train_classes").get<std::vector<int>>();
  }
  if (doc.contains("test_classes")) {
    r.protocol.test_classes = doc.at("test_classes").get<std::vector<int>>();
  }
  r.train.n_way = r.protocol.n_way;
  r.train.z_shot = r.protocol.z_shot;
  r.train.batch = geti("batch", 8);
  r.train.episodes = r.protocol.num_episodes;
  r.train.seed = r.protocol.seed;
  r.train.lr = getd("lr", 1e-3);
  r.train.weight_decay = getd("weight_decay", 1e-6);
  r.train.loss.beta = geti("beta", 1);
  const std::string variant = gets("loss_variant", "main");
  if (variant == "main") {
    r.train.loss.variant = jeanie::LossVariant::MAIN;
  } else if (variant == "v1") {
    r.train.loss.variant = jeanie::LossVariant::V1;
  } else if (variant == "v2") {
    r.train.loss.variant = jeanie::LossVariant::V2;
  } else {
    throw ConfigError("unknown loss variant '" + variant + "'");
  }
  r.train.loss.c = getd("c", 0.0);

  r.pipeline.block_size = geti("m", 8);
  r.pipeline.stride = geti("s", 5);  // S = 0.6 M
  r.pipeline.grid.eta_az = geti("eta_az", 1);
  r.pipeline.grid.eta_alt = geti("eta_alt", 0);
  r.pipeline.grid.step_deg = getd("step_deg", 15.0);
  r.pipeline.grid.mode = gets("mode", "euler") == "camvpc"
                             ? jeanie::ViewMode::CAMVPC
                             : jeanie::ViewMode::EULER;
  r.pipeline.align.gamma = getd("gamma", 1e-4);
  r.pipeline.align.iota = geti("iota", 2);
  r.pipeline.align.base = base_from_name(gets("base", "euclidean"));
  r.pipeline.align.sigma = getd("sigma", 2.0);
  r.pipeline.axes = geti("axes", r.pipeline.grid.eta_alt > 0 ? 2 : 1);
  r.pipeline.support_views = geti("support_views", 0) != 0;
  {
    const std::string m = gets("matcher", "jeanie");
    if (m == "jeanie") {
      r.pipeline.matcher = jeanie::Matcher::JEANIE;
    } else if (m == "fvm") {
      r.pipeline.matcher = jeanie::Matcher::FVM;
    } else {
      throw ConfigError("unknown matcher '" + m + "' (expected jeanie or fvm)");
    }
  }

  r.d = geti("d", 32);
  r.d_prime = geti("d_prime", 50);
  r.gnn = gnn_from_name(gets("gnn", "s2gc"));
  r.gnn_layers = geti("gnn_layers", 6);
  r.alpha = getd("alpha", 0.5);
  r.dropout = getd("dropout", 0.5);

  r.resolved = {
      {"n_way", r.protocol.n_way},
      {"z_shot", r.protocol.z_shot},
      {"episodes", r.protocol.num_episodes},
      {"batch", r.train.batch},
      {"seed", r.protocol.seed},
      {"train_classes", r.protocol.train_classes},
      {"test_classes", r.protocol.test_classes},
      {"lr", r.train.lr},
      {"weight_decay", r.train.weight_decay},
      {"beta", r.train.loss.beta},
      {"loss_variant", variant},
      {"c", r.train.loss.c},
      {"m", r.pipeline.block_size},
      {"s", r.pipeline.stride},
      {"eta_az", r.pipeline.grid.eta_az},
      {"eta_alt", r.pipeline.grid.eta_alt},
      {"step_deg", r.pipeline.grid.step_deg},
      {"mode",
       r.pipeline.grid.mode == jeanie::ViewMode::CAMVPC ? "camvpc" : "euler"},
      {"gamma", r.pipeline.align.gamma},
      {"iota", r.pipeline.align.iota},
      {"base",
       r.pipeline.align.base == jeanie::BaseDistanceKind::RBF ? "rbf"
                                                              : "euclidean"},
      {"sigma", r.pipeline.align.sigma},
      {"axes", r.pipeline.axes},
      {"support_views", r.pipeline.support_views ? 1 : 0},
      {"matcher",
       r.pipeline.matcher == jeanie::Matcher::FVM ? "fvm" : "jeanie"},
      {"d", r.d},
      {"d_prime", r.d_prime},
      {"gnn", gets("gnn", "s2gc")},
      {"gnn_layers", r.gnn_layers},
      {"alpha", r.alpha},
      {"dropout", r.dropout},
  };
  return r;
}

jeanie::SequencePool load_pool(const std::string& dir) {
  jeanie::SequencePool pool;
  if (!fs::is_directory(dir)) {
    throw DataError("data directory not found: " + dir);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().string().ends_with(".skel.json")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    jeanie::SkeletonSequence seq;
    try {
      seq = jeanie::parse_skel_json(read_file(file.string()));
    } catch (const std::invalid_argument& e) {
      throw DataError(file.string() + ": " + e.what());
    }
    int cls = -1;
    if (seq.label && seq.label->rfind("class_", 0) == 0) {
      cls = std::atoi(seq.label->c_str() + 6);
    }
    if (cls < 0) {
      throw DataError(file.string() + ": missing class_<id> label");
    }
    pool.items.push_back(std::move(seq));
    pool.class_ids.push_back(cls);
  }
  if (pool.items.empty()) {
    throw DataError("no .skel.json files in " + dir);
  }
  return pool;
}

int cmd_gen_synth(int classes, int per_class, std::uint64_t seed, int frames,
                  double perturb, double warp_jitter,
                  const std::string& out_dir) {
  if (classes < 1 || classes > jeanie::synthetic_class_count()) {
    throw ConfigError("gen-synth: classes must be in [1, " +
                      std::to_string(jeanie::synthetic_class_count()) + "]");
  }
  if (per_class < 1 || frames < 2) {
    throw ConfigError("gen-synth: need per-class >= 1 and frames >= 2");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> view_dist(-perturb, perturb);
  std::uniform_real_distribution<double> warp_dist(1.0 - warp_jitter,
                                                   1.0 + warp_jitter);
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      const double view = perturb > 0.0 ? view_dist(rng) : 0.0;
      const double warp = warp_jitter > 0.0 ? warp_dist(rng) : 1.0;
      const std::uint64_t sample_seed = rng();
      const auto seq =
          jeanie::generate_synthetic(c, frames, view, warp, sample_seed);
      char name[64];
      std::snprintf(name, sizeof(name), "class_%02d_%04d.skel.json", c, i);
      write_file(fs::path(out_dir) / name, jeanie::write_skel_json(seq));
    }
  }
  write_manifest(out_dir, "gen-synth",
                 {{"classes", classes},
                  {"per_class", per_class},
                  {"seed", seed},
                  {"frames", frames},
                  {"perturb", perturb},
                  {"warp_jitter", warp_jitter},
                  {"out", out_dir}});
  return 0;
}

int cmd_simulate_views(const std::string& in_file, const std::string& mode,
                       double step, int eta_az, int eta_alt,
                       const std::string& camera_file,
                       const std::string& out_dir) {
  jeanie::SkeletonSequence seq;
  try {
    seq = jeanie::parse_skel_json(read_file(in_file));
  } catch (const std::invalid_argument& e) {
    throw DataError(in_file + ": " + e.what());
  }
  jeanie::ViewGrid grid;
  grid.eta_az = eta_az;
  grid.eta_alt = eta_alt;
  grid.step_deg = step;
  std::optional<jeanie::CameraPose> camera;
  if (mode == "euler") {
    grid.mode = jeanie::ViewMode::EULER;
  } else if (mode == "camvpc") {
    grid.mode = jeanie::ViewMode::CAMVPC;
    if (camera_file.empty()) {
      throw ConfigError("simulate-views: camvpc mode requires --camera");
    }
    camera = parse_camera_json(read_file(camera_file), nullptr, nullptr);
  } else {
    throw ConfigError("simulate-views: mode must be euler or camvpc");
  }
  const auto views = jeanie::generate_view_grid(seq, grid, camera);
  int idx = 0;
  for (int i = 0; i < grid.k(); ++i) {
    for (int j = 0; j < grid.k_prime(); ++j) {
      char name[64];
      std::snprintf(name, sizeof(name), "view_%02d_%02d.skel.json", i, j);
      write_file(fs::path(out_dir) / name,
                 jeanie::write_skel_json(views[idx++]));
    }
  }
  write_manifest(out_dir, "simulate-views",
                 {{"in", in_file},
                  {"mode", mode},
                  {"step_deg", step},
                  {"eta_az", eta_az},
                  {"eta_alt", eta_alt},
                  {"camera", camera_file},
                  {"out", out_dir}});
  return 0;
}

int cmd_align(const std::string& query_file, const std::string& support_file,
              const std::string& config_file) {
  json cfg_doc;
  try {
    cfg_doc = json::parse(read_file(config_file));
  } catch (const json::parse_error& e) {
    throw ConfigError(config_file + ": not valid JSON: " + e.what());
  }
  auto geti = [&](const char* key, int def) {
    return cfg_doc.contains(key) ? cfg_doc.at(key).get<int>() : def;
  };
  auto getd = [&](const char* key, double def) {
    return cfg_doc.contains(key) ? cfg_doc.at(key).get<double>() : def;
  };
  jeanie::PipelineConfig cfg;
  cfg.align.gamma = getd("gamma", 1e-4);
  cfg.align.iota = geti("iota", 2);
  cfg.align.base = base_from_name(
      cfg_doc.contains("base") ? cfg_doc.at("base").get<std::string>()
                               : "euclidean");
  cfg.align.sigma = getd("sigma", 2.0);
  cfg.grid.eta_az = geti("eta_az", 1);
  cfg.grid.eta_alt = geti("eta_alt", 0);
  cfg.grid.step_deg = getd("step_deg", 15.0);
  cfg.grid.mode = (cfg_doc.contains("mode") &&
                   cfg_doc.at("mode").get<std::string>() == "camvpc")
                      ? jeanie::ViewMode::CAMVPC
                      : jeanie::ViewMode::EULER;
  cfg.block_size = geti("m", 8);
  cfg.stride = geti("s", 5);
  cfg.axes = geti("axes", cfg.grid.eta_alt > 0 ? 2 : 1);
  if (cfg.grid.mode == jeanie::ViewMode::CAMVPC) {
    if (!cfg_doc.contains("camera")) {
      throw ConfigError("align: camvpc mode requires a 'camera' file path");
    }
    cfg.camera = parse_camera_json(
        read_file(cfg_doc.at("camera").get<std::string>()), nullptr, nullptr);
  }

  jeanie::SkeletonSequence query, support;
  try {
    query = jeanie::parse_skel_json(read_file(query_file));
  } catch (const std::invalid_argument& e) {
    throw DataError(query_file + ": " + e.what());
  }
  try {
    support = jeanie::parse_skel_json(read_file(support_file));
  } catch (const std::invalid_argument& e) {
    throw DataError(support_file + ": " + e.what());
  }

  const auto graph = query.graph;
  const auto adj = jeanie::normalized_adjacency(graph);
  auto params = jeanie::init_encoder(cfg.block_size, graph.num_joints,
                                     geti("d", 32), geti("d_prime", 50),
                                     jeanie::GnnVariant::S2GC,
                                     geti("gnn_layers", 6), getd("alpha", 0.5),
                                     0.0, static_cast<std::uint64_t>(
                                              geti("encoder_seed", 0)));

  const auto q = jeanie::encode_sequence(query, true, cfg, adj, params, false);
  const auto s =
      jeanie::encode_sequence(support, false, cfg, adj, params, false);
  const auto d = jeanie::distance_tensor(q, s, cfg.align);
  const double d_jeanie = jeanie::jeanie(d, cfg.align, cfg.axes).value;

  // soft-DTW on the center (zero-angle) view
  Eigen::MatrixXd center(d.tau, d.taup);
  const int ca = (d.k - 1) / 2, cb = (d.kp - 1) / 2;
  for (int m = 0; m < d.tau; ++m) {
    for (int n = 0; n < d.taup; ++n) center(m, n) = d.at(ca, cb, m, n);
  }
  const double d_softdtw =
      jeanie::soft_dtw(center, cfg.align.gamma).value;

  const auto s_views =
      jeanie::encode_sequence(support, true, cfg, adj, params, false);
  const auto d_pairs = jeanie::distance_tensor(q, s_views, cfg.align, true);
  const double d_fvm = jeanie::fvm(d_pairs, cfg.align.gamma).value;

  json out;
  out["d_jeanie"] = d_jeanie;
  out["d_softdtw"] = d_softdtw;
  out["d_fvm"] = d_fvm;
  std::cout << out.dump() << "\n";
  return 0;
}

std::string report_csv(const jeanie::AccuracyReport& report) {
  std::ostringstream out;
  out << "episode_id,predicted,truth,d_pos_mean,d_neg_min\n";
  for (const auto& rec : report.records) {
    out << rec.episode_id << "," << rec.predicted << "," << rec.truth << ","
        << fmt9(rec.d_pos_mean) << "," << fmt9(rec.d_neg_min) << "\n";
  }
  return out.str();
}

std::string summary_csv(const jeanie::AccuracyReport& report) {
  std::ostringstream out;
  out << "metric,value\n";
  out << "accuracy," << fmt9(report.accuracy) << "\n";
  out << "std_error," << fmt9(report.std_error) << "\n";
  out << "episodes," << report.num_episodes << "\n";
  return out.str();
}

int cmd_train(const std::string& data_dir, const std::string& protocol_file,
              const std::string& out_dir) {
  ResolvedProtocol rp = parse_protocol(read_file(protocol_file));
  jeanie::SequencePool pool = load_pool(data_dir);
  if (!rp.protocol.train_classes.empty()) {
    jeanie::SequencePool filtered;
    const std::set<int> keep(rp.protocol.train_classes.begin(),
                             rp.protocol.train_classes.end());
    for (std::size_t i = 0; i < pool.items.size(); ++i) {
      if (keep.count(pool.class_ids[i]) > 0) {
        filtered.items.push_back(pool.items[i]);
        filtered.class_ids.push_back(pool.class_ids[i]);
      }
    }
    pool = std::move(filtered);
  }
  if (pool.items.empty()) {
    throw DataError("train: no sequences left after class filtering");
  }

  auto params = jeanie::init_encoder(
      rp.pipeline.block_size, pool.items[0].graph.num_joints, rp.d,
      rp.d_prime, rp.gnn, rp.gnn_layers, rp.alpha, rp.dropout,
      rp.protocol.seed);
  const auto trace =
      jeanie::train_episodic(pool, rp.train, rp.pipeline, params);

  write_file(fs::path(out_dir) / "checkpoint.json",
             jeanie::write_checkpoint(params));
  std::ostringstream csv;
  csv << "batch,loss\n";
  for (std::size_t i = 0; i < trace.batch_loss.size(); ++i) {
    csv << i << "," << fmt9(trace.batch_loss[i]) << "\n";
  }
  write_file(fs::path(out_dir) / "loss_trace.csv", csv.str());
  json resolved = rp.resolved;
  resolved["data"] = data_dir;
  resolved["out"] = out_dir;
  write_manifest(out_dir, "train", resolved);
  return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& protocol_file,
             const std::string& checkpoint_file, const std::string& out_dir,
             const std::string& sweep) {
  ResolvedProtocol rp = parse_protocol(read_file(protocol_file));
  jeanie::SequencePool pool = load_pool(data_dir);
  if (rp.protocol.test_classes.empty()) {
    throw ConfigError("eval: protocol must list test_classes");
  }
  if (rp.protocol.train_classes.empty()) {
    throw ConfigError("eval: protocol must list train_classes");
  }
  jeanie::EncoderParams params;
  try {
    params = jeanie::parse_checkpoint(read_file(checkpoint_file));
  } catch (const std::invalid_argument& e) {
    throw DataError(checkpoint_file + ": " + e.what());
  }
  const auto adj = jeanie::normalized_adjacency(pool.items[0].graph);

  std::vector<std::pair<double, jeanie::AccuracyReport>> runs;
  std::string sweep_key = "none";
  if (sweep.empty()) {
    runs.emplace_back(0.0,
                      jeanie::evaluate_protocol(pool, rp.protocol,
                                                rp.pipeline, adj, params));
  } else {
    const auto eq = sweep.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("eval: --sweep expects KEY=v1,v2,...");
    }
    sweep_key = sweep.substr(0, eq);
    std::stringstream values(sweep.substr(eq + 1));
    std::string item;
    while (std::getline(values, item, ',')) {
      const double v = std::atof(item.c_str());
      jeanie::PipelineConfig cfg = rp.pipeline;
      if (sweep_key == "gamma") {
        cfg.align.gamma = v;
      } else if (sweep_key == "iota") {
        cfg.align.iota = static_cast<int>(v);
      } else if (sweep_key == "eta_az") {
        cfg.grid.eta_az = static_cast<int>(v);
      } else if (sweep_key == "step_deg") {
        cfg.grid.step_deg = v;
      } else {
        throw ConfigError("eval: unsupported sweep key '" + sweep_key + "'");
      }
      runs.emplace_back(v, jeanie::evaluate_protocol(pool, rp.protocol, cfg,
                                                     adj, params));
    }
    if (runs.empty()) {
      throw ConfigError("eval: --sweep has no values");
    }
  }

  write_file(fs::path(out_dir) / "report.csv", report_csv(runs[0].second));
  write_file(fs::path(out_dir) / "summary.csv", summary_csv(runs[0].second));
  std::ostringstream plot;
  plot << "x,y,series\n";
  for (const auto& [x, report] : runs) {
    plot << fmt9(x) << "," << fmt9(report.accuracy) << "," << sweep_key
         << "\n";
  }
  write_file(fs::path(out_dir) / "plotdata.csv", plot.str());
  std::ostringstream confusion;
  confusion << "truth\\predicted";
  for (int c : runs[0].second.class_order) confusion << "," << c;
  confusion << "\n";
  for (std::size_t i = 0; i < runs[0].second.class_order.size(); ++i) {
    confusion << runs[0].second.class_order[i];
    for (int count : runs[0].second.confusion[i]) confusion << "," << count;
    confusion << "\n";
  }
  write_file(fs::path(out_dir) / "confusion.csv", confusion.str());

  json resolved = rp.resolved;
  resolved["data"] = data_dir;
  resolved["checkpoint"] = checkpoint_file;
  resolved["out"] = out_dir;
  resolved["sweep"] = sweep;
  write_manifest(out_dir, "eval", resolved);
  std::cout << "accuracy " << fmt9(runs[0].second.accuracy) << " +/- "
            << fmt9(runs[0].second.std_error) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint temporal-viewpoint alignment for few-shot skeleton "
               "action recognition"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic corpus");
  int classes = 10, per_class = 10, frames = 24;
  std::uint64_t seed = 0;
  double perturb = 0.0, warp_jitter = 0.0;
  std::string out_dir;
  gen->add_option("--classes", classes, "number of action classes");
  gen->add_option("--per-class", per_class, "samples per class");
  gen->add_option("--seed", seed, "rng seed");
  gen->add_option("--frames", frames, "frames per sequence");
  gen->add_option("--perturb", perturb, "max |azimuth| perturbation, deg");
  gen->add_option("--warp-jitter", warp_jitter, "speed warp half-range");
  gen->add_option("--out", out_dir, "output directory")->required();

  auto* sim = app.add_subcommand("simulate-views", "emit rotated corpora");
  std::string in_file, mode = "euler", camera_file;
  double step = 15.0;
  int eta_az = 1, eta_alt = 0;
  std::string sim_out;
  sim->add_option("--in", in_file, "input .skel.json")->required();
  sim->add_option("--mode", mode, "euler|camvpc");
  sim->add_option("--step", step, "angular step, deg");
  sim->add_option("--eta-az", eta_az, "azimuth half-count");
  sim->add_option("--eta-alt", eta_alt, "altitude half-count");
  sim->add_option("--camera", camera_file, "camera parameter JSON");
  sim->add_option("--out", sim_out, "output directory")->required();

  auto* align_cmd = app.add_subcommand("align", "pairwise distances");
  std::string query_file, support_file, config_file;
  align_cmd->add_option("--query", query_file)->required();
  align_cmd->add_option("--support", support_file)->required();
  align_cmd->add_option("--config", config_file)->required();

  auto* train_cmd = app.add_subcommand("train", "episodic training");
  std::string train_data, train_protocol, train_out;
  train_cmd->add_option("--data", train_data)->required();
  train_cmd->add_option("--protocol", train_protocol)->required();
  train_cmd->add_option("--out", train_out)->required();

  auto* eval_cmd = app.add_subcommand("eval", "episodic evaluation");
  std::string eval_data, eval_protocol, eval_ckpt, eval_out, eval_sweep;
  eval_cmd->add_option("--data", eval_data)->required();
  eval_cmd->add_option("--protocol", eval_protocol)->required();
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--out", eval_out)->required();
  eval_cmd->add_option("--sweep", eval_sweep, "KEY=v1,v2,... accuracy sweep");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return cmd_gen_synth(classes, per_class, seed, frames, perturb,
                           warp_jitter, out_dir);
    }
    if (sim->parsed()) {
      return cmd_simulate_views(in_file, mode, step, eta_az, eta_alt,
                                camera_file, sim_out);
    }
    if (align_cmd->parsed()) {
      return cmd_align(query_file, support_file, config_file);
    }
    if (train_cmd->parsed()) {
      return cmd_train(train_data, train_protocol, train_out);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_data, eval_protocol, eval_ckpt, eval_out,
                      eval_sweep);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
