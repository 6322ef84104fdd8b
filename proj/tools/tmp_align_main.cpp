// Command-line surface for the temporal motion propagation toolkit:
//   synth  - render synthetic sequences with exact ground-truth motion
//   align  - run alignment over a directory of frames
//   eval   - score estimated flows against ground truth
//   bench  - latency and distance-evaluation-count comparison
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tmpalign/core.hpp"
#include "tmpalign/evalio.hpp"
#include "tmpalign/parallel.hpp"
#include "tmpalign/pipeline.hpp"
#include "tmpalign/png_io.hpp"
#include "tmpalign/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace tmpalign;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<int, int> parse_size(const std::string& s) {
  const auto pos = s.find('x');
  if (pos == std::string::npos) throw UsageError("size must look like WIDTHxHEIGHT, got '" + s + "'");
  try {
    const int w = std::stoi(s.substr(0, pos));
    const int h = std::stoi(s.substr(pos + 1));
    if (w <= 0 || h <= 0) throw UsageError("size components must be positive");
    return {w, h};
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception&) {
    throw UsageError("size must look like WIDTHxHEIGHT, got '" + s + "'");
  }
}

std::string indexed(const std::string& dir, const char* pattern, int index) {
  char name[64];
  std::snprintf(name, sizeof(name), pattern, index);
  return (fs::path(dir) / name).string();
}

int threads_from_env_or(int fallback) {
  if (const char* env = std::getenv("TMP_ALIGN_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw UsageError("TMP_ALIGN_THREADS must be an integer");
    }
  }
  return fallback;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string preset = "pan";
  std::string spec_file;
  std::string size = "128x128";
  int frames = 10;
  std::uint64_t seed = 1;
  std::string out;
};

SceneSpec scene_from_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open scene spec: " + path);
  json j;
  in >> j;
  SceneSpec spec;
  spec.name = j.value("name", std::string("custom"));
  spec.width = j.value("width", 64);
  spec.height = j.value("height", 64);
  spec.frames = j.value("frames", 8);
  spec.background_seed = j.value("background_seed", std::uint64_t{1});
  spec.cam_vx = j.value("cam_vx", 0.0);
  spec.cam_vy = j.value("cam_vy", 0.0);
  for (const auto& js : j.value("sprites", json::array())) {
    SpriteSpec s;
    const std::string shape = js.value("shape", std::string("rect"));
    if (shape == "rect")
      s.shape = SpriteSpec::Shape::Rect;
    else if (shape == "disk")
      s.shape = SpriteSpec::Shape::Disk;
    else
      throw UsageError("sprite shape must be rect or disk");
    s.width = js.value("width", 8);
    s.height = js.value("height", 8);
    s.x0 = js.value("x0", 0.0);
    s.y0 = js.value("y0", 0.0);
    s.vx = js.value("vx", 0.0);
    s.vy = js.value("vy", 0.0);
    s.ax = js.value("ax", 0.0);
    s.ay = js.value("ay", 0.0);
    s.texture_seed = js.value("texture_seed", std::uint64_t{1});
    spec.sprites.push_back(s);
  }
  return spec;
}

int run_synth(const SynthArgs& args) {
  SceneSpec spec;
  if (!args.spec_file.empty()) {
    spec = scene_from_json(args.spec_file);
  } else {
    const auto [w, h] = parse_size(args.size);
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), args.preset) == names.end()) {
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      throw UsageError("unknown preset '" + args.preset + "' (available: " + list + ")");
    }
    spec = scenario_preset(args.preset, w, h, args.frames, args.seed);
  }
  const Sequence seq = generate_sequence(spec);
  fs::create_directories(args.out);
  for (int t = 0; t < static_cast<int>(seq.frames.size()); ++t)
    write_png_gray(indexed(args.out, "frame_%04d.png", t), seq.frames[t]);
  for (int t = 1; t < static_cast<int>(seq.frames.size()); ++t) {
    write_flo(seq.gt[t - 1], indexed(args.out, "gt_%04d.flo", t));
    write_png_mask(indexed(args.out, "mask_%04d.png", t), seq.valid[t - 1]);
  }
  std::cout << "wrote " << seq.frames.size() << " frames and " << seq.gt.size()
            << " ground-truth fields to " << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// align

struct AlignArgs {
  std::string in;
  std::string out;
  int k = 2;
  double sigma = 30.0;
  double a = 1.0;
  int sweeps = 2;
  std::uint64_t seed = 0;
  std::string mode = "tmp";
  int radius = 15;
  std::string weighting = "none";
  int threads = 0;  // 0 -> env or hardware
  double max_offset = -1.0;
  std::string distance = "channel-mean";
  bool viz = false;
};

std::vector<std::string> list_frames(const std::string& dir) {
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir);
  std::vector<std::string> frames, all;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".png") continue;
    const std::string name = e.path().filename().string();
    all.push_back(e.path().string());
    if (name.rfind("frame_", 0) == 0) frames.push_back(e.path().string());
  }
  auto& chosen = frames.empty() ? all : frames;
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

PipelineOptions pipeline_options(const AlignArgs& args) {
  PipelineOptions opts;
  opts.cfg.k = args.k;
  opts.cfg.sigma = args.sigma;
  opts.cfg.a = args.a;
  opts.cfg.sweeps = args.sweeps;
  opts.cfg.seed = args.seed;
  opts.cfg.capacity = std::max(16, 2 * args.k + 2);
  if (args.max_offset >= 0.0) opts.cfg.max_offset = args.max_offset;
  if (args.distance == "sum")
    opts.cfg.distance_mode = DistanceMode::Sum;
  else if (args.distance == "channel-mean")
    opts.cfg.distance_mode = DistanceMode::ChannelMean;
  else
    throw UsageError("distance must be sum or channel-mean");
  opts.mode = parse_align_mode(args.mode);
  opts.weighting = parse_weighting(args.weighting);
  opts.full_search_radius = args.radius;
  return opts;
}

int run_align(const AlignArgs& args) {
  const auto frames = list_frames(args.in);
  if (frames.size() < 2) throw UsageError("need at least 2 frames in " + args.in);
  const int threads =
      args.threads > 0
          ? args.threads
          : threads_from_env_or(std::max(1u, std::thread::hardware_concurrency()));
  set_worker_count(threads);

  PipelineOptions opts;
  try {
    opts = pipeline_options(args);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  SequenceAligner aligner(opts);
  fs::create_directories(args.out);

  std::ofstream timing(fs::path(args.out) / "timing.csv");
  timing << "frame,ms_per_frame\n";
  int written = 0;
  double total_ms = 0.0;
  for (const auto& path : frames) {
    const FeatureMap frame = read_png_gray(path);
    auto result = aligner.push(frame);
    if (!result) continue;
    const int t = static_cast<int>(result->frame_index);
    write_flo(result->flow, indexed(args.out, "flow_%04d.flo", t));
    write_confidence_png(result->conf, indexed(args.out, "conf_%04d.png", t));
    write_png_gray(indexed(args.out, "warp_%04d.png", t), result->warped);
    if (args.viz) write_flow_png(result->flow, indexed(args.out, "flowviz_%04d.png", t));
    timing << t << ',' << result->ms << "\n";
    total_ms += result->ms;
    ++written;
  }
  std::cout << "aligned " << written << " frames (" << args.mode << ", " << threads
            << " threads), mean " << (written ? total_ms / written : 0.0) << " ms/frame\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string est;
  std::string gt;
  std::string csv;
  double conf_threshold = 0.0;  // 0 -> no stratified column
};

std::map<int, double> read_timing(const std::string& dir) {
  std::map<int, double> ms;
  std::ifstream in(fs::path(dir) / "timing.csv");
  if (!in) return ms;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    try {
      ms[std::stoi(line.substr(0, comma))] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
    }
  }
  return ms;
}

int run_eval(const EvalArgs& args) {
  if (!fs::is_directory(args.gt)) throw UsageError("not a directory: " + args.gt);
  if (!fs::is_directory(args.est)) throw UsageError("not a directory: " + args.est);
  const bool stratified = args.conf_threshold > 0.0;

  // Index union of both directories; a hole on either side is a usage error.
  std::set<int> index_set;
  bool est_has_flows = false;
  for (const auto& e : fs::directory_iterator(args.est)) {
    const std::string name = e.path().filename().string();
    int idx = 0;
    if (std::sscanf(name.c_str(), "flow_%d.flo", &idx) == 1) {
      index_set.insert(idx);
      est_has_flows = true;
    }
  }
  for (const auto& e : fs::directory_iterator(args.gt)) {
    const std::string name = e.path().filename().string();
    int idx = 0;
    if (std::sscanf(name.c_str(), "gt_%d.flo", &idx) == 1) index_set.insert(idx);
  }
  const std::vector<int> indices(index_set.begin(), index_set.end());
  if (indices.empty()) throw UsageError("no flow files in " + args.est + " or " + args.gt);

  std::vector<FrameReport> rows;
  std::vector<double> all_errors;
  double pooled_se = 0.0, pooled_conf = 0.0, pooled_ms = 0.0;
  std::size_t pooled_px = 0, pooled_conf_n = 0, psnr_frames = 0;
  const auto timing = read_timing(args.est);

  for (const int t : indices) {
    const std::string gt_path = indexed(args.gt, "gt_%04d.flo", t);
    std::string est_path = indexed(args.est, "flow_%04d.flo", t);
    if (!fs::exists(est_path) && !est_has_flows)
      est_path = indexed(args.est, "gt_%04d.flo", t);  // scoring gt against itself
    if (!fs::exists(est_path))
      throw UsageError("missing estimated flow for index " + std::to_string(t));
    if (!fs::exists(gt_path))
      throw UsageError("missing ground-truth flow for index " + std::to_string(t));
    const MotionField est = read_flo(est_path);
    const MotionField gt = read_flo(gt_path);

    std::optional<ValidityMask> mask;
    const std::string mask_path = indexed(args.gt, "mask_%04d.png", t);
    if (fs::exists(mask_path)) mask = read_png_mask(mask_path);

    FrameReport row;
    row.frame = std::to_string(t);
    const EpeStats stats = epe(est, gt, mask ? &*mask : nullptr);
    row.mean_epe = stats.mean;
    row.median_epe = stats.median;
    row.pct_le_1px = 100.0 * stats.frac_le_1px;

    // Pool per-pixel errors for the aggregate row.
    for (int y = 0; y < est.height(); ++y)
      for (int x = 0; x < est.width(); ++x) {
        if (mask && !mask->at(x, y)) continue;
        const Offset a = est.at(x, y);
        const Offset b = gt.at(x, y);
        all_errors.push_back(std::hypot(static_cast<double>(a.dx) - b.dx,
                                        static_cast<double>(a.dy) - b.dy));
      }

    // Warping PSNR against the current frame, from the stored warp image or,
    // failing that, by warping the previous frame with the estimated flow.
    const std::string cur_path = indexed(args.gt, "frame_%04d.png", t);
    const std::string prev_path = indexed(args.gt, "frame_%04d.png", t - 1);
    std::optional<FeatureMap> warped;
    const std::string warp_path = indexed(args.est, "warp_%04d.png", t);
    if (fs::exists(warp_path)) {
      warped = read_png_gray(warp_path);
    } else if (fs::exists(prev_path)) {
      warped = backward_warp(read_png_gray(prev_path), est);
    }
    if (warped && fs::exists(cur_path)) {
      const FeatureMap cur = read_png_gray(cur_path);
      row.warp_psnr = warping_psnr(cur, *warped);
      ++psnr_frames;
      for (int y = 0; y < cur.height(); ++y)
        for (int x = 0; x < cur.width(); ++x) {
          const double d = static_cast<double>(cur.at(x, y, 0)) - warped->at(x, y, 0);
          pooled_se += d * d;
          ++pooled_px;
        }
      if (stratified) {
        const std::string conf_path = indexed(args.est, "conf_%04d.png", t);
        if (fs::exists(conf_path)) {
          const ConfidenceMap conf = read_confidence_png(conf_path);
          row.warp_psnr_high =
              confidence_stratified_psnr(cur, *warped, conf, args.conf_threshold).psnr_high;
        }
      }
    }

    const std::string conf_path = indexed(args.est, "conf_%04d.png", t);
    if (fs::exists(conf_path)) {
      const ConfidenceMap conf = read_confidence_png(conf_path);
      double sum = 0.0;
      for (double c : conf.data()) sum += c;
      row.mean_conf = sum / conf.size();
      pooled_conf += sum;
      pooled_conf_n += conf.size();
    }
    if (auto it = timing.find(t); it != timing.end()) {
      row.ms_per_frame = it->second;
      pooled_ms += it->second;
    }
    rows.push_back(std::move(row));
  }

  FrameReport agg;
  agg.frame = "all";
  {
    double sum = 0.0;
    std::size_t le1 = 0;
    for (double e : all_errors) {
      sum += e;
      if (e <= 1.0) ++le1;
    }
    agg.mean_epe = sum / all_errors.size();
    agg.pct_le_1px = 100.0 * static_cast<double>(le1) / all_errors.size();
    std::sort(all_errors.begin(), all_errors.end());
    const std::size_t n = all_errors.size();
    agg.median_epe =
        (n % 2 == 1) ? all_errors[n / 2] : 0.5 * (all_errors[n / 2 - 1] + all_errors[n / 2]);
  }
  if (pooled_px > 0) {
    const double mse = pooled_se / pooled_px;
    agg.warp_psnr =
        mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
  }
  if (pooled_conf_n > 0) agg.mean_conf = pooled_conf / pooled_conf_n;
  if (!timing.empty()) agg.ms_per_frame = pooled_ms / static_cast<double>(rows.size());
  rows.push_back(std::move(agg));

  write_csv(std::cout, rows, stratified);
  if (!args.csv.empty()) write_csv(args.csv, rows, stratified);
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string size = "320x180";
  int frames = 4;
  int reps = 5;
  int warmup = 1;
  int radius = 15;
  std::uint64_t seed = 1;
  std::string modes = "tmp,full-search";
  std::string threads;  // comma list; empty -> "1,<hw>"
};

struct BenchRow {
  std::string mode;
  int threads = 1;
  double ms_median = 0.0;
  std::uint64_t evals_per_frame = 0;
  std::uint64_t evals_total = 0;
};

int run_bench(const BenchArgs& args) {
  const auto [w, h] = parse_size(args.size);
  if (args.reps < 1) throw UsageError("reps must be at least 1");
  if (args.warmup < 0) throw UsageError("warmup must be non-negative");

  std::vector<std::string> mode_names;
  {
    std::stringstream ss(args.modes);
    std::string item;
    while (std::getline(ss, item, ',')) mode_names.push_back(item);
  }
  if (mode_names.empty()) throw UsageError("no modes requested");

  std::vector<int> thread_counts;
  if (args.threads.empty()) {
    thread_counts = {1};
    const int hw = threads_from_env_or(std::max(1u, std::thread::hardware_concurrency()));
    if (hw > 1) thread_counts.push_back(hw);
  } else {
    std::stringstream ss(args.threads);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        thread_counts.push_back(std::max(1, std::stoi(item)));
      } catch (const std::exception&) {
        throw UsageError("threads must be a comma-separated integer list");
      }
    }
  }

  const SceneSpec spec = scenario_preset("pan", w, h, args.frames, args.seed);
  const Sequence seq = generate_sequence(spec);

  std::vector<BenchRow> rows;
  for (const std::string& mode_name : mode_names) {
    PipelineOptions opts;
    try {
      opts.mode = parse_align_mode(mode_name);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    opts.full_search_radius = args.radius;
    opts.cfg.seed = args.seed;
    for (const int threads : thread_counts) {
      set_worker_count(threads);
      std::vector<double> ms;
      std::uint64_t evals_total = 0;
      for (int rep = 0; rep < args.warmup + args.reps; ++rep) {
        SequenceAligner aligner(opts);
        std::uint64_t pass_evals = 0;
        for (const FeatureMap& frame : seq.frames) {
          auto r = aligner.push(frame);
          if (!r) continue;
          pass_evals += r->distance_evals;
          if (rep >= args.warmup) ms.push_back(r->ms);
        }
        evals_total = pass_evals;  // identical in every pass
      }
      std::sort(ms.begin(), ms.end());
      BenchRow row;
      row.mode = mode_name;
      row.threads = threads;
      row.ms_median = ms.empty() ? 0.0
                     : ms.size() % 2 == 1
                         ? ms[ms.size() / 2]
                         : 0.5 * (ms[ms.size() / 2 - 1] + ms[ms.size() / 2]);
      row.evals_total = evals_total;
      row.evals_per_frame = evals_total / std::max<std::uint64_t>(1, seq.frames.size() - 1);
      rows.push_back(row);
    }
  }
  set_worker_count(1);

  // Full-search rows (same thread count) are the speedup denominators.
  auto baseline = [&](int threads) -> const BenchRow* {
    for (const auto& r : rows)
      if (r.mode == "full-search" && r.threads == threads) return &r;
    return nullptr;
  };
  std::cout << "mode,threads,ms_per_frame_median,evals_per_frame,evals_total,"
               "speedup_vs_full_search,eval_ratio_vs_full_search\n";
  for (const auto& r : rows) {
    std::cout << r.mode << ',' << r.threads << ',' << detail::csv_cell(r.ms_median) << ','
              << r.evals_per_frame << ',' << r.evals_total;
    if (const BenchRow* base = baseline(r.threads); base && base->mode != r.mode) {
      std::cout << ',' << detail::csv_cell(r.ms_median > 0 ? base->ms_median / r.ms_median : 0.0)
                << ','
                << detail::csv_cell(r.evals_per_frame > 0
                                        ? static_cast<double>(base->evals_per_frame) /
                                              static_cast<double>(r.evals_per_frame)
                                        : 0.0);
    } else {
      std::cout << ",,";
    }
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporal motion propagation: frame alignment toolkit"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "render a synthetic sequence with ground truth");
  synth->add_option("--preset", synth_args.preset, "scene preset name");
  synth->add_option("--spec", synth_args.spec_file, "JSON scene spec (overrides --preset)");
  synth->add_option("--size", synth_args.size, "frame size WIDTHxHEIGHT");
  synth->add_option("--frames", synth_args.frames, "frame count");
  synth->add_option("--seed", synth_args.seed, "texture seed");
  synth->add_option("--out", synth_args.out, "output directory")->required();

  AlignArgs align_args;
  auto* align = app.add_subcommand("align", "align a directory of PNG frames");
  align->add_option("--in", align_args.in, "input frame directory")->required();
  align->add_option("--out", align_args.out, "output directory")->required();
  align->add_option("--k", align_args.k, "jittered candidates per path");
  align->add_option("--sigma", align_args.sigma, "jitter std in pixels");
  align->add_option("--a", align_args.a, "confidence decay");
  align->add_option("--sweeps", align_args.sweeps, "finetune sweeps");
  align->add_option("--seed", align_args.seed, "rng seed");
  align->add_option("--mode", align_args.mode,
                    "tmp|scratch|obj-only|cam-only|no-align|full-search");
  align->add_option("--radius", align_args.radius, "full-search radius");
  align->add_option("--weighting", align_args.weighting, "mcwf|srf|none");
  align->add_option("--threads", align_args.threads, "worker threads (0 = auto)");
  align->add_option("--max-offset", align_args.max_offset, "offset clamp (<0 = auto)");
  align->add_option("--distance", align_args.distance, "sum|channel-mean");
  align->add_flag("--viz", align_args.viz, "also write color-wheel flow images");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "score estimated flows against ground truth");
  eval->add_option("--est", eval_args.est, "estimated flow directory")->required();
  eval->add_option("--gt", eval_args.gt, "ground-truth directory")->required();
  eval->add_option("--csv", eval_args.csv, "also write the report here");
  eval->add_option("--conf-threshold", eval_args.conf_threshold,
                   "emit stratified PSNR for confidence >= threshold");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "latency and evaluation-count benchmark");
  bench->add_option("--size", bench_args.size, "frame size WIDTHxHEIGHT");
  bench->add_option("--frames", bench_args.frames, "frames per pass");
  bench->add_option("--reps", bench_args.reps, "timed passes");
  bench->add_option("--warmup", bench_args.warmup, "discarded passes");
  bench->add_option("--radius", bench_args.radius, "full-search radius");
  bench->add_option("--seed", bench_args.seed, "scene and rng seed");
  bench->add_option("--modes", bench_args.modes, "comma list of modes");
  bench->add_option("--threads", bench_args.threads, "comma list of worker counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (align->parsed()) return run_align(align_args);
    if (eval->parsed()) return run_eval(eval_args);
    if (bench->parsed()) return run_bench(bench_args);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
