// Copyright 2026 The IID Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: every subcommand loads linear images, runs one module
// pipeline, writes image outputs plus JSON reports, and logs its resolved
// configuration to stderr.  Exit codes: 0 success, 1 module error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iid/datasets.hpp"
#include "iid/iid.hpp"
#include "iid/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitModuleError = 1;
constexpr int kExitUsage = 2;

void log_config(const std::string& command, const json& cfg) {
  std::cerr << "iid " << command << ": resolved config " << cfg.dump() << "\n";
}

void write_json(const std::string& path, const json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw iid::LoadError("cannot write '" + path + "'");
  out << doc.dump(2) << "\n";
  if (!out) throw iid::LoadError("short write on '" + path + "'");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw iid::LoadError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw iid::ParseError(path + ": " + e.what());
  }
}

iid::Linearization parse_linearization(const std::string& s) {
  if (s == "srgb") return iid::Linearization::srgb;
  if (s == "identity") return iid::Linearization::identity;
  throw iid::InvalidParameter("unknown linearization '" + s + "' (expected srgb or identity)");
}

const char* linearization_name(iid::Linearization m) { return m == iid::Linearization::srgb ? "srgb" : "identity"; }

json summary_json(const iid::MetricSummary& s) { return {{"mean", s.mean}, {"median", s.median}, {"trimean", s.trimean}}; }

// ---------------------------------------------------------------------------------------

struct DecomposeArgs {
  std::string input, config, preset = "default", out_r, out_s, report;
};

int run_decompose(const DecomposeArgs& a) {
  iid::PipelineConfig cfg = iid::preset(a.preset);
  if (!a.config.empty()) iid::apply_json(cfg, read_json_file(a.config));
  cfg.validate();
  log_config("decompose", iid::to_json(cfg));
  const iid::LinearImage img = iid::io::load_image(a.input, cfg.linearization);
  const iid::DecomposeResult r = iid::decompose(img, cfg);
  if (!a.out_r.empty()) iid::io::save_image(a.out_r, r.intrinsics.reflectance, cfg.linearization, cfg.bit_depth);
  if (!a.out_s.empty()) iid::io::save_image(a.out_s, r.intrinsics.shading, cfg.linearization, cfg.bit_depth);
  if (!a.report.empty()) write_json(a.report, iid::energy_report(r));
  return 0;
}

struct RetinexArgs {
  std::string input, out_r, out_s, linearization = "srgb";
  bool ccr = false;
  iid::RetinexParams params;
};

int run_retinex(const RetinexArgs& a) {
  a.params.validate();
  const auto mode = parse_linearization(a.linearization);
  log_config("retinex", {{"ccr", a.ccr},
                         {"t_brightness", a.params.t_brightness},
                         {"t_chroma", a.params.t_chroma},
                         {"ccr_threshold", a.params.ccr_threshold},
                         {"sigma", a.params.sigma},
                         {"linearization", linearization_name(mode)}});
  const iid::LinearImage img = iid::io::load_image(a.input, mode);
  const iid::Decomposition d = iid::retinex_decompose(img, a.params, a.ccr);
  if (d.degraded) std::cerr << "iid retinex: warning: Poisson solve did not reach tolerance\n";
  if (!a.out_r.empty()) iid::io::save_image(a.out_r, d.reflectance, mode);
  if (!a.out_s.empty()) iid::io::save_image(a.out_s, d.shading, mode);
  return 0;
}

struct RatiosArgs {
  std::string input, out, mask, linearization = "srgb";
  double sigma = 1.0;
  double threshold = iid::kDefaultRatioThreshold;
};

int run_ratios(const RatiosArgs& a) {
  if (!(a.sigma > 0.0)) throw iid::InvalidParameter("--sigma must be > 0");
  const auto mode = parse_linearization(a.linearization);
  log_config("ratios", {{"sigma", a.sigma}, {"threshold", a.threshold}, {"linearization", linearization_name(mode)}});
  const iid::LinearImage img = iid::io::load_image(a.input, mode);
  const iid::RatioField field = iid::ratio_field(img, a.sigma);
  if (!a.out.empty()) {
    double peak = 0.0;
    for (double v : field.fused.pixels()) peak = std::max(peak, v);
    // Raw output keeps the values; PNG output is normalized for display.
    iid::io::save_field(a.out, field.fused, iid::io::has_raw_extension(a.out) ? 1.0 : peak);
  }
  if (!a.mask.empty()) {
    const iid::BinaryMask m = iid::significance_mask(field, a.threshold);
    iid::ScalarField f(m.width(), m.height(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) f[i] = m[i] ? 1.0 : 0.0;
    iid::io::save_field(a.mask, f);
  }
  return 0;
}

struct ClusterArgs {
  std::string input, out, out_r, k = "auto", linearization = "srgb";
  double ratio_weight = iid::kRatioWeightMit;
  std::uint64_t seed = 0;
  int k_max = iid::kDefaultMaxClusters;
};

int run_cluster(const ClusterArgs& a) {
  const auto mode = parse_linearization(a.linearization);
  const bool automatic = a.k == "auto";
  int k = 0;
  if (!automatic) {
    std::size_t used = 0;
    try {
      k = std::stoi(a.k, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != a.k.size() || k <= 0) throw iid::InvalidParameter("--k must be 'auto' or a positive integer, got '" + a.k + "'");
  }
  if (!(a.ratio_weight >= 0.0)) throw iid::InvalidParameter("--ratio-weight must be >= 0");
  const iid::LinearImage img = iid::io::load_image(a.input, mode);
  if (automatic) k = iid::adaptive_k(img, a.k_max);
  k = std::min<int>(k, static_cast<int>(img.size()));
  const bool use_ratios = a.ratio_weight > 0.0;
  log_config("cluster", {{"k", automatic ? json("auto") : json(k)},
                         {"resolved_k", k},
                         {"ratio_weight", a.ratio_weight},
                         {"use_ratio_features", use_ratios},
                         {"seed", a.seed},
                         {"linearization", linearization_name(mode)}});
  const iid::FeatureMatrix feats = iid::build_features(img, use_ratios, a.ratio_weight);
  const iid::ClusterModel model = iid::kmeans(feats, k, a.seed);
  if (!a.out.empty()) {
    // Label indices stored verbatim as 16-bit gray levels.
    iid::EncodedImage enc{img.width(), img.height(), 16, {}};
    enc.samples.resize(img.size() * 3);
    for (std::size_t i = 0; i < img.size(); ++i)
      enc.samples[3 * i] = enc.samples[3 * i + 1] = enc.samples[3 * i + 2] = static_cast<std::uint16_t>(model.assignment[i]);
    iid::io::write_png(a.out, enc, true);
  }
  if (!a.out_r.empty()) iid::io::save_image(a.out_r, iid::labels_to_reflectance(img, model), mode);
  std::cout << json{{"k", model.k}, {"objective", model.objective}, {"iterations", model.iterations}}.dump() << "\n";
  return 0;
}

struct SynthArgs {
  std::string size = "128x128", shading = "mixed", out_dir;
  int colors = 5;
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& a) {
  int w = 0, h = 0;
  char sep = 0, tail = 0;
  std::istringstream ss(a.size);
  if (!(ss >> w >> sep >> h) || (sep != 'x' && sep != 'X') || (ss >> tail) || w <= 0 || h <= 0)
    throw iid::InvalidParameter("--size must look like WxH, got '" + a.size + "'");
  const iid::ShadingKind kind = iid::parse_shading_kind(a.shading);
  log_config("synth", {{"width", w}, {"height", h}, {"colors", a.colors}, {"shading", a.shading}, {"seed", a.seed}});
  const iid::Mondrian m = iid::gen_mondrian(w, h, a.colors, a.seed);
  const iid::ScalarField geom = iid::gen_shading(w, h, kind, a.seed);
  const iid::Rgb e = iid::gen_illuminant(a.seed);
  const iid::SyntheticScene scene = iid::compose(m.image, geom, e);
  iid::LinearImage shading(w, h);
  for (std::size_t i = 0; i < shading.size(); ++i) shading[i] = e * geom[i];

  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  const std::pair<const char*, const iid::LinearImage*> outputs[] = {
      {"image", &scene.image}, {"reflectance", &scene.reflectance}, {"shading", &shading}};
  for (const auto& [name, img] : outputs) {
    iid::io::save_image((dir / (std::string(name) + ".png")).string(), *img);
    iid::io::save_image((dir / (std::string(name) + ".iidf")).string(), *img);
  }
  json palette = json::array();
  for (const auto& c : m.palette) palette.push_back({c.r, c.g, c.b});
  write_json((dir / "manifest.json").string(), {{"seed", a.seed},
                                                {"width", w},
                                                {"height", h},
                                                {"colors", a.colors},
                                                {"shading", a.shading},
                                                {"palette", palette},
                                                {"illuminant", {e.r, e.g, e.b}},
                                                {"png_encoding", "srgb"},
                                                {"files", {"image", "reflectance", "shading"}}});
  return 0;
}

struct EvalMitArgs {
  std::string dir, method = "final", report;
};

int run_eval_mit(const EvalMitArgs& a) {
  iid::PipelineConfig cfg;
  if (a.method == "default") cfg = iid::preset_default();
  else if (a.method == "final") cfg = iid::preset("mit");
  else throw iid::InvalidParameter("--method must be default or final, got '" + a.method + "'");
  cfg.linearization = iid::Linearization::identity;
  log_config("eval mit", {{"method", a.method}, {"pipeline", iid::to_json(cfg)}});
  const auto cases = iid::list_mit_cases(a.dir);
  if (cases.empty()) throw iid::LoadError("no MIT cases under '" + a.dir + "'");
  json per_case = json::array();
  std::vector<double> scores;
  for (const auto& path : cases) {
    const iid::MitCase c = iid::load_mit_case(path);
    const iid::DecomposeResult r = iid::decompose(c.image, cfg);
    const double score = iid::lmse(r.intrinsics.reflectance, c.reflectance, iid::kLmseWindow, &c.mask);
    scores.push_back(score);
    per_case.push_back({{"case", c.name}, {"lmse", score}, {"k", r.k}});
    std::cerr << "iid eval mit: " << c.name << " lmse " << score << "\n";
  }
  const json doc{{"dataset", "mit"}, {"method", a.method}, {"cases", per_case}, {"summary", summary_json(iid::central_tendency(scores))}};
  if (!a.report.empty()) write_json(a.report, doc);
  else std::cout << doc.dump(2) << "\n";
  return 0;
}

struct EvalIiwArgs {
  std::string images, judgments, report;
  std::string config;
};

int run_eval_iiw(const EvalIiwArgs& a) {
  iid::PipelineConfig cfg = iid::preset("iiw");
  if (!a.config.empty()) iid::apply_json(cfg, read_json_file(a.config));
  cfg.guided.enabled = false;  // raw and filtered scores are both computed below
  cfg.validate();
  log_config("eval iiw", iid::to_json(cfg));
  const auto cases = iid::list_iiw_cases(a.images, a.judgments);
  if (cases.empty()) throw iid::LoadError("no IIW image/judgment pairs found");
  json per_case = json::array();
  std::vector<double> raw, filtered;
  for (const auto& c : cases) {
    const iid::LinearImage img = iid::io::load_image(c.image.string(), cfg.linearization);
    const auto judgments = iid::load_iiw_judgments(c.judgments.string());
    const iid::DecomposeResult r = iid::decompose(img, cfg);
    const iid::LinearImage smooth = iid::guided_filter(r.intrinsics.reflectance, img, cfg.guided.radius, cfg.guided.eps);
    raw.push_back(iid::whdr(r.intrinsics.reflectance, judgments));
    filtered.push_back(iid::whdr(smooth, judgments));
    per_case.push_back({{"case", c.id}, {"whdr", raw.back()}, {"whdr_guided", filtered.back()}, {"judgments", judgments.size()}});
    std::cerr << "iid eval iiw: " << c.id << " whdr " << raw.back() << " (guided " << filtered.back() << ")\n";
  }
  const json doc{{"dataset", "iiw"},
                 {"cases", per_case},
                 {"summary", summary_json(iid::central_tendency(raw))},
                 {"summary_guided", summary_json(iid::central_tendency(filtered))}};
  if (!a.report.empty()) write_json(a.report, doc);
  else std::cout << doc.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intrinsic image decomposition with cross color ratios", "iid"};
  app.require_subcommand(1);

  DecomposeArgs dec;
  auto* c_dec = app.add_subcommand("decompose", "Full pipeline: clustering + CRF refinement");
  c_dec->add_option("input", dec.input, "Input image (.png or .iidf)")->required();
  c_dec->add_option("--config", dec.config, "JSON configuration merged over the preset");
  c_dec->add_option("--preset", dec.preset, "default, mit or iiw")->capture_default_str();
  c_dec->add_option("--out-r", dec.out_r, "Reflectance output");
  c_dec->add_option("--out-s", dec.out_s, "Shading output");
  c_dec->add_option("--report", dec.report, "Energy report (JSON)");

  RetinexArgs ret;
  auto* c_ret = app.add_subcommand("retinex", "Color Retinex, optionally fused with the ratio mask");
  c_ret->add_option("input", ret.input, "Input image")->required();
  c_ret->add_flag("--ccr", ret.ccr, "OR-fuse the cross-ratio significance mask");
  c_ret->add_option("--tb", ret.params.t_brightness, "Brightness threshold")->capture_default_str();
  c_ret->add_option("--tc", ret.params.t_chroma, "Chromaticity threshold")->capture_default_str();
  c_ret->add_option("--ccr-threshold", ret.params.ccr_threshold, "Ratio significance threshold")->capture_default_str();
  c_ret->add_option("--sigma", ret.params.sigma, "Ratio pre-blur sigma")->capture_default_str();
  c_ret->add_option("--out-r", ret.out_r, "Reflectance output");
  c_ret->add_option("--out-s", ret.out_s, "Shading output");
  c_ret->add_option("--linearization", ret.linearization, "srgb or identity")->capture_default_str();

  RatiosArgs rat;
  auto* c_rat = app.add_subcommand("ratios", "Fused cross color ratio map and significance mask");
  c_rat->add_option("input", rat.input, "Input image")->required();
  c_rat->add_option("--sigma", rat.sigma, "Pre-blur sigma")->capture_default_str();
  c_rat->add_option("--threshold", rat.threshold, "Significance threshold")->capture_default_str();
  c_rat->add_option("--out", rat.out, "Fused map output");
  c_rat->add_option("--mask", rat.mask, "Binary mask output");
  c_rat->add_option("--linearization", rat.linearization, "srgb or identity")->capture_default_str();

  ClusterArgs clu;
  auto* c_clu = app.add_subcommand("cluster", "k-means reflectance clustering");
  c_clu->add_option("input", clu.input, "Input image")->required();
  c_clu->add_option("--k", clu.k, "'auto' or a cluster count")->capture_default_str();
  c_clu->add_option("--k-max", clu.k_max, "Upper bound for automatic k")->capture_default_str();
  c_clu->add_option("--ratio-weight", clu.ratio_weight, "Ratio feature weight (0 disables)")->capture_default_str();
  c_clu->add_option("--seed", clu.seed, "Seed")->capture_default_str();
  c_clu->add_option("--out", clu.out, "Label map (16-bit gray, value = label)");
  c_clu->add_option("--out-r", clu.out_r, "Cluster-mean reflectance output");
  c_clu->add_option("--linearization", clu.linearization, "srgb or identity")->capture_default_str();

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "Generate a synthetic scene with ground truth");
  c_syn->add_option("--size", syn.size, "WxH")->capture_default_str();
  c_syn->add_option("--colors", syn.colors, "Palette size")->capture_default_str();
  c_syn->add_option("--shading", syn.shading, "smooth, shadow or mixed")->capture_default_str();
  c_syn->add_option("--seed", syn.seed, "Seed")->capture_default_str();
  c_syn->add_option("--out-dir", syn.out_dir, "Output directory")->required();

  auto* c_eval = app.add_subcommand("eval", "Dataset evaluation");
  c_eval->require_subcommand(1);
  EvalMitArgs mit;
  auto* c_mit = c_eval->add_subcommand("mit", "LMSE on an MIT-layout dataset");
  c_mit->add_option("dataset_dir", mit.dir, "Dataset root")->required();
  c_mit->add_option("--method", mit.method, "default or final")->capture_default_str();
  c_mit->add_option("--report", mit.report, "Report output (JSON)");
  EvalIiwArgs iiw;
  auto* c_iiw = c_eval->add_subcommand("iiw", "WHDR on IIW images and judgments");
  c_iiw->add_option("images_dir", iiw.images, "Images directory")->required();
  c_iiw->add_option("judgments_dir", iiw.judgments, "Judgments directory")->required();
  c_iiw->add_option("--config", iiw.config, "JSON configuration merged over the iiw preset");
  c_iiw->add_option("--report", iiw.report, "Report output (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (*c_dec) return run_decompose(dec);
    if (*c_ret) return run_retinex(ret);
    if (*c_rat) return run_ratios(rat);
    if (*c_clu) return run_cluster(clu);
    if (*c_syn) return run_synth(syn);
    if (*c_mit) return run_eval_mit(mit);
    if (*c_iiw) return run_eval_iiw(iiw);
  } catch (const iid::Error& e) {
    std::cerr << "iid: " << e.what() << "\n";
    return kExitModuleError;
  } catch (const std::exception& e) {
    std::cerr << "iid: unexpected error: " << e.what() << "\n";
    return kExitModuleError;
  }
  return kExitUsage;
}
