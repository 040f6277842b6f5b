// msreg: register, warp, fuse and evaluate multi-band image pairs.
//
// Exit codes: 0 success, 1 usage / I/O / config error, 2 algorithmic failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msreg/msreg.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAlgorithm = 2;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", opts.overrides, "override a config key (key=value); repeatable");
}

msreg::CliConfig resolve_config(const CommonOptions& opts) {
  msreg::CliConfig cfg = opts.config_path.empty() ? msreg::CliConfig{} : msreg::load_config(opts.config_path);
  for (const std::string& kv : opts.overrides) msreg::apply_override(cfg, kv);
  cfg.validate();
  return cfg;
}

std::string size_string(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

std::string describe(const msreg::AffineTransform& t) {
  const auto& m = t.matrix();
  char buf[200];
  std::snprintf(buf, sizeof buf, "[%.5f %.5f %.4f; %.5f %.5f %.4f]", m[0], m[1], m[2], m[3], m[4], m[5]);
  return buf;
}

int cmd_register(const std::string& visible, const std::string& infrared, const std::string& out_path,
                 const std::string& text_path, const CommonOptions& opts) {
  const msreg::CliConfig cfg = resolve_config(opts);
  const msreg::GrayImage v = msreg::read_gray(visible);
  const msreg::GrayImage ir = msreg::read_gray(infrared);
  const msreg::RegistrationResult r = msreg::register_images(v, ir, cfg.registration);

  for (int i = 0; i < 3; ++i) {
    const auto& it = r.per_iteration[static_cast<std::size_t>(i)];
    std::cout << "iteration " << i + 1 << ": matches " << it.match_count << ", support " << it.support << ", T "
              << describe(it.transform) << "\n";
  }
  std::cout << "support " << r.support << " (" << r.corners.v.size() << " / " << r.corners.ir.size()
            << " descriptors)\n";
  if (r.low_confidence) std::cout << "warning: low confidence (support below 10% of initial matches)\n";

  const msreg::TransformRecord rec{r.t3, r.support, static_cast<int>(r.inliers.size())};
  msreg::write_file_atomic(out_path, msreg::transform_to_json(rec));
  if (!text_path.empty()) msreg::write_file_atomic(text_path, msreg::transform_to_text(r.t3));
  return kExitOk;
}

int cmd_warp(const std::string& input, const std::string& transform_path, const std::string& out_path, int out_w,
             int out_h, int depth) {
  const msreg::TransformRecord rec = msreg::read_transform(transform_path);
  if (!rec.transform.invertible()) {
    std::cerr << "msreg warp: transform in " << transform_path << " is singular\n";
    return kExitAlgorithm;
  }
  msreg::AnyImage img = msreg::read_image(input);
  msreg::AnyImage out = std::visit(
      [&](const auto& src) -> msreg::AnyImage {
        const int w = out_w > 0 ? out_w : src.width();
        const int h = out_h > 0 ? out_h : src.height();
        return msreg::warp_affine(src, rec.transform, w, h, 0.0F);
      },
      img);
  msreg::write_image(out_path, out, depth);
  return kExitOk;
}

int cmd_fuse(const std::string& visible, const std::string& infrared, const std::string& out_gray,
             const std::string& out_color, const std::string& dump_dir, const CommonOptions& opts) {
  const msreg::CliConfig cfg = resolve_config(opts);
  const msreg::ColorImage v = msreg::read_color(visible);
  const msreg::GrayImage ir = msreg::read_gray(infrared);
  if (v.width() != ir.width() || v.height() != ir.height()) {
    std::cerr << "msreg fuse: size mismatch: visible " << size_string(v.width(), v.height()) << ", infrared "
              << size_string(ir.width(), ir.height()) << " (warp the infrared image first)\n";
    return kExitUsage;
  }
  const msreg::FusionResult f = msreg::fuse_pair(v, ir, cfg.fusion);
  if (!dump_dir.empty()) {
    std::filesystem::create_directories(dump_dir);
    const msreg::GrayImage yv = msreg::to_luminance(v);
    for (std::size_t i = 0; i < cfg.fusion.sigmas.size(); ++i) {
      const auto fs = msreg::fuse_single_scale(yv, ir, cfg.fusion.sigmas[i], cfg.fusion.alpha, cfg.fusion.gain);
      msreg::GrayImage g(fs.width(), fs.height());
      for (std::size_t k = 0; k < g.size(); ++k) g.pixels()[k] = static_cast<float>(fs.pixels()[k]);
      msreg::write_image((std::filesystem::path(dump_dir) / ("scale" + std::to_string(i + 1) + ".png")).string(),
                         msreg::clamp01(g));
    }
  }
  msreg::write_image(out_gray, f.gray);
  msreg::write_image(out_color, f.color);
  return kExitOk;
}

int cmd_eval(const std::string& dataset_dir, const std::string& spec_path, const std::string& out_csv, bool stub,
             const CommonOptions& opts) {
  CommonOptions merged = opts;
  merged.config_path = spec_path;
  const msreg::CliConfig cfg = resolve_config(merged);
  const std::vector<msreg::GrayImage> bases = msreg::load_dataset(dataset_dir);
  msreg::Registrar registrar = msreg::pipeline_registrar(cfg.registration);
  if (stub) {
    registrar = [](const msreg::GrayImage&, const msreg::GrayImage&, const msreg::AffineTransform& truth) {
      return msreg::RegistrarOutput{truth, 0};
    };
  }
  const msreg::AccuracyReport report = msreg::run_benchmark(bases, cfg.sim, registrar);
  msreg::write_file_atomic(out_csv, msreg::report_to_csv(report));

  char buf[160];
  std::snprintf(buf, sizeof buf, "mean error %.6f px, median %.6f px, max %.6f px, failures %d/%zu\n", report.mean,
                report.median, report.max, report.failures, report.rows.size());
  std::cout << buf;
  if (report.per_scale.size() > 1) {
    for (const auto& s : report.per_scale) {
      std::snprintf(buf, sizeof buf, "  scale %.4f: mean %.6f px, max scale error %.6f, failures %d/%d\n", s.scale,
                    s.mean_error, s.max_scale_error, s.failures, s.count);
      std::cout << buf;
    }
  }
  return kExitOk;
}

int cmd_synth(const std::string& out_path, int w, int h, std::uint64_t seed) {
  msreg::write_image(out_path, msreg::synthesize_texture(w, h, seed));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-band image registration and fusion"};
  app.require_subcommand(1);
  app.footer("Config keys (file lines or --set key=value), with defaults:\n" + msreg::describe_config());

  CommonOptions reg_opts, fuse_opts, eval_opts;

  std::string visible, infrared, out_path, text_path;
  auto* reg = app.add_subcommand("register", "estimate the transform mapping visible pixels onto infrared pixels");
  reg->add_option("visible", visible, "visible-band image")->required();
  reg->add_option("infrared", infrared, "infrared-band image")->required();
  reg->add_option("out", out_path, "output transform JSON")->required();
  reg->add_option("--text", text_path, "also write the 2x3 matrix as plain text");
  add_config_options(reg, reg_opts);

  std::string warp_in, warp_t, warp_out;
  int warp_w = 0, warp_h = 0, warp_depth = 8;
  auto* warp = app.add_subcommand("warp", "resample an image with a transform (JSON or 2x3 text)");
  warp->add_option("input", warp_in, "image to warp")->required();
  warp->add_option("transform", warp_t, "transform file")->required();
  warp->add_option("out", warp_out, "output image")->required();
  warp->add_option("--width", warp_w, "output width (default: input width)");
  warp->add_option("--height", warp_h, "output height (default: input height)");
  warp->add_option("--depth", warp_depth, "output bit depth, 8 or 16")->check(CLI::IsMember({8, 16}));

  std::string fuse_v, fuse_ir, fuse_gray, fuse_color, dump_dir;
  auto* fuse = app.add_subcommand("fuse", "fuse a registered visible/infrared pair");
  fuse->add_option("visible", fuse_v, "visible image (color or gray)")->required();
  fuse->add_option("infrared", fuse_ir, "aligned infrared image")->required();
  fuse->add_option("out_gray", fuse_gray, "fused luminance output")->required();
  fuse->add_option("out_color", fuse_color, "color-restored output")->required();
  fuse->add_option("--dump-scales", dump_dir, "write per-scale fused images into this directory");
  add_config_options(fuse, fuse_opts);

  std::string dataset, spec_path, out_csv;
  bool stub = false;
  auto* ev = app.add_subcommand("eval", "accuracy benchmark on simulated pairs");
  ev->add_option("dataset", dataset, "directory of base images")->required();
  ev->add_option("spec", spec_path, "config file with sim.* (and any other) keys")->required()->check(CLI::ExistingFile);
  ev->add_option("out_csv", out_csv, "per-trial CSV output")->required();
  ev->add_flag("--stub-registration", stub, "report the planted transform instead of registering (harness check)");
  ev->add_option("-s,--set", eval_opts.overrides, "override a config key (key=value); repeatable");

  std::string synth_out;
  int synth_w = 512, synth_h = 512;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("synth", "write a synthetic cluttered test scene");
  synth->add_option("out", synth_out, "output image")->required();
  synth->add_option("--width", synth_w, "width")->check(CLI::Range(16, 8192));
  synth->add_option("--height", synth_h, "height")->check(CLI::Range(16, 8192));
  synth->add_option("--seed", synth_seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*reg) return cmd_register(visible, infrared, out_path, text_path, reg_opts);
    if (*warp) return cmd_warp(warp_in, warp_t, warp_out, warp_w, warp_h, warp_depth);
    if (*fuse) return cmd_fuse(fuse_v, fuse_ir, fuse_gray, fuse_color, dump_dir, fuse_opts);
    if (*ev) return cmd_eval(dataset, spec_path, out_csv, stub, eval_opts);
    if (*synth) return cmd_synth(synth_out, synth_w, synth_h, synth_seed);
  } catch (const msreg::RegistrationError& e) {
    std::cerr << "msreg: registration failed at " << e.what() << "\n";
    return kExitAlgorithm;
  } catch (const msreg::DegenerateFitError& e) {
    std::cerr << "msreg: degenerate fit: " << e.what() << "\n";
    return kExitAlgorithm;
  } catch (const msreg::IoError& e) {
    std::cerr << "msreg: " << e.what() << "\n";
    return kExitUsage;
  } catch (const msreg::ParameterError& e) {
    std::cerr << "msreg: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "msreg: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
