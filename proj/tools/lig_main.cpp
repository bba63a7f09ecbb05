// Command-line front end. Talks to the library exclusively through lig.h.

#include <cmath>
#include <cstdio>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "lig/lig.h"

namespace {

struct ImageDeleter {
  void operator()(lig_image* p) const { lig_image_destroy(p); }
};
struct ModelDeleter {
  void operator()(lig_model* p) const { lig_model_destroy(p); }
};
using ImagePtr = std::unique_ptr<lig_image, ImageDeleter>;
using ModelPtr = std::unique_ptr<lig_model, ModelDeleter>;

// Failures leave the command as a single line on stderr.
struct CommandError {
  std::string code;
  std::string message;
};

void check(lig_status status) {
  if (status != LIG_OK) throw CommandError{lig_status_name(status), lig_last_error()};
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
    if (c == '"') c = '\'';
  }
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

ImagePtr load_image(const std::string& path) {
  lig_image* raw = nullptr;
  check(lig_image_load(path.c_str(), &raw));
  return ImagePtr(raw);
}

ModelPtr load_model(const std::string& path) {
  lig_model* raw = nullptr;
  check(lig_model_load(path.c_str(), &raw));
  return ModelPtr(raw);
}

void print_value(const char* key, double v) { std::printf("%s=%.10g\n", key, v); }

struct FitArgs {
  std::string input;
  std::string output;
  lig_fit_params params{};
  bool single_level = false;
  bool deterministic = false;
};

void run_fit(const FitArgs& args) {
  ImagePtr image = load_image(args.input);
  lig_fit_params params = args.params;
  params.single_level = args.single_level ? 1 : 0;
  params.deterministic = args.deterministic ? 1 : 0;
  lig_model* raw = nullptr;
  lig_fit_report report{};
  check(lig_fit(image.get(), &params, &raw, &report));
  ModelPtr model(raw);
  check(lig_model_save(model.get(), args.output.c_str()));
  std::printf("n0=%llu\n", static_cast<unsigned long long>(report.n0));
  std::printf("n1=%llu\n", static_cast<unsigned long long>(report.n1));
  if (!std::isnan(report.coarse_final_loss)) print_value("stage0_final_loss", report.coarse_final_loss);
  print_value("stage1_final_loss", report.fine_final_loss);
  print_value("psnr_db", report.psnr_db);
  print_value("wall_time_s", report.wall_seconds);
  std::printf("model=%s\n", args.output.c_str());
}

void run_render(const std::string& model_path, const std::string& output) {
  ModelPtr model = load_model(model_path);
  lig_image* raw = nullptr;
  check(lig_model_reconstruct(model.get(), &raw));
  ImagePtr image(raw);
  check(lig_image_save(image.get(), output.c_str()));
  std::printf("width=%d\nheight=%d\nchannels=%d\noutput=%s\n", lig_image_width(image.get()),
              lig_image_height(image.get()), lig_image_channels(image.get()), output.c_str());
}

void run_eval(const std::string& model_path, const std::string& reference) {
  ModelPtr model = load_model(model_path);
  ImagePtr ref = load_image(reference);
  lig_image* raw = nullptr;
  check(lig_model_reconstruct(model.get(), &raw));
  ImagePtr recon(raw);
  double db = 0.0;
  check(lig_psnr(recon.get(), ref.get(), &db));
  print_value("psnr_db", db);
}

void run_bench(const std::string& model_path, int repeats) {
  ModelPtr model = load_model(model_path);
  double fps = 0.0;
  check(lig_model_benchmark(model.get(), repeats, &fps));
  std::printf("repeats=%d\n", repeats);
  print_value("fps", fps);
}

void run_info(const std::string& model_path) {
  ModelPtr model = load_model(model_path);
  lig_model_info info{};
  check(lig_model_get_info(model.get(), &info));
  std::printf("version=%u\n", info.version);
  std::printf("width=%u\nheight=%u\nchannels=%u\n", info.full_w, info.full_h, info.channels);
  std::printf("levels=%u\n", info.level_count);
  if (info.level_count == 2) std::printf("level0_width=%u\nlevel0_height=%u\n", info.coarse_w, info.coarse_h);
  std::printf("level1_width=%u\nlevel1_height=%u\n", info.fine_w, info.fine_h);
  std::printf("n0=%llu\nn1=%llu\n", static_cast<unsigned long long>(info.n0),
              static_cast<unsigned long long>(info.n1));
  std::printf("total_points=%llu\n", static_cast<unsigned long long>(info.n0 + info.n1));
  print_value("res_min", info.res_min);
  print_value("res_max", info.res_max);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level-of-Gaussian image fitting"};
  app.require_subcommand(1);

  FitArgs fit;
  lig_fit_params_default(&fit.params);
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a PNG image");
  fit_cmd->add_option("input", fit.input, "Input PNG (8-bit gray or RGB)")->required();
  fit_cmd->add_option("-o,--output", fit.output, "Output model file")->required();
  fit_cmd->add_option("--points", fit.params.total_points, "Total Gaussian count")->required();
  fit_cmd->add_option("--ratio", fit.params.ratio, "Coarse-level allocation ratio")->capture_default_str();
  fit_cmd->add_option("--down", fit.params.down_factor, "Coarse-level downsample factor")->capture_default_str();
  fit_cmd->add_option("--iters", fit.params.iters, "Iterations per level")->capture_default_str();
  fit_cmd->add_option("--lr", fit.params.lr, "Adam learning rate")->capture_default_str();
  fit_cmd->add_option("--seed", fit.params.seed, "Random seed")->capture_default_str();
  fit_cmd->add_flag("--single-level", fit.single_level, "Fit one level with all points");
  fit_cmd->add_flag("--deterministic", fit.deterministic,
                    "Reduce gradients in fixed tile order (bit-reproducible)");

  std::string model_path, output, reference;
  int repeats = 9;
  auto* render_cmd = app.add_subcommand("render", "Reconstruct a model to PNG");
  render_cmd->add_option("model", model_path, "Model file")->required();
  render_cmd->add_option("-o,--output", output, "Output PNG")->required();

  auto* eval_cmd = app.add_subcommand("eval", "PSNR of a model against a reference PNG");
  eval_cmd->add_option("model", model_path, "Model file")->required();
  eval_cmd->add_option("reference", reference, "Reference PNG")->required();

  auto* bench_cmd = app.add_subcommand("bench", "Reconstructions per second");
  bench_cmd->add_option("model", model_path, "Model file")->required();
  bench_cmd->add_option("--repeats", repeats, "Timed repetitions (>= 3)")->capture_default_str();

  auto* info_cmd = app.add_subcommand("info", "Print model header fields");
  info_cmd->add_option("model", model_path, "Model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error=usage message=\"%s\"\n", one_line(e.what()).c_str());
    return 2;
  }

  try {
    if (fit_cmd->parsed()) run_fit(fit);
    else if (render_cmd->parsed()) run_render(model_path, output);
    else if (eval_cmd->parsed()) run_eval(model_path, reference);
    else if (bench_cmd->parsed()) run_bench(model_path, repeats);
    else if (info_cmd->parsed()) run_info(model_path);
  } catch (const CommandError& e) {
    std::fprintf(stderr, "error=%s message=\"%s\"\n", e.code.c_str(), one_line(e.message).c_str());
    return 1;
  }
  return 0;
}
