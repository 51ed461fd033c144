#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mhgan/config.hpp"
#include "mhgan/gradcheck_suite.hpp"
#include "mhgan/svg_plot.hpp"
#include "mhgan/train.hpp"

namespace {

using nlohmann::json;
using namespace mhgan;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

int cmd_train(const std::optional<std::string>& config_path,
              const std::vector<std::string>& overrides) {
  RunConfig rc = load_config(config_path, overrides);
  run(rc.train, rc.settings, config_echo(rc));
  return kExitOk;
}

json report_to_json(const MetricsReport& report) {
  json doc;
  doc["step"] = report.step;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v.has_value())
      doc[key] = *v;
    else
      doc[key] = nullptr;
  };
  put("toy_fid", report.toy_fid);
  put("intra_fid_mean", report.intra.mean);
  json per_class = json::array();
  for (const auto& v : report.intra.per_class)
    per_class.push_back(v.has_value() ? json(*v) : json(nullptr));
  doc["intra_fid"] = per_class;
  put("is_analog", report.is_analog);
  put("val_acc", report.acc.validation);
  put("self_acc", report.acc.self);
  doc["d_acc_real"] = report.acc.discriminator;
  doc["proj_cls_acc"] = report.acc.projection_cls;
  put("margin_diag", report.margin_diag);
  doc["spectrum"] = report.spectrum;
  return doc;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& dataset_json, int n_samples,
             uint64_t eval_seed) {
  const DatasetSpec spec = parse_dataset_json(dataset_json);
  CheckpointData data = read_checkpoint(checkpoint_path);
  RestoredNets nets = restore_nets(data);
  OracleClassifier oracle = OracleClassifier::fit(spec, spec.seed);
  EvalPools pools = make_eval_pools(spec, n_samples);
  MetricsReport report =
      evaluate_snapshot(*nets.gen, *nets.critic, oracle, pools, n_samples, eval_seed, nets.step);
  if (!report.intra.mean.has_value())
    std::fprintf(stderr,
                 "warning: intra-FID is null (a class has fewer than dim+1 samples at "
                 "n_samples=%d)\n",
                 n_samples);
  std::cout << report_to_json(report).dump(2) << "\n";
  return kExitOk;
}

int cmd_gradcheck(uint64_t seed, float tolerance) {
  const auto rows = run_gradcheck_suite(seed, tolerance);
  bool all_pass = true;
  float worst = 0.0f;
  std::printf("%-36s %12s  %s\n", "case", "max_rel_err", "status");
  for (const auto& row : rows) {
    std::printf("%-36s %12.3e  %s\n", row.name.c_str(), static_cast<double>(row.max_err),
                row.pass ? "pass" : "FAIL");
    all_pass = all_pass && row.pass;
    worst = std::max(worst, row.max_err);
  }
  std::printf("%zu cases, worst %.3e, tolerance %.1e: %s\n", rows.size(),
              static_cast<double>(worst), static_cast<double>(tolerance),
              all_pass ? "all pass" : "FAILURES");
  return all_pass ? kExitOk : kExitRuntime;
}

int cmd_plot(const std::string& checkpoint_path, const std::string& dataset_json,
             const std::string& out_path, int n, uint64_t seed) {
  const DatasetSpec spec = parse_dataset_json(dataset_json);
  CheckpointData data = read_checkpoint(checkpoint_path);
  RestoredNets nets = restore_nets(data);

  Rng real_rng(seed, 0x9107ull);
  Batch real = sample_real(spec, n, real_rng);
  Rng z_rng(seed, 0x9108ull);
  auto [z, y] = sample_latent(n, nets.gen->z_dim(), nets.gen->classes(), z_rng);
  FwdCtx ctx = FwdCtx::eval_mode();
  Tensor fake = nets.gen->forward(ctx, z, y);

  const std::string svg = render_scatter_svg(real.x, real.y, fake, y, class_count(spec));
  std::ofstream os(out_path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot write SVG to '" + out_path + "'");
  os << svg;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional GAN laboratory with a multi-class hinge loss"};
  app.require_subcommand(0, 1);
  bool defaults_flag = false;
  app.add_flag("--print-defaults", defaults_flag, "Print the default config as JSON and exit");

  auto* train_cmd = app.add_subcommand("train", "Train from a JSON config with optional overrides");
  std::string config_path;
  std::vector<std::string> overrides;
  train_cmd->add_option("--config,-c", config_path, "JSON config file");
  train_cmd->add_option("overrides", overrides, "key=value overrides applied after the file");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint and print a metrics report");
  std::string ckpt, dataset_json = R"({"kind":"ring","k":8,"radius":2.0,"sigma":0.05,"seed":1})";
  int n_samples = 4096;
  uint64_t eval_seed = 0;
  eval_cmd->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--dataset", dataset_json, "dataset spec as a JSON object");
  eval_cmd->add_option("--n", n_samples, "samples per metric");
  eval_cmd->add_option("--eval-seed", eval_seed, "evaluation seed");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every op and loss");
  uint64_t grad_seed = 1234;
  float tolerance = 1e-3f;
  grad_cmd->add_option("--seed", grad_seed, "sampling seed");
  grad_cmd->add_option("--tolerance", tolerance, "max relative error");

  auto* plot_cmd = app.add_subcommand("plot", "Scatter plot of real vs generated samples");
  std::string plot_ckpt, plot_dataset = dataset_json, plot_out = "samples.svg";
  int plot_n = 256;
  uint64_t plot_seed = 0;
  plot_cmd->add_option("--checkpoint", plot_ckpt, "checkpoint file")->required();
  plot_cmd->add_option("--dataset", plot_dataset, "dataset spec as a JSON object");
  plot_cmd->add_option("--out", plot_out, "output SVG path");
  plot_cmd->add_option("--n", plot_n, "points per side");
  plot_cmd->add_option("--seed", plot_seed, "plot sampling seed");

  auto* defaults_cmd = app.add_subcommand("print-defaults", "Print the default config as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (defaults_flag || defaults_cmd->parsed()) {
      std::cout << default_config_json() << "\n";
      return kExitOk;
    }
    if (train_cmd->parsed())
      return cmd_train(config_path.empty() ? std::nullopt
                                           : std::optional<std::string>(config_path),
                       overrides);
    if (eval_cmd->parsed()) return cmd_eval(ckpt, dataset_json, n_samples, eval_seed);
    if (grad_cmd->parsed()) return cmd_gradcheck(grad_seed, tolerance);
    if (plot_cmd->parsed()) return cmd_plot(plot_ckpt, plot_dataset, plot_out, plot_n, plot_seed);
    std::cout << app.help();
    return kExitOk;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
