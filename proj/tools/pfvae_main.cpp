// pfvae CLI: train / latents / density / gradcheck / compare.
// Thin argument layer over the library commands; precedence for run settings
// is defaults < --config file < --profile < explicit flags.

#include <array>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pfvae/commands.hpp"

namespace {

using pfvae::RunConfig;

// Staged run options: values land here during parsing, and only flags the
// user actually passed override the config-file/profile baseline.
struct RunFlags {
  std::string config_path;
  std::string profile;

  std::size_t input_dim = 0;
  std::string hidden_dims;
  std::size_t latent_dim = 0;
  std::size_t flow_length = 0;
  double lr = 0.0;
  std::uint64_t iterations = 0;
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  std::size_t subset = 0;
  double grad_clip = 0.0;
  std::string train_images, train_labels, test_images, test_labels;
  std::string out_dir;
  std::string resume;
  std::uint64_t log_interval = 0;
  std::uint64_t checkpoint_interval = 0;

  CLI::Option* o_input_dim = nullptr;
  CLI::Option* o_hidden_dims = nullptr;
  CLI::Option* o_latent_dim = nullptr;
  CLI::Option* o_flow_length = nullptr;
  CLI::Option* o_lr = nullptr;
  CLI::Option* o_iterations = nullptr;
  CLI::Option* o_batch_size = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_subset = nullptr;
  CLI::Option* o_grad_clip = nullptr;
  CLI::Option* o_train_images = nullptr;
  CLI::Option* o_train_labels = nullptr;
  CLI::Option* o_test_images = nullptr;
  CLI::Option* o_test_labels = nullptr;
  CLI::Option* o_out_dir = nullptr;
  CLI::Option* o_resume = nullptr;
  CLI::Option* o_log_interval = nullptr;
  CLI::Option* o_checkpoint_interval = nullptr;
};

void add_run_flags(CLI::App* app, RunFlags& f, bool with_resume) {
  app->add_option("--config", f.config_path, "key = value config file");
  app->add_option("--profile", f.profile, "paper (full set, 500k iters) or desk (10k subset, 50k iters)")
      ->check(CLI::IsMember({"paper", "desk"}));

  f.o_input_dim = app->add_option("--input_dim", f.input_dim, "input vector size");
  f.o_hidden_dims = app->add_option("--hidden_dims", f.hidden_dims,
                                    "comma-separated hidden layer widths, e.g. 10,10,10,10");
  f.o_latent_dim = app->add_option("--latent_dim", f.latent_dim, "latent dimension");
  f.o_flow_length = app->add_option("--flow_length", f.flow_length, "number of planar flows");
  f.o_lr = app->add_option("--lr", f.lr, "Adam learning rate");
  f.o_iterations = app->add_option("--iterations", f.iterations, "training iterations");
  f.o_batch_size = app->add_option("--batch_size", f.batch_size, "examples per step");
  f.o_seed = app->add_option("--seed", f.seed, "run seed");
  f.o_subset = app->add_option("--subset", f.subset, "restrict training to N examples (0 = all)");
  f.o_grad_clip = app->add_option("--grad_clip", f.grad_clip, "global gradient norm clip (0 = off)");
  f.o_train_images = app->add_option("--train_images", f.train_images, "IDX image file, train split");
  f.o_train_labels = app->add_option("--train_labels", f.train_labels, "IDX label file, train split");
  f.o_test_images = app->add_option("--test_images", f.test_images, "IDX image file, test split");
  f.o_test_labels = app->add_option("--test_labels", f.test_labels, "IDX label file, test split");
  f.o_out_dir = app->add_option("--out,--out_dir", f.out_dir, "output directory");
  if (with_resume) {
    f.o_resume = app->add_option("--resume", f.resume, "checkpoint to continue training from");
  }
  f.o_log_interval = app->add_option("--log_interval", f.log_interval, "iterations between log rows");
  f.o_checkpoint_interval =
      app->add_option("--checkpoint_interval", f.checkpoint_interval,
                      "iterations between periodic checkpoints (0 = final only)");
}

RunConfig build_config(const RunFlags& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) cfg = RunConfig::load(f.config_path);
  if (!f.profile.empty()) cfg.apply_profile(f.profile);

  auto passed = [](const CLI::Option* o) { return o && o->count() > 0; };
  if (passed(f.o_input_dim)) cfg.input_dim = f.input_dim;
  if (passed(f.o_hidden_dims)) cfg.hidden_dims = pfvae::parse_dims(f.hidden_dims);
  if (passed(f.o_latent_dim)) cfg.latent_dim = f.latent_dim;
  if (passed(f.o_flow_length)) cfg.flow_length = f.flow_length;
  if (passed(f.o_lr)) cfg.lr = f.lr;
  if (passed(f.o_iterations)) cfg.iterations = f.iterations;
  if (passed(f.o_batch_size)) cfg.batch_size = f.batch_size;
  if (passed(f.o_seed)) cfg.seed = f.seed;
  if (passed(f.o_subset)) cfg.subset = f.subset;
  if (passed(f.o_grad_clip)) cfg.grad_clip = f.grad_clip;
  if (passed(f.o_train_images)) cfg.train_images = f.train_images;
  if (passed(f.o_train_labels)) cfg.train_labels = f.train_labels;
  if (passed(f.o_test_images)) cfg.test_images = f.test_images;
  if (passed(f.o_test_labels)) cfg.test_labels = f.test_labels;
  if (passed(f.o_out_dir)) cfg.out_dir = f.out_dir;
  if (passed(f.o_resume)) cfg.resume = f.resume;
  if (passed(f.o_log_interval)) cfg.log_interval = f.log_interval;
  if (passed(f.o_checkpoint_interval)) cfg.checkpoint_interval = f.checkpoint_interval;
  return cfg;
}

std::optional<std::uint64_t> seed_override(const CLI::Option* opt, std::uint64_t value) {
  if (opt && opt->count() > 0) return value;
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planar-flow VAE trainer and latent-space tools"};
  app.require_subcommand(1);

  // train
  RunFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "train a model and write log + checkpoint");
  add_run_flags(train, train_flags, /*with_resume=*/true);

  // latents
  CLI::App* latents = app.add_subcommand("latents", "export z0/zK latent codes to CSV");
  std::string lat_ckpt, lat_split = "train", lat_out = "out";
  std::size_t lat_per_class = 0;
  std::uint64_t lat_seed = 0;
  latents->add_option("--checkpoint", lat_ckpt, "trained checkpoint")->required();
  latents->add_option("--split", lat_split, "train or test")
      ->check(CLI::IsMember({"train", "test"}));
  latents->add_option("--per_class", lat_per_class, "examples per class (0 = all)");
  latents->add_option("--out,--out_dir", lat_out, "output directory");
  CLI::Option* lat_seed_opt = latents->add_option("--seed", lat_seed, "sampling seed override");

  // density
  CLI::App* density = app.add_subcommand("density", "KDE heatmap of zK samples (CSV + PGM)");
  std::string den_ckpt, den_out = "out";
  std::size_t den_samples = 2000, den_resolution = 200;
  std::vector<double> den_bounds;
  bool den_pgm = false;
  std::uint64_t den_seed = 0;
  density->add_option("--checkpoint", den_ckpt, "trained checkpoint")->required();
  density->add_option("--samples", den_samples, "number of zK samples");
  density->add_option("--resolution", den_resolution, "grid resolution per axis");
  density->add_option("--bounds", den_bounds, "x0 x1 y0 y1 (default: sample bounds + 10%)")
      ->expected(4);
  density->add_flag("--pgm", den_pgm, "also write an 8-bit PGM heatmap");
  density->add_option("--out,--out_dir", den_out, "output directory");
  CLI::Option* den_seed_opt = density->add_option("--seed", den_seed, "sampling seed override");

  // gradcheck
  RunFlags grad_flags;
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "verify model gradients against finite differences");
  add_run_flags(gradcheck, grad_flags, /*with_resume=*/false);
  bool inject_fault = false;
  gradcheck->add_flag("--inject-gradient-fault", inject_fault,
                      "corrupt one backward rule; the check must then fail");

  // compare
  RunFlags cmp_flags;
  CLI::App* compare =
      app.add_subcommand("compare", "train flow and vanilla twins, score latent multimodality");
  add_run_flags(compare, cmp_flags, /*with_resume=*/false);
  std::size_t cmp_per_class = 300;
  compare->add_option("--per_class", cmp_per_class, "latent export size per class");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      pfvae::TrainResult res = pfvae::cmd_train(build_config(train_flags));
      if (res.aborted_non_finite) {
        std::cerr << "training aborted: " << res.abort_message << "\n"
                  << "last good checkpoint (if any): " << res.checkpoint_path.string() << "\n";
        return 1;
      }
      std::cout << "trained " << res.iterations_run << " iterations\n"
                << "log: " << res.log_path.string() << "\n"
                << "checkpoint: " << res.checkpoint_path.string() << "\n";
    } else if (latents->parsed()) {
      pfvae::LatentsResult res = pfvae::cmd_latents(lat_ckpt, lat_split, lat_per_class, lat_out,
                                                    seed_override(lat_seed_opt, lat_seed));
      std::cout << "wrote " << res.rows << " rows\n"
                << "latents: " << res.csv_path.string() << "\n"
                << "class means: " << res.means_path.string() << "\n";
    } else if (density->parsed()) {
      std::optional<std::array<double, 4>> bounds;
      if (!den_bounds.empty()) {
        bounds = std::array<double, 4>{den_bounds[0], den_bounds[1], den_bounds[2], den_bounds[3]};
      }
      pfvae::DensityResult res =
          pfvae::cmd_density(den_ckpt, den_samples, den_resolution, bounds, den_pgm, den_out,
                             seed_override(den_seed_opt, den_seed));
      std::cout << "density grid " << res.grid.resolution << "x" << res.grid.resolution << " over ["
                << res.grid.x0 << ", " << res.grid.x1 << "] x [" << res.grid.y0 << ", "
                << res.grid.y1 << "]\n"
                << "csv: " << res.csv_path.string() << "\n";
      if (res.pgm_path) std::cout << "pgm: " << res.pgm_path->string() << "\n";
    } else if (gradcheck->parsed()) {
      pfvae::GradcheckResult res = pfvae::cmd_gradcheck(build_config(grad_flags), inject_fault);
      for (const auto& [group, err] : res.group_max_err) {
        std::printf("%-8s max rel err %.3e\n", group.c_str(), err);
      }
      std::printf("overall  max rel err %.3e -> %s\n", res.max_rel_err,
                  res.pass ? "PASS" : "FAIL");
      return res.pass ? 0 : 1;
    } else if (compare->parsed()) {
      pfvae::CompareResult res = pfvae::cmd_compare(build_config(cmp_flags), cmp_per_class);
      auto show = [](const pfvae::CompareRun& run) {
        std::printf("%-8s K=%zu  bic1 %.2f  bic10 %.2f  score %.2f\n", run.name.c_str(),
                    run.flow_length, run.modality.bic1, run.modality.bic10, run.modality.score);
      };
      show(res.flow);
      show(res.vanilla);
      std::cout << "report: " << res.report_path.string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
