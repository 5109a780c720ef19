#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "pfvae/checkpoint.hpp"
#include "pfvae/config.hpp"
#include "pfvae/density.hpp"
#include "pfvae/elbo.hpp"
#include "pfvae/gmm.hpp"

namespace pfvae {

// Library-level command implementations. The CLI binary is a thin argument
// parser over these so tests can drive them directly.

struct TrainHooks {
  // Called before each step with the 1-based iteration about to run.
  std::function<void(VaeModel&, std::uint64_t)> before_step;
};

struct TrainResult {
  std::filesystem::path log_path;
  std::filesystem::path checkpoint_path;
  std::uint64_t iterations_run = 0;
  bool aborted_non_finite = false;
  std::string abort_message;
};

// Trains from cfg (or continues from cfg.resume), writing train_log.csv and
// checkpoint.bin under cfg.out_dir. Training log rows are
// iter,recon,kl,flow_correction,total at every log_interval and at the final
// iteration. On a non-finite loss the run stops, keeping the last periodic
// checkpoint on disk, and the result reports the abort.
TrainResult cmd_train(const RunConfig& cfg, const TrainHooks& hooks = {});

struct LatentsResult {
  std::filesystem::path csv_path;
  std::filesystem::path means_path;
  std::size_t rows = 0;
};

// Exports latent codes for up to per_class examples of each class
// (per_class = 0 takes the whole split): for each example, encode, draw eps,
// reparameterize to z0, run the flows to zK. Writes latents_<split>.csv with
// header idx,label,z0_*,zK_*,sum_logdet plus per-class zK means.
LatentsResult cmd_latents(const std::filesystem::path& checkpoint_path, const std::string& split,
                          std::size_t per_class, const std::filesystem::path& out_dir,
                          std::optional<std::uint64_t> seed_override = {});

struct DensityResult {
  std::filesystem::path csv_path;
  std::optional<std::filesystem::path> pgm_path;
  DensityGrid grid;
};

// KDE heatmap of zK samples drawn through the trained model (random training
// examples, reparameterized and flowed). Bounds default to the sample bounds
// plus a 10% margin. Requires latent_dim == 2.
DensityResult cmd_density(const std::filesystem::path& checkpoint_path, std::size_t samples,
                          std::size_t resolution, std::optional<std::array<double, 4>> bounds,
                          bool write_pgm, const std::filesystem::path& out_dir,
                          std::optional<std::uint64_t> seed_override = {});

struct GradcheckResult {
  std::map<std::string, double> group_max_err;  // encoder, heads, flows, decoder
  double max_rel_err = 0.0;
  bool pass = false;  // max_rel_err < 1e-4
};

// Builds a model from cfg, evaluates the full training loss on one seeded
// probe input, and verifies every parameter gradient against central
// differences. inject_fault corrupts one backward rule to prove the check can
// fail.
GradcheckResult cmd_gradcheck(const RunConfig& cfg, bool inject_fault = false);

struct CompareRun {
  std::string name;  // "flow" or "vanilla"
  std::size_t flow_length = 0;
  std::uint64_t iterations = 0;
  std::size_t samples = 0;
  ModalityReport modality;
  std::filesystem::path log_path;
  std::filesystem::path checkpoint_path;
};

struct CompareResult {
  CompareRun flow;
  CompareRun vanilla;
  std::filesystem::path report_path;
};

// Trains the configured flow model and a flow_length = 0 twin with identical
// data, seed and iteration budget, exports latents for both, and scores
// multimodality of the zK clouds. Writes compare.csv under cfg.out_dir.
CompareResult cmd_compare(const RunConfig& cfg, std::size_t per_class = 300);

}  // namespace pfvae
