#include "pfvae/commands.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <vector>

#include "pfvae/adam.hpp"
#include "pfvae/gradcheck.hpp"
#include "pfvae/mnist.hpp"
#include "pfvae/rng.hpp"

namespace pfvae {

namespace {

namespace fs = std::filesystem;

// Stream tags deriving independent RNG substreams from the run seed.
constexpr std::uint64_t kModelTag = 0x6d6f64656cULL;
constexpr std::uint64_t kEpsTag = 0x657073ULL;
constexpr std::uint64_t kLatentsTag = 0x6c6174656e7473ULL;
constexpr std::uint64_t kDensityTag = 0x64656e73697479ULL;
constexpr std::uint64_t kProbeTag = 0x70726f6265ULL;
constexpr std::uint64_t kGmmTag = 0x676d6dULL;

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MnistSet load_split(const RunConfig& cfg, const std::string& split) {
  if (split == "train") {
    if (cfg.train_images.empty() || cfg.train_labels.empty()) {
      throw std::invalid_argument("data: train_images/train_labels not configured");
    }
    return MnistSet::load(cfg.train_images, cfg.train_labels, "train");
  }
  if (split == "test") {
    if (cfg.test_images.empty() || cfg.test_labels.empty()) {
      throw std::invalid_argument("data: test_images/test_labels not configured");
    }
    return MnistSet::load(cfg.test_images, cfg.test_labels, "test");
  }
  throw std::invalid_argument("split must be 'train' or 'test', got '" + split + "'");
}

void restore_params(ParameterSet& params,
                    const std::vector<std::pair<std::string, Tensor>>& saved) {
  if (params.size() != saved.size()) {
    throw std::runtime_error("checkpoint: parameter count mismatch (model has " +
                             std::to_string(params.size()) + ", file has " +
                             std::to_string(saved.size()) + ")");
  }
  std::size_t i = 0;
  for (auto& p : params) {
    const auto& [name, tensor] = saved[i];
    if (p.name != name) {
      throw std::runtime_error("checkpoint: parameter order mismatch, expected '" + p.name +
                               "', file has '" + name + "'");
    }
    if (!p.var.value().same_shape(tensor)) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    }
    p.var.node()->value = tensor;
    ++i;
  }
}

VaeModel model_from_checkpoint(const Checkpoint& ckpt) {
  VaeModel model(ckpt.config.model(), Rng::mix(ckpt.config.seed, kModelTag));
  restore_params(model.params(), ckpt.params);
  return model;
}

void restore_adam(Adam& adam, const ParameterSet& params, const Checkpoint& ckpt) {
  if (ckpt.opt_moments.empty()) {
    if (ckpt.opt_steps != 0) {
      throw std::runtime_error("checkpoint: optimizer steps recorded but no moments stored");
    }
    return;
  }
  if (ckpt.opt_moments.size() != 2 * params.size()) {
    throw std::runtime_error("checkpoint: optimizer moment count mismatch");
  }
  std::vector<Tensor> m, v;
  std::size_t i = 0;
  for (const auto& p : params) {
    const auto& [name, t] = ckpt.opt_moments[i];
    if (name != "m." + p.name) {
      throw std::runtime_error("checkpoint: unexpected moment record '" + name + "'");
    }
    m.push_back(t);
    ++i;
  }
  for (const auto& p : params) {
    const auto& [name, t] = ckpt.opt_moments[i];
    if (name != "v." + p.name) {
      throw std::runtime_error("checkpoint: unexpected moment record '" + name + "'");
    }
    v.push_back(t);
    ++i;
  }
  adam.restore(ckpt.opt_steps, std::move(m), std::move(v));
}

Checkpoint snapshot(const RunConfig& cfg, const VaeModel& model, const Adam& adam,
                    std::uint64_t iteration, const Rng& eps_rng) {
  Checkpoint ckpt;
  ckpt.config = cfg;
  for (const auto& p : model.params()) ckpt.params.emplace_back(p.name, p.var.value());
  if (adam.step_count() > 0) {
    const auto& ms = adam.first_moments();
    const auto& vs = adam.second_moments();
    std::size_t i = 0;
    for (const auto& p : model.params()) ckpt.opt_moments.emplace_back("m." + p.name, ms[i++]);
    i = 0;
    for (const auto& p : model.params()) ckpt.opt_moments.emplace_back("v." + p.name, vs[i++]);
  }
  ckpt.opt_steps = adam.step_count();
  ckpt.iteration = iteration;
  ckpt.rng_state = eps_rng.state();
  return ckpt;
}

struct LatentRow {
  std::size_t idx;
  int label;
  Tensor z0;
  Tensor zk;
  double sum_log_det;
};

std::vector<LatentRow> collect_latents(const VaeModel& model, const MnistSet& set,
                                       std::size_t per_class, Rng& rng) {
  std::vector<std::size_t> selected;
  if (per_class == 0) {
    selected.resize(set.count);
    std::iota(selected.begin(), selected.end(), std::size_t{0});
  } else {
    std::array<std::size_t, 10> taken{};
    for (std::size_t i = 0; i < set.count; ++i) {
      std::size_t lab = static_cast<std::size_t>(set.label(i));
      if (taken[lab] < per_class) {
        selected.push_back(i);
        ++taken[lab];
      }
    }
  }

  FlowStack stack = model.flow_snapshot();
  std::size_t d = model.config().latent_dim;
  std::vector<LatentRow> rows;
  rows.reserve(selected.size());
  for (std::size_t idx : selected) {
    GaussianLatent lat = model.encode_values(set.image(idx));
    Tensor eps(Shape{d});
    rng.fill_normal(eps);
    Tensor z0 = VaeModel::reparameterize_values(lat.mu, lat.logvar, eps);
    FlowResult fr = stack.forward(z0);
    rows.push_back(LatentRow{idx, set.label(idx), std::move(z0), std::move(fr.z), fr.sum_log_det});
  }
  return rows;
}

LatentsResult write_latents_files(const std::vector<LatentRow>& rows, std::size_t latent_dim,
                                  const std::string& split, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  LatentsResult res;
  res.csv_path = out_dir / ("latents_" + split + ".csv");
  res.means_path = out_dir / ("latent_means_" + split + ".csv");
  res.rows = rows.size();

  std::ofstream out(res.csv_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + res.csv_path.string() + " for writing");
  out << "idx,label";
  for (std::size_t j = 0; j < latent_dim; ++j) out << ",z0_" << j;
  for (std::size_t j = 0; j < latent_dim; ++j) out << ",zK_" << j;
  out << ",sum_logdet\n";
  for (const LatentRow& r : rows) {
    out << r.idx << ',' << r.label;
    for (std::size_t j = 0; j < latent_dim; ++j) out << ',' << g17(r.z0[j]);
    for (std::size_t j = 0; j < latent_dim; ++j) out << ',' << g17(r.zk[j]);
    out << ',' << g17(r.sum_log_det) << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + res.csv_path.string());

  std::array<std::size_t, 10> counts{};
  std::array<std::vector<double>, 10> sums;
  for (auto& s : sums) s.assign(latent_dim, 0.0);
  for (const LatentRow& r : rows) {
    std::size_t lab = static_cast<std::size_t>(r.label);
    ++counts[lab];
    for (std::size_t j = 0; j < latent_dim; ++j) sums[lab][j] += r.zk[j];
  }
  std::ofstream means(res.means_path, std::ios::trunc);
  if (!means) throw std::runtime_error("cannot open " + res.means_path.string() + " for writing");
  means << "label,count";
  for (std::size_t j = 0; j < latent_dim; ++j) means << ",zK_mean_" << j;
  means << "\n";
  for (std::size_t lab = 0; lab < 10; ++lab) {
    if (counts[lab] == 0) continue;
    means << lab << ',' << counts[lab];
    for (std::size_t j = 0; j < latent_dim; ++j) {
      means << ',' << g17(sums[lab][j] / static_cast<double>(counts[lab]));
    }
    means << "\n";
  }
  if (!means) throw std::runtime_error("write failed for " + res.means_path.string());
  return res;
}

}  // namespace

TrainResult cmd_train(const RunConfig& cfg_in, const TrainHooks& hooks) {
  RunConfig cfg = cfg_in;
  std::optional<Checkpoint> resume_ckpt;
  if (!cfg_in.resume.empty()) {
    resume_ckpt = Checkpoint::load(cfg_in.resume);
    // The checkpoint owns the run definition; the caller only chooses how far
    // to continue and where to write.
    cfg = resume_ckpt->config;
    cfg.iterations = cfg_in.iterations;
    cfg.out_dir = cfg_in.out_dir;
    cfg.log_interval = cfg_in.log_interval;
    cfg.checkpoint_interval = cfg_in.checkpoint_interval;
    cfg.resume = cfg_in.resume;
  }
  fs::create_directories(cfg.out_dir);

  MnistSet train_set = load_split(cfg, "train");
  if (train_set.pixel_count() != cfg.input_dim) {
    throw std::invalid_argument("data: images have " + std::to_string(train_set.pixel_count()) +
                                " pixels but input_dim is " + std::to_string(cfg.input_dim));
  }
  DataStream stream(train_set, cfg.batch_size, cfg.seed, cfg.subset);

  VaeModel model(cfg.model(), Rng::mix(cfg.seed, kModelTag));
  Adam adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.grad_clip});
  Rng eps_rng(Rng::mix(cfg.seed, kEpsTag));
  std::uint64_t start_iter = 0;

  if (resume_ckpt) {
    restore_params(model.params(), resume_ckpt->params);
    restore_adam(adam, model.params(), *resume_ckpt);
    eps_rng.restore(resume_ckpt->rng_state);
    start_iter = resume_ckpt->iteration;
    if (start_iter > cfg.iterations) {
      throw std::invalid_argument("resume: checkpoint is at iteration " +
                                  std::to_string(start_iter) + ", past the requested " +
                                  std::to_string(cfg.iterations));
    }
  }

  TrainResult result;
  result.log_path = fs::path(cfg.out_dir) / "train_log.csv";
  result.checkpoint_path = fs::path(cfg.out_dir) / "checkpoint.bin";
  result.iterations_run = start_iter;

  std::ofstream log(result.log_path, std::ios::trunc);
  if (!log) throw std::runtime_error("cannot open " + result.log_path.string() + " for writing");
  log << "iter,recon,kl,flow_correction,total\n";

  for (std::uint64_t iter = start_iter + 1; iter <= cfg.iterations; ++iter) {
    if (hooks.before_step) hooks.before_step(model, iter);
    std::vector<std::size_t> batch = stream.batch_at(iter - 1);
    model.params().zero_grad();
    ElboBreakdown avg{};
    try {
      Var loss_sum;
      for (std::size_t n = 0; n < batch.size(); ++n) {
        Tensor x = train_set.image(batch[n]);
        Tensor eps(Shape{cfg.latent_dim});
        eps_rng.fill_normal(eps);
        ElboVars terms = flow_elbo(model, x, eps);
        ElboBreakdown b = terms.values();
        avg.recon += b.recon;
        avg.kl += b.kl;
        avg.flow_correction += b.flow_correction;
        avg.total += b.total;
        loss_sum = (n == 0) ? terms.total : loss_sum + terms.total;
      }
      double bn = static_cast<double>(batch.size());
      avg.recon /= bn;
      avg.kl /= bn;
      avg.flow_correction /= bn;
      avg.total /= bn;
      backward(loss_sum / bn);
      adam.step(model.params());
    } catch (const NonFiniteError& e) {
      result.aborted_non_finite = true;
      result.abort_message = e.what();
      return result;
    }
    result.iterations_run = iter;

    if (cfg.log_interval > 0 && (iter % cfg.log_interval == 0 || iter == cfg.iterations)) {
      log << iter << ',' << g17(avg.recon) << ',' << g17(avg.kl) << ','
          << g17(avg.flow_correction) << ',' << g17(avg.total) << "\n";
    }
    if (cfg.checkpoint_interval > 0 && iter % cfg.checkpoint_interval == 0 &&
        iter != cfg.iterations) {
      snapshot(cfg, model, adam, iter, eps_rng).save(result.checkpoint_path);
    }
  }

  snapshot(cfg, model, adam, cfg.iterations, eps_rng).save(result.checkpoint_path);
  return result;
}

LatentsResult cmd_latents(const std::filesystem::path& checkpoint_path, const std::string& split,
                          std::size_t per_class, const std::filesystem::path& out_dir,
                          std::optional<std::uint64_t> seed_override) {
  Checkpoint ckpt = Checkpoint::load(checkpoint_path);
  VaeModel model = model_from_checkpoint(ckpt);
  MnistSet set = load_split(ckpt.config, split);
  if (set.pixel_count() != model.config().input_dim) {
    throw std::invalid_argument("latents: dataset pixels do not match model input_dim");
  }
  std::uint64_t seed = seed_override.value_or(ckpt.config.seed);
  Rng rng(Rng::mix(seed, kLatentsTag));
  auto rows = collect_latents(model, set, per_class, rng);
  return write_latents_files(rows, model.config().latent_dim, split, out_dir);
}

DensityResult cmd_density(const std::filesystem::path& checkpoint_path, std::size_t samples,
                          std::size_t resolution, std::optional<std::array<double, 4>> bounds,
                          bool write_pgm, const std::filesystem::path& out_dir,
                          std::optional<std::uint64_t> seed_override) {
  Checkpoint ckpt = Checkpoint::load(checkpoint_path);
  VaeModel model = model_from_checkpoint(ckpt);
  if (model.config().latent_dim != 2) {
    throw std::invalid_argument("density: latent_dim must be 2, got " +
                                std::to_string(model.config().latent_dim));
  }
  if (samples < 2) throw std::invalid_argument("density: need at least 2 samples");
  MnistSet set = load_split(ckpt.config, "train");
  std::uint64_t seed = seed_override.value_or(ckpt.config.seed);
  Rng rng(Rng::mix(seed, kDensityTag));
  FlowStack stack = model.flow_snapshot();

  std::vector<std::array<double, 2>> pts;
  pts.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    std::size_t idx = rng.below(set.count);
    GaussianLatent lat = model.encode_values(set.image(idx));
    Tensor eps(Shape{2});
    rng.fill_normal(eps);
    Tensor z0 = VaeModel::reparameterize_values(lat.mu, lat.logvar, eps);
    Tensor zk = stack.forward(z0).z;
    pts.push_back({zk[0], zk[1]});
  }

  std::array<double, 4> b = bounds ? *bounds : auto_bounds(pts, 0.1);
  Kde2D kde = Kde2D::fit(std::move(pts));

  DensityResult res;
  res.grid = kde_grid(kde, b[0], b[1], b[2], b[3], resolution);
  fs::create_directories(out_dir);
  res.csv_path = out_dir / "density.csv";
  write_density_csv(res.csv_path, res.grid);
  if (write_pgm) {
    res.pgm_path = out_dir / "density.pgm";
    write_density_pgm(*res.pgm_path, res.grid);
  }
  return res;
}

GradcheckResult cmd_gradcheck(const RunConfig& cfg, bool inject_fault) {
  VaeModel model(cfg.model(), Rng::mix(cfg.seed, kModelTag));
  Rng rng(Rng::mix(cfg.seed, kProbeTag));
  Tensor x(Shape{cfg.input_dim});
  rng.fill_uniform(x, 0.0, 1.0);
  Tensor eps(Shape{cfg.latent_dim});
  rng.fill_normal(eps);

  auto loss_fn = [&]() { return flow_elbo(model, x, eps).total; };
  FdReport rep;
  {
    std::optional<ScopedGradientFault> fault;
    if (inject_fault) fault.emplace();
    rep = finite_diff_report(loss_fn, model.params(), 1e-5);
  }

  GradcheckResult res;
  res.max_rel_err = rep.max_rel_err;
  for (const auto& [name, err] : rep.per_param) {
    std::string group;
    if (name.rfind("encoder", 0) == 0) group = "encoder";
    else if (name.rfind("mu_head", 0) == 0 || name.rfind("logvar_head", 0) == 0) group = "heads";
    else if (name.rfind("flow.", 0) == 0) group = "flows";
    else if (name.rfind("decoder", 0) == 0) group = "decoder";
    else group = "other";
    auto [it, inserted] = res.group_max_err.emplace(group, err);
    if (!inserted) it->second = std::max(it->second, err);
  }
  res.pass = res.max_rel_err < 1e-4;
  return res;
}

CompareResult cmd_compare(const RunConfig& cfg, std::size_t per_class) {
  if (!cfg.resume.empty()) throw std::invalid_argument("compare: resume is not supported");
  if (cfg.flow_length == 0) {
    throw std::invalid_argument("compare: flow_length must be positive for the flow run");
  }
  if (cfg.latent_dim != 2) {
    throw std::invalid_argument("compare: latent_dim must be 2 for the modality score");
  }
  fs::create_directories(cfg.out_dir);

  auto run_one = [&](const std::string& name, std::size_t flow_len) {
    RunConfig rc = cfg;
    rc.flow_length = flow_len;
    rc.out_dir = (fs::path(cfg.out_dir) / name).string();
    TrainResult tr = cmd_train(rc);
    if (tr.aborted_non_finite) {
      throw std::runtime_error("compare: " + name + " run aborted: " + tr.abort_message);
    }
    Checkpoint ckpt = Checkpoint::load(tr.checkpoint_path);
    VaeModel model = model_from_checkpoint(ckpt);
    MnistSet set = load_split(ckpt.config, "train");
    Rng rng(Rng::mix(cfg.seed, kLatentsTag));
    auto rows = collect_latents(model, set, per_class, rng);
    write_latents_files(rows, 2, "train", rc.out_dir);

    std::vector<std::array<double, 2>> pts;
    pts.reserve(rows.size());
    for (const LatentRow& r : rows) pts.push_back({r.zk[0], r.zk[1]});

    CompareRun run;
    run.name = name;
    run.flow_length = flow_len;
    run.iterations = cfg.iterations;
    run.samples = pts.size();
    run.modality = modality_report(pts, Rng::mix(cfg.seed, kGmmTag));
    run.log_path = tr.log_path;
    run.checkpoint_path = tr.checkpoint_path;
    return run;
  };

  CompareResult res;
  res.flow = run_one("flow", cfg.flow_length);
  res.vanilla = run_one("vanilla", 0);

  res.report_path = fs::path(cfg.out_dir) / "compare.csv";
  std::ofstream out(res.report_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + res.report_path.string() + " for writing");
  out << "run,flow_length,iterations,samples,bic1,bic10,score\n";
  for (const CompareRun* run : {&res.flow, &res.vanilla}) {
    out << run->name << ',' << run->flow_length << ',' << run->iterations << ',' << run->samples
        << ',' << g17(run->modality.bic1) << ',' << g17(run->modality.bic10) << ','
        << g17(run->modality.score) << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + res.report_path.string());
  return res;
}

}  // namespace pfvae
