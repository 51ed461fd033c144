#pragma once

#include <memory>
#include <string>

#include "mhgan/checkpoint.hpp"
#include "mhgan/metrics.hpp"

namespace mhgan {

struct TrainConfig {
  LossVariant variant = LossVariant::Mhgan;
  DatasetSpec dataset = DatasetSpec{RingMixtureSpec{}, 1};
  int dataset_size = 8192;  // finite pool size; 0 selects the infinite sampler
  int d_steps_per_g = 1;
  float lr_g = 1e-4f;
  float lr_d = 4e-4f;
  float lambda = 0.1f;
  int batch_size = 128;
  int total_g_steps = 20000;
  int eval_interval = 500;
  int eval_samples = 4096;
  uint64_t seed = 0;
  float labeled_fraction = 1.0f;
  int z_dim = 16;
  int switch_step = -1;  // MHShared: plain hinge losses before this step, the
                         // multi-hinge auxiliary on the embedding logits after
  HeadMode head_mode = HeadMode::Aux;
  float adam_beta1 = 0.0f;
  float adam_beta2 = 0.9f;
};

// Variant-dependent defaults for fields the user left unset: head mode,
// D-steps per G-step, and the ACGAN_SSL discriminator learning rate.
HeadMode default_head_mode(LossVariant v);
void apply_variant_defaults(TrainConfig& config, bool d_steps_set, bool lr_d_set,
                            bool head_mode_set);

void validate(const TrainConfig& config);  // throws ConfigError

struct RunSettings {
  std::string out_dir = "run";
  bool determinism = true;
  int checkpoint_interval = 5000;
  std::string resume_from;
};

// Resolves out_dir against the MHGAN_OUT_ROOT environment variable (the only
// environment input) when out_dir is relative.
std::string resolve_out_dir(const std::string& out_dir);

class Trainer {
 public:
  explicit Trainer(const TrainConfig& config);

  // One critic update on the next real batch against fresh detached fakes.
  // Generator trainable parameters are untouched.
  LossBreakdown d_step();
  // One generator update through the critic's frozen parameters.
  LossBreakdown g_step();
  // d_steps_per_g critic updates followed by one generator update.
  LossBreakdown full_step();

  int64_t step() const { return step_; }
  LossVariant effective_variant() const;  // MHShared reads as SAGAN before the switch

  MetricsReport evaluate() const;  // eval seed derived from (config seed, step)
  MetricsReport evaluate(uint64_t eval_seed) const;

  GeneratorNet& generator() { return gen_; }
  CriticNet& critic() { return critic_; }
  // Built once on first use from the dataset seed alone, then frozen.
  const OracleClassifier& oracle() const;
  const EvalPools& pools() const { return pools_; }
  const TrainConfig& config() const { return cfg_; }
  const LossBreakdown& last_losses() const { return last_losses_; }

  // Inputs of the most recent D-step, recorded when tracing is enabled;
  // lets tests replay the loss computation through an independent path.
  struct StepTrace {
    Batch real;
    Batch unlab;
    Tensor fake_x;
    std::vector<int> fake_y;
  };
  void enable_tracing(bool on) { tracing_ = on; }
  const StepTrace& last_d_trace() const { return trace_; }

  float best_fid() const { return best_fid_; }
  int64_t best_fid_step() const { return best_fid_step_; }
  bool note_fid(float fid);  // updates the best-FID bookmark; true when it improved

  // Classifier-loss instrumentation: how many examples reached an auxiliary
  // classifier term, and how many of those were unlabeled (must stay zero).
  int64_t aux_examples_seen() const { return aux_seen_; }
  int64_t aux_unlabeled_seen() const { return aux_unlabeled_; }

  CheckpointData checkpoint() const;
  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);
  void restore(const CheckpointData& data);

 private:
  struct EpochIter {
    std::vector<int> order;
    int64_t cursor = 0;
    std::vector<int> next(int n, Rng& rng);
  };

  Batch gather(const std::vector<int>& rows) const;
  Batch next_real(int n, bool labeled_only);
  Batch next_unlabeled(int n);

  TrainConfig cfg_;
  GeneratorNet gen_;
  CriticNet critic_;
  Adam opt_g_, opt_d_;
  Rng train_rng_;
  mutable std::unique_ptr<OracleClassifier> oracle_;
  EvalPools pools_;

  // finite-pool mode
  Batch pool_;
  std::vector<int> labeled_rows_, unlabeled_rows_;
  EpochIter iter_all_, iter_labeled_, iter_unlabeled_;

  int64_t step_ = 0;
  float best_fid_ = 0.0f;
  int64_t best_fid_step_ = -1;
  bool best_set_ = false;
  LossBreakdown last_losses_;
  int64_t aux_seen_ = 0;
  int64_t aux_unlabeled_ = 0;
  bool tracing_ = false;
  StepTrace trace_;
};

// Networks reconstructed from a checkpoint alone (topology inferred from
// tensor names and extents; head mode from its meta entry).
struct RestoredNets {
  std::unique_ptr<GeneratorNet> gen;
  std::unique_ptr<CriticNet> critic;
  int64_t step = 0;
};
RestoredNets restore_nets(const CheckpointData& data);

// The fixed real-sample pools metric evaluation uses; derived from the
// dataset seed alone so training-time and checkpoint-time evaluations agree.
EvalPools make_eval_pools(const DatasetSpec& dataset, int eval_samples);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& report);

// Full driver: writes the config echo, the metrics CSV, cadence and best-FID
// checkpoints under the resolved output directory. An empty echo string is
// replaced by the serialized effective configuration.
void run(const TrainConfig& config, const RunSettings& settings,
         const std::string& config_echo_json = "");

}  // namespace mhgan
