#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mhgan/train.hpp"

namespace mhgan {

struct RunConfig {
  TrainConfig train;
  RunSettings settings;
};

// JSON config: flat keys mirroring TrainConfig in snake_case, plus output_dir,
// determinism, checkpoint_interval, resume_from. The dataset block is the only
// nested object. Unknown keys are rejected; head_mode "auto" resolves from the
// loss variant, as do the variant-specific d_steps_per_g / lr_d defaults when
// those keys are absent.
RunConfig load_config(const std::optional<std::string>& file_path,
                      const std::vector<std::string>& overrides);

// Effective configuration, parseable back by load_config.
std::string config_echo(const RunConfig& config);

// The documented defaults (head_mode "auto"), parseable back.
std::string default_config_json();

// One dataset block, same schema as the config's "dataset" object.
DatasetSpec parse_dataset_json(const std::string& json_text);

}  // namespace mhgan
