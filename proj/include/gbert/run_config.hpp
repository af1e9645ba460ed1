#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gbert/heads.hpp"
#include "gbert/model_config.hpp"

namespace gbert {

struct TrainConfig {
    std::string phase = "pretrain";  // pretrain | finetune
    std::size_t batch_size = 8;
    std::size_t steps = 100;   // pretrain
    std::size_t epochs = 50;   // finetune
    std::size_t seq_len = 64;  // cap on packed length, ≤ model.max_len
    std::uint64_t seed = 1;
    double lr = 1e-4;
    double weight_decay = 0.01;
    double warmup_frac = 0.1;
    double clip_norm = 1.0;
    double mask_rate = 0.15;
    double is_next_prob = 0.5;
    std::size_t min_count = 1;
    std::size_t patience = 5;          // finetune early stopping, in evaluations
    std::size_t eval_every = 1;        // finetune: epochs between dev evaluations
    std::size_t checkpoint_every = 0;  // pretrain: steps between snapshots, 0 = final only
    bool tie_mlm = true;
};

struct RunPaths {
    std::filesystem::path pretrain_data;
    std::filesystem::path ner_train;
    std::filesystem::path ner_dev;
    std::filesystem::path init_checkpoint;  // finetune: pretrained weights
    std::filesystem::path resume;           // pretrain: continue from a snapshot
    std::filesystem::path out_checkpoint;
    std::filesystem::path out_log;
    std::filesystem::path out_metrics;
};

/// Everything one run needs. Text form: one "key = value" per line, '#'
/// starts a comment line. Keys are section.field, e.g. model.hidden,
/// weight.pos, train.lr, data.pretrain, out.log. Relative paths resolve
/// against the directory of the config file.
struct RunConfig {
    ModelConfig model;
    TaskWeights weights;
    TrainConfig train;
    RunPaths paths;

    /// Throws UsageError. A zero model.vocab is allowed (filled from data).
    void validate() const;
};

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                           const std::string& source = "config");
/// Throws UsageError when the file cannot be read.
RunConfig load_run_config(const std::filesystem::path& path);

/// Sets one key as if it appeared in the file.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value,
                      const std::filesystem::path& base_dir);

/// Every accepted key, in canonical order.
std::vector<std::string> config_keys();

/// Canonical text; parse_run_config(format_run_config(c), "") reproduces c.
std::string format_run_config(const RunConfig& config);

}  // namespace gbert
