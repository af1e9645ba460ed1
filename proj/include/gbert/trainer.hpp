#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gbert/checkpoint.hpp"
#include "gbert/corpus.hpp"
#include "gbert/crf.hpp"
#include "gbert/encoder.hpp"
#include "gbert/entities.hpp"
#include "gbert/heads.hpp"
#include "gbert/optim.hpp"
#include "gbert/run_config.hpp"

namespace gbert {

// ---------------------------------------------------------------- pretrain

/// Encoder, pre-training heads and the tables needed to rebuild inputs.
struct PretrainModel {
    ModelConfig config;
    bool tie_mlm = true;
    Vocab vocab;
    TagInventories tags;
    EncoderParams encoder;
    HeadParams heads;

    ParamSet params() const;
};

struct StepRecord {
    std::size_t step = 0;
    double lr = 0.0;
    double grad_norm = 0.0;
    double combined = 0.0;
    std::map<std::string, double> losses;  // tasks with positive weight, batch means
};

/// One JSON object per line: step, lr, grad_norm, combined, then one key per task.
std::string format_step_record(const StepRecord& r);

struct PretrainResult {
    PretrainModel model;
    OptimState optim;
    std::vector<StepRecord> log;  // steps run by this call
};

/// Model, tables, optimizer moments and step counter.
Checkpoint pretrain_checkpoint(const PretrainModel& model, const OptimState& optim);

/// Multi-task pre-training on documents of labeled sentences. Step s draws
/// its batch, masks and dropout from Rng(seed).split(2).split(s) alone, so a
/// run resumed from a step-k snapshot reproduces the uninterrupted run.
///
/// Writes the step log to run.paths.out_log and the final checkpoint to
/// run.paths.out_checkpoint when set; with train.checkpoint_every = k a
/// snapshot goes to "<out_checkpoint>.step-N" every k steps. All input
/// problems are reported before the first step.
PretrainResult pretrain(const RunConfig& run, const std::vector<std::vector<SegmentedSentence>>& documents,
                        const Checkpoint* resume = nullptr);

// ---------------------------------------------------------------- NER

struct NerModel {
    ModelConfig config;
    Vocab vocab;
    LabelSet tags;  // "O", then B-/I- per entity type in sorted order
    EncoderParams encoder;
    CrfParams crf;

    ParamSet params() const;
};

/// "O" followed by B-X, I-X for every type X found, types sorted.
LabelSet ner_tag_set(const std::vector<NerSentence>& sentences);

Checkpoint ner_checkpoint(const NerModel& model);
/// Throws DataError when the checkpoint holds no NER model.
NerModel restore_ner_model(const Checkpoint& ck);

struct EvalResult {
    std::size_t sentences = 0;
    PrfReport prf;
    std::vector<std::vector<std::string>> predicted;  // BIO tags per sentence
};

/// Eval-mode encoding of "[CLS] chars [SEP]" and Viterbi decoding. Characters
/// beyond max_len − 2 are predicted O.
EvalResult evaluate(const NerModel& model, const std::vector<NerSentence>& sentences);

/// Structured report: sentences, no_sentences, overall and per-type counts and P/R/F1.
std::string format_metrics(const EvalResult& result);

struct NerSplit {
    std::vector<NerSentence> train;
    std::vector<NerSentence> dev;
};

/// Holds out the last ⌈n/10⌉ sentences as dev.
NerSplit split_dev(const std::vector<NerSentence>& sentences);

struct FinetuneResult {
    NerModel model;               // weights of the best dev evaluation
    EvalResult best;              // dev report of that evaluation
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    std::vector<std::string> log;  // JSON lines: per-step loss records and per-evaluation dev reports
};

/// CRF fine-tuning. Without a dev set the last ⌈n/10⌉ training sentences are
/// held out. The encoder starts from `pretrained` when given (architecture
/// must match run.model), otherwise from a fresh initialization. Dev F1 is
/// evaluated every train.eval_every epochs; training stops after
/// train.patience evaluations without improvement (0 disables stopping).
FinetuneResult finetune(const RunConfig& run, const std::vector<NerSentence>& train,
                        const std::vector<NerSentence>& dev, const Checkpoint* pretrained = nullptr);

}  // namespace gbert
