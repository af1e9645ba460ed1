#include "gbert/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "gbert/errors.hpp"
#include "gbert/ops.hpp"

namespace gbert {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::uint64_t kPhasePretrain = 0;
constexpr std::uint64_t kPhaseFinetune = 1;

// Rng streams below the run seed.
enum Stream : std::uint64_t { kInit = 1, kPretrainStep = 2, kShuffle = 3, kFinetuneStep = 4, kCrfInit = 5 };

class LogFile {
public:
    explicit LogFile(const std::filesystem::path& path) {
        if (path.empty()) return;
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) throw UsageError("cannot write log file '" + path.string() + "'");
    }
    void line(const std::string& s) {
        if (!out_.is_open()) return;
        out_ << s << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

void check_architecture(const ModelConfig& run, const ModelConfig& stored) {
    const std::string diff = run.first_difference(stored);
    if (!diff.empty()) {
        throw DataError("checkpoint architecture does not match the config: " + diff);
    }
    if (run.vocab != 0 && run.vocab != stored.vocab) {
        throw DataError("checkpoint architecture does not match the config: vocab " + std::to_string(run.vocab) +
                        " != " + std::to_string(stored.vocab));
    }
}

std::uint64_t meta_or_throw(const Checkpoint& ck, const std::string& key) {
    auto it = ck.meta.find(key);
    if (it == ck.meta.end()) throw DataError("checkpoint has no '" + key + "' entry");
    return it->second;
}

const std::vector<std::string>& table_or_throw(const Checkpoint& ck, const std::string& key) {
    auto it = ck.tables.find(key);
    if (it == ck.tables.end()) throw DataError("checkpoint has no '" + key + "' table");
    return it->second;
}

void step_finite(double v, const std::string& what) {
    if (!std::isfinite(v)) throw NumericError(what + " is not finite");
}

// Snapshot and restore of parameter values (best-epoch selection).
std::vector<std::vector<double>> snapshot(const ParamSet& params) {
    std::vector<std::vector<double>> out;
    for (const auto& p : params) out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
    return out;
}

void restore(const ParamSet& params, const std::vector<std::vector<double>>& values) {
    std::size_t i = 0;
    for (const auto& p : params) {
        Tensor t = p.tensor;
        std::copy(values[i].begin(), values[i].end(), t.mutable_values().begin());
        ++i;
    }
}

ojson score_json(const PrfScore& s) {
    return ojson{{"gold", s.gold},         {"predicted", s.predicted}, {"correct", s.correct},
                 {"precision", s.precision}, {"recall", s.recall},       {"f1", s.f1}};
}

ojson report_json(const EvalResult& r) {
    ojson j;
    j["sentences"] = r.sentences;
    j["no_sentences"] = r.sentences == 0;
    j["overall"] = score_json(r.prf.overall);
    ojson types = ojson::object();
    for (const auto& [t, s] : r.prf.per_type) types[t] = score_json(s);
    j["per_type"] = types;
    return j;
}

}  // namespace

// ---------------------------------------------------------------- pretrain

ParamSet PretrainModel::params() const {
    ParamSet p;
    encoder.collect(p);
    heads.collect(p);
    return p;
}

std::string format_step_record(const StepRecord& r) {
    ojson j;
    j["step"] = r.step;
    j["lr"] = r.lr;
    j["grad_norm"] = r.grad_norm;
    j["combined"] = r.combined;
    for (const auto& [k, v] : r.losses) j[k] = v;
    return j.dump();
}

Checkpoint pretrain_checkpoint(const PretrainModel& model, const OptimState& optim) {
    Checkpoint ck;
    ck.config = model.config;
    ck.meta["phase"] = kPhasePretrain;
    ck.meta["tie_mlm"] = model.tie_mlm ? 1 : 0;
    ck.meta["step"] = optim.step;
    ck.tables["vocab"] = model.vocab.tokens();
    ck.tables["tags.cws"] = model.tags.cws.labels();
    ck.tables["tags.syntax"] = model.tags.syntax.labels();
    const ParamSet params = model.params();
    ck.add_params(params);
    for (const auto& p : params) {
        auto it = optim.moments.find(p.name);
        if (it == optim.moments.end()) continue;
        ck.tensors.push_back({"adam.m/" + p.name, p.tensor.shape(), it->second.m});
        ck.tensors.push_back({"adam.v/" + p.name, p.tensor.shape(), it->second.v});
    }
    return ck;
}

namespace {

PretrainModel restore_pretrain_model(const Checkpoint& ck, OptimState& optim) {
    if (meta_or_throw(ck, "phase") != kPhasePretrain) {
        throw DataError("checkpoint does not hold a pre-training run");
    }
    PretrainModel m;
    m.config = ck.config;
    m.tie_mlm = meta_or_throw(ck, "tie_mlm") != 0;
    m.vocab = Vocab::from_tokens(table_or_throw(ck, "vocab"));
    m.tags.cws = LabelSet(table_or_throw(ck, "tags.cws"));
    m.tags.syntax = LabelSet(table_or_throw(ck, "tags.syntax"));
    Rng dummy(0);
    m.encoder = EncoderParams::init(m.config, dummy);
    m.heads = HeadParams::init(m.config, {m.vocab.size(), m.tags.cws.size(), m.tags.syntax.size()}, m.tie_mlm,
                               dummy);
    const ParamSet params = m.params();
    ck.restore_params(params);
    optim.step = meta_or_throw(ck, "step");
    optim.moments.clear();
    for (const auto& p : params) {
        const NamedTensor* mt = ck.find("adam.m/" + p.name);
        const NamedTensor* vt = ck.find("adam.v/" + p.name);
        if (!mt || !vt) continue;
        if (mt->values.size() != p.tensor.size() || vt->values.size() != p.tensor.size()) {
            throw DataError("checkpoint moments for '" + p.name + "' have the wrong size");
        }
        optim.moments[p.name] = {mt->values, vt->values};
    }
    return m;
}

std::string snapshot_path(const std::filesystem::path& out, std::size_t step) {
    return out.string() + ".step-" + std::to_string(step);
}

}  // namespace

PretrainResult pretrain(const RunConfig& run, const std::vector<std::vector<SegmentedSentence>>& documents,
                        const Checkpoint* resume) {
    run.validate();
    const TaskWeights& w = run.weights;
    const TrainConfig& tc = run.train;

    // Everything that can fail on the input fails here, before step 1.
    std::vector<SegmentedSentence> flat;
    std::vector<Document> docs;
    for (std::size_t d = 0; d < documents.size(); ++d) {
        Document doc;
        for (std::size_t s = 0; s < documents[d].size(); ++s) {
            const SegmentedSentence& sent = documents[d][s];
            const std::string where = "document " + std::to_string(d + 1) + " sentence " + std::to_string(s + 1);
            if ((w.sp1 > 0 || w.sp2 > 0) && !sent.tree) {
                throw DataError(where + ": no tree, but the sp1/sp2 weights are positive");
            }
            try {
                CharLabels cl = label_sentence(sent);
                // Placeholder tags for an unweighted parsing task; never scored.
                if (!cl.sp1) cl.sp1.emplace(cl.chars.size(), labels::kPad);
                if (!cl.sp2) cl.sp2.emplace(cl.chars.size(), labels::kPad);
                doc.push_back(std::move(cl));
            } catch (const DataError& e) {
                throw DataError(where + ": " + e.what());
            }
            flat.push_back(sent);
        }
        if (!doc.empty()) docs.push_back(std::move(doc));
    }
    if (flat.empty()) throw DataError("pre-training corpus is empty");

    PretrainResult res;
    res.optim.lr = tc.lr;
    res.optim.weight_decay = tc.weight_decay;
    PretrainModel& m = res.model;
    const Rng root(tc.seed);
    if (resume) {
        check_architecture(run.model, resume->config);
        m = restore_pretrain_model(*resume, res.optim);
        if (m.tie_mlm != tc.tie_mlm) throw DataError("checkpoint tie_mlm setting differs from the config");
        m.config.dropout = run.model.dropout;
        if (res.optim.step > tc.steps) {
            throw UsageError("checkpoint is at step " + std::to_string(res.optim.step) + ", past train.steps " +
                             std::to_string(tc.steps));
        }
    } else {
        m.config = run.model;
        m.tie_mlm = tc.tie_mlm;
        m.vocab = build_vocab(flat, tc.min_count);
        if (m.config.vocab == 0) {
            m.config.vocab = m.vocab.size();
        } else if (m.config.vocab != m.vocab.size()) {
            throw UsageError("model.vocab " + std::to_string(m.config.vocab) + " differs from the corpus vocabulary " +
                             std::to_string(m.vocab.size()) + "; set it to 0 to take the size from the data");
        }
        m.config.validate();
        m.tags = TagInventories::build(flat);
        Rng init = root.split(kInit);
        m.encoder = EncoderParams::init(m.config, init);
        m.heads = HeadParams::init(m.config, {m.vocab.size(), m.tags.cws.size(), m.tags.syntax.size()}, m.tie_mlm,
                                   init);
    }
    {
        Rng probe = root.split(kPretrainStep).split(0);
        (void)make_nsp_pair(docs, probe, tc.seq_len, tc.is_next_prob);
    }

    ParamSet params = m.params();
    LogFile log(run.paths.out_log);
    const ExampleOptions opts{tc.mask_rate, 0};
    const double inv_b = 1.0 / static_cast<double>(tc.batch_size);

    for (std::size_t step = res.optim.step + 1; step <= tc.steps; ++step) {
        const Rng step_rng = root.split(kPretrainStep).split(step);
        StepRecord rec;
        rec.step = step;
        params.zero_grad();
        for (std::size_t b = 0; b < tc.batch_size; ++b) {
            Rng r = step_rng.split(b);
            const SentencePair pair = make_nsp_pair(docs, r, tc.seq_len, tc.is_next_prob);
            const PretrainExample ex = build_pretrain_example(pair, m.vocab, m.tags, r, opts);
            const EncoderState state =
                encode({ex.input_ids, ex.segment_ids, ex.attention_mask}, m.config, m.encoder, Mode::train, r);
            const TaskLosses l = pretrain_losses(ex, state, m.heads, m.encoder, w);
            const Tensor total = combined_loss(l, w);
            const std::pair<const char*, const Tensor*> named[] = {{"mlm", &l.mlm}, {"nsp", &l.nsp},
                                                                   {"cws", &l.cws}, {"pos", &l.pos},
                                                                   {"sp1", &l.sp1}, {"sp2", &l.sp2}};
            for (const auto& [name, t] : named) {
                if (t->defined()) rec.losses[name] += t->item() * inv_b;
            }
            rec.combined += total.item() * inv_b;
            ops::scale(total, inv_b).backward();
        }
        const std::string where = "step " + std::to_string(step);
        step_finite(rec.combined, where + ": combined loss");
        rec.grad_norm = clip_grad_norm(params, tc.clip_norm);
        check_finite(params, where);
        rec.lr = scheduled_lr(tc.lr, step, tc.steps, tc.warmup_frac);
        adam_step(params, res.optim, rec.lr);
        params.zero_grad();
        check_finite(params, where);

        log.line(format_step_record(rec));
        res.log.push_back(rec);
        if (tc.checkpoint_every > 0 && step % tc.checkpoint_every == 0 && step != tc.steps &&
            !run.paths.out_checkpoint.empty()) {
            save_checkpoint(snapshot_path(run.paths.out_checkpoint, step), pretrain_checkpoint(m, res.optim));
        }
    }
    if (!run.paths.out_checkpoint.empty()) {
        save_checkpoint(run.paths.out_checkpoint, pretrain_checkpoint(m, res.optim));
    }
    return res;
}

// ---------------------------------------------------------------- NER

ParamSet NerModel::params() const {
    ParamSet p;
    encoder.collect(p);
    crf.collect(p);
    return p;
}

LabelSet ner_tag_set(const std::vector<NerSentence>& sentences) {
    std::vector<std::string> types;
    for (const auto& s : sentences) {
        for (const auto& e : decode_entities(s.tags)) types.push_back(e.type);
    }
    std::sort(types.begin(), types.end());
    types.erase(std::unique(types.begin(), types.end()), types.end());
    std::vector<std::string> tags{"O"};
    for (const auto& t : types) {
        tags.push_back("B-" + t);
        tags.push_back("I-" + t);
    }
    return LabelSet(std::move(tags));
}

Checkpoint ner_checkpoint(const NerModel& model) {
    Checkpoint ck;
    ck.config = model.config;
    ck.meta["phase"] = kPhaseFinetune;
    ck.tables["vocab"] = model.vocab.tokens();
    ck.tables["tags.ner"] = model.tags.labels();
    ck.add_params(model.params());
    return ck;
}

NerModel restore_ner_model(const Checkpoint& ck) {
    if (meta_or_throw(ck, "phase") != kPhaseFinetune) {
        throw DataError("checkpoint does not hold a fine-tuned NER model");
    }
    NerModel m;
    m.config = ck.config;
    m.vocab = Vocab::from_tokens(table_or_throw(ck, "vocab"));
    m.tags = LabelSet(table_or_throw(ck, "tags.ner"));
    Rng dummy(0);
    m.encoder = EncoderParams::init(m.config, dummy);
    m.crf = CrfParams::init(m.config.hidden, m.tags.size(), m.config.init_std, dummy);
    ck.restore_params(m.params());
    return m;
}

namespace {

// Emission scores for the characters of one sentence (CLS/SEP dropped).
Tensor sentence_emissions(const NerModel& m, const std::vector<std::string>& chars, Mode mode, Rng& rng) {
    const std::size_t n = chars.size();
    EncoderInput in;
    in.token_ids.push_back(Vocab::kCls);
    for (std::size_t id : m.vocab.encode(chars)) in.token_ids.push_back(id);
    in.token_ids.push_back(Vocab::kSep);
    in.segment_ids.assign(n + 2, 0);
    in.mask.assign(n + 2, true);
    const EncoderState st = encode(in, m.config, m.encoder, mode, rng);
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i + 1;
    return crf_emissions(ops::gather_rows(st.final_tokens(), rows), m.crf);
}

std::size_t char_budget(const ModelConfig& c, std::size_t seq_len) {
    return std::min(c.max_len, seq_len) - 2;
}

}  // namespace

EvalResult evaluate(const NerModel& model, const std::vector<NerSentence>& sentences) {
    EvalResult r;
    r.sentences = sentences.size();
    std::vector<std::vector<EntitySpan>> gold, pred;
    Rng unused(0);
    const std::size_t cap = model.config.max_len - 2;
    for (const auto& s : sentences) {
        std::vector<std::string> tags(s.chars.size(), "O");
        const std::size_t n = std::min(cap, s.chars.size());
        if (n > 0) {
            const std::vector<std::string> head(s.chars.begin(), s.chars.begin() + static_cast<std::ptrdiff_t>(n));
            const Tensor em = sentence_emissions(model, head, Mode::eval, unused);
            const auto path = viterbi(em, std::vector<bool>(n, true), model.crf);
            for (std::size_t i = 0; i < n; ++i) tags[i] = model.tags.label(path[i]);
        }
        gold.push_back(decode_entities(s.tags));
        pred.push_back(decode_entities(tags));
        r.predicted.push_back(std::move(tags));
    }
    r.prf = entity_prf(gold, pred);
    return r;
}

std::string format_metrics(const EvalResult& result) { return report_json(result).dump(2) + "\n"; }

NerSplit split_dev(const std::vector<NerSentence>& sentences) {
    const std::size_t n = sentences.size();
    const std::size_t held = (n + 9) / 10;
    NerSplit s;
    s.train.assign(sentences.begin(), sentences.end() - static_cast<std::ptrdiff_t>(held));
    s.dev.assign(sentences.end() - static_cast<std::ptrdiff_t>(held), sentences.end());
    return s;
}

FinetuneResult finetune(const RunConfig& run, const std::vector<NerSentence>& train_in,
                        const std::vector<NerSentence>& dev_in, const Checkpoint* pretrained) {
    run.validate();
    const TrainConfig& tc = run.train;
    NerSplit split;
    if (dev_in.empty()) {
        split = split_dev(train_in);
    } else {
        split.train = train_in;
        split.dev = dev_in;
    }
    if (split.train.empty()) throw DataError("no training sentences left for fine-tuning");

    FinetuneResult res;
    NerModel& m = res.model;
    std::vector<NerSentence> all = split.train;
    all.insert(all.end(), split.dev.begin(), split.dev.end());
    m.tags = ner_tag_set(all);
    const Rng root(tc.seed);
    if (pretrained) {
        check_architecture(run.model, pretrained->config);
        m.config = pretrained->config;
        m.config.dropout = run.model.dropout;
        m.config.init_std = run.model.init_std;
        m.vocab = Vocab::from_tokens(table_or_throw(*pretrained, "vocab"));
        Rng dummy(0);
        m.encoder = EncoderParams::init(m.config, dummy);
        ParamSet enc;
        m.encoder.collect(enc);
        pretrained->restore_params(enc);
    } else {
        std::vector<std::vector<std::string>> chars;
        for (const auto& s : split.train) chars.push_back(s.chars);
        m.vocab = Vocab::build(chars, tc.min_count);
        m.config = run.model;
        if (m.config.vocab == 0) {
            m.config.vocab = m.vocab.size();
        } else if (m.config.vocab != m.vocab.size()) {
            throw UsageError("model.vocab " + std::to_string(m.config.vocab) + " differs from the corpus vocabulary " +
                             std::to_string(m.vocab.size()) + "; set it to 0 to take the size from the data");
        }
        m.config.validate();
        Rng init = root.split(kInit);
        m.encoder = EncoderParams::init(m.config, init);
    }
    {
        Rng init = root.split(kCrfInit);
        m.crf = CrfParams::init(m.config.hidden, m.tags.size(), m.config.init_std, init);
    }

    // Gold ids over the trainable prefix of each sentence.
    const std::size_t cap = char_budget(m.config, tc.seq_len);
    struct Item {
        std::vector<std::string> chars;
        std::vector<std::size_t> gold;
    };
    std::vector<Item> items;
    for (const auto& s : split.train) {
        const std::size_t n = std::min(cap, s.chars.size());
        if (n == 0) continue;
        Item it;
        it.chars.assign(s.chars.begin(), s.chars.begin() + static_cast<std::ptrdiff_t>(n));
        for (std::size_t i = 0; i < n; ++i) it.gold.push_back(m.tags.id(s.tags[i]));
        items.push_back(std::move(it));
    }
    if (items.empty()) throw DataError("every training sentence is empty");

    ParamSet params = m.params();
    OptimState optim;
    optim.lr = tc.lr;
    optim.weight_decay = tc.weight_decay;
    const std::size_t per_epoch = (items.size() + tc.batch_size - 1) / tc.batch_size;
    const std::size_t total = per_epoch * tc.epochs;
    LogFile log(run.paths.out_log);
    auto emit = [&](const ojson& j) {
        const std::string s = j.dump();
        log.line(s);
        res.log.push_back(s);
    };

    double best_f1 = -1.0;
    std::vector<std::vector<double>> best_values;
    std::size_t since_best = 0;
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        std::vector<std::size_t> order(items.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle = root.split(kShuffle).split(epoch);
        shuffle.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            ++step;
            const std::size_t end = std::min(order.size(), start + tc.batch_size);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            const Rng step_rng = root.split(kFinetuneStep).split(step);
            params.zero_grad();
            double loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const Item& it = items[order[k]];
                Rng r = step_rng.split(k - start);
                const Tensor em = sentence_emissions(m, it.chars, Mode::train, r);
                const Tensor nll = crf_nll(em, it.gold, std::vector<bool>(it.gold.size(), true), m.crf);
                loss += nll.item() * inv_b;
                ops::scale(nll, inv_b).backward();
            }
            const std::string where = "epoch " + std::to_string(epoch) + " step " + std::to_string(step);
            step_finite(loss, where + ": loss");
            const double norm = clip_grad_norm(params, tc.clip_norm);
            check_finite(params, where);
            const double lr = scheduled_lr(tc.lr, step, total, tc.warmup_frac);
            adam_step(params, optim, lr);
            params.zero_grad();
            check_finite(params, where);
            emit(ojson{{"epoch", epoch}, {"step", step}, {"lr", lr}, {"grad_norm", norm}, {"loss", loss}});
        }
        res.epochs_run = epoch;
        if (epoch % tc.eval_every != 0 && epoch != tc.epochs) continue;

        EvalResult ev = evaluate(m, split.dev);
        ev.predicted.clear();
        emit(ojson{{"epoch", epoch}, {"dev", report_json(ev)}});
        if (ev.prf.overall.f1 > best_f1) {
            best_f1 = ev.prf.overall.f1;
            best_values = snapshot(params);
            res.best = std::move(ev);
            res.best_epoch = epoch;
            since_best = 0;
        } else if (tc.patience > 0 && ++since_best >= tc.patience) {
            break;
        }
    }
    if (!best_values.empty()) restore(params, best_values);
    if (!run.paths.out_checkpoint.empty()) save_checkpoint(run.paths.out_checkpoint, ner_checkpoint(m));
    if (!run.paths.out_metrics.empty()) {
        ojson j = report_json(res.best);
        j["best_epoch"] = res.best_epoch;
        j["epochs_run"] = res.epochs_run;
        std::ofstream out(run.paths.out_metrics, std::ios::binary | std::ios::trunc);
        if (!out) throw UsageError("cannot write metrics file '" + run.paths.out_metrics.string() + "'");
        out << j.dump(2) << '\n';
    }
    return res;
}

}  // namespace gbert
