#include "gbert/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "gbert/analysis.hpp"
#include "gbert/errors.hpp"
#include "gbert/synthetic.hpp"
#include "gbert/trainer.hpp"
#include "gbert/verify/selftest.hpp"

namespace gbert {

namespace {

namespace fs = std::filesystem;

// ------------------------------------------------------------ shared helpers

RunConfig load_with_overrides(const std::string& path, const std::vector<std::string>& sets) {
    RunConfig c = load_run_config(path);
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1), "");
    }
    if (const char* env = std::getenv("GBERT_SEED")) {
        const std::string v(env);
        std::uint64_t seed = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), seed);
        if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
            throw UsageError("GBERT_SEED must be a nonnegative integer, got '" + v + "'");
        }
        c.train.seed = seed;
    }
    return c;
}

void require_path(const fs::path& p, const char* key) {
    if (p.empty()) throw UsageError(std::string("config key '") + key + "' is required for this command");
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

// ------------------------------------------------------------ convert-trees

struct ConvertArgs {
    std::string trees, seg, out, reference;
};

using Rows = std::vector<std::vector<std::array<std::string, 5>>>;  // sentences × chars × columns

Rows read_rows(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    Rows rows(1);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (!rows.back().empty()) rows.emplace_back();
            continue;
        }
        std::array<std::string, 5> cols;
        std::istringstream ss(line);
        std::size_t n = 0;
        for (std::string cell; std::getline(ss, cell, '\t');) {
            if (n == 5) throw DataError(path.string(), lineno, "expected 5 tab-separated columns");
            cols[n++] = cell;
        }
        if (n != 5) throw DataError(path.string(), lineno, "expected 5 tab-separated columns");
        rows.back().push_back(cols);
    }
    if (rows.back().empty()) rows.pop_back();
    return rows;
}

int cmd_convert(const ConvertArgs& a, std::ostream& out) {
    const auto trees = read_trees(a.trees);
    const auto seg = read_segmentation(a.seg);
    if (trees.size() != seg.size()) {
        throw DataError(std::to_string(trees.size()) + " trees but " + std::to_string(seg.size()) +
                        " segmented sentences");
    }
    Rows rows;
    for (std::size_t i = 0; i < trees.size(); ++i) {
        CharLabels l;
        try {
            l = label_sentence(SegmentedSentence::from_words(seg[i], trees[i].pos_tags(), trees[i]));
        } catch (const DataError& e) {
            throw DataError(a.seg, i + 1, e.what());
        }
        rows.emplace_back();
        for (std::size_t c = 0; c < l.chars.size(); ++c) {
            rows.back().push_back({l.chars[c], (*l.cws)[c], (*l.pos)[c], (*l.sp1)[c], (*l.sp2)[c]});
        }
    }
    {
        std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
        if (!f) throw UsageError("cannot write '" + a.out + "'");
        for (std::size_t s = 0; s < rows.size(); ++s) {
            if (s > 0) f << '\n';
            for (const auto& r : rows[s]) f << r[0] << '\t' << r[1] << '\t' << r[2] << '\t' << r[3] << '\t' << r[4] << '\n';
        }
    }
    out << "converted " << rows.size() << " sentences to " << a.out << "\n";
    if (a.reference.empty()) return kExitOk;

    // Reference cells prefixed with '?' are reported but not compared.
    const Rows ref = read_rows(a.reference);
    if (ref.size() != rows.size()) {
        throw DataError("reference has " + std::to_string(ref.size()) + " sentences, converted " +
                        std::to_string(rows.size()));
    }
    static const char* kCols[5] = {"char", "cws", "pos", "sp1", "sp2"};
    std::size_t compared = 0, mismatched = 0, excluded = 0;
    for (std::size_t s = 0; s < rows.size(); ++s) {
        if (ref[s].size() != rows[s].size()) {
            throw DataError("reference sentence " + std::to_string(s + 1) + " has " + std::to_string(ref[s].size()) +
                            " characters, converted " + std::to_string(rows[s].size()));
        }
        for (std::size_t c = 0; c < rows[s].size(); ++c) {
            for (int k = 0; k < 5; ++k) {
                const std::string& want = ref[s][c][k];
                const std::string& got = rows[s][c][k];
                const std::string where = "sentence " + std::to_string(s + 1) + " char " + std::to_string(c + 1) +
                                          " (" + rows[s][c][0] + ") " + kCols[k];
                if (!want.empty() && want[0] == '?') {
                    ++excluded;
                    out << "excluded  " << where << ": reference " << want.substr(1) << ", converted " << got << "\n";
                    continue;
                }
                ++compared;
                if (want != got) {
                    ++mismatched;
                    out << "mismatch  " << where << ": reference " << want << ", converted " << got << "\n";
                }
            }
        }
    }
    out << "reference: " << compared - mismatched << "/" << compared << " cells match, " << excluded
        << " excluded\n";
    return mismatched == 0 ? kExitOk : kExitNumeric;
}

// ------------------------------------------------------------ count

ModelConfig builtin_config(const std::string& name) {
    ModelConfig c;
    c.layers = 12;
    c.vocab = 21128;
    c.max_len = 512;
    c.type_vocab = 2;
    if (name == "bert-base") {
        c.hidden = 768;
        c.heads = 12;
    } else if (name == "gbert-small") {
        c.hidden = 192;
        c.heads = 4;
    } else {
        throw UsageError("unknown reference config '" + name + "'");
    }
    return c;
}

ModelConfig model_from(const std::string& spec) {
    if (spec == "bert-base" || spec == "gbert-small") return builtin_config(spec);
    ModelConfig c = load_run_config(spec).model;
    c.validate();
    return c;
}

void print_params(std::ostream& out, const std::string& label, const ModelConfig& c) {
    const ParamCount p = count_params(c);
    out << label << ": L=" << c.layers << " H=" << c.hidden << " A=" << c.heads << " ff=" << c.ff_size()
        << " vocab=" << c.vocab << " max_len=" << c.max_len << " type_vocab=" << c.type_vocab << "\n"
        << "  parameters     " << p.total() << "\n"
        << "    embeddings   " << p.embeddings << "\n"
        << "    attention    " << p.attention << "\n"
        << "    feed_forward " << p.feed_forward << "\n"
        << "    layer_norms  " << p.layer_norms << "\n"
        << "    gates        " << p.gates << "\n"
        << "    gate_init    " << p.gate_init << "\n";
}

void print_flops(std::ostream& out, const FlopEstimate& f, std::uint64_t n) {
    out << "  flops(n=" << n << ")   " << f.total() << "\n"
        << "    projections  " << f.projections << "\n"
        << "    attention    " << f.attention_mix << "\n"
        << "    feed_forward " << f.feed_forward << "\n"
        << "    gate         " << f.gate << "\n";
}

// An explicit --seq-len beyond max_len is an error; the default one only
// skips the FLOP estimate.
int cmd_count(const std::string& config, std::uint64_t seq_len, bool seq_len_given, const std::string& baseline,
              std::ostream& out) {
    const ModelConfig c = model_from(config);
    std::optional<ModelConfig> b;
    if (!baseline.empty()) b = model_from(baseline);
    const bool fits = seq_len >= 1 && seq_len <= c.max_len && (!b || seq_len <= b->max_len);
    if (!fits && seq_len_given) {
        throw UsageError("--seq-len " + std::to_string(seq_len) + " is outside [1, max_len]");
    }
    print_params(out, "model", c);
    if (fits) print_flops(out, estimate_flops(c, seq_len), seq_len);
    else out << "  flops          skipped: seq-len " << seq_len << " exceeds max_len " << c.max_len << "\n";
    if (b) {
        print_params(out, "baseline", *b);
        if (fits) print_flops(out, estimate_flops(*b, seq_len), seq_len);
        const double pr = static_cast<double>(count_params(c).total()) / static_cast<double>(count_params(*b).total());
        out << "parameter ratio " << fixed(pr) << "\n";
        if (fits) {
            const double fr = static_cast<double>(estimate_flops(c, seq_len).total()) /
                              static_cast<double>(estimate_flops(*b, seq_len).total());
            out << "flop ratio " << fixed(fr) << "\n";
        }
    }
    out << estimate_flops(c, 1).formula() << "\n";
    return kExitOk;
}

// ------------------------------------------------------------ training

int cmd_pretrain(const RunConfig& run, std::ostream& out) {
    require_path(run.paths.pretrain_data, "data.pretrain");
    const auto docs = read_pretrain_jsonl(run.paths.pretrain_data);
    std::optional<Checkpoint> resume;
    if (!run.paths.resume.empty()) resume = load_checkpoint(run.paths.resume);
    const PretrainResult r = pretrain(run, docs, resume ? &*resume : nullptr);
    out << "steps " << (r.log.empty() ? 0 : r.log.front().step) << ".." << r.optim.step << "\n";
    if (!r.log.empty()) {
        out << "combined loss " << fixed(r.log.front().combined) << " -> " << fixed(r.log.back().combined) << "\n";
    }
    if (!run.paths.out_checkpoint.empty()) out << "checkpoint " << run.paths.out_checkpoint.string() << "\n";
    return kExitOk;
}

int cmd_finetune(const RunConfig& run, std::ostream& out) {
    require_path(run.paths.ner_train, "data.ner_train");
    const auto train = read_conll(run.paths.ner_train);
    std::vector<NerSentence> dev;
    if (!run.paths.ner_dev.empty()) dev = read_conll(run.paths.ner_dev);
    std::optional<Checkpoint> pre;
    if (!run.paths.init_checkpoint.empty()) pre = load_checkpoint(run.paths.init_checkpoint);
    const FinetuneResult r = finetune(run, train, dev, pre ? &*pre : nullptr);
    out << "epochs " << r.epochs_run << ", best epoch " << r.best_epoch << ", dev F1 "
        << fixed(r.best.prf.overall.f1) << "\n";
    if (!run.paths.out_checkpoint.empty()) out << "checkpoint " << run.paths.out_checkpoint.string() << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& data, const std::string& metrics,
             const std::string& predictions, std::ostream& out) {
    const NerModel m = restore_ner_model(load_checkpoint(checkpoint));
    const auto sentences = read_conll(data);
    const EvalResult r = evaluate(m, sentences);
    const std::string report = format_metrics(r);
    if (metrics.empty()) {
        out << report;
    } else {
        std::ofstream f(metrics, std::ios::binary | std::ios::trunc);
        if (!f) throw UsageError("cannot write '" + metrics + "'");
        f << report;
        out << "F1 " << fixed(r.prf.overall.f1) << " over " << r.sentences << " sentences\n";
    }
    if (!predictions.empty()) write_predictions(predictions, sentences, r.predicted);
    return kExitOk;
}

int cmd_selftest(bool corrupt, std::ostream& out) {
    bool ok = true;
    for (const auto& c : verify::run_selftest({corrupt})) {
        out << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(16) << c.name << c.detail << "\n";
        ok = ok && c.passed;
    }
    return ok ? kExitOk : kExitNumeric;
}

struct SynthArgs {
    std::size_t sentences = 200;
    std::uint64_t seed = 1;
    std::size_t entity_types = 3;
    std::size_t per_document = 5;
    std::string pretrain, ner;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    Rng rng(a.seed);
    const auto c = generate_synthetic_corpus(rng, a.sentences, a.entity_types, a.per_document);
    if (!a.pretrain.empty()) write_pretrain_jsonl(a.pretrain, c.documents);
    if (!a.ner.empty()) write_conll(a.ner, c.ner);
    out << "generated " << a.sentences << " sentences in " << c.documents.size() << " documents\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"g-BERT: gated transformer encoder, multi-task pre-training and CRF NER", "gbert"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    ConvertArgs conv;
    auto* convert = app.add_subcommand("convert-trees", "Per-character cws/pos/sp1/sp2 labels from trees");
    convert->add_option("--trees", conv.trees, "Bracketed trees, one per line")->required();
    convert->add_option("--seg", conv.seg, "Segmentation, one sentence per line, words separated by spaces")
        ->required();
    convert->add_option("--out", conv.out, "Output: char, cws, pos, sp1, sp2 (tab separated)")->required();
    convert->add_option("--reference", conv.reference,
                        "Expected rows in the output format; cells prefixed '?' are reported, not compared");

    std::string count_config, count_baseline;
    std::uint64_t seq_len = 128;
    auto* count = app.add_subcommand("count", "Exact parameter count and FLOP estimate");
    count->add_option("--config", count_config, "Run config (model.* keys) or bert-base / gbert-small")->required();
    count->add_option("--seq-len", seq_len, "Sequence length for the FLOP estimate")->capture_default_str();
    count->add_option("--baseline", count_baseline, "Reference config file or bert-base / gbert-small");

    std::string config_path, resume, init_checkpoint;
    std::vector<std::string> sets;
    auto* pre = app.add_subcommand("pretrain", "Multi-task pre-training");
    pre->add_option("--config", config_path, "Run config file")->required();
    pre->add_option("--set", sets, "Override a config key: key=value (repeatable)");
    pre->add_option("--resume", resume, "Continue from a pre-training snapshot (overrides in.resume)");

    auto* fine = app.add_subcommand("finetune", "CRF fine-tuning for NER");
    fine->add_option("--config", config_path, "Run config file")->required();
    fine->add_option("--set", sets, "Override a config key: key=value (repeatable)");
    fine->add_option("--checkpoint", init_checkpoint, "Pre-trained checkpoint (overrides in.checkpoint)");

    std::string eval_ckpt, eval_data, eval_metrics, eval_pred;
    auto* eval = app.add_subcommand("eval", "Entity P/R/F1 of a fine-tuned checkpoint");
    eval->add_option("--checkpoint", eval_ckpt, "Fine-tuned checkpoint")->required();
    eval->add_option("--data", eval_data, "NER file: char<TAB>tag, blank line between sentences")->required();
    eval->add_option("--metrics", eval_metrics, "Write the report here instead of stdout");
    eval->add_option("--predictions", eval_pred, "Write char, gold, predicted columns here");

    bool corrupt = false;
    auto* self = app.add_subcommand("selftest", "Fast verification suite");
    self->add_flag("--corrupt-checkpoint", corrupt, "Damage the serialized checkpoint before reloading it");

    SynthArgs syn;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
    synth->add_option("--sentences", syn.sentences, "Number of sentences")->capture_default_str();
    synth->add_option("--seed", syn.seed, "Generator seed")->capture_default_str();
    synth->add_option("--entity-types", syn.entity_types, "Number of entity types")->capture_default_str();
    synth->add_option("--sentences-per-document", syn.per_document, "Document length")->capture_default_str();
    synth->add_option("--pretrain", syn.pretrain, "Output pre-training records (JSON lines)");
    synth->add_option("--ner", syn.ner, "Output NER file");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*convert) return cmd_convert(conv, out);
        if (*count) return cmd_count(count_config, seq_len, count->count("--seq-len") > 0, count_baseline, out);
        if (*pre) {
            RunConfig run = load_with_overrides(config_path, sets);
            if (!resume.empty()) run.paths.resume = resume;
            return cmd_pretrain(run, out);
        }
        if (*fine) {
            RunConfig run = load_with_overrides(config_path, sets);
            if (!init_checkpoint.empty()) run.paths.init_checkpoint = init_checkpoint;
            return cmd_finetune(run, out);
        }
        if (*eval) return cmd_eval(eval_ckpt, eval_data, eval_metrics, eval_pred, out);
        if (*self) return cmd_selftest(corrupt, out);
        if (*synth) return cmd_synth(syn, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const ShapeError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace gbert
