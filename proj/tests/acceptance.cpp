// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gbert/analysis.hpp"
#include "gbert/checkpoint.hpp"
#include "gbert/cli.hpp"
#include "gbert/corpus.hpp"
#include "gbert/crf.hpp"
#include "gbert/encoder.hpp"
#include "gbert/heads.hpp"
#include "gbert/ops.hpp"
#include "gbert/run_config.hpp"
#include "gbert/verify/crf_oracle.hpp"
#include "gbert/verify/gradcheck.hpp"
#include "test_util.hpp"

using namespace gbert;
using gbert::testing::slurp;
using gbert::testing::TempDir;
namespace fs = std::filesystem;

namespace {

const fs::path kData = GBERT_DATA_DIR;
const fs::path kConfigs = GBERT_CONFIG_DIR;

struct Outcome {
    bool passed = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            passed = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

std::string num(double v, int precision = 4) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CliRun {
    int code = -1;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "gbert");
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> v;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
}

// ---------------------------------------------------------------- 1

ModelConfig gradcheck_config() {
    ModelConfig c;
    c.layers = 2;
    c.hidden = 8;
    c.heads = 2;
    c.vocab = 20;
    c.max_len = 6;
    c.dropout = 0.0;
    c.init_std = 0.5;
    return c;
}

void gradient_integrity(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelConfig cfg = gradcheck_config();
    PretrainExample ex;
    ex.input_ids = {Vocab::kCls, 11, Vocab::kMask, Vocab::kSep, 17, Vocab::kSep};
    ex.segment_ids = {0, 0, 0, 0, 1, 1};
    ex.attention_mask.assign(6, true);
    ex.char_mask = {false, true, true, false, true, false};
    ex.mlm_targets = {kIgnoreTarget, 5, 14, kIgnoreTarget, kIgnoreTarget, kIgnoreTarget};
    ex.is_next = true;
    ex.cws_tags = {0, 1, 2, 0, 1, 0};
    ex.pos_tags = {0, 3, 3, 0, 1, 0};
    ex.sp1_tags = {0, 2, 2, 0, 4, 0};
    ex.sp2_tags = {0, 4, 4, 0, 3, 0};
    const EncoderInput in{ex.input_ids, ex.segment_ids, ex.attention_mask};
    double worst = 0.0;
    std::size_t checked = 0;
    for (bool tie : {true, false}) {
        Rng rng(tie ? 31 : 32);
        auto enc = EncoderParams::init(cfg, rng);
        auto head = HeadParams::init(cfg, {20, 3, 5}, tie, rng);
        auto crf = CrfParams::init(cfg.hidden, 5, 0.5, rng);
        ParamSet params;
        enc.collect(params);
        head.collect(params);
        crf.collect(params);
        auto combined = [&] {
            Rng r(0);
            const auto st = encode(in, cfg, enc, Mode::train, r);
            return combined_loss(pretrain_losses(ex, st, head, enc, TaskWeights{}), TaskWeights{});
        };
        // The CRF scores the five real positions; the last one is padding.
        auto nll = [&] {
            Rng r(0);
            const auto st = encode(in, cfg, enc, Mode::train, r);
            return crf_nll(crf_emissions(st.final_tokens(), crf), {0, 1, 2, 4, 3, 0},
                           {true, true, true, true, true, false}, crf);
        };
        for (const auto& res : {verify::check_gradients(combined, params, 1e-5),
                                verify::check_gradients(nll, params, 1e-5)}) {
            o.require(res.checked == params.total_size(), "every parameter element checked");
            worst = std::max(worst, res.max_rel_error);
            checked += res.checked;
        }
    }
    const double secs = seconds_since(t0);
    o.require(worst < 1e-3, "relative error < 1e-3");
    o.require(secs < 300.0, "runtime < 5 min");
    o.detail << "max relative error " << num(worst, 3) << " over " << checked << " checks, " << num(secs, 3)
             << " s";
}

// ---------------------------------------------------------------- 2

void crf_oracle(Outcome& o) {
    Rng rng(2024);
    double worst = 0.0;
    std::size_t viterbi_misses = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t tags = 1 + rng.below(4);
        const std::size_t n = 1 + rng.below(5);
        const std::size_t m = 1 + rng.below(n);  // real length; the rest is padding
        CrfParams crf;
        crf.transitions = init::normal({tags, tags}, 1.0, rng);
        crf.start = init::normal({1, tags}, 1.0, rng);
        crf.end = init::normal({1, tags}, 1.0, rng);
        const Tensor e = init::normal({n, tags}, 2.0, rng);
        std::vector<bool> mask(n, false);
        std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(m), true);
        const auto oracle = verify::enumerate_paths(e, m, crf);
        worst = std::max(worst, std::abs(crf_log_partition(e, mask, crf).item() - oracle.log_partition));
        auto path = viterbi(e, mask, crf);
        path.resize(m);
        if (std::abs(crf_path_score(e, path, crf) - oracle.best_score) > 1e-12 * std::max(1.0, std::abs(oracle.best_score))) {
            ++viterbi_misses;
        }
    }
    o.require(worst <= 1e-8, "log partition within 1e-8");
    o.require(viterbi_misses == 0, "viterbi attains the enumerated maximum");
    o.detail << "200 instances, max |log Z - enumeration| " << num(worst, 3) << ", viterbi below maximum in "
             << viterbi_misses;
}

// ---------------------------------------------------------------- 3

void compute_reduction(Outcome& o) {
    const ModelConfig small = load_run_config(kConfigs / "gbert-small.cfg").model;
    const ModelConfig base = load_run_config(kConfigs / "bert-base.cfg").model;
    o.require(small.layers == 12 && small.hidden == 192 && small.heads == 4, "small config is L12 H192 A4");
    o.require(base.layers == 12 && base.hidden == 768 && base.heads == 12 && base.vocab == 21128,
              "base config is L12 H768 A12 vocab 21128");
    const double fr = static_cast<double>(estimate_flops(small, 128).total()) /
                      static_cast<double>(estimate_flops(base, 128).total());
    const auto ps = count_params(small).total();
    const auto pb = count_params(base).total();
    const double pr = static_cast<double>(ps) / static_cast<double>(pb);
    o.require(fr <= 0.40, "flop ratio <= 0.40");
    o.require(pr <= 0.35, "parameter ratio <= 0.35");
    o.require(pb >= 99'000'000 && pb <= 121'000'000, "base parameters within 110M +-10%");

    // Same numbers through the command line.
    const auto r = cli({"count", "--config", (kConfigs / "gbert-small.cfg").string(), "--seq-len", "128",
                        "--baseline", (kConfigs / "bert-base.cfg").string()});
    o.require(r.code == 0, "count exits 0");
    std::ostringstream printed;
    printed << "flop ratio " << std::fixed << std::setprecision(4) << fr;
    o.require(r.out.find(printed.str()) != std::string::npos, "count prints the flop ratio");
    o.require(r.out.find("parameters     " + std::to_string(pb)) != std::string::npos,
              "count prints the base parameter count");

    o.detail << "flop ratio " << num(fr) << ", parameter ratio " << num(pr) << ", base " << pb << ", small " << ps
             << " (absolute small size not asserted)";
}

// ---------------------------------------------------------------- 4

void conversion_fidelity(Outcome& o) {
    TempDir tmp("accept_convert");
    const auto r = cli({"convert-trees", "--trees", (kData / "conversion/trees.txt").string(), "--seg",
                        (kData / "conversion/seg.txt").string(), "--out", (tmp / "labels.tsv").string(), "--reference",
                        (kData / "conversion/reference.tsv").string()});
    o.require(r.code == 0, "convert-trees exits 0 (stderr: " + r.err + ")");

    // Rows of the output, keyed by word.
    std::vector<std::vector<std::string>> rows;
    for (const auto& line : lines_of(slurp(tmp / "labels.tsv"))) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::istringstream ss(line);
        for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
        rows.push_back(cols);
    }
    const std::vector<std::string> words{"句法", "分析", "是", "自然", "语言", "处理", "中", "关键", "技术", "之一"};
    std::map<std::string, std::vector<std::vector<std::string>>> by_word;
    std::size_t at = 0;
    for (const auto& w : words) {
        const std::size_t len = w.size() / 3;
        for (std::size_t k = 0; k < len && at < rows.size(); ++k) by_word[w].push_back(rows[at++]);
    }
    o.require(rows.size() == 18 && at == 18, "18 character rows");
    auto column = [&](const std::string& w, std::size_t c) {
        std::string s;
        for (const auto& row : by_word[w]) s += (s.empty() ? "" : " ") + (row.size() > c ? row[c] : "?");
        return s;
    };
    o.require(column("分析", 1) == "B I", "cws of 分析 is B I");
    o.require(column("分析", 2) == "VV VV", "pos of 分析 is VV VV");
    const std::map<std::string, std::pair<std::string, std::string>> expected{
        {"分析", {"VP", "IP"}}, {"中", {"LCP", "IP"}}, {"关键", {"ADJP", "NP"}},
        {"技术", {"NP", "NP"}}, {"之一", {"NP", "NP"}}};
    std::size_t matched = 0;
    for (const auto& [w, sp] : expected) {
        const std::size_t len = w.size() / 3;
        std::string sp1, sp2;
        for (std::size_t k = 0; k < len; ++k) {
            sp1 += (k ? " " : "") + sp.first;
            sp2 += (k ? " " : "") + sp.second;
        }
        const bool ok = column(w, 3) == sp1 && column(w, 4) == sp2;
        o.require(ok, "sp1/sp2 of " + w);
        matched += ok;
    }
    const bool flagged = r.out.find("excluded  sentence 1 char 1 (句) sp1") != std::string::npos &&
                         r.out.find("(自) sp2") != std::string::npos && r.out.find("(语) sp2") != std::string::npos;
    o.require(flagged, "ambiguous rows flagged as excluded");
    o.require(r.out.find("mismatch") == std::string::npos, "no mismatch against the reference file");
    o.detail << "分析 cws '" << column("分析", 1) << "' pos '" << column("分析", 2) << "', " << matched
             << "/5 sp1/sp2 rows exact, 句法 sp1 and 自然/语言 sp2 excluded and flagged";
}

// ---------------------------------------------------------------- 5

void masking_statistics(Outcome& o) {
    std::vector<std::string> chars;
    for (int i = 0; i < 50; ++i) chars.push_back("c" + std::to_string(i));
    const Vocab vocab = Vocab::build({chars});
    std::vector<std::size_t> ids;
    Rng pick(77);
    for (int i = 0; i < 100000; ++i) ids.push_back(Vocab::kReserved + pick.below(50));
    Rng rng(5);
    const auto m = make_mlm(ids, rng, 0.15, vocab);
    double selected = 0, masked = 0, kept = 0, random = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (m.targets[i] == kIgnoreTarget) {
            o.require(m.ids[i] == ids[i], "unselected positions untouched");
            continue;
        }
        ++selected;
        o.require(m.targets[i] == ids[i], "target is the original id");
        if (m.ids[i] == Vocab::kMask) ++masked;
        else if (m.ids[i] == ids[i]) ++kept;
        else ++random;
    }
    const double f = selected / 1e5, pm = masked / selected, pr = random / selected, pk = kept / selected;
    o.require(f >= 0.14 && f <= 0.16, "selection fraction in [0.14, 0.16]");
    o.require(std::abs(pm - 0.8) <= 0.02, "mask share 0.8 +- 0.02");
    o.require(std::abs(pr - 0.1) <= 0.02, "random share 0.1 +- 0.02");
    o.require(std::abs(pk - 0.1) <= 0.02, "keep share 0.1 +- 0.02");
    o.detail << "selected " << num(f) << ", [MASK]/random/keep " << num(pm) << "/" << num(pr) << "/" << num(pk);
}

// ---------------------------------------------------------------- 6

std::vector<double> combined_losses(const fs::path& log) {
    std::vector<double> v;
    for (const auto& line : lines_of(slurp(log))) {
        if (!line.empty()) v.push_back(nlohmann::json::parse(line).at("combined").get<double>());
    }
    return v;
}

double mean(const std::vector<double>& v, std::size_t from, std::size_t to) {
    return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(from), v.begin() + static_cast<std::ptrdiff_t>(to),
                           0.0) /
           static_cast<double>(to - from);
}

void learning_capability(Outcome& o) {
    TempDir tmp("accept_learn");

    // Multi-task pre-training, 100 steps. Losses are averaged over the first
    // and last five steps to smooth batch noise.
    auto pre = cli({"pretrain", "--config", (kConfigs / "tiny-pretrain.cfg").string(), "--set", "train.steps=100",
                    "--set", "out.checkpoint=" + (tmp / "pre.gbrt").string(), "--set",
                    "out.log=" + (tmp / "pre.log").string()});
    o.require(pre.code == 0, "pretrain exits 0 (stderr: " + pre.err + ")");
    const auto losses = combined_losses(tmp / "pre.log");
    double drop = 0.0;
    if (losses.size() == 100) {
        const double first = mean(losses, 0, 5), last = mean(losses, 95, 100);
        drop = 1.0 - last / first;
        o.detail << "pretrain combined " << num(first) << " -> " << num(last) << " (drop " << num(100 * drop, 3)
                 << "%, need 30%); ";
    } else {
        o.require(false, "100 pretrain log lines");
    }
    o.require(drop >= 0.30, "pretrain combined loss drops >= 30% in 100 steps");

    // CRF fine-tuning on the 200-sentence corpus, scored on its own training set.
    const auto t0 = std::chrono::steady_clock::now();
    const std::string train = (kData / "ner_train.conll").string();
    auto fine = cli({"finetune", "--config", (kConfigs / "tiny-finetune.cfg").string(), "--checkpoint",
                     (tmp / "pre.gbrt").string(), "--set", "train.epochs=50", "--set", "data.ner_train=" + train,
                     "--set", "data.ner_dev=" + train, "--set", "out.checkpoint=" + (tmp / "ner.gbrt").string(),
                     "--set", "out.log=" + (tmp / "ner.log").string(), "--set",
                     "out.metrics=" + (tmp / "ner.json").string()});
    const double secs = seconds_since(t0);
    o.require(fine.code == 0, "finetune exits 0 (stderr: " + fine.err + ")");
    auto ev = cli({"eval", "--checkpoint", (tmp / "ner.gbrt").string(), "--data", train, "--metrics",
                   (tmp / "train.json").string()});
    o.require(ev.code == 0, "eval exits 0");
    double f1 = 0.0;
    std::size_t sentences = 0, best_epoch = 0;
    if (ev.code == 0 && fine.code == 0) {
        const auto report = nlohmann::json::parse(slurp(tmp / "train.json"));
        f1 = report.at("overall").at("f1").get<double>();
        sentences = report.at("sentences").get<std::size_t>();
        best_epoch = nlohmann::json::parse(slurp(tmp / "ner.json")).at("best_epoch").get<std::size_t>();
    }
    o.require(sentences == 200, "200 training sentences");
    o.require(f1 >= 0.99, "training-set entity F1 >= 0.99");
    o.require(best_epoch >= 1 && best_epoch <= 50, "within 50 epochs");
    o.require(secs < 600.0, "fine-tuning < 10 min");
    o.detail << "finetune training F1 " << num(f1) << " (best epoch " << best_epoch << ", " << num(secs, 3) << " s)";
}

// ---------------------------------------------------------------- 7

bool bitwise_equal(const Checkpoint& a, const Checkpoint& b) {
    if (!(a.config == b.config) || a.meta != b.meta || a.tables != b.tables || a.tensors.size() != b.tensors.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.tensors.size(); ++i) {
        const auto& x = a.tensors[i];
        const auto& y = b.tensors[i];
        if (x.name != y.name || x.shape != y.shape || x.values.size() != y.values.size()) return false;
        for (std::size_t j = 0; j < x.values.size(); ++j) {
            if (std::bit_cast<std::uint64_t>(x.values[j]) != std::bit_cast<std::uint64_t>(y.values[j])) return false;
        }
    }
    return true;
}

void determinism(Outcome& o) {
    TempDir tmp("accept_determinism");
    std::vector<std::string> pre_logs, pre_ckpts, ner_logs, ner_metrics, eval_reports;
    for (int run = 0; run < 2; ++run) {
        const std::string tag = std::to_string(run);
        auto p = cli({"pretrain", "--config", (kConfigs / "tiny-pretrain.cfg").string(), "--set", "train.steps=12",
                      "--set", "model.dropout=0.1", "--set", "out.checkpoint=" + (tmp / ("p" + tag)).string(),
                      "--set", "out.log=" + (tmp / ("p" + tag + ".log")).string()});
        o.require(p.code == 0, "pretrain run exits 0");
        pre_logs.push_back(slurp(tmp / ("p" + tag + ".log")));
        pre_ckpts.push_back(slurp(tmp / ("p" + tag)));
        auto f = cli({"finetune", "--config", (kConfigs / "tiny-finetune.cfg").string(), "--set", "train.epochs=2",
                      "--set", "model.dropout=0.1", "--set", "out.checkpoint=" + (tmp / ("f" + tag)).string(),
                      "--set", "out.log=" + (tmp / ("f" + tag + ".log")).string(), "--set",
                      "out.metrics=" + (tmp / ("f" + tag + ".json")).string()});
        o.require(f.code == 0, "finetune run exits 0");
        ner_logs.push_back(slurp(tmp / ("f" + tag + ".log")));
        ner_metrics.push_back(slurp(tmp / ("f" + tag + ".json")));
        auto e = cli({"eval", "--checkpoint", (kData / "tiny-ner.gbrt").string(), "--data",
                      (kData / "golden_ner.conll").string(), "--metrics", (tmp / ("e" + tag + ".json")).string()});
        o.require(e.code == 0, "eval run exits 0");
        eval_reports.push_back(slurp(tmp / ("e" + tag + ".json")));
    }
    o.require(!pre_logs[0].empty() && pre_logs[0] == pre_logs[1], "pretrain logs byte-identical");
    o.require(!pre_ckpts[0].empty() && pre_ckpts[0] == pre_ckpts[1], "pretrain checkpoints byte-identical");
    o.require(!ner_logs[0].empty() && ner_logs[0] == ner_logs[1], "finetune logs byte-identical");
    o.require(!ner_metrics[0].empty() && ner_metrics[0] == ner_metrics[1], "finetune metrics byte-identical");
    o.require(!eval_reports[0].empty() && eval_reports[0] == eval_reports[1], "eval reports byte-identical");
    o.require(eval_reports[0] == slurp(kData / "golden_metrics.json"), "eval report matches the bundled one");

    std::size_t tensors = 0;
    for (const fs::path& p : {tmp / "p0", tmp / "f0", kData / "tiny-ner.gbrt"}) {
        try {
            const Checkpoint a = load_checkpoint(p);
            save_checkpoint(tmp / "copy", a);
            const Checkpoint b = load_checkpoint(tmp / "copy");
            o.require(bitwise_equal(a, b), "bitwise round trip of " + p.filename().string());
            o.require(slurp(p) == slurp(tmp / "copy"), "re-saved file identical to " + p.filename().string());
            tensors += a.tensors.size();
        } catch (const std::exception& e) {
            o.require(false, std::string("checkpoint round trip threw: ") + e.what());
        }
    }
    o.detail << "two runs each of pretrain/finetune/eval byte-identical (logs " << pre_logs[0].size() << "+"
             << ner_logs[0].size() << " bytes), " << tensors << " tensors round-tripped bitwise";
}

// ---------------------------------------------------------------- 8

ModelConfig gate_config() {
    ModelConfig c = gradcheck_config();
    c.max_len = 10;
    return c;
}

EncoderParams random_encoder(const ModelConfig& cfg, Rng& rng) {
    EncoderParams p = EncoderParams::init(cfg, rng);
    ParamSet set;
    p.collect(set);
    for (const auto& np : set) {
        Tensor t = np.tensor;
        for (double& v : t.mutable_values()) v = 0.5 * rng.normal();
    }
    return p;
}

EncoderInput input_of(std::vector<std::size_t> ids, std::vector<bool> mask = {}) {
    EncoderInput in;
    in.token_ids = std::move(ids);
    in.segment_ids.assign(in.token_ids.size(), 0);
    in.mask = mask.empty() ? std::vector<bool>(in.token_ids.size(), true) : std::move(mask);
    return in;
}

void gate_properties(Outcome& o) {
    const ModelConfig cfg = gate_config();
    Rng rng(88);

    // Permutation invariance with position embeddings zeroed.
    double perm_worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        EncoderParams p = random_encoder(cfg, rng);
        for (double& v : p.pos_emb.mutable_values()) v = 0.0;
        std::vector<std::size_t> ids(2 + rng.below(8));
        for (auto& id : ids) id = rng.below(cfg.vocab);
        std::vector<std::size_t> shuffled = ids;
        rng.shuffle(shuffled);
        const auto a = encode(input_of(ids), cfg, p, Mode::eval, rng);
        const auto b = encode(input_of(shuffled), cfg, p, Mode::eval, rng);
        for (std::size_t l = 0; l < a.gate_states.size(); ++l)
            for (std::size_t j = 0; j < cfg.hidden; ++j)
                perm_worst = std::max(perm_worst, std::abs(a.gate_states[l].at(0, j) - b.gate_states[l].at(0, j)));
    }
    o.require(perm_worst <= 1e-12, "gate states permutation invariant");

    // Masked positions: perturbing their ids changes nothing unmasked.
    bool hygiene = true;
    for (int trial = 0; trial < 20; ++trial) {
        const EncoderParams p = random_encoder(cfg, rng);
        const std::size_t n = 3 + rng.below(7);
        std::vector<bool> mask(n);
        std::vector<std::size_t> ids(n), other(n);
        for (std::size_t i = 0; i < n; ++i) {
            mask[i] = i == 0 || rng.uniform() < 0.6;
            ids[i] = rng.below(cfg.vocab);
            other[i] = mask[i] ? ids[i] : rng.below(cfg.vocab);
        }
        const auto a = encode(input_of(ids, mask), cfg, p, Mode::eval, rng);
        const auto b = encode(input_of(other, mask), cfg, p, Mode::eval, rng);
        for (std::size_t l = 0; l < a.token_states.size(); ++l) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; mask[i] && j < cfg.hidden; ++j)
                    hygiene = hygiene && a.token_states[l].at(i, j) == b.token_states[l].at(i, j);
            for (std::size_t j = 0; j < cfg.hidden; ++j)
                hygiene = hygiene && a.gate_states[l].at(0, j) == b.gate_states[l].at(0, j);
        }
    }
    o.require(hygiene, "no unmasked output depends on masked positions");

    // GLU identities.
    const Tensor a = Tensor::constant({1, 4}, {1.5, -2.0, 0.25, 7.0});
    const Tensor half = ops::glu(a, Tensor::constant({1, 4}, 0.0));
    const Tensor sat = ops::glu(a, Tensor::constant({1, 4}, 50.0));
    bool glu_ok = true;
    double sat_err = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        glu_ok = glu_ok && half.at(0, j) == 0.5 * a.at(0, j);
        sat_err = std::max(sat_err, std::abs(sat.at(0, j) - a.at(0, j)));
    }
    o.require(glu_ok, "glu(a, 0) = a/2");
    o.require(sat_err < 1e-9, "glu(a, 50) = a within 1e-9");
    o.detail << "permutation max |diff| " << num(perm_worst, 3) << ", masked perturbation "
             << (hygiene ? "invisible" : "VISIBLE") << ", glu saturation error " << num(sat_err, 3);
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
        {"gradient integrity", gradient_integrity},
        {"CRF oracle equivalence", crf_oracle},
        {"compute reduction", compute_reduction},
        {"conversion fidelity", conversion_fidelity},
        {"masking statistics", masking_statistics},
        {"learning capability", learning_capability},
        {"determinism and persistence", determinism},
        {"gate-node properties", gate_properties},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.passed = false;
            o.detail << "threw: " << e.what();
        }
        failed += !o.passed;
        std::cout << (o.passed ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": "
                  << o.detail.str() << std::endl;
    }
    std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size()
              << " acceptance criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
