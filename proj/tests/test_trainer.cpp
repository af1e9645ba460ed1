#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>
#include <cmath>

#include "gbert/errors.hpp"
#include "gbert/synthetic.hpp"
#include "gbert/trainer.hpp"
#include "test_util.hpp"

using namespace gbert;
using gbert::testing::slurp;
using gbert::testing::TempDir;

namespace {

RunConfig tiny_run() {
    RunConfig r;
    r.model.layers = 1;
    r.model.hidden = 16;
    r.model.heads = 2;
    r.model.max_len = 32;
    r.model.dropout = 0.1;
    r.train.batch_size = 2;
    r.train.steps = 6;
    r.train.epochs = 3;
    r.train.seq_len = 32;
    r.train.lr = 1e-3;
    r.train.seed = 11;
    return r;
}

SyntheticCorpus corpus(std::size_t n = 20) {
    Rng rng(5);
    return generate_synthetic_corpus(rng, n);
}

std::vector<std::vector<double>> values_of(const ParamSet& ps) {
    std::vector<std::vector<double>> out;
    for (const auto& p : ps) out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
    return out;
}

bool bitwise_equal(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) return false;
        for (std::size_t j = 0; j < a[i].size(); ++j) {
            if (std::bit_cast<std::uint64_t>(a[i][j]) != std::bit_cast<std::uint64_t>(b[i][j])) return false;
        }
    }
    return true;
}

std::vector<std::vector<double>> values_of_one(const NamedParam& p) {
    return {std::vector<double>(p.tensor.values().begin(), p.tensor.values().end())};
}

std::vector<std::string> lines(const std::vector<StepRecord>& log) {
    std::vector<std::string> out;
    for (const auto& r : log) out.push_back(format_step_record(r));
    return out;
}

}  // namespace

TEST_CASE("pretrain is deterministic and logs every task") {
    const auto c = corpus();
    TempDir dir("pretrain");
    RunConfig run = tiny_run();
    run.paths.out_log = dir / "a.jsonl";
    const auto a = pretrain(run, c.documents);
    run.paths.out_log = dir / "b.jsonl";
    const auto b = pretrain(run, c.documents);
    REQUIRE(a.log.size() == 6);
    CHECK(lines(a.log) == lines(b.log));
    CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
    CHECK(bitwise_equal(values_of(a.model.params()), values_of(b.model.params())));
    for (const auto& r : a.log) {
        CHECK(std::isfinite(r.combined));
        CHECK(r.losses.size() == 6);
        double sum = 0.0;
        const TaskWeights w;
        sum += w.mlm * r.losses.at("mlm") + w.nsp * r.losses.at("nsp") + w.cws * r.losses.at("cws") +
               w.pos * r.losses.at("pos") + w.sp1 * r.losses.at("sp1") + w.sp2 * r.losses.at("sp2");
        CHECK(r.combined == doctest::Approx(sum).epsilon(1e-12));
    }
    CHECK(a.log[0].lr == doctest::Approx(1e-3));  // ceil(0.6) = 1 warmup step
    CHECK(a.model.config.vocab == a.model.vocab.size());

    run.train.seed = 12;
    const auto other = pretrain(run, c.documents);
    CHECK(lines(other.log) != lines(a.log));
}

TEST_CASE("pretrain resumed from a snapshot matches the uninterrupted run") {
    const auto c = corpus();
    TempDir dir("resume");
    RunConfig run = tiny_run();
    run.train.checkpoint_every = 3;
    run.paths.out_checkpoint = dir / "model.ckpt";
    const auto full = pretrain(run, c.documents);
    REQUIRE(std::filesystem::exists(dir / "model.ckpt.step-3"));

    const Checkpoint snap = load_checkpoint(dir / "model.ckpt.step-3");
    CHECK(snap.meta.at("step") == 3);
    RunConfig again = tiny_run();
    const auto resumed = pretrain(again, c.documents, &snap);
    REQUIRE(resumed.log.size() == 3);
    CHECK(resumed.log[0].step == 4);
    const auto full_lines = lines(full.log);
    CHECK(lines(resumed.log) == std::vector<std::string>(full_lines.begin() + 3, full_lines.end()));
    CHECK(bitwise_equal(values_of(resumed.model.params()), values_of(full.model.params())));
    CHECK(serialize_checkpoint(pretrain_checkpoint(resumed.model, resumed.optim)) ==
          serialize_checkpoint(load_checkpoint(dir / "model.ckpt")));
}

TEST_CASE("a zero task weight leaves that head bitwise unchanged") {
    const auto c = corpus();
    RunConfig run = tiny_run();
    run.weights.pos = 0.0;
    run.weights.sp2 = 0.0;
    RunConfig untrained = run;
    untrained.train.steps = 0;
    const auto before = pretrain(untrained, c.documents);
    const auto after = pretrain(run, c.documents);
    ParamSet b, a;
    before.model.heads.collect(b);
    after.model.heads.collect(a);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& name = a.items()[i].name;
        const bool frozen = name.rfind("head.pos.", 0) == 0 || name.rfind("head.sp2.", 0) == 0;
        INFO(name);
        const bool same = bitwise_equal(values_of_one(a.items()[i]), values_of_one(b.items()[i]));
        CHECK(same == frozen);
    }
    CHECK(after.log[0].losses.count("pos") == 0);
}

TEST_CASE("pretrain input problems surface before the first step") {
    auto c = corpus();
    TempDir dir("bad");
    RunConfig run = tiny_run();
    run.paths.out_log = dir / "log.jsonl";
    c.documents[1][2].tree.reset();
    try {
        pretrain(run, c.documents);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("document 2 sentence 3") != std::string::npos);
    }
    CHECK_FALSE(std::filesystem::exists(dir / "log.jsonl"));
    run.weights.sp1 = run.weights.sp2 = 0.0;
    CHECK_NOTHROW(pretrain(run, c.documents));

    std::vector<std::vector<SegmentedSentence>> one{{c.documents[0][0]}};
    CHECK_THROWS_AS(pretrain(run, one), DataError);
    CHECK_THROWS_AS(pretrain(run, {}), DataError);
    run.model.vocab = 7;
    CHECK_THROWS_AS(pretrain(run, c.documents), UsageError);
}

TEST_CASE("pretrain checkpoint carries everything a resume needs") {
    const auto c = corpus();
    const auto r = pretrain(tiny_run(), c.documents);
    const Checkpoint ck = pretrain_checkpoint(r.model, r.optim);
    CHECK(ck.tables.at("vocab") == r.model.vocab.tokens());
    CHECK(ck.tables.at("tags.syntax") == r.model.tags.syntax.labels());
    CHECK(ck.find("enc.token_emb") != nullptr);
    CHECK(ck.find("adam.m/enc.token_emb") != nullptr);
    CHECK(ck.find("adam.v/head.cws.weight") != nullptr);
    CHECK(deserialize_checkpoint(serialize_checkpoint(ck)) == ck);

    RunConfig wider = tiny_run();
    wider.model.hidden = 32;
    try {
        pretrain(wider, c.documents, &ck);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("hidden 32 != 16") != std::string::npos);
    }
}

TEST_CASE("ner tag inventory and dev split") {
    const std::vector<NerSentence> s{{{"a", "b", "c"}, {"B-PER", "I-PER", "O"}}, {{"d"}, {"B-LOC"}}};
    CHECK(ner_tag_set(s).labels() == std::vector<std::string>{"O", "B-LOC", "I-LOC", "B-PER", "I-PER"});
    for (auto [n, held] : {std::pair<std::size_t, std::size_t>{200, 20}, {11, 2}, {10, 1}, {1, 1}, {0, 0}}) {
        std::vector<NerSentence> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i].chars = {std::to_string(i)};
        const NerSplit sp = split_dev(all);
        CHECK(sp.dev.size() == held);
        CHECK(sp.train.size() == n - held);
        if (held > 0) CHECK(sp.dev.back().chars[0] == std::to_string(n - 1));
    }
}

TEST_CASE("evaluation of a hand-decodable model") {
    // Zero emissions; start and transitions force "B-PER I-PER I-PER ...".
    NerModel m;
    m.config.layers = 1;
    m.config.hidden = 4;
    m.config.heads = 1;
    m.config.max_len = 8;
    m.vocab = Vocab::build({{"张", "三"}});
    m.config.vocab = m.vocab.size();
    m.tags = LabelSet({"O", "B-LOC", "I-LOC", "B-PER", "I-PER"});
    Rng rng(1);
    m.encoder = EncoderParams::init(m.config, rng);
    m.crf = CrfParams::init(4, 5, 0.02, rng);
    m.crf.emission = Tensor::parameter({4, 5}, std::vector<double>(20, 0.0));
    std::vector<double> start(5, -10.0), trans(25, -10.0);
    start[3] = 0.0;
    trans[3 * 5 + 4] = 0.0;
    trans[4 * 5 + 4] = 0.0;
    m.crf.start = Tensor::parameter({1, 5}, start);
    m.crf.transitions = Tensor::parameter({5, 5}, trans);

    const std::vector<NerSentence> gold{{{"张", "三"}, {"B-PER", "I-PER"}},
                                        {{"在", "北", "京"}, {"O", "B-LOC", "I-LOC"}}};
    const EvalResult r = evaluate(m, gold);
    CHECK(r.predicted[0] == std::vector<std::string>{"B-PER", "I-PER"});
    CHECK(r.predicted[1] == std::vector<std::string>{"B-PER", "I-PER", "I-PER"});
    // gold {PER[0,2)}, {LOC[1,3)}; predicted {PER[0,2)}, {PER[0,3)}
    CHECK(r.prf.overall.gold == 2);
    CHECK(r.prf.overall.predicted == 2);
    CHECK(r.prf.overall.correct == 1);
    CHECK(r.prf.overall.f1 == doctest::Approx(0.5));
    CHECK(r.prf.per_type.at("PER").precision == doctest::Approx(0.5));
    CHECK(r.prf.per_type.at("PER").recall == doctest::Approx(1.0));
    CHECK(r.prf.per_type.at("PER").f1 == doctest::Approx(2.0 / 3.0));
    CHECK(r.prf.per_type.at("LOC").f1 == 0.0);

    // characters past max_len − 2 are predicted O
    const std::vector<NerSentence> longer{{{"张", "三", "张", "三", "张", "三", "张", "三"}, std::vector<std::string>(8, "O")}};
    const auto lr = evaluate(m, longer);
    CHECK(lr.predicted[0] == std::vector<std::string>{"B-PER", "I-PER", "I-PER", "I-PER", "I-PER", "I-PER", "O", "O"});

    const Checkpoint ck = ner_checkpoint(m);
    const NerModel back = restore_ner_model(deserialize_checkpoint(serialize_checkpoint(ck)));
    CHECK(format_metrics(evaluate(back, gold)) == format_metrics(r));

    const EvalResult empty = evaluate(m, {});
    const std::string report = format_metrics(empty);
    CHECK(empty.sentences == 0);
    CHECK(report.find("\"no_sentences\": true") != std::string::npos);
    CHECK(report.find("\"gold\": 0") != std::string::npos);
}

TEST_CASE("finetune with lr 0 keeps dev metrics fixed") {
    const auto c = corpus(30);
    RunConfig run = tiny_run();
    run.train.lr = 0.0;
    run.train.epochs = 3;
    run.train.patience = 0;
    const auto r = finetune(run, c.ner, {});
    std::vector<std::string> dev;
    for (const auto& l : r.log) {
        const auto at = l.find("\"dev\":");
        if (at != std::string::npos) dev.push_back(l.substr(at));
    }
    REQUIRE(dev.size() == 3);
    CHECK(dev[0] == dev[1]);
    CHECK(dev[1] == dev[2]);
    CHECK(r.best.sentences == 3);  // ⌈30 / 10⌉ held out
    CHECK(r.epochs_run == 3);
}

TEST_CASE("finetune is deterministic, writes outputs and stops early") {
    const auto c = corpus(30);
    TempDir dir("finetune");
    RunConfig run = tiny_run();
    run.train.epochs = 4;
    run.paths.out_log = dir / "a.jsonl";
    run.paths.out_metrics = dir / "a.json";
    run.paths.out_checkpoint = dir / "a.ckpt";
    const auto a = finetune(run, c.ner, {});
    run.paths.out_log = dir / "b.jsonl";
    run.paths.out_metrics = dir / "b.json";
    run.paths.out_checkpoint = dir / "b.ckpt";
    const auto b = finetune(run, c.ner, {});
    CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
    CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));
    CHECK(a.log == b.log);

    // best-epoch weights were saved: re-evaluating them reproduces the best dev report
    const NerModel saved = restore_ner_model(load_checkpoint(dir / "a.ckpt"));
    NerSplit sp = split_dev(c.ner);
    EvalResult again = evaluate(saved, sp.dev);
    again.predicted.clear();
    CHECK(format_metrics(again) == format_metrics(a.best));

    RunConfig patient = tiny_run();
    patient.train.lr = 0.0;
    patient.train.epochs = 20;
    patient.train.patience = 2;
    const auto stopped = finetune(patient, c.ner, {});
    CHECK(stopped.best_epoch == 1);
    CHECK(stopped.epochs_run == 3);
}

TEST_CASE("finetune from a pretrained checkpoint") {
    const auto c = corpus(30);
    const auto pre = pretrain(tiny_run(), c.documents);
    const Checkpoint ck = pretrain_checkpoint(pre.model, pre.optim);
    RunConfig run = tiny_run();
    run.train.epochs = 1;
    const auto r = finetune(run, c.ner, {}, &ck);
    CHECK(r.model.vocab.tokens() == pre.model.vocab.tokens());

    RunConfig mismatch = tiny_run();
    mismatch.model.layers = 2;
    try {
        finetune(mismatch, c.ner, {}, &ck);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("layers 2 != 1") != std::string::npos);
    }
    CHECK_THROWS_AS(restore_ner_model(ck), DataError);
}
