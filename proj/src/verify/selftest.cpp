#include "gbert/verify/selftest.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "gbert/checkpoint.hpp"
#include "gbert/corpus.hpp"
#include "gbert/crf.hpp"
#include "gbert/errors.hpp"
#include "gbert/heads.hpp"
#include "gbert/ops.hpp"
#include "gbert/utf8.hpp"
#include "gbert/verify/crf_oracle.hpp"
#include "gbert/verify/gradcheck.hpp"
#include "gbert/verify/reference_table.hpp"

namespace gbert::verify {

namespace {

std::string num(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

ModelConfig tiny() {
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

CheckResult gradcheck() {
    const ModelConfig cfg = tiny();
    Rng rng(101);
    auto enc = EncoderParams::init(cfg, rng);
    auto head = HeadParams::init(cfg, {20, 3, 5}, true, rng);
    auto crf = CrfParams::init(cfg.hidden, 3, 0.5, rng);
    ParamSet params;
    enc.collect(params);
    head.collect(params);
    crf.collect(params);
    PretrainExample ex;
    ex.input_ids = {Vocab::kCls, 7, Vocab::kMask, Vocab::kSep, 12, Vocab::kSep};
    ex.segment_ids = {0, 0, 0, 0, 1, 1};
    ex.attention_mask.assign(6, true);
    ex.char_mask = {false, true, true, false, true, false};
    ex.mlm_targets = {kIgnoreTarget, kIgnoreTarget, 9, kIgnoreTarget, 12, kIgnoreTarget};
    ex.cws_tags = {0, 1, 2, 0, 1, 0};
    ex.pos_tags = {0, 2, 2, 0, 3, 0};
    ex.sp1_tags = {0, 4, 4, 0, 2, 0};
    ex.sp2_tags = {0, 1, 1, 0, 4, 0};
    const EncoderInput in{ex.input_ids, ex.segment_ids, ex.attention_mask};
    auto combined = [&] {
        Rng r(0);
        const auto st = encode(in, cfg, enc, Mode::eval, r);
        return combined_loss(pretrain_losses(ex, st, head, enc, TaskWeights{}), TaskWeights{});
    };
    auto nll = [&] {
        Rng r(0);
        const auto st = encode(in, cfg, enc, Mode::eval, r);
        return crf_nll(crf_emissions(st.final_tokens(), crf), {0, 1, 2, 0, 1, 0}, std::vector<bool>(6, true), crf);
    };
    const auto a = check_gradients(combined, params);
    const auto b = check_gradients(nll, params);
    const double worst = std::max(a.max_rel_error, b.max_rel_error);
    return {"gradcheck", worst < 1e-3,
            "max relative error " + num(worst) + " over " + std::to_string(a.checked) + " parameters"};
}

CheckResult crf_enumeration() {
    Rng rng(202);
    double worst_z = 0.0;
    bool viterbi_ok = true;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t t = 1 + rng.below(4), n = 1 + rng.below(5);
        CrfParams crf;
        crf.transitions = init::normal({t, t}, 1.0, rng);
        crf.start = init::normal({1, t}, 1.0, rng);
        crf.end = init::normal({1, t}, 1.0, rng);
        const Tensor e = init::normal({n, t}, 1.5, rng);
        const std::vector<bool> mask(n, true);
        const auto oracle = enumerate_paths(e, n, crf);
        worst_z = std::max(worst_z, std::abs(crf_log_partition(e, mask, crf).item() - oracle.log_partition));
        viterbi_ok = viterbi_ok && std::abs(crf_path_score(e, viterbi(e, mask, crf), crf) - oracle.best_score) < 1e-10;
    }
    return {"crf-enumeration", worst_z < 1e-8 && viterbi_ok,
            "200 instances, max |log Z error| " + num(worst_z) + (viterbi_ok ? ", viterbi optimal" : ", viterbi FAILED")};
}

CheckResult glu_identities() {
    const Tensor a = Tensor::constant({1, 3}, {1.5, -2.0, 0.25});
    const Tensor half = ops::glu(a, Tensor::constant({1, 3}, 0.0));
    const Tensor sat = ops::glu(a, Tensor::constant({1, 3}, 50.0));
    const Tensor ln3 = ops::glu(Tensor::constant({1, 2}, {1.0, -2.0}),
                                Tensor::constant({1, 2}, {std::log(3.0), -std::log(3.0)}));
    bool ok = true;
    for (std::size_t j = 0; j < 3; ++j) {
        ok = ok && half.at(0, j) == 0.5 * a.at(0, j);
        ok = ok && std::abs(sat.at(0, j) - a.at(0, j)) < 1e-9;
    }
    ok = ok && std::abs(ln3.at(0, 0) - 0.75) < 1e-12 && std::abs(ln3.at(0, 1) + 0.5) < 1e-12;
    return {"glu", ok, "sigma(0) = 1/2, saturation at 50, sigma(ln 3) = 3/4"};
}

CheckResult conversion() {
    const auto tree = ParseTree::parse(kReferenceTree);
    std::vector<std::string> words;
    for (const auto& w : reference_table()) words.push_back(w.word);
    const auto labels = label_sentence(SegmentedSentence::from_words(words, tree.pos_tags(), tree));
    std::size_t c = 0, compared = 0, excluded = 0, wrong = 0;
    for (const auto& w : reference_table()) {
        const auto cws = utf8::split_chars(w.word).size();
        std::istringstream bio(w.cws);
        for (std::size_t k = 0; k < cws; ++k, ++c) {
            std::string tag;
            bio >> tag;
            wrong += (*labels.cws)[c] != tag;
            wrong += (*labels.pos)[c] != w.pos;
            compared += 2;
            if (w.sp1_excluded) {
                ++excluded;
            } else {
                wrong += (*labels.sp1)[c] != w.sp1;
                ++compared;
            }
            if (w.sp2_excluded) {
                ++excluded;
            } else {
                wrong += (*labels.sp2)[c] != w.sp2;
                ++compared;
            }
        }
    }
    return {"conversion", wrong == 0,
            std::to_string(compared - wrong) + "/" + std::to_string(compared) + " cells match, " +
                std::to_string(excluded) + " excluded"};
}

CheckResult masking() {
    Vocab vocab = Vocab::build({{"a", "b", "c", "d", "e", "f", "g", "h"}});
    std::vector<std::size_t> ids;
    for (int i = 0; i < 100000; ++i) ids.push_back(Vocab::kReserved + static_cast<std::size_t>(i % 8));
    Rng rng(303);
    const auto m = make_mlm(ids, rng, 0.15, vocab);
    double sel = 0, mask = 0, same = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (m.targets[i] == kIgnoreTarget) continue;
        ++sel;
        mask += m.ids[i] == Vocab::kMask;
        same += m.ids[i] == ids[i];
    }
    const double f = sel / static_cast<double>(ids.size());
    const double pm = mask / sel, pu = same / sel, pr = 1.0 - pm - pu;
    const bool ok = f >= 0.14 && f <= 0.16 && std::abs(pm - 0.8) <= 0.02 && std::abs(pr - 0.1) <= 0.02 &&
                    std::abs(pu - 0.1) <= 0.02;
    return {"masking", ok,
            "selected " + num(f) + ", mask/random/keep " + num(pm) + "/" + num(pr) + "/" + num(pu)};
}

CheckResult checkpoint(bool corrupt) {
    Rng rng(404);
    ModelConfig cfg = tiny();
    auto enc = EncoderParams::init(cfg, rng);
    ParamSet params;
    enc.collect(params);
    Checkpoint ck;
    ck.config = cfg;
    ck.meta["step"] = 7;
    ck.add_params(params);
    auto bytes = serialize_checkpoint(ck);
    if (corrupt) bytes[bytes.size() / 2] ^= 0x10;
    try {
        const Checkpoint back = deserialize_checkpoint(bytes, "selftest checkpoint");
        bool same = back.config == ck.config && back.meta == ck.meta && back.tensors.size() == ck.tensors.size();
        for (std::size_t i = 0; same && i < ck.tensors.size(); ++i) {
            const auto& x = ck.tensors[i].values;
            const auto& y = back.tensors[i].values;
            same = x.size() == y.size();
            for (std::size_t j = 0; same && j < x.size(); ++j) {
                same = std::bit_cast<std::uint64_t>(x[j]) == std::bit_cast<std::uint64_t>(y[j]);
            }
        }
        return {"checkpoint", same, same ? "bitwise round trip" : "round trip changed the model"};
    } catch (const DataError& e) {
        return {"checkpoint", false, e.what()};
    }
}

template <class F>
CheckResult guarded(const char* name, F f) {
    try {
        return f();
    } catch (const std::exception& e) {
        return {name, false, std::string("threw: ") + e.what()};
    }
}

}  // namespace

std::vector<CheckResult> run_selftest(const SelftestOptions& options) {
    return {guarded("gradcheck", gradcheck),
            guarded("crf-enumeration", crf_enumeration),
            guarded("glu", glu_identities),
            guarded("conversion", conversion),
            guarded("masking", masking),
            guarded("checkpoint", [&] { return checkpoint(options.corrupt_checkpoint); })};
}

}  // namespace gbert::verify
