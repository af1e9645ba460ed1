#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>
#include <cmath>
#include <limits>

#include "gbert/checkpoint.hpp"
#include "gbert/errors.hpp"
#include "gbert/optim.hpp"
#include "gbert/run_config.hpp"
#include "test_util.hpp"

using namespace gbert;
using gbert::testing::TempDir;

namespace {

Tensor with_grad(std::vector<double> values, std::vector<double> grad) {
    const std::size_t n = values.size();
    Tensor t = Tensor::parameter({1, n}, std::move(values));
    t.node()->grad = std::move(grad);
    return t;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
    }
    return true;
}

Checkpoint sample_checkpoint() {
    Checkpoint ck;
    ck.config.layers = 3;
    ck.config.hidden = 12;
    ck.config.heads = 3;
    ck.config.ff = 20;
    ck.config.vocab = 77;
    ck.config.max_len = 33;
    ck.config.dropout = 0.1;
    ck.config.init_std = 0.02;
    ck.meta["step"] = 12345678901234ULL;
    ck.meta["phase"] = 0;
    ck.tables["vocab"] = {"[PAD]", "中", "", "x y"};
    ck.tables["empty"] = {};
    Rng rng(9);
    std::vector<double> v(6 * 4);
    for (double& x : v) x = rng.normal() * 1e3;
    v[0] = -0.0;
    v[1] = std::numeric_limits<double>::denorm_min();
    v[2] = std::numeric_limits<double>::infinity();
    v[3] = std::nextafter(1.0, 2.0);
    ck.tensors.push_back({"enc.a", {6, 4}, v});
    ck.tensors.push_back({"adam.m/enc.a", {1, 1}, {0.1}});
    return ck;
}

}  // namespace

TEST_CASE("adam: one step on a scalar matches the closed form") {
    Tensor p = with_grad({1.0}, {0.5});
    ParamSet ps;
    ps.add("p", p, true);
    OptimState st;
    st.weight_decay = 0.0;
    adam_step(ps, st, 0.1);
    // m̂ = g, v̂ = g², so the step is lr · g / (|g| + eps)
    CHECK(p.values()[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-15));
    CHECK(st.step == 1);

    Tensor q = with_grad({2.0}, {0.5});
    ParamSet qs;
    qs.add("q", q, true);
    OptimState sd;
    sd.weight_decay = 0.01;
    adam_step(qs, sd, 0.1);
    CHECK(q.values()[0] == doctest::Approx(2.0 - 0.1 * (0.5 / (0.5 + 1e-8) + 0.01 * 2.0)).epsilon(1e-15));
}

TEST_CASE("adam: two steps against a direct evaluation of the update") {
    Tensor p = with_grad({0.3, -1.2}, {0.2, -0.7});
    ParamSet ps;
    ps.add("p", p, false);
    OptimState st;
    adam_step(ps, st, 0.01);
    p.node()->grad = {-0.4, 0.1};
    adam_step(ps, st, 0.02);

    const double g1[2] = {0.2, -0.7}, g2[2] = {-0.4, 0.1}, p0[2] = {0.3, -1.2};
    for (int i = 0; i < 2; ++i) {
        double m = 0.1 * g1[i], v = 0.001 * g1[i] * g1[i];
        double x = p0[i] - 0.01 * (m / 0.1) / (std::sqrt(v / 0.001) + 1e-8);
        m = 0.9 * m + 0.1 * g2[i];
        v = 0.999 * v + 0.001 * g2[i] * g2[i];
        x -= 0.02 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
        CHECK(p.values()[i] == doctest::Approx(x).epsilon(1e-14));
    }
}

TEST_CASE("adam: zero gradient without decay leaves parameters unchanged") {
    Tensor p = with_grad({0.25, -3.0, 7.5}, {0.0, 0.0, 0.0});
    Tensor untouched = Tensor::parameter({1, 2}, {1.0, 2.0});
    ParamSet ps;
    ps.add("p", p, true);
    ps.add("u", untouched, true);
    OptimState st;
    st.weight_decay = 0.0;
    for (int i = 0; i < 5; ++i) adam_step(ps, st, 0.1);
    CHECK(bitwise_equal({p.values().begin(), p.values().end()}, {0.25, -3.0, 7.5}));
    // no gradient at all: skipped, even with decay
    st.weight_decay = 0.5;
    adam_step(ps, st, 0.1);
    CHECK(bitwise_equal({untouched.values().begin(), untouched.values().end()}, {1.0, 2.0}));
    CHECK(st.moments.count("u") == 0);
}

TEST_CASE("adam: identical inputs give identical trajectories") {
    auto run = [] {
        Tensor p = Tensor::parameter({1, 3}, {0.1, 0.2, 0.3});
        ParamSet ps;
        ps.add("p", p, true);
        OptimState st;
        Rng rng(4);
        for (int i = 0; i < 20; ++i) {
            p.node()->grad = {rng.normal(), rng.normal(), rng.normal()};
            adam_step(ps, st, 0.05);
        }
        return std::vector<double>(p.values().begin(), p.values().end());
    };
    CHECK(bitwise_equal(run(), run()));
}

TEST_CASE("learning-rate schedule") {
    CHECK(scheduled_lr(1e-3, 1, 100, 0.1) == doctest::Approx(1e-4));
    CHECK(scheduled_lr(1e-3, 5, 100, 0.1) == doctest::Approx(5e-4));
    CHECK(scheduled_lr(1e-3, 10, 100, 0.1) == 1e-3);
    CHECK(scheduled_lr(1e-3, 80, 100, 0.1) == 1e-3);
    CHECK(scheduled_lr(1e-3, 1, 100, 0.0) == 1e-3);
    // ceil: 0.1 · 15 → 2 warmup steps
    CHECK(scheduled_lr(1.0, 1, 15, 0.1) == 0.5);
}

TEST_CASE("global-norm clipping") {
    Tensor a = with_grad({0, 0}, {3.0, 0.0});
    Tensor b = with_grad({0}, {4.0});
    Tensor c = Tensor::parameter({1, 1}, {0.0});
    ParamSet ps;
    ps.add("a", a, true);
    ps.add("b", b, true);
    ps.add("c", c, true);
    CHECK(clip_grad_norm(ps, 10.0) == 5.0);
    CHECK(b.grad()[0] == 4.0);
    CHECK(clip_grad_norm(ps, 1.0) == 5.0);
    CHECK(a.grad()[0] == doctest::Approx(0.6));
    CHECK(b.grad()[0] == doctest::Approx(0.8));
    CHECK_FALSE(c.has_grad());
    CHECK(clip_grad_norm(ps, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("non-finite values are reported by name") {
    Tensor a = with_grad({1.0}, {NAN});
    ParamSet ps;
    ps.add("enc.layer0.wq", a, true);
    try {
        check_finite(ps, "step 3");
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("enc.layer0.wq") != std::string::npos);
        CHECK(std::string(e.what()).find("step 3") != std::string::npos);
    }
}

TEST_CASE("checkpoint round trip is bitwise exact") {
    const Checkpoint ck = sample_checkpoint();
    const auto bytes = serialize_checkpoint(ck);
    const Checkpoint back = deserialize_checkpoint(bytes);
    CHECK(back.config == ck.config);
    CHECK(back.meta == ck.meta);
    CHECK(back.tables == ck.tables);
    REQUIRE(back.tensors.size() == ck.tensors.size());
    for (std::size_t i = 0; i < ck.tensors.size(); ++i) {
        CHECK(back.tensors[i].name == ck.tensors[i].name);
        CHECK(back.tensors[i].shape == ck.tensors[i].shape);
        CHECK(bitwise_equal(back.tensors[i].values, ck.tensors[i].values));
    }
    CHECK(serialize_checkpoint(back) == bytes);

    TempDir dir("ckpt");
    save_checkpoint(dir / "a.ckpt", ck);
    CHECK(serialize_checkpoint(load_checkpoint(dir / "a.ckpt")) == bytes);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "GBRT");
}

TEST_CASE("corrupted checkpoints are rejected") {
    const auto bytes = serialize_checkpoint(sample_checkpoint());
    for (std::size_t pos : {std::size_t{0}, std::size_t{5}, bytes.size() / 2, bytes.size() - 1}) {
        auto bad = bytes;
        bad[pos] ^= 0x01;
        CHECK_THROWS_AS(deserialize_checkpoint(bad), DataError);
    }
    for (std::size_t n : {std::size_t{0}, std::size_t{3}, std::size_t{12}, bytes.size() - 1}) {
        std::vector<unsigned char> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n));
        CHECK_THROWS_AS(deserialize_checkpoint(cut), DataError);
    }
    auto longer = bytes;
    longer.push_back(0);
    CHECK_THROWS_AS(deserialize_checkpoint(longer), DataError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/x.ckpt"), DataError);
}

TEST_CASE("restoring parameters from a checkpoint") {
    Tensor a = Tensor::parameter({2, 2}, {1, 2, 3, 4});
    ParamSet ps;
    ps.add("a", a, true);
    Checkpoint ck;
    ck.add_params(ps, "m.");
    Tensor b = Tensor::parameter({2, 2}, {0, 0, 0, 0});
    ParamSet target;
    target.add("a", b, true);
    ck.restore_params(target, "m.");
    CHECK(bitwise_equal({b.values().begin(), b.values().end()}, {1, 2, 3, 4}));
    CHECK_THROWS_AS(ck.restore_params(target), DataError);
    ParamSet wrong;
    wrong.add("a", Tensor::parameter({1, 4}, {0, 0, 0, 0}), true);
    CHECK_THROWS_AS(ck.restore_params(wrong, "m."), DataError);
}

TEST_CASE("run config: parsing, paths and errors") {
    const std::string text =
        "# tiny profile\n"
        "model.layers = 3\n"
        "model.hidden=48\n"
        "  model.heads = 4  \n"
        "\n"
        "weight.pos = 0.5\n"
        "train.phase = finetune\n"
        "train.lr = 5e-5\n"
        "train.seed = 18446744073709551615\n"
        "train.tie_mlm = false\n"
        "data.ner_train = data/train.conll\n"
        "out.log = /abs/log.jsonl\n";
    const RunConfig c = parse_run_config(text, "/cfg");
    CHECK(c.model.layers == 3);
    CHECK(c.model.hidden == 48);
    CHECK(c.model.heads == 4);
    CHECK(c.weights.pos == 0.5);
    CHECK(c.weights.mlm == 1.0);
    CHECK(c.train.phase == "finetune");
    CHECK(c.train.lr == 5e-5);
    CHECK(c.train.seed == 18446744073709551615ULL);
    CHECK_FALSE(c.train.tie_mlm);
    CHECK(c.paths.ner_train == std::filesystem::path("/cfg/data/train.conll"));
    CHECK(c.paths.out_log == std::filesystem::path("/abs/log.jsonl"));
    CHECK_NOTHROW(c.validate());

    auto message = [](const std::string& t) {
        try {
            parse_run_config(t, "", "x.cfg");
        } catch (const UsageError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("model.layers = 2\nmodel.colour = red\n").find("x.cfg:2:") == 0);
    CHECK(message("model.layers = 2\nmodel.colour = red\n").find("model.colour") != std::string::npos);
    CHECK(message("model.layers\n").find("x.cfg:1:") == 0);
    CHECK(message("model.layers = -1\n").find("x.cfg:1:") == 0);
    CHECK(message("train.lr = fast\n").find("train.lr") != std::string::npos);
    CHECK(message("train.tie_mlm = maybe\n") != "");
    CHECK(message("train.phase = eval\n") != "");

    RunConfig bad = c;
    bad.train.seq_len = bad.model.max_len + 1;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = c;
    bad.weights = {0, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = c;
    bad.model.hidden = 50;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    CHECK_THROWS_AS(load_run_config("/nonexistent.cfg"), UsageError);
}

TEST_CASE("run config: canonical text reproduces the config") {
    RunConfig c;
    c.model.dropout = 0.1 + 0.2;
    c.train.lr = 1.0 / 3.0;
    c.weights.sp2 = 0.0;
    c.train.seed = 42;
    c.paths.pretrain_data = "/data/p.jsonl";
    const std::string text = format_run_config(c);
    const RunConfig back = parse_run_config(text, "");
    CHECK(format_run_config(back) == text);
    CHECK(back.model == c.model);
    CHECK(back.weights == c.weights);
    CHECK(back.train.lr == c.train.lr);
    CHECK(back.paths.pretrain_data == c.paths.pretrain_data);
    for (const auto& k : config_keys()) CHECK(text.find(k + " = ") != std::string::npos);
}
