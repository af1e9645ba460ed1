#include "gbert/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "gbert/errors.hpp"

namespace gbert {

namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::size_t to_size(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw UsageError("'" + key + "' expects a nonnegative integer, got '" + v + "'");
    }
    return static_cast<std::size_t>(out);
}

double to_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw UsageError("'" + key + "' expects a number, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError("'" + key + "' expects true or false, got '" + v + "'");
}

std::string real_str(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Field {
    std::function<void(RunConfig&, const std::string&, const fs::path&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field size_field(T RunConfig::*part, std::size_t T::*member, const char* key) {
    return {[=](RunConfig& c, const std::string& v, const fs::path&) { c.*part.*member = to_size(key, v); },
            [=](const RunConfig& c) { return std::to_string(c.*part.*member); }};
}

template <class T>
Field real_field(T RunConfig::*part, double T::*member, const char* key) {
    return {[=](RunConfig& c, const std::string& v, const fs::path&) { c.*part.*member = to_real(key, v); },
            [=](const RunConfig& c) { return real_str(c.*part.*member); }};
}

Field path_field(fs::path RunPaths::*member) {
    return {[=](RunConfig& c, const std::string& v, const fs::path& base) {
                fs::path p(v);
                c.paths.*member = (v.empty() || p.is_absolute() || base.empty()) ? p : base / p;
            },
            [=](const RunConfig& c) { return (c.paths.*member).string(); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = [] {
        std::vector<std::pair<std::string, Field>> t;
        const auto M = &RunConfig::model;
        t.emplace_back("model.layers", size_field(M, &ModelConfig::layers, "model.layers"));
        t.emplace_back("model.hidden", size_field(M, &ModelConfig::hidden, "model.hidden"));
        t.emplace_back("model.heads", size_field(M, &ModelConfig::heads, "model.heads"));
        t.emplace_back("model.ff", size_field(M, &ModelConfig::ff, "model.ff"));
        t.emplace_back("model.vocab", size_field(M, &ModelConfig::vocab, "model.vocab"));
        t.emplace_back("model.max_len", size_field(M, &ModelConfig::max_len, "model.max_len"));
        t.emplace_back("model.type_vocab", size_field(M, &ModelConfig::type_vocab, "model.type_vocab"));
        t.emplace_back("model.dropout", real_field(M, &ModelConfig::dropout, "model.dropout"));
        t.emplace_back("model.init_std", real_field(M, &ModelConfig::init_std, "model.init_std"));
        const auto W = &RunConfig::weights;
        t.emplace_back("weight.mlm", real_field(W, &TaskWeights::mlm, "weight.mlm"));
        t.emplace_back("weight.nsp", real_field(W, &TaskWeights::nsp, "weight.nsp"));
        t.emplace_back("weight.cws", real_field(W, &TaskWeights::cws, "weight.cws"));
        t.emplace_back("weight.pos", real_field(W, &TaskWeights::pos, "weight.pos"));
        t.emplace_back("weight.sp1", real_field(W, &TaskWeights::sp1, "weight.sp1"));
        t.emplace_back("weight.sp2", real_field(W, &TaskWeights::sp2, "weight.sp2"));
        const auto T = &RunConfig::train;
        t.emplace_back("train.phase",
                       Field{[](RunConfig& c, const std::string& v, const fs::path&) {
                                 if (v != "pretrain" && v != "finetune") {
                                     throw UsageError("'train.phase' must be pretrain or finetune, got '" + v + "'");
                                 }
                                 c.train.phase = v;
                             },
                             [](const RunConfig& c) { return c.train.phase; }});
        t.emplace_back("train.batch_size", size_field(T, &TrainConfig::batch_size, "train.batch_size"));
        t.emplace_back("train.steps", size_field(T, &TrainConfig::steps, "train.steps"));
        t.emplace_back("train.epochs", size_field(T, &TrainConfig::epochs, "train.epochs"));
        t.emplace_back("train.seq_len", size_field(T, &TrainConfig::seq_len, "train.seq_len"));
        t.emplace_back("train.seed",
                       Field{[](RunConfig& c, const std::string& v, const fs::path&) {
                                 c.train.seed = to_size("train.seed", v);
                             },
                             [](const RunConfig& c) { return std::to_string(c.train.seed); }});
        t.emplace_back("train.lr", real_field(T, &TrainConfig::lr, "train.lr"));
        t.emplace_back("train.weight_decay", real_field(T, &TrainConfig::weight_decay, "train.weight_decay"));
        t.emplace_back("train.warmup_frac", real_field(T, &TrainConfig::warmup_frac, "train.warmup_frac"));
        t.emplace_back("train.clip_norm", real_field(T, &TrainConfig::clip_norm, "train.clip_norm"));
        t.emplace_back("train.mask_rate", real_field(T, &TrainConfig::mask_rate, "train.mask_rate"));
        t.emplace_back("train.is_next_prob", real_field(T, &TrainConfig::is_next_prob, "train.is_next_prob"));
        t.emplace_back("train.min_count", size_field(T, &TrainConfig::min_count, "train.min_count"));
        t.emplace_back("train.patience", size_field(T, &TrainConfig::patience, "train.patience"));
        t.emplace_back("train.eval_every", size_field(T, &TrainConfig::eval_every, "train.eval_every"));
        t.emplace_back("train.checkpoint_every",
                       size_field(T, &TrainConfig::checkpoint_every, "train.checkpoint_every"));
        t.emplace_back("train.tie_mlm",
                       Field{[](RunConfig& c, const std::string& v, const fs::path&) {
                                 c.train.tie_mlm = to_bool("train.tie_mlm", v);
                             },
                             [](const RunConfig& c) { return std::string(c.train.tie_mlm ? "true" : "false"); }});
        t.emplace_back("data.pretrain", path_field(&RunPaths::pretrain_data));
        t.emplace_back("data.ner_train", path_field(&RunPaths::ner_train));
        t.emplace_back("data.ner_dev", path_field(&RunPaths::ner_dev));
        t.emplace_back("in.checkpoint", path_field(&RunPaths::init_checkpoint));
        t.emplace_back("in.resume", path_field(&RunPaths::resume));
        t.emplace_back("out.checkpoint", path_field(&RunPaths::out_checkpoint));
        t.emplace_back("out.log", path_field(&RunPaths::out_log));
        t.emplace_back("out.metrics", path_field(&RunPaths::out_metrics));
        return t;
    }();
    return table;
}

const Field& field(const std::string& key) {
    for (const auto& [k, f] : fields()) {
        if (k == key) return f;
    }
    throw UsageError("unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::validate() const {
    ModelConfig m = model;
    if (m.vocab == 0) m.vocab = 1;
    m.validate();
    weights.validate();
    if (train.batch_size == 0) throw UsageError("train.batch_size must be positive");
    if (train.seq_len < 5) throw UsageError("train.seq_len must be at least 5");
    if (train.seq_len > model.max_len) {
        throw UsageError("train.seq_len " + std::to_string(train.seq_len) + " exceeds model.max_len " +
                         std::to_string(model.max_len));
    }
    if (!(train.lr >= 0.0)) throw UsageError("train.lr must be nonnegative");
    if (!(train.weight_decay >= 0.0)) throw UsageError("train.weight_decay must be nonnegative");
    if (!(train.warmup_frac >= 0.0 && train.warmup_frac <= 1.0)) {
        throw UsageError("train.warmup_frac must lie in [0, 1]");
    }
    if (!(train.mask_rate > 0.0 && train.mask_rate < 1.0)) throw UsageError("train.mask_rate must lie in (0, 1)");
    if (!(train.is_next_prob >= 0.0 && train.is_next_prob <= 1.0)) {
        throw UsageError("train.is_next_prob must lie in [0, 1]");
    }
    if (train.min_count == 0) throw UsageError("train.min_count must be positive");
    if (train.eval_every == 0) throw UsageError("train.eval_every must be positive");
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value,
                      const fs::path& base_dir) {
    field(key).set(config, value, base_dir);
}

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir, const std::string& source) {
    RunConfig c;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw UsageError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        try {
            set_config_value(c, key, value, base_dir);
        } catch (const UsageError& e) {
            throw UsageError(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path.parent_path(), path.string());
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& [k, f] : fields()) out.push_back(k);
    return out;
}

std::string format_run_config(const RunConfig& config) {
    std::string out;
    for (const auto& [k, f] : fields()) {
        out += k + " = " + f.get(config) + "\n";
    }
    return out;
}

}  // namespace gbert
