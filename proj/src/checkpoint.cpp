#include "gbert/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gbert/errors.hpp"

namespace gbert {

namespace {

constexpr char kMagic[4] = {'G', 'B', 'R', 'T'};

std::uint64_t fnv1a(const unsigned char* p, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Writer {
public:
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out.insert(out.end(), s.begin(), s.end());
    }
    std::vector<unsigned char> out;

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
};

class Reader {
public:
    Reader(const std::vector<unsigned char>& b, std::size_t end, std::string source)
        : b_(b), end_(end), source_(std::move(source)) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    double f64() { return std::bit_cast<double>(le(8)); }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_),
                      b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }
    void need(std::uint64_t n) const {
        if (n > end_ - pos_) fail("truncated");
    }
    std::size_t pos() const { return pos_; }
    [[noreturn]] void fail(const std::string& what) const {
        throw DataError(source_ + ": byte " + std::to_string(pos_) + ": " + what);
    }

private:
    std::uint64_t le(int n) {
        need(static_cast<std::uint64_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    const std::vector<unsigned char>& b_;
    std::size_t end_;
    std::size_t pos_ = 0;
    std::string source_;
};

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

void Checkpoint::add_params(const ParamSet& params, const std::string& prefix) {
    for (const auto& p : params) {
        tensors.push_back({prefix + p.name, p.tensor.shape(),
                           std::vector<double>(p.tensor.values().begin(), p.tensor.values().end())});
    }
}

void Checkpoint::restore_params(const ParamSet& params, const std::string& prefix) const {
    for (const auto& p : params) {
        const NamedTensor* t = find(prefix + p.name);
        if (!t) {
            throw DataError("checkpoint has no tensor '" + prefix + p.name + "'");
        }
        if (t->shape != p.tensor.shape()) {
            throw DataError("checkpoint tensor '" + t->name + "' has shape " + t->shape.str() + ", expected " +
                            p.tensor.shape().str());
        }
        Tensor dst = p.tensor;
        std::copy(t->values.begin(), t->values.end(), dst.mutable_values().begin());
    }
}

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& ck) {
    Writer w;
    w.out.insert(w.out.end(), kMagic, kMagic + 4);
    w.u32(Checkpoint::kVersion);
    const ModelConfig& c = ck.config;
    for (std::uint64_t v : {c.layers, c.hidden, c.heads, c.ff, c.vocab, c.max_len, c.type_vocab}) w.u64(v);
    w.f64(c.dropout);
    w.f64(c.init_std);

    w.u32(static_cast<std::uint32_t>(ck.meta.size()));
    for (const auto& [k, v] : ck.meta) {
        w.str(k);
        w.u64(v);
    }
    w.u32(static_cast<std::uint32_t>(ck.tables.size()));
    for (const auto& [k, rows] : ck.tables) {
        w.str(k);
        w.u32(static_cast<std::uint32_t>(rows.size()));
        for (const auto& r : rows) w.str(r);
    }
    w.u32(static_cast<std::uint32_t>(ck.tensors.size()));
    for (const auto& t : ck.tensors) {
        if (t.values.size() != t.shape.size()) {
            throw ShapeError("checkpoint tensor '" + t.name + "' has " + std::to_string(t.values.size()) +
                             " values for shape " + t.shape.str());
        }
        w.str(t.name);
        w.u32(2);
        w.u64(t.shape.rows);
        w.u64(t.shape.cols);
        for (double v : t.values) w.f64(v);
    }
    w.u64(fnv1a(w.out.data(), w.out.size()));
    return std::move(w.out);
}

Checkpoint deserialize_checkpoint(const std::vector<unsigned char>& bytes, const std::string& source) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw DataError(source + ": not a checkpoint (bad magic)");
    }
    const std::size_t body = bytes.size() - 8;
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(bytes[body + i]) << (8 * i);
    if (stored != fnv1a(bytes.data(), body)) {
        throw DataError(source + ": checksum mismatch (file is corrupted)");
    }
    Reader r(bytes, body, source);
    r.u32();  // magic, already checked
    const std::uint32_t version = r.u32();
    if (version != Checkpoint::kVersion) {
        r.fail("unsupported version " + std::to_string(version));
    }
    Checkpoint ck;
    ModelConfig& c = ck.config;
    for (std::size_t* f : {&c.layers, &c.hidden, &c.heads, &c.ff, &c.vocab, &c.max_len, &c.type_vocab}) {
        *f = static_cast<std::size_t>(r.u64());
    }
    c.dropout = r.f64();
    c.init_std = r.f64();

    for (std::uint32_t n = r.u32(); n > 0; --n) {
        std::string k = r.str();
        ck.meta[k] = r.u64();
    }
    for (std::uint32_t n = r.u32(); n > 0; --n) {
        std::string k = r.str();
        const std::uint32_t rows = r.u32();
        auto& table = ck.tables[k];
        for (std::uint32_t i = 0; i < rows; ++i) table.push_back(r.str());
    }
    for (std::uint32_t n = r.u32(); n > 0; --n) {
        NamedTensor t;
        t.name = r.str();
        const std::uint32_t rank = r.u32();
        if (rank != 2) r.fail("tensor '" + t.name + "' has unsupported rank " + std::to_string(rank));
        t.shape.rows = static_cast<std::size_t>(r.u64());
        t.shape.cols = static_cast<std::size_t>(r.u64());
        const std::uint64_t count = static_cast<std::uint64_t>(t.shape.rows) * t.shape.cols;
        r.need(count * 8);
        t.values.resize(count);
        for (auto& v : t.values) v = r.f64();
        ck.tensors.push_back(std::move(t));
    }
    if (r.pos() != body) {
        r.fail("trailing bytes");
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    const auto bytes = serialize_checkpoint(ck);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes, path.string());
}

}  // namespace gbert
