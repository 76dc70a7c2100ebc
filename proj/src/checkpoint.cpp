#include "mrecnn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace mrecnn {

namespace {

constexpr char kMagic[4] = {'M', 'R', 'E', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw CheckpointError(CheckpointFault::io, "cannot open \"" + path + "\" for writing");
    }
    void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 4);
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 8);
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void finish(const std::string& path) {
        out_.flush();
        if (!out_) throw CheckpointError(CheckpointFault::io, "write to \"" + path + "\" failed");
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw CheckpointError(CheckpointFault::io, "cannot open \"" + path + "\" for reading");
    }
    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw CheckpointError(CheckpointFault::truncated, "checkpoint payload is truncated");
        }
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint32_t len = u32();
        if (len > (1u << 20)) {
            throw CheckpointError(CheckpointFault::shape_mismatch, "implausible name length in checkpoint");
        }
        std::string s(len, '\0');
        bytes(s.data(), len);
        return s;
    }
    bool at_eof() {
        in_.peek();
        return in_.eof();
    }

private:
    std::ifstream in_;
};

void write_buffer(Writer& w, const std::string& name, const Tensor& t) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (int e : t.shape()) w.u32(static_cast<std::uint32_t>(e));
    for (std::size_t i = 0; i < t.numel(); ++i) w.f32(t[i]);
}

void read_buffer_into(Reader& r, const std::string& expect_name, Tensor& t) {
    const std::string name = r.str();
    if (name != expect_name) {
        throw CheckpointError(CheckpointFault::shape_mismatch,
                              "checkpoint buffer \"" + name + "\" does not match expected \"" +
                                  expect_name + "\"");
    }
    const std::uint32_t rank = r.u32();
    std::vector<int> shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int>(r.u32()));
    if (shape != t.shape()) {
        throw CheckpointError(CheckpointFault::shape_mismatch,
                              "checkpoint buffer \"" + name + "\" has shape " + shape_str(shape) +
                                  ", expected " + shape_str(t.shape()));
    }
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = r.f32();
}

} // namespace

void save_checkpoint(const SubNetwork& net, const OptimizerState& opt, const std::string& path) {
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kVersion);

    const ArchSpec& spec = net.spec();
    w.u32(spec.family == ArchFamily::vgg16 ? 0 : 1);
    w.u32(static_cast<std::uint32_t>(spec.input_size));
    w.f64(spec.channel_scale);
    w.u32(static_cast<std::uint32_t>(spec.fc_widths.size()));
    for (int v : spec.fc_widths) w.u32(static_cast<std::uint32_t>(v));
    w.u32(static_cast<std::uint32_t>(spec.num_classes));
    w.u32(static_cast<std::uint32_t>(net.region()));

    w.f64(opt.base_lr);
    w.f64(opt.momentum);
    w.f64(opt.weight_decay);
    w.u64(static_cast<std::uint64_t>(opt.total_iterations));
    w.u64(static_cast<std::uint64_t>(opt.iteration));

    const auto& buffers = net.buffers();
    if (opt.velocity.size() != buffers.size()) {
        throw CheckpointError(CheckpointFault::shape_mismatch,
                              "optimizer velocity buffers do not match the network");
    }
    w.u32(static_cast<std::uint32_t>(2 * buffers.size()));
    for (const auto& buf : buffers) write_buffer(w, buf.name, buf.value);
    for (std::size_t i = 0; i < buffers.size(); ++i) {
        write_buffer(w, buffers[i].name + "#v", opt.velocity[i]);
    }
    w.finish(path);
}

std::pair<SubNetwork, OptimizerState> load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw CheckpointError(CheckpointFault::bad_magic, "\"" + path + "\" is not a checkpoint (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw CheckpointError(CheckpointFault::bad_version,
                              "unsupported checkpoint version " + std::to_string(version));
    }

    ArchSpec spec;
    const std::uint32_t family = r.u32();
    if (family > 1) {
        throw CheckpointError(CheckpointFault::shape_mismatch, "unknown arch family id in checkpoint");
    }
    spec.family = family == 0 ? ArchFamily::vgg16 : ArchFamily::alexnet;
    spec.input_size = static_cast<int>(r.u32());
    spec.channel_scale = r.f64();
    const std::uint32_t fc_count = r.u32();
    if (fc_count > 64) {
        throw CheckpointError(CheckpointFault::shape_mismatch, "implausible fc layer count in checkpoint");
    }
    spec.fc_widths.clear();
    for (std::uint32_t i = 0; i < fc_count; ++i) spec.fc_widths.push_back(static_cast<int>(r.u32()));
    spec.num_classes = static_cast<int>(r.u32());
    const std::uint32_t region_id = r.u32();
    if (region_id > 2) {
        throw CheckpointError(CheckpointFault::shape_mismatch, "unknown region id in checkpoint");
    }

    SubNetwork net = [&] {
        try {
            return SubNetwork::build(spec, static_cast<Region>(region_id), 0);
        } catch (const std::invalid_argument& e) {
            throw CheckpointError(CheckpointFault::shape_mismatch,
                                  std::string("checkpoint arch fields are inconsistent: ") + e.what());
        }
    }();
    OptimizerState opt = OptimizerState::init(net, 1.0, 0.0, 0.0, 0);
    opt.base_lr = r.f64();
    opt.momentum = r.f64();
    opt.weight_decay = r.f64();
    opt.total_iterations = static_cast<long long>(r.u64());
    opt.iteration = static_cast<long long>(r.u64());

    const std::uint32_t buffer_count = r.u32();
    auto& buffers = net.buffers();
    if (buffer_count != 2 * buffers.size()) {
        throw CheckpointError(CheckpointFault::shape_mismatch,
                              "checkpoint holds " + std::to_string(buffer_count) + " buffers, expected " +
                                  std::to_string(2 * buffers.size()));
    }
    for (auto& buf : buffers) read_buffer_into(r, buf.name, buf.value);
    for (std::size_t i = 0; i < buffers.size(); ++i) {
        read_buffer_into(r, buffers[i].name + "#v", opt.velocity[i]);
    }
    if (!r.at_eof()) {
        throw CheckpointError(CheckpointFault::shape_mismatch, "trailing bytes after checkpoint payload");
    }
    return {std::move(net), std::move(opt)};
}

} // namespace mrecnn
