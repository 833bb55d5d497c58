#include "cesagan/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "cesagan/error.hpp"

CESAGAN_NAMESPACE_BEGIN
namespace ad {

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'E', 'S', 'A', 'G', 'A', 'N', 'K'};

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                   static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b.data(), 4);
}

void put_f32(std::ostream& out, Real v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw IoError("checkpoint truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

Real get_f32(std::istream& in) { return static_cast<Real>(std::bit_cast<float>(get_u32(in))); }

std::string get_string(std::istream& in) {
    const std::uint32_t n = get_u32(in);
    if (n > (1u << 28)) throw IoError("checkpoint string length implausible");
    std::string s(n, '\0');
    if (n && !in.read(s.data(), n)) throw IoError("checkpoint truncated");
    return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const CheckpointData& data) {
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, kCheckpointVersion);
    put_string(out, data.metadata);
    put_u32(out, static_cast<std::uint32_t>(data.tensors.size()));
    for (const auto& [name, t] : data.tensors) {
        put_string(out, name);
        put_u32(out, static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        for (Real v : t.data()) put_f32(out, v);
    }
    put_u32(out, static_cast<std::uint32_t>(data.stats.size()));
    for (const auto& [name, st] : data.stats) {
        put_string(out, name);
        put_u32(out, static_cast<std::uint32_t>(st.channels()));
        const char init = st.initialized ? 1 : 0;
        out.write(&init, 1);
        for (Real v : st.mean) put_f32(out, v);
        for (Real v : st.var) put_f32(out, v);
    }
    if (!out) throw IoError("checkpoint write failed");
}

CheckpointData read_checkpoint(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw IoError("not a checkpoint (bad magic)");
    const std::uint32_t version = get_u32(in);
    if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
    CheckpointData data;
    data.metadata = get_string(in);
    const std::uint32_t n_tensors = get_u32(in);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        std::string name = get_string(in);
        const std::uint32_t rank = get_u32(in);
        if (rank > 8) throw IoError("checkpoint tensor rank implausible");
        Shape shape(rank);
        for (auto& d : shape) d = get_u32(in);
        std::vector<Real> values(shape_numel(shape));
        for (auto& v : values) v = get_f32(in);
        data.tensors.push_back({std::move(name), Tensor(std::move(shape), std::move(values), true)});
    }
    const std::uint32_t n_stats = get_u32(in);
    for (std::uint32_t i = 0; i < n_stats; ++i) {
        std::string name = get_string(in);
        RunningStats st(get_u32(in));
        char init = 0;
        if (!in.read(&init, 1)) throw IoError("checkpoint truncated");
        st.initialized = init != 0;
        for (auto& v : st.mean) v = get_f32(in);
        for (auto& v : st.var) v = get_f32(in);
        data.stats.push_back({std::move(name), std::move(st)});
    }
    return data;
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointData& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    write_checkpoint(out, data);
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingCheckpoint("checkpoint not found: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

}  // namespace ad
CESAGAN_NAMESPACE_END
