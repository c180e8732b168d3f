#include "trigan/nets/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace trigan {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::ostream& out, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T take(std::istream& in, const std::filesystem::path& path) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw CheckpointError("truncated checkpoint " + path.string());
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

std::uint32_t narrow32(std::size_t v) {
    if (v > 0xffffffffu) throw CheckpointError("value " + std::to_string(v) + " does not fit the checkpoint header");
    return static_cast<std::uint32_t>(v);
}

}  // namespace

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");

    const NetworkSpec& spec = net.spec();
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(spec.role));
    for (std::size_t field : {spec.image_size, spec.channels, spec.latent_dim, spec.base_width, spec.num_classes}) {
        put<std::uint32_t>(out, narrow32(field));
    }
    const auto params = net.parameters();
    const auto buffers = net.buffers();
    put<std::uint32_t>(out, narrow32(params.size() + buffers.size()));
    for (auto group : {params, buffers}) {
        for (const NamedTensor& nt : group) {
            put<std::uint32_t>(out, narrow32(nt.name.size()));
            out.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
            put<std::uint32_t>(out, narrow32(nt.tensor.rank()));
            for (std::size_t extent : nt.tensor.shape()) put<std::uint64_t>(out, extent);
            for (double v : nt.tensor.values()) put<double>(out, v);
        }
    }
    if (!out) throw CheckpointError("write failed for " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path, std::optional<Role> expected_role) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());

    char magic[sizeof(kCheckpointMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw CheckpointError(path.string() + " is not a 3NGAN1 checkpoint");
    }
    const auto role_byte = take<std::uint8_t>(in, path);
    if (role_byte > static_cast<std::uint8_t>(Role::classifier)) {
        throw CheckpointError("unknown role byte " + std::to_string(role_byte) + " in " + path.string());
    }
    NetworkSpec spec;
    spec.role = static_cast<Role>(role_byte);
    spec.image_size = take<std::uint32_t>(in, path);
    spec.channels = take<std::uint32_t>(in, path);
    spec.latent_dim = take<std::uint32_t>(in, path);
    spec.base_width = take<std::uint32_t>(in, path);
    spec.num_classes = take<std::uint32_t>(in, path);
    if (expected_role && *expected_role != spec.role) {
        throw CheckpointError(path.string() + " holds a " + std::string(role_name(spec.role)) + ", expected a " +
                              std::string(role_name(*expected_role)));
    }

    Network net = build_network(spec);
    std::map<std::string, Tensor> slots;
    for (const auto group : {net.parameters(), net.buffers()}) {
        for (const NamedTensor& nt : group) slots.emplace(nt.name, nt.tensor);
    }

    const auto count = take<std::uint32_t>(in, path);
    if (count != slots.size()) {
        throw CheckpointError(path.string() + " stores " + std::to_string(count) + " tensors, network has " +
                              std::to_string(slots.size()));
    }
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto name_len = take<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw CheckpointError("truncated checkpoint " + path.string());
        auto it = slots.find(name);
        if (it == slots.end()) throw CheckpointError("unexpected tensor '" + name + "' in " + path.string());
        const auto rank = take<std::uint32_t>(in, path);
        Shape shape;
        for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(take<std::uint64_t>(in, path));
        Tensor target = it->second;
        if (shape != target.shape()) {
            throw CheckpointError("tensor '" + name + "' has shape " + shape_string(shape) + ", expected " +
                                  shape_string(target.shape()));
        }
        for (double& v : target.values()) v = take<double>(in, path);
        slots.erase(it);
    }
    return net;
}

}  // namespace trigan
