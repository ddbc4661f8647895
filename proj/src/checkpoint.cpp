#include "cvc/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "cvc/errors.hpp"

namespace cvc {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <typename T>
void write_raw(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const char* what) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw CorruptFile(std::string("checkpoint truncated while reading ") + what);
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const char* what) {
    auto len = read_raw<std::uint32_t>(in, what);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw CorruptFile(std::string("checkpoint truncated while reading ") + what);
    return s;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const CheckpointHeader& header) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open checkpoint for writing: " + path.string());
    out.write("CVCP", 4);
    write_raw<std::uint32_t>(out, 1);
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
    for (const auto& [k, v] : header) {
        write_string(out, k);
        write_string(out, v);
    }
    auto names = store.names();
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(names.size()));
    for (const auto& name : names) {
        const Tensor& t = store.value(name);
        write_string(out, name);
        write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) write_raw<std::uint64_t>(out, d);
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!out) throw IoFailure("failed writing checkpoint: " + path.string());
}

CheckpointHeader load_checkpoint(const std::filesystem::path& path, ParameterStore& store) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open checkpoint: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "CVCP", 4) != 0) {
        throw CorruptFile("bad checkpoint magic: " + path.string());
    }
    auto version = read_raw<std::uint32_t>(in, "version");
    if (version != 1) throw CorruptFile("unsupported checkpoint version");
    CheckpointHeader header;
    auto header_count = read_raw<std::uint32_t>(in, "header count");
    for (std::uint32_t i = 0; i < header_count; ++i) {
        std::string k = read_string(in, "header key");
        std::string v = read_string(in, "header value");
        header[k] = v;
    }
    auto param_count = read_raw<std::uint32_t>(in, "parameter count");
    for (std::uint32_t i = 0; i < param_count; ++i) {
        std::string name = read_string(in, "parameter name");
        auto rank = read_raw<std::uint32_t>(in, "parameter rank");
        if (rank > 8) throw CorruptFile("implausible parameter rank");
        std::vector<std::size_t> shape(rank);
        std::size_t count = 1;
        for (auto& d : shape) {
            d = static_cast<std::size_t>(read_raw<std::uint64_t>(in, "parameter dim"));
            count *= d;
        }
        Tensor& t = store.create(name, shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        if (!in) throw CorruptFile("checkpoint truncated inside parameter data");
    }
    // trailing garbage means the writer and reader disagree about layout
    in.peek();
    if (!in.eof()) throw CorruptFile("trailing bytes after last parameter");
    return header;
}

} // namespace cvc
