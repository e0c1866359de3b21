#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "poe/common.hpp"
#include "poe/panel.hpp"

namespace poe {

// File layout (little-endian throughout):
//   "POE1" magic, u32 version,
//   config: eight i64 fields + f64 init range,
//   domain name list, vocab token list (u32 count, length-prefixed strings),
//   tensor table: u32 count, per tensor name + u32 rank + i64 dims + raw f64 payload.
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}

inline void put_u32(std::string& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    }
    put_bytes(out, b, 4);
}

inline void put_u64(std::string& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    }
    put_bytes(out, b, 8);
}

inline void put_i64(std::string& out, std::int64_t v) { put_u64(out, static_cast<std::uint64_t>(v)); }

inline void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

inline void put_string(std::string& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    put_bytes(out, s.data(), s.size());
}

class ByteReader {
public:
    explicit ByteReader(std::string data) : data_(std::move(data)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(byte()) << (8 * i);
        }
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(byte()) << (8 * i);
        }
        return v;
    }

    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(data_.data() + pos_, n);
        pos_ += n;
        return s;
    }

    std::string raw(std::size_t n) {
        need(n);
        std::string s(data_.data() + pos_, n);
        pos_ += n;
        return s;
    }

    bool exhausted() const { return pos_ == data_.size(); }

private:
    unsigned char byte() { return static_cast<unsigned char>(data_[pos_++]); }

    void need(std::size_t n) {
        require(pos_ + n <= data_.size(), ErrorKind::checkpoint, "checkpoint: truncated file");
    }

    std::string data_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline void save_checkpoint(const PanelModel& model, const std::string& path) {
    model.config.validate();
    require(model.config.vocab_size == model.vocab.size(), ErrorKind::checkpoint,
            "checkpoint: config vocab size disagrees with vocab");
    require(model.config.domains == static_cast<std::int64_t>(model.domain_names.size()),
            ErrorKind::checkpoint, "checkpoint: config domain count disagrees with domain names");

    std::string out;
    out.append("POE1");
    detail::put_u32(out, kCheckpointVersion);
    const PanelConfig& c = model.config;
    detail::put_i64(out, c.layers);
    detail::put_i64(out, c.hidden);
    detail::put_i64(out, c.heads);
    detail::put_i64(out, c.ffn);
    detail::put_i64(out, c.bottleneck);
    detail::put_i64(out, c.domains);
    detail::put_i64(out, c.max_len);
    detail::put_i64(out, c.vocab_size);
    detail::put_f64(out, c.init_range);

    detail::put_u32(out, static_cast<std::uint32_t>(model.domain_names.size()));
    for (const std::string& name : model.domain_names) {
        detail::put_string(out, name);
    }
    detail::put_u32(out, static_cast<std::uint32_t>(model.vocab.tokens().size()));
    for (const std::string& token : model.vocab.tokens()) {
        detail::put_string(out, token);
    }

    const auto shapes = param_shapes(c);
    require(shapes.size() == model.params.size(), ErrorKind::checkpoint,
            "checkpoint: parameter table size mismatch");
    detail::put_u32(out, static_cast<std::uint32_t>(shapes.size()));
    for (const auto& [name, shape] : shapes) {
        auto it = model.params.find(name);
        require(it != model.params.end(), ErrorKind::checkpoint, "checkpoint: missing parameter '" + name + "'");
        const Tensor& t = it->second;
        require(t.shape() == shape, ErrorKind::checkpoint, "checkpoint: bad shape for '" + name + "'");
        detail::put_string(out, name);
        detail::put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
        for (std::int64_t dim : t.shape()) {
            detail::put_i64(out, dim);
        }
        for (double v : t.data()) {
            detail::put_f64(out, v);
        }
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    require(file.good(), ErrorKind::checkpoint, "checkpoint: cannot open '" + path + "' for writing");
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    require(file.good(), ErrorKind::checkpoint, "checkpoint: write failed for '" + path + "'");
}

inline PanelModel load_checkpoint(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    require(file.good(), ErrorKind::checkpoint, "checkpoint: cannot open '" + path + "'");
    std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    detail::ByteReader reader(std::move(data));

    require(reader.raw(4) == "POE1", ErrorKind::checkpoint, "checkpoint: bad magic");
    const std::uint32_t version = reader.u32();
    require(version == kCheckpointVersion, ErrorKind::checkpoint,
            "checkpoint: unsupported version " + std::to_string(version));

    PanelModel model;
    PanelConfig& c = model.config;
    c.layers = reader.i64();
    c.hidden = reader.i64();
    c.heads = reader.i64();
    c.ffn = reader.i64();
    c.bottleneck = reader.i64();
    c.domains = reader.i64();
    c.max_len = reader.i64();
    c.vocab_size = reader.i64();
    c.init_range = reader.f64();
    c.validate();

    const std::uint32_t domain_count = reader.u32();
    require(domain_count == static_cast<std::uint32_t>(c.domains), ErrorKind::checkpoint,
            "checkpoint: domain name count disagrees with config");
    for (std::uint32_t i = 0; i < domain_count; ++i) {
        model.domain_names.push_back(reader.str());
    }

    const std::uint32_t vocab_count = reader.u32();
    require(vocab_count == static_cast<std::uint32_t>(c.vocab_size), ErrorKind::checkpoint,
            "checkpoint: vocab count disagrees with config");
    std::vector<std::string> tokens;
    tokens.reserve(vocab_count);
    for (std::uint32_t i = 0; i < vocab_count; ++i) {
        tokens.push_back(reader.str());
    }
    model.vocab = Vocab::from_tokens(tokens);

    const auto shapes = param_shapes(c);
    const std::uint32_t tensor_count = reader.u32();
    require(tensor_count == static_cast<std::uint32_t>(shapes.size()), ErrorKind::checkpoint,
            "checkpoint: tensor count disagrees with config");
    for (const auto& [expected_name, expected_shape] : shapes) {
        const std::string name = reader.str();
        require(name == expected_name, ErrorKind::checkpoint,
                "checkpoint: unexpected tensor '" + name + "', wanted '" + expected_name + "'");
        const std::uint32_t rank = reader.u32();
        require(rank == expected_shape.size(), ErrorKind::checkpoint,
                "checkpoint: bad rank for '" + name + "'");
        std::vector<std::int64_t> shape;
        for (std::uint32_t r = 0; r < rank; ++r) {
            shape.push_back(reader.i64());
        }
        require(shape == expected_shape, ErrorKind::checkpoint, "checkpoint: bad shape for '" + name + "'");
        Tensor t(shape);
        for (double& v : t.data()) {
            v = reader.f64();
        }
        model.params.emplace(name, std::move(t));
    }
    require(reader.exhausted(), ErrorKind::checkpoint, "checkpoint: trailing bytes");
    return model;
}

}  // namespace poe
