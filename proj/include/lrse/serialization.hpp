#pragma once

// Binary container for keys, indexes and trapdoors.
//
//   offset  size  field
//   0       4     magic "LRSE"
//   4       4     format version (u32, = 1)
//   8       1     record type (1 key, 2 index, 3 trapdoor)
//   9       4     n (u32)
//   13      8     count (u64)
//   21      ...   payload
//   end-4   4     CRC-32 of the payload
//
// All integers little-endian; scalars IEEE-754 binary64 little-endian.
//   key:      count = n + 2; S as count bytes (0/1), then M1, M2 row-major
//   index:    count = #docs; per doc: doc_id (u64), M1^T D' then M2^T D''
//   trapdoor: count = 1; M1^-1 Q' then M2^-1 Q''

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/crc.hpp>

#include "lrse/query_engine.hpp"
#include "lrse/scheme.hpp"

namespace lrse::io {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint8_t kMagic[4] = {'L', 'R', 'S', 'E'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderSize = 21;
inline constexpr std::size_t kTrailerSize = 4;

enum class RecordType : std::uint8_t { key = 1, index = 2, trapdoor = 3 };

enum class FormatErrorKind {
    bad_magic,
    version_mismatch,
    wrong_record_type,
    truncated,
    dimension_mismatch,
    checksum_mismatch,
    invalid_value,
};

class FormatError : public std::runtime_error {
public:
    FormatError(FormatErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    FormatErrorKind kind() const noexcept { return kind_; }

private:
    FormatErrorKind kind_;
};

inline std::uint32_t crc32(std::span<const std::uint8_t> data) {
    boost::crc_32_type crc;
    crc.process_bytes(data.data(), data.size());
    return crc.checksum();
}

namespace detail {

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    template <typename Derived>
    void scalars(const Eigen::DenseBase<Derived>& m) {
        // Row-major traversal regardless of storage order.
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
    }
    std::size_t size() const noexcept { return out_.size(); }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
    std::uint8_t u8() { return in_[pos_++]; }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
        return v;
    }
    double f64() {
        const double v = std::bit_cast<double>(u64());
        if (!std::isfinite(v)) throw FormatError(FormatErrorKind::invalid_value, "non-finite scalar in payload");
        return v;
    }
    void vector(Vector& v, std::size_t len) {
        v.resize(static_cast<Eigen::Index>(len));
        for (std::size_t i = 0; i < len; ++i) v[static_cast<Eigen::Index>(i)] = f64();
    }
    void matrix(Matrix& m, std::size_t d) {
        const auto di = static_cast<Eigen::Index>(d);
        m.resize(di, di);
        for (Eigen::Index i = 0; i < di; ++i)
            for (Eigen::Index j = 0; j < di; ++j) m(i, j) = f64();
    }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

inline void begin(Writer& w, RecordType type, std::size_t n, std::uint64_t count) {
    if (n > 0xffffffffULL) throw FormatError(FormatErrorKind::dimension_mismatch, "n does not fit in u32");
    for (auto b : kMagic) w.u8(b);
    w.u32(kFormatVersion);
    w.u8(static_cast<std::uint8_t>(type));
    w.u32(static_cast<std::uint32_t>(n));
    w.u64(count);
}

inline Bytes finish(Writer& w) {
    Bytes out = w.take();
    const auto crc = crc32(std::span<const std::uint8_t>(out).subspan(kHeaderSize));
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
    return out;
}

inline const char* record_name(RecordType t) {
    switch (t) {
        case RecordType::key: return "key";
        case RecordType::index: return "index";
        case RecordType::trapdoor: return "trapdoor";
    }
    return "unknown";
}

struct Header {
    std::size_t n = 0;
    std::uint64_t count = 0;
};

/// Validates framing and checksum; returns the header and a view of the payload.
/// `payload_size(n, count)` gives the expected payload length, or nullopt when
/// n and count are inconsistent or the length overflows.
template <typename SizeFn>
inline std::pair<Header, std::span<const std::uint8_t>> open(std::span<const std::uint8_t> bytes, RecordType expected,
                                                              SizeFn payload_size) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError(FormatErrorKind::bad_magic, "not an LRSE container (bad magic)");
    }
    if (bytes.size() < kHeaderSize + kTrailerSize) throw FormatError(FormatErrorKind::truncated, "truncated header");
    Reader r(bytes);
    r.u32();  // magic
    const auto version = r.u32();
    if (version != kFormatVersion) {
        throw FormatError(FormatErrorKind::version_mismatch, "unsupported format version " + std::to_string(version));
    }
    const auto type = r.u8();
    if (type != static_cast<std::uint8_t>(expected)) {
        throw FormatError(FormatErrorKind::wrong_record_type, std::string("expected a ") + record_name(expected) +
                                                                  " record, found type " + std::to_string(type));
    }
    Header h;
    h.n = r.u32();
    h.count = r.u64();
    if (h.n < 1) throw FormatError(FormatErrorKind::dimension_mismatch, "n must be >= 1");

    const std::optional<std::size_t> want = payload_size(h.n, h.count);
    const std::size_t have = bytes.size() - kHeaderSize - kTrailerSize;
    if (!want || have > *want) {
        throw FormatError(FormatErrorKind::dimension_mismatch,
                          "payload length " + std::to_string(have) + " inconsistent with n and count");
    }
    if (have < *want) {
        throw FormatError(FormatErrorKind::truncated,
                          "truncated payload: " + std::to_string(have) + " of " + std::to_string(*want) + " bytes");
    }
    const auto payload = bytes.subspan(kHeaderSize, have);
    Reader trailer(bytes.subspan(kHeaderSize + have));
    if (trailer.u32() != crc32(payload)) {
        throw FormatError(FormatErrorKind::checksum_mismatch, "CRC-32 mismatch: payload is corrupt");
    }
    return {h, payload};
}

using Size = std::optional<std::size_t>;

inline Size mul(Size a, Size b) {
    std::size_t out = 0;
    if (!a || !b || __builtin_mul_overflow(*a, *b, &out)) return std::nullopt;
    return out;
}

inline Size add(Size a, Size b) {
    std::size_t out = 0;
    if (!a || !b || __builtin_add_overflow(*a, *b, &out)) return std::nullopt;
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline Bytes serialize_key(const SecretKey& key) {
    const auto d = key.order();
    detail::Writer w;
    detail::begin(w, RecordType::key, key.n, d);
    for (auto s : key.split_indicator) w.u8(s);
    w.scalars(key.m1);
    w.scalars(key.m2);
    return detail::finish(w);
}

inline SecretKey deserialize_key(std::span<const std::uint8_t> bytes) {
    auto [h, payload] = detail::open(bytes, RecordType::key, [](std::size_t n, std::uint64_t count) -> detail::Size {
        const std::size_t d = n + 2;
        if (count != d) return std::nullopt;
        return detail::add(d, detail::mul(2 * 8, detail::mul(d, d)));
    });
    const std::size_t d = h.n + 2;
    detail::Reader r(payload);
    std::vector<std::uint8_t> s(d);
    for (auto& bit : s) {
        bit = r.u8();
        if (bit > 1) throw FormatError(FormatErrorKind::invalid_value, "split indicator byte is not 0/1");
    }
    Matrix m1, m2;
    r.matrix(m1, d);
    r.matrix(m2, d);
    try {
        return make_key(std::move(s), std::move(m1), std::move(m2));
    } catch (const std::exception& e) {
        throw FormatError(FormatErrorKind::invalid_value, std::string("key matrices unusable: ") + e.what());
    }
}

inline Bytes serialize_index(const IndexStore& index) {
    detail::Writer w;
    detail::begin(w, RecordType::index, index.dimension(), index.size());
    for (const auto& sub : index.entries()) {
        w.u64(sub.doc_id);
        w.scalars(sub.a.transpose());
        w.scalars(sub.b.transpose());
    }
    return detail::finish(w);
}

inline IndexStore deserialize_index(std::span<const std::uint8_t> bytes) {
    auto [h, payload] = detail::open(bytes, RecordType::index, [](std::size_t n, std::uint64_t count) -> detail::Size {
        return detail::mul(8 + 2 * 8 * (n + 2), static_cast<std::size_t>(count));
    });
    const std::size_t d = h.n + 2;
    IndexStore index(h.n);
    detail::Reader r(payload);
    for (std::uint64_t i = 0; i < h.count; ++i) {
        EncryptedSubindex sub;
        sub.doc_id = r.u64();
        r.vector(sub.a, d);
        r.vector(sub.b, d);
        try {
            index.add(std::move(sub));
        } catch (const SchemeError& e) {
            throw FormatError(FormatErrorKind::invalid_value, e.what());
        }
    }
    return index;
}

inline Bytes serialize_trapdoor(const Trapdoor& td) {
    if (td.p.size() != td.q.size() || td.p.size() < 3) {
        throw FormatError(FormatErrorKind::dimension_mismatch, "trapdoor halves must share a length >= 3");
    }
    detail::Writer w;
    detail::begin(w, RecordType::trapdoor, static_cast<std::size_t>(td.p.size()) - 2, 1);
    w.scalars(td.p.transpose());
    w.scalars(td.q.transpose());
    return detail::finish(w);
}

inline Trapdoor deserialize_trapdoor(std::span<const std::uint8_t> bytes) {
    auto [h, payload] = detail::open(bytes, RecordType::trapdoor, [](std::size_t n, std::uint64_t count) -> detail::Size {
        if (count != 1) return std::nullopt;
        return 2 * 8 * (n + 2);
    });
    Trapdoor td;
    detail::Reader r(payload);
    r.vector(td.p, h.n + 2);
    r.vector(td.q, h.n + 2);
    return td;
}

// ---------------------------------------------------------------------------
// Files

inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline Bytes read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Payload references live next to the index as "<doc_id>\t<reference>" lines.
inline std::filesystem::path payload_sidecar(const std::filesystem::path& index_path) {
    auto p = index_path;
    p += ".payloads";
    return p;
}

inline void write_payload_refs(const std::filesystem::path& path, const IndexStore& index) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& [id, ref] : index.payloads()) out << id << '\t' << ref << '\n';
}

inline void read_payload_refs(const std::filesystem::path& path, IndexStore& index) {
    std::ifstream in(path);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) continue;
        index.set_payload(std::stoull(line.substr(0, tab)), line.substr(tab + 1));
    }
}

}  // namespace lrse::io
