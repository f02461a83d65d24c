#pragma once

// Binary artifacts for the viability result and the Q-table.
//
// Layout (little-endian): 4-byte magic, u32 version, u64 fingerprint, u64 |S|, u64 |A|,
// payload, u64 FNV-1a checksum of everything before it.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "hyshield/config.hpp"
#include "hyshield/errors.hpp"
#include "hyshield/qlearning.hpp"
#include "hyshield/viability.hpp"

namespace hyshield {

inline constexpr std::uint32_t kArtifactVersion = 1;

namespace detail {

class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.append(s); }
    template <typename T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        auto raw = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
        buf_.append(reinterpret_cast<const char*>(raw.data()), raw.size());
    }
    std::string finish() {
        put(fnv1a(buf_));
        return std::move(buf_);
    }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(std::string data, std::string_view what) : data_(std::move(data)), what_(what) {
        if (data_.size() < 8) fail("truncated");
        std::uint64_t stored = 0;
        for (int i = 7; i >= 0; --i)
            stored = (stored << 8) | static_cast<unsigned char>(data_[data_.size() - 8 + static_cast<std::size_t>(i)]);
        end_ = data_.size() - 8;
        if (fnv1a(std::string_view(data_).substr(0, end_)) != stored) fail("checksum mismatch (corrupted file)");
    }
    void expect(std::string_view magic) {
        if (end_ - pos_ < magic.size() || std::string_view(data_).substr(pos_, magic.size()) != magic)
            fail("wrong file type");
        pos_ += magic.size();
    }
    template <typename T>
    T get() {
        if (end_ - pos_ < sizeof(T)) fail("truncated");
        std::array<unsigned char, sizeof(T)> raw{};
        std::memcpy(raw.data(), data_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
        pos_ += sizeof(T);
        return std::bit_cast<T>(raw);
    }
    void done() {
        if (pos_ != end_) fail("trailing bytes");
    }
    [[noreturn]] void fail(const std::string& why) const {
        throw ArtifactMismatch(std::string(what_) + ": " + why);
    }

private:
    std::string data_;
    std::string what_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactMismatch("cannot open artifact '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

inline void check_header(ByteReader& r, std::uint64_t expected_fp, std::size_t ns, std::size_t na) {
    if (r.get<std::uint32_t>() != kArtifactVersion) r.fail("unsupported version");
    if (r.get<std::uint64_t>() != expected_fp) r.fail("fingerprint does not match the configuration");
    if (r.get<std::uint64_t>() != ns || r.get<std::uint64_t>() != na) r.fail("state/action counts differ");
}

} // namespace detail

inline std::string serialize(const ViabilityResult& v) {
    detail::ByteWriter w;
    w.bytes("HYSV");
    w.put(kArtifactVersion);
    w.put(v.fingerprint());
    w.put<std::uint64_t>(v.num_states());
    w.put<std::uint64_t>(v.num_actions());
    w.put<std::int32_t>(v.sweeps());
    for (StateId s = 0; s < v.num_states(); ++s) w.put(v.raw_mask(s).bits());
    for (StateId s = 0; s < v.num_states(); ++s)
        for (ActionId a = 0; a < v.num_actions(); ++a) w.put(v.successor(s, a));
    return w.finish();
}

/// Refuses data whose checksum, fingerprint or sizes disagree with the expectation.
inline ViabilityResult deserialize_viability(std::string bytes, std::uint64_t expected_fp, std::size_t ns,
                                             std::size_t na) {
    detail::ByteReader r(std::move(bytes), "viability artifact");
    r.expect("HYSV");
    detail::check_header(r, expected_fp, ns, na);
    const int sweeps = r.get<std::int32_t>();
    std::vector<ActionMask> masks(ns);
    for (auto& m : masks) m = ActionMask(r.get<std::uint32_t>());
    std::vector<StateId> succ(ns * na);
    for (auto& x : succ) x = r.get<StateId>();
    r.done();
    return ViabilityResult::from_parts(ns, na, std::move(masks), std::move(succ), sweeps, expected_fp);
}

inline std::string serialize(const QTable& q) {
    detail::ByteWriter w;
    w.bytes("HYSQ");
    w.put(kArtifactVersion);
    w.put(q.fingerprint);
    w.put<std::uint64_t>(q.num_states());
    w.put<std::uint64_t>(q.num_actions());
    for (double v : q.values()) w.put(v);
    for (std::uint32_t n : q.visit_counts()) w.put(n);
    return w.finish();
}

inline QTable deserialize_qtable(std::string bytes, std::uint64_t expected_fp, std::size_t ns, std::size_t na) {
    detail::ByteReader r(std::move(bytes), "Q-table artifact");
    r.expect("HYSQ");
    detail::check_header(r, expected_fp, ns, na);
    QTable q(ns, na);
    for (auto& v : q.values()) v = r.get<double>();
    for (auto& n : q.visit_counts()) n = r.get<std::uint32_t>();
    r.done();
    q.fingerprint = expected_fp;
    return q;
}

inline void save(const std::string& path, const ViabilityResult& v) { detail::write_file(path, serialize(v)); }
inline void save(const std::string& path, const QTable& q) { detail::write_file(path, serialize(q)); }

inline ViabilityResult load_viability(const std::string& path, std::uint64_t fp, std::size_t ns, std::size_t na) {
    return deserialize_viability(detail::read_file(path), fp, ns, na);
}

inline QTable load_qtable(const std::string& path, std::uint64_t fp, std::size_t ns, std::size_t na) {
    return deserialize_qtable(detail::read_file(path), fp, ns, na);
}

} // namespace hyshield
