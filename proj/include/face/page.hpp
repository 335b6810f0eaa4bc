#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <vector>

namespace face {

using PageId = std::uint64_t;
using Lsn = std::uint64_t;

// Fixed self-identifying header: bytes 0-7 page id, bytes 8-15 page LSN,
// little-endian. Recovery parses raw frames with no other context, so the
// layout never changes.
inline constexpr std::size_t kPageHeaderSize = 16;
inline constexpr std::size_t kDefaultPageSize = 4096;

struct LengthMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void store_le64(std::uint8_t *dst, std::uint64_t v) {
    for (int i = 0; i < 8; i++) {
        dst[i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
}

inline std::uint64_t load_le64(const std::uint8_t *src) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; i++) {
        v |= static_cast<std::uint64_t>(src[i]) << (8 * i);
    }
    return v;
}

// One page as moved between the DRAM buffer, the flash cache and disk.
// Serialized size is exactly the configured page size.
struct PageImage {
    PageId page_id = 0;
    Lsn page_lsn = 0;
    std::vector<std::uint8_t> body;  // page_size - kPageHeaderSize bytes

    PageImage() = default;
    PageImage(PageId id, Lsn lsn, std::size_t page_size)
        : page_id(id), page_lsn(lsn), body(page_size - kPageHeaderSize, 0) {}

    std::size_t page_size() const { return body.size() + kPageHeaderSize; }

    bool operator==(const PageImage &other) const = default;
};

inline std::vector<std::uint8_t> serialize_page(const PageImage &p) {
    std::vector<std::uint8_t> buf(p.page_size());
    store_le64(buf.data(), p.page_id);
    store_le64(buf.data() + 8, p.page_lsn);
    std::memcpy(buf.data() + kPageHeaderSize, p.body.data(), p.body.size());
    return buf;
}

inline PageImage deserialize_page(std::span<const std::uint8_t> buf, std::size_t page_size) {
    if (buf.size() != page_size) {
        throw LengthMismatch("page buffer is " + std::to_string(buf.size()) +
                             " bytes, expected " + std::to_string(page_size));
    }
    PageImage p;
    p.page_id = load_le64(buf.data());
    p.page_lsn = load_le64(buf.data() + 8);
    p.body.assign(buf.begin() + kPageHeaderSize, buf.end());
    return p;
}

// Header-only parse used by restart when scanning raw flash frames.
struct PageHeader {
    PageId page_id;
    Lsn page_lsn;
};

inline PageHeader parse_page_header(std::span<const std::uint8_t> buf) {
    if (buf.size() < kPageHeaderSize) {
        throw LengthMismatch("buffer shorter than page header");
    }
    return PageHeader{load_le64(buf.data()), load_le64(buf.data() + 8)};
}

}  // namespace face
