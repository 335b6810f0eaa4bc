#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "face/device_model.hpp"
#include "face/page.hpp"

namespace face {

struct CorruptSuperBlock : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One directory record per page entering the flash cache, in enqueue order.
// Fixed 24-byte on-media layout, little-endian:
//   0..7  page_id   8..11 frame_index (queue slot)
//   12..15 flags (bit 0 = dirty)      16..23 lsn
struct MetadataEntry {
    PageId page_id = 0;
    std::uint32_t frame_index = 0;
    bool dirty = false;
    Lsn lsn = 0;

    bool operator==(const MetadataEntry &) const = default;
};

inline constexpr std::size_t kMetadataEntrySize = 24;
inline constexpr std::uint64_t kDefaultSegmentCapacity = 64000;

inline void encode_entry(const MetadataEntry &e, std::uint8_t *dst) {
    store_le64(dst, e.page_id);
    std::uint32_t fi = e.frame_index;
    std::uint32_t flags = e.dirty ? 1u : 0u;
    for (int i = 0; i < 4; i++) dst[8 + i] = static_cast<std::uint8_t>(fi >> (8 * i));
    for (int i = 0; i < 4; i++) dst[12 + i] = static_cast<std::uint8_t>(flags >> (8 * i));
    store_le64(dst + 16, e.lsn);
}

inline MetadataEntry decode_entry(const std::uint8_t *src) {
    MetadataEntry e;
    e.page_id = load_le64(src);
    std::uint32_t fi = 0, flags = 0;
    for (int i = 0; i < 4; i++) fi |= static_cast<std::uint32_t>(src[8 + i]) << (8 * i);
    for (int i = 0; i < 4; i++) flags |= static_cast<std::uint32_t>(src[12 + i]) << (8 * i);
    e.frame_index = fi;
    e.dirty = (flags & 1u) != 0;
    e.lsn = load_le64(src + 16);
    return e;
}

// Persistent queue state, rewritten (alternating between two slots) after
// every segment flush and on clean shutdown. front/rear are monotone
// counters; the physical slot is counter mod capacity.
struct SuperBlock {
    std::uint64_t seq_no = 0;
    std::uint64_t page_size = 0;
    std::uint64_t capacity_frames = 0;
    std::uint64_t segment_capacity = 0;
    std::uint64_t scan_depth = 0;
    std::uint64_t front = 0;
    std::uint64_t rear = 0;
    std::uint64_t persisted_entries = 0;
};

inline constexpr std::uint64_t kSuperBlockMagic = 0x46614345'4d455431ull;  // "FaCEMET1"
inline constexpr std::size_t kSuperBlockSlotSize = 512;
inline constexpr std::size_t kSegmentRegionOffset = 2 * kSuperBlockSlotSize;
inline constexpr std::size_t kSuperBlockEncodedSize = 80;

inline std::vector<std::uint8_t> encode_superblock(const SuperBlock &sb) {
    std::vector<std::uint8_t> buf(kSuperBlockSlotSize, 0);
    store_le64(buf.data(), kSuperBlockMagic);
    store_le64(buf.data() + 8, sb.seq_no);
    store_le64(buf.data() + 16, sb.page_size);
    store_le64(buf.data() + 24, sb.capacity_frames);
    store_le64(buf.data() + 32, sb.segment_capacity);
    store_le64(buf.data() + 40, sb.scan_depth);
    store_le64(buf.data() + 48, sb.front);
    store_le64(buf.data() + 56, sb.rear);
    store_le64(buf.data() + 64, sb.persisted_entries);
    return buf;
}

inline std::optional<SuperBlock> decode_superblock(const std::uint8_t *src) {
    if (load_le64(src) != kSuperBlockMagic) return std::nullopt;
    SuperBlock sb;
    sb.seq_no = load_le64(src + 8);
    sb.page_size = load_le64(src + 16);
    sb.capacity_frames = load_le64(src + 24);
    sb.segment_capacity = load_le64(src + 32);
    sb.scan_depth = load_le64(src + 40);
    sb.front = load_le64(src + 48);
    sb.rear = load_le64(src + 56);
    sb.persisted_entries = load_le64(src + 64);
    return sb;
}

// Raw byte-addressed file shared by the superblock slots and the segment log.
class MetaFile {
public:
    MetaFile() = default;
    MetaFile(std::filesystem::path path, bool truncate) : path_(std::move(path)) {
        namespace fs = std::filesystem;
        if (truncate || !fs::exists(path_)) {
            std::ofstream create(path_, std::ios::binary | std::ios::trunc);
            if (!create) throw std::runtime_error("cannot create " + path_.string());
        }
        file_.open(path_, std::ios::binary | std::ios::in | std::ios::out);
        if (!file_) throw std::runtime_error("cannot open " + path_.string());
    }

    void write_at(std::uint64_t offset, const std::uint8_t *data, std::size_t len) {
        ensure_size(offset + len);
        file_.seekp(static_cast<std::streamoff>(offset));
        file_.write(reinterpret_cast<const char *>(data), static_cast<std::streamsize>(len));
        if (!file_) throw std::runtime_error("meta write failed: " + path_.string());
    }

    std::vector<std::uint8_t> read_at(std::uint64_t offset, std::size_t len) {
        std::vector<std::uint8_t> buf(len, 0);
        std::uint64_t size = file_size();
        if (offset >= size) return buf;
        std::size_t avail = static_cast<std::size_t>(std::min<std::uint64_t>(len, size - offset));
        file_.seekg(static_cast<std::streamoff>(offset));
        file_.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(avail));
        if (!file_) throw std::runtime_error("meta read failed: " + path_.string());
        return buf;
    }

    std::uint64_t file_size() {
        file_.flush();
        return std::filesystem::file_size(path_);
    }

    void flush() { file_.flush(); }
    const std::filesystem::path &path() const { return path_; }

private:
    void ensure_size(std::uint64_t at_least) {
        file_.flush();
        if (std::filesystem::file_size(path_) < at_least) {
            std::filesystem::resize_file(path_, at_least);
        }
    }

    std::filesystem::path path_;
    std::fstream file_;
};

struct MetadataConfig {
    std::size_t page_size = kDefaultPageSize;
    std::uint64_t capacity_frames = 0;
    std::uint64_t segment_capacity = kDefaultSegmentCapacity;
    std::uint64_t scan_depth = 64;
};

// Append-only metadata directory over the segment log in flash.meta.
// Entries collect in the in-memory current segment and are flushed as one
// sequential write when the segment fills; the superblock is rewritten after
// each flush. The engine is never quiesced: the crash model may drop the
// latest superblock to simulate a flush that was still in flight.
class MetadataDirectory {
public:
    MetadataDirectory(std::filesystem::path path, MetadataConfig cfg, CostAccumulator &acc,
                      bool truncate)
        : cfg_(cfg), file_(std::move(path), truncate), acc_(&acc) {
        if (truncate) {
            write_superblock();
        }
    }

    // Called exactly once per flash enqueue, in enqueue order.
    void append(const MetadataEntry &e) {
        current_.push_back(e);
        total_ = segment_base_ + current_.size();
        if (current_.size() == cfg_.segment_capacity) {
            flush_segment(cfg_.segment_capacity);
            segment_base_ += cfg_.segment_capacity;
            current_.clear();
        }
    }

    // Final flush of the partial current segment (clean shutdown only).
    void shutdown_flush() {
        if (persisted_ < total_) {
            flush_segment(current_.size());
        } else {
            write_superblock();  // still record final front/rear
        }
        file_.flush();
    }

    std::uint64_t total_entries() const { return total_; }
    std::uint64_t persisted_entries() const { return persisted_; }
    const std::vector<MetadataEntry> &current_segment() const { return current_; }
    const MetadataConfig &config() const { return cfg_; }

    // Queue front/rear provider, consulted when the superblock is written.
    std::function<std::pair<std::uint64_t, std::uint64_t>()> queue_state;

    // Restart plumbing: seed the directory with recovered counters and the
    // rebuilt (not yet persisted) tail entries.
    void restore(std::uint64_t persisted, std::vector<MetadataEntry> rebuilt_tail) {
        persisted_ = persisted;
        segment_base_ = (persisted / cfg_.segment_capacity) * cfg_.segment_capacity;
        // Reload the partial persisted slice of the current segment so the
        // next flush rewrites the whole segment.
        current_.clear();
        std::uint64_t partial = persisted_ - segment_base_;
        if (partial > 0) {
            auto bytes = file_.read_at(segment_offset(segment_base_ / cfg_.segment_capacity),
                                       partial * kMetadataEntrySize);
            for (std::uint64_t i = 0; i < partial; i++) {
                current_.push_back(decode_entry(bytes.data() + i * kMetadataEntrySize));
            }
        }
        total_ = persisted_;
        for (const auto &e : rebuilt_tail) {
            append(e);
        }
    }

    MetaFile &raw_file() { return file_; }

    std::uint64_t segment_offset(std::uint64_t segment_index) const {
        return kSegmentRegionOffset +
               segment_index * cfg_.segment_capacity * kMetadataEntrySize;
    }

private:
    void flush_segment(std::uint64_t entry_count) {
        std::uint64_t seg_index = segment_base_ / cfg_.segment_capacity;
        std::vector<std::uint8_t> buf(entry_count * kMetadataEntrySize);
        for (std::uint64_t i = 0; i < entry_count; i++) {
            encode_entry(current_[i], buf.data() + i * kMetadataEntrySize);
        }
        file_.write_at(segment_offset(seg_index), buf.data(), buf.size());
        acc_->charge({Device::Flash, IoKind::SeqWrite, round_to_pages(buf.size())});
        persisted_ = segment_base_ + entry_count;
        write_superblock();
    }

    void write_superblock() {
        SuperBlock sb;
        sb.seq_no = ++superblock_seq_;
        sb.page_size = cfg_.page_size;
        sb.capacity_frames = cfg_.capacity_frames;
        sb.segment_capacity = cfg_.segment_capacity;
        sb.scan_depth = cfg_.scan_depth;
        if (queue_state) {
            auto [f, r] = queue_state();
            sb.front = f;
            sb.rear = r;
        }
        sb.persisted_entries = persisted_;
        auto buf = encode_superblock(sb);
        std::uint64_t slot = sb.seq_no & 1;
        file_.write_at(slot * kSuperBlockSlotSize, buf.data(), buf.size());
        acc_->charge({Device::Flash, IoKind::RandWrite, round_to_pages(kSuperBlockSlotSize)});
    }

    std::uint64_t round_to_pages(std::uint64_t bytes) const {
        std::uint64_t ps = cfg_.page_size;
        return ((bytes + ps - 1) / ps) * ps;
    }

    MetadataConfig cfg_;
    MetaFile file_;
    CostAccumulator *acc_;
    std::vector<MetadataEntry> current_;
    std::uint64_t segment_base_ = 0;  // entry index of current segment start
    std::uint64_t persisted_ = 0;
    std::uint64_t total_ = 0;
    std::uint64_t superblock_seq_ = 0;

public:
    // Allows restart to continue the sequence without reusing a slot.
    void set_superblock_seq(std::uint64_t seq) { superblock_seq_ = seq; }
};

// Reads both superblock slots and returns the newest valid one.
inline std::optional<SuperBlock> read_best_superblock(MetaFile &file) {
    std::optional<SuperBlock> best;
    for (std::uint64_t slot = 0; slot < 2; slot++) {
        auto bytes = file.read_at(slot * kSuperBlockSlotSize, kSuperBlockSlotSize);
        auto sb = decode_superblock(bytes.data());
        if (sb && (!best || sb->seq_no > best->seq_no)) best = sb;
    }
    return best;
}

// Loads all persisted entries in chronological order, charging one
// sequential read per segment.
inline std::vector<MetadataEntry> load_persisted_entries(MetaFile &file, const SuperBlock &sb,
                                                         CostAccumulator &acc,
                                                         std::uint64_t *segments_read = nullptr) {
    std::vector<MetadataEntry> entries;
    entries.reserve(sb.persisted_entries);
    std::uint64_t seg_cap = sb.segment_capacity;
    std::uint64_t full = sb.persisted_entries / seg_cap;
    std::uint64_t partial = sb.persisted_entries % seg_cap;
    std::uint64_t segs = 0;
    auto load = [&](std::uint64_t seg_index, std::uint64_t count) {
        std::uint64_t off = kSegmentRegionOffset + seg_index * seg_cap * kMetadataEntrySize;
        auto bytes = file.read_at(off, count * kMetadataEntrySize);
        for (std::uint64_t i = 0; i < count; i++) {
            entries.push_back(decode_entry(bytes.data() + i * kMetadataEntrySize));
        }
        std::uint64_t ps = sb.page_size;
        acc.charge({Device::Flash, IoKind::SeqRead,
                    ((count * kMetadataEntrySize + ps - 1) / ps) * ps});
        segs++;
    };
    for (std::uint64_t s = 0; s < full; s++) load(s, seg_cap);
    if (partial > 0) load(full, partial);
    if (segments_read) *segments_read = segs;
    return entries;
}

}  // namespace face
