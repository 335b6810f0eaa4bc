#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <utility>
#include <vector>

#include "face/flash_cache.hpp"
#include "face/metadata.hpp"

namespace face {

namespace detail {

struct SlotContent {
    PageId page_id = 0;
    Lsn lsn = 0;
};

// Chronological replay of the directory entry stream. Each entry claims its
// slot (superseding any previous occupant) and invalidates the previous valid
// version of its page, mirroring the online enqueue rule.
struct EntryReplay {
    explicit EntryReplay(std::uint64_t capacity) : slots(capacity) {}

    void apply(const MetadataEntry &e) {
        std::uint64_t slot = e.frame_index;
        if (slots[slot]) {
            auto it = valid_of.find(slots[slot]->page_id);
            if (it != valid_of.end() && it->second == slot) valid_of.erase(it);
        }
        auto prev = valid_of.find(e.page_id);
        if (prev != valid_of.end() && slots[prev->second] &&
            slots[prev->second]->page_id == e.page_id) {
            slots[prev->second]->valid = false;
        }
        FlashFrameMeta m;
        m.page_id = e.page_id;
        m.frame_index = slot;
        m.dirty = e.dirty;
        m.lsn = e.lsn;
        m.valid = true;
        m.referenced = false;
        slots[slot] = m;
        valid_of[e.page_id] = slot;
    }

    std::vector<std::optional<FlashFrameMeta>> slots;
    std::unordered_map<PageId, std::uint64_t> valid_of;
};

}  // namespace detail

// Rebuilds a FaceTier from the durable files after a crash or a clean
// shutdown. Persisted directory segments are loaded with sequential reads;
// entries lost with the in-memory segment (and possibly an unacknowledged
// flush) are reconstructed by scanning at most two segments' worth of raw
// frames past the persisted rear, parsing their self-identifying headers.
inline std::pair<std::unique_ptr<FaceTier>, RecoveryStats> FaceTier::restore(
    std::filesystem::path flash_img, std::filesystem::path meta_path, FlashConfig cfg,
    MetadataConfig meta_cfg, CostAccumulator &acc, DiskStore &disk, FaceRecoveryOptions opts) {
    RecoveryStats stats;
    double t0 = acc.clock_seconds();

    auto tier = std::unique_ptr<FaceTier>(new FaceTier(
        std::move(flash_img), std::move(meta_path), cfg, meta_cfg, acc, disk, false));
    MetaFile &meta_file = tier->meta_->raw_file();

    acc.charge_pages(Device::Flash, IoKind::RandRead, 1);  // superblock slots
    std::optional<SuperBlock> sb = read_best_superblock(meta_file);

    if (!sb) {
        if (!opts.allow_full_scan) {
            throw CorruptSuperBlock("no valid superblock in " +
                                    tier->meta_->raw_file().path().string());
        }
        full_scan_restore(*tier, acc, disk, stats);
        stats.used_full_scan = true;
        stats.sim_seconds = acc.clock_seconds() - t0;
        return {std::move(tier), stats};
    }
    if (sb->page_size != meta_cfg.page_size || sb->capacity_frames != cfg.capacity_frames ||
        sb->segment_capacity != meta_cfg.segment_capacity) {
        throw std::runtime_error("superblock geometry does not match configuration");
    }

    std::vector<MetadataEntry> acked =
        load_persisted_entries(meta_file, *sb, acc, &stats.segments_loaded);
    stats.entries_loaded = acked.size();

    // Pass 1: what the acknowledged history says each physical slot holds.
    std::vector<detail::SlotContent> media(cfg.capacity_frames);
    for (const auto &e : acked) {
        media[e.frame_index] = {e.page_id, e.lsn};
    }

    // Scan window: enqueues lost with the current segment plus at most one
    // unacknowledged segment flush.
    std::uint64_t window =
        std::min<std::uint64_t>(2 * meta_cfg.segment_capacity, cfg.capacity_frames);
    std::vector<MetadataEntry> rebuilt;
    std::uint64_t last_new = 0;
    std::vector<MetadataEntry> scanned_entries;
    scanned_entries.reserve(window);
    for (std::uint64_t i = 0; i < window; i++) {
        std::uint64_t slot = (sb->rear + i) % cfg.capacity_frames;
        auto bytes = tier->store_.read_frame(slot);
        PageHeader hdr = parse_page_header(bytes);
        stats.pages_scanned++;
        const detail::SlotContent &expect = media[slot];
        bool is_new = hdr.page_id != expect.page_id || hdr.page_lsn != expect.lsn;
        scanned_entries.push_back(MetadataEntry{
            hdr.page_id, static_cast<std::uint32_t>(slot),
            cfg.sync == SyncPolicy::WriteBack, hdr.page_lsn});
        if (is_new) last_new = i + 1;
    }
    // Charge the scan as sequential extents (contiguous slot range).
    if (window > 0) {
        std::uint64_t slot0 = sb->rear % cfg.capacity_frames;
        std::uint64_t first = std::min(window, cfg.capacity_frames - slot0);
        acc.charge_pages(Device::Flash, IoKind::SeqRead, first);
        if (window > first) acc.charge_pages(Device::Flash, IoKind::SeqRead, window - first);
    }
    rebuilt.assign(scanned_entries.begin(), scanned_entries.begin() + last_new);
    stats.entries_rebuilt = rebuilt.size();

    // Pass 2: full replay (acked history plus rebuilt tail) gives the final
    // per-slot metadata and valid flags.
    detail::EntryReplay replay(cfg.capacity_frames);
    for (const auto &e : acked) {
        replay.apply(e);
        stats.max_lsn = std::max(stats.max_lsn, e.lsn);
    }
    for (const auto &e : rebuilt) {
        replay.apply(e);
        stats.max_lsn = std::max(stats.max_lsn, e.lsn);
    }

    std::uint64_t rear_rec = sb->rear + rebuilt.size();
    std::uint64_t front_rec = sb->front;
    if (rear_rec - front_rec > cfg.capacity_frames) {
        // The persisted front is a snapshot; enqueues past it prove the
        // corresponding dequeues happened before the crash.
        front_rec = rear_rec - cfg.capacity_frames;
    }

    tier->front_ = front_rec;
    tier->rear_ = rear_rec;
    for (std::uint64_t c = front_rec; c < rear_rec; c++) {
        std::uint64_t slot = c % cfg.capacity_frames;
        if (!replay.slots[slot]) continue;
        tier->slots_[slot] = replay.slots[slot];
        if (replay.slots[slot]->valid) {
            tier->valid_slot_[replay.slots[slot]->page_id] = slot;
        }
    }
    // Valid pointers referring to slots outside the live window are dropped.
    for (auto it = tier->valid_slot_.begin(); it != tier->valid_slot_.end();) {
        std::uint64_t slot = it->second;
        bool live = tier->slots_[slot].has_value() && tier->slots_[slot]->valid &&
                    tier->slots_[slot]->page_id == it->first;
        it = live ? std::next(it) : tier->valid_slot_.erase(it);
    }

    tier->meta_->set_superblock_seq(sb->seq_no);
    tier->meta_->restore(sb->persisted_entries, rebuilt);

    stats.sim_seconds = acc.clock_seconds() - t0;
    return {std::move(tier), stats};
}

// Degraded-mode rebuild used when both superblock slots are unreadable:
// every frame of the flash image is scanned and classified against the disk
// copy. Chronology is lost, so entries are re-logged in LSN order and pages
// whose flash copy is older than disk lose their cached copy.
inline void FaceTier::full_scan_restore(FaceTier &tier, CostAccumulator &acc, DiskStore &disk,
                                        RecoveryStats &stats) {
    const std::uint64_t cap = tier.capacity();
    acc.charge_pages(Device::Flash, IoKind::SeqRead, cap);
    struct Found {
        std::uint64_t slot;
        PageId id;
        Lsn lsn;
    };
    std::vector<Found> found;
    for (std::uint64_t slot = 0; slot < cap; slot++) {
        auto bytes = tier.data_file().read_frame(slot);
        bool empty = std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b == 0; });
        stats.pages_scanned++;
        if (empty) continue;
        PageHeader hdr = parse_page_header(bytes);
        stats.max_lsn = std::max(stats.max_lsn, hdr.page_lsn);
        found.push_back({slot, hdr.page_id, hdr.page_lsn});
    }
    // Latest version per page wins; ties (identical re-admitted versions) go
    // to the higher slot.
    std::unordered_map<PageId, std::uint64_t> best;  // page -> index into found
    for (std::uint64_t i = 0; i < found.size(); i++) {
        auto it = best.find(found[i].id);
        if (it == best.end() || found[i].lsn > found[it->second].lsn ||
            (found[i].lsn == found[it->second].lsn && found[i].slot > found[it->second].slot)) {
            best[found[i].id] = i;
        }
    }
    tier.front_ = 0;
    tier.rear_ = cap;
    bool write_back = tier.config().sync == SyncPolicy::WriteBack;
    for (const auto &f : found) {
        bool is_best = found[best.at(f.id)].slot == f.slot;
        bool valid = false;
        bool dirty = false;
        if (is_best) {
            Lsn disk_lsn = disk.read_page(f.id).page_lsn;  // charged: degraded mode
            if (f.lsn >= disk_lsn) {
                valid = true;
                dirty = write_back && f.lsn > disk_lsn;
            }
        }
        FlashFrameMeta m;
        m.page_id = f.id;
        m.frame_index = f.slot;
        m.dirty = dirty;
        m.lsn = f.lsn;
        m.valid = valid;
        m.referenced = false;
        tier.slots_[f.slot] = m;
        if (valid) tier.valid_slot_[f.id] = f.slot;
    }
    // Re-log every surviving frame in a replay-consistent order.
    std::vector<MetadataEntry> entries;
    entries.reserve(found.size());
    for (const auto &f : found) {
        const auto &m = tier.slots_[f.slot];
        entries.push_back(MetadataEntry{f.id, static_cast<std::uint32_t>(f.slot),
                                        m ? m->dirty : false, f.lsn});
    }
    std::sort(entries.begin(), entries.end(), [](const MetadataEntry &a, const MetadataEntry &b) {
        return a.lsn != b.lsn ? a.lsn < b.lsn : a.frame_index < b.frame_index;
    });
    tier.meta_->restore(0, entries);
    stats.entries_rebuilt = entries.size();
}

}  // namespace face
