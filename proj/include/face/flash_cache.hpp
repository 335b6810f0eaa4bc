#pragma once

#include <cassert>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "face/device_model.hpp"
#include "face/dram_buffer.hpp"
#include "face/metadata.hpp"
#include "face/page.hpp"
#include "face/storage.hpp"

namespace face {

struct EmptyQueue : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Replacement { Basic, GR, GSC, Lru2 };
enum class SyncPolicy { WriteBack, WriteThrough };
enum class AdmitFilter { DirtyAndClean, DirtyOnly, CleanOnly };

inline const char *to_string(Replacement r) {
    switch (r) {
        case Replacement::Basic: return "face";
        case Replacement::GR: return "gr";
        case Replacement::GSC: return "gsc";
        default: return "lru2";
    }
}

inline const char *to_string(SyncPolicy s) {
    return s == SyncPolicy::WriteBack ? "writeback" : "writethrough";
}

struct FlashConfig {
    std::uint64_t capacity_frames = 0;
    Replacement replacement = Replacement::Basic;
    SyncPolicy sync = SyncPolicy::WriteBack;
    AdmitFilter admit = AdmitFilter::DirtyAndClean;
    std::uint64_t scan_depth = 64;
};

// Per-slot metadata of the flash-cache circular queue.
struct FlashFrameMeta {
    PageId page_id = 0;
    std::uint64_t frame_index = 0;  // physical slot
    bool dirty = false;
    Lsn lsn = 0;
    bool valid = false;
    bool referenced = false;
};

struct AdmitResult {
    bool enqueued = false;
    std::vector<std::pair<PageId, Lsn>> disk_writes;
};

// Common surface of the flash-tier policies (FaCE variants and the LC
// baseline) as seen by the engine.
class FlashTier {
public:
    struct LookupResult {
        bool dirty;
        PageImage page;
    };

    virtual ~FlashTier() = default;
    virtual std::optional<LookupResult> lookup(PageId id) = 0;
    virtual AdmitResult admit(const DramFrame &frame, DramBuffer *dram) = 0;
    // Database-checkpoint handling; returns the number of pages moved.
    virtual std::uint64_t checkpoint(DramBuffer &dram) = 0;
    virtual void shutdown() = 0;
    virtual std::uint64_t occupied_frames() const = 0;
};

struct FaceRecoveryOptions {
    bool allow_full_scan = false;
};

struct RecoveryStats {
    std::uint64_t segments_loaded = 0;
    std::uint64_t entries_loaded = 0;
    std::uint64_t pages_scanned = 0;
    std::uint64_t entries_rebuilt = 0;
    Lsn max_lsn = 0;  // newest version seen anywhere in the directory
    bool used_full_scan = false;
    double sim_seconds = 0.0;
};

// The FaCE flash cache: a multi-version FIFO queue over a flash image file.
// Pages enter only at the rear (sequential appends), stale versions are
// invalidated in metadata without I/O, and eviction runs per-frame (Basic),
// in batches (GR) or in batches with second chances refilled from the DRAM
// LRU tail (GSC).
class FaceTier : public FlashTier {
public:
    FaceTier(std::filesystem::path flash_img, std::filesystem::path meta_path, FlashConfig cfg,
             MetadataConfig meta_cfg, CostAccumulator &acc, DiskStore &disk, bool truncate)
        : cfg_(cfg),
          acc_(&acc),
          disk_(&disk),
          store_(std::move(flash_img), meta_cfg.page_size, cfg.capacity_frames, truncate),
          slots_(cfg.capacity_frames),
          meta_(std::make_unique<MetadataDirectory>(std::move(meta_path), meta_cfg, acc, truncate)) {
        if (cfg_.capacity_frames == 0) throw std::invalid_argument("flash capacity must be > 0");
        if (cfg_.scan_depth < 1 || cfg_.scan_depth > cfg_.capacity_frames) {
            throw std::invalid_argument("scan depth must be in [1, capacity]");
        }
        meta_->queue_state = [this] { return std::pair{front_, rear_}; };
    }

    // --- engine surface -----------------------------------------------

    std::optional<LookupResult> lookup(PageId id) override {
        auto it = valid_slot_.find(id);
        if (it == valid_slot_.end()) return std::nullopt;
        FlashFrameMeta &m = *slots_[it->second];
        assert(m.valid && m.page_id == id);
        m.referenced = true;
        acc_->charge_pages(Device::Flash, IoKind::RandRead, 1);
        PageImage page = deserialize_page(store_.read_frame(it->second), store_.page_size());
        return LookupResult{m.dirty, std::move(page)};
    }

    AdmitResult admit(const DramFrame &frame, DramBuffer *dram) override {
        AdmitResult result;
        if (!should_enqueue(frame)) {
            // Exadata-style clean-only caching still has to persist the
            // dirty page somewhere: straight to disk.
            if (frame.dirty && cfg_.admit == AdmitFilter::CleanOnly) {
                flush_to_disk(frame.page, result);
            }
            return result;
        }
        bool meta_dirty = frame.dirty;
        if (cfg_.sync == SyncPolicy::WriteThrough && frame.dirty) {
            flush_to_disk(frame.page, result);
            meta_dirty = false;
        }
        if (occupancy() + 1 > cfg_.capacity_frames) {
            switch (cfg_.replacement) {
                case Replacement::Basic:
                    evict_basic(&result.disk_writes);
                    break;
                case Replacement::GR:
                    evict_group_replacement(&result.disk_writes);
                    break;
                case Replacement::GSC:
                    // The incoming page rides in the rear batch write.
                    group_second_chance(dram, &frame.page, meta_dirty, &result.disk_writes);
                    result.enqueued = true;
                    return result;
                default:
                    throw std::logic_error("unexpected replacement mode");
            }
        }
        enqueue_single(frame.page, meta_dirty);
        result.enqueued = true;
        return result;
    }

    std::uint64_t checkpoint(DramBuffer &dram) override {
        std::uint64_t moved = 0;
        for (PageId id : dram.dirty_page_ids()) {
            const DramFrame *f = dram.peek(id);
            if (f == nullptr || !f->dirty) continue;  // may have been pulled by GSC
            // Copy: a GSC replacement inside admit may pull frames and
            // invalidate references into the buffer.
            DramFrame frame = *f;
            AdmitResult r = admit(frame, &dram);
            if (r.enqueued) moved++;
            dram.mark_flash_synced(id, frame.page.page_lsn);
        }
        return moved;
    }

    void shutdown() override {
        meta_->shutdown_flush();
        store_.flush();
    }

    std::uint64_t occupied_frames() const override { return occupancy(); }

    // --- spec-level operations (also exercised directly by tests) ------

    // Dequeues the front frame; flushes it to disk iff dirty and valid.
    // Returns the disk writes performed.
    std::vector<std::pair<PageId, Lsn>> evict_basic(
        std::vector<std::pair<PageId, Lsn>> *sink = nullptr) {
        std::vector<std::pair<PageId, Lsn>> local;
        auto &out = sink ? *sink : local;
        if (occupancy() == 0) throw EmptyQueue("evict on empty flash queue");
        std::uint64_t slot = front_ % cfg_.capacity_frames;
        if (slots_[slot]) {
            FlashFrameMeta m = *slots_[slot];
            if (m.dirty && m.valid) {
                acc_->charge_pages(Device::Flash, IoKind::SeqRead, 1);
                PageImage page = deserialize_page(store_.read_frame(slot), store_.page_size());
                AdmitResult tmp;
                flush_to_disk(page, tmp);
                out.insert(out.end(), tmp.disk_writes.begin(), tmp.disk_writes.end());
            }
            drop_slot(slot);
        }
        front_++;
        return local;
    }

    // Batch eviction without second chances: up to scan_depth front frames
    // dequeued as one batch read, each handled by the evict_basic rule.
    std::vector<std::pair<PageId, Lsn>> evict_group_replacement(
        std::vector<std::pair<PageId, Lsn>> *sink = nullptr) {
        std::vector<std::pair<PageId, Lsn>> local;
        auto &out = sink ? *sink : local;
        if (occupancy() == 0) throw EmptyQueue("evict on empty flash queue");
        std::uint64_t batch = std::min<std::uint64_t>(cfg_.scan_depth, occupancy());
        charge_batch(IoKind::SeqRead, front_, batch);
        for (std::uint64_t i = 0; i < batch; i++) {
            std::uint64_t slot = front_ % cfg_.capacity_frames;
            if (slots_[slot]) {
                FlashFrameMeta m = *slots_[slot];
                if (m.dirty && m.valid) {
                    PageImage page = deserialize_page(store_.read_frame(slot), store_.page_size());
                    AdmitResult tmp;
                    flush_to_disk(page, tmp);
                    out.insert(out.end(), tmp.disk_writes.begin(), tmp.disk_writes.end());
                }
                drop_slot(slot);
            }
            front_++;
        }
        return local;
    }

    // Batch eviction with second chances. Referenced valid frames survive and
    // are re-enqueued at the rear; the space they free is filled by pulling
    // DRAM LRU-tail frames through the normal admission rule. One slot is
    // always left free for the page whose admission triggered the
    // replacement.
    std::vector<std::pair<PageId, Lsn>> evict_group_second_chance(DramBuffer *dram) {
        std::vector<std::pair<PageId, Lsn>> out;
        group_second_chance(dram, nullptr, false, &out);
        return out;
    }

    // Metadata-only invalidation of the current valid version of a page.
    void invalidate(PageId id) {
        auto it = valid_slot_.find(id);
        if (it == valid_slot_.end()) return;
        slots_[it->second]->valid = false;
        valid_slot_.erase(it);
        if (on_invalidate_page) on_invalidate_page(id);
    }

    // --- introspection --------------------------------------------------

    std::uint64_t capacity() const { return cfg_.capacity_frames; }
    std::uint64_t occupancy() const { return rear_ - front_; }
    std::uint64_t front() const { return front_; }
    std::uint64_t rear() const { return rear_; }
    const FlashConfig &config() const { return cfg_; }
    MetadataDirectory &directory() { return *meta_; }
    PageFile &data_file() { return store_; }

    bool contains_valid(PageId id) const { return valid_slot_.count(id) > 0; }
    std::optional<Lsn> valid_lsn(PageId id) const {
        auto it = valid_slot_.find(id);
        if (it == valid_slot_.end()) return std::nullopt;
        return slots_[it->second]->lsn;
    }

    // Queue contents front-to-rear (oracle comparisons).
    std::vector<FlashFrameMeta> snapshot() const {
        std::vector<FlashFrameMeta> v;
        v.reserve(occupancy());
        for (std::uint64_t c = front_; c < rear_; c++) {
            const auto &slot = slots_[c % cfg_.capacity_frames];
            if (slot) v.push_back(*slot);
        }
        return v;
    }

    // Full single-valid-copy and index-consistency verification, O(capacity).
    void verify_invariants() const {
        std::unordered_map<PageId, std::uint64_t> valid_count;
        std::uint64_t occupied = 0;
        for (std::uint64_t c = front_; c < rear_; c++) {
            const auto &slot = slots_[c % cfg_.capacity_frames];
            if (!slot) continue;
            occupied++;
            if (slot->valid) {
                valid_count[slot->page_id]++;
                auto it = valid_slot_.find(slot->page_id);
                if (it == valid_slot_.end() || it->second != slot->frame_index) {
                    throw std::logic_error("valid slot index out of sync");
                }
            }
        }
        for (const auto &[id, n] : valid_count) {
            if (n > 1) {
                throw std::logic_error("page " + std::to_string(id) + " has " +
                                       std::to_string(n) + " valid copies");
            }
        }
        if (valid_slot_.size() != valid_count.size()) {
            throw std::logic_error("dangling valid-slot index entries");
        }
        if (occupied > occupancy()) {
            throw std::logic_error("more occupied slots than queue occupancy");
        }
    }

    // Oracle taps.
    std::function<void(const FlashFrameMeta &)> on_enqueue;
    std::function<void(PageId)> on_invalidate_page;
    std::function<void(const FlashFrameMeta &, bool flushed)> on_dequeue;
    std::function<void(const DramFrame &)> on_pulled;  // GSC tail pulls leave the DRAM buffer

    // --- restart ---------------------------------------------------------

    static std::pair<std::unique_ptr<FaceTier>, RecoveryStats> restore(
        std::filesystem::path flash_img, std::filesystem::path meta_path, FlashConfig cfg,
        MetadataConfig meta_cfg, CostAccumulator &acc, DiskStore &disk,
        FaceRecoveryOptions opts = {});

private:
    bool should_enqueue(const DramFrame &frame) const {
        if (cfg_.admit == AdmitFilter::DirtyOnly && !frame.dirty) return false;
        if (cfg_.admit == AdmitFilter::CleanOnly && frame.dirty) return false;
        // Algorithm guard: enqueue iff newer than the flash copy or absent.
        return frame.fdirty || !contains_valid(frame.page.page_id);
    }

    void flush_to_disk(const PageImage &page, AdmitResult &result) {
        disk_->write_page(page);
        result.disk_writes.emplace_back(page.page_id, page.page_lsn);
    }

    // Writes one page at the rear and appends its directory entry. Every
    // data write funnels through here; a non-rear target is a hard fault.
    void enqueue_raw(const PageImage &page, bool dirty, bool referenced, bool charge_single) {
        std::uint64_t slot = rear_ % cfg_.capacity_frames;
        if (rear_ - front_ >= cfg_.capacity_frames) {
            throw std::logic_error("enqueue into full flash queue");
        }
        store_.write_frame(slot, serialize_page(page));
        if (charge_single) charge_batch(IoKind::SeqWrite, rear_, 1);
        if (slots_[slot]) {
            // Slot recycled: stale occupant disappears from the index.
            forget_slot(slot);
        }
        FlashFrameMeta m;
        m.page_id = page.page_id;
        m.frame_index = slot;
        m.dirty = dirty;
        m.lsn = page.page_lsn;
        m.valid = true;
        m.referenced = referenced;
        slots_[slot] = m;
        valid_slot_[page.page_id] = slot;
        meta_->append(MetadataEntry{page.page_id, static_cast<std::uint32_t>(slot), dirty,
                                    page.page_lsn});
        rear_++;
        if (on_enqueue) on_enqueue(m);
    }

    void enqueue_single(const PageImage &page, bool dirty) {
        invalidate(page.page_id);
        enqueue_raw(page, dirty, false, true);
    }

    // Survivor re-enqueue: the frame keeps its validity and version, only
    // its position changes (no invalidation event).
    void reenqueue_survivor(const FlashFrameMeta &old, const PageImage &page) {
        std::uint64_t slot = rear_ % cfg_.capacity_frames;
        if (rear_ - front_ >= cfg_.capacity_frames) {
            throw std::logic_error("enqueue into full flash queue");
        }
        store_.write_frame(slot, serialize_page(page));
        if (slots_[slot]) forget_slot(slot);
        FlashFrameMeta m = old;
        m.frame_index = slot;
        m.referenced = false;
        slots_[slot] = m;
        if (m.valid) valid_slot_[m.page_id] = slot;
        meta_->append(MetadataEntry{m.page_id, static_cast<std::uint32_t>(slot), m.dirty, m.lsn});
        rear_++;
        if (on_enqueue) on_enqueue(m);
    }

    void group_second_chance(DramBuffer *dram, const PageImage *incoming, bool incoming_dirty,
                             std::vector<std::pair<PageId, Lsn>> *out) {
        if (occupancy() == 0) throw EmptyQueue("evict on empty flash queue");
        std::uint64_t batch = std::min<std::uint64_t>(cfg_.scan_depth, occupancy());
        charge_batch(IoKind::SeqRead, front_, batch);

        struct Survivor {
            FlashFrameMeta meta;
            PageImage page;
        };
        std::vector<Survivor> survivors;
        for (std::uint64_t i = 0; i < batch; i++) {
            std::uint64_t slot = front_ % cfg_.capacity_frames;
            if (slots_[slot]) {
                FlashFrameMeta m = *slots_[slot];
                bool give_second_chance = m.referenced && m.valid;
                if (give_second_chance && i == 0 && all_referenced_valid(batch)) {
                    // Degenerate case: everything in the batch is referenced;
                    // the very front frame is evicted regardless.
                    give_second_chance = false;
                }
                if (give_second_chance) {
                    PageImage page = deserialize_page(store_.read_frame(slot), store_.page_size());
                    survivors.push_back({m, std::move(page)});
                    forget_slot(slot);
                    slots_[slot].reset();
                } else {
                    if (m.dirty && m.valid) {
                        PageImage page =
                            deserialize_page(store_.read_frame(slot), store_.page_size());
                        AdmitResult tmp;
                        flush_to_disk(page, tmp);
                        out->insert(out->end(), tmp.disk_writes.begin(), tmp.disk_writes.end());
                    }
                    drop_slot(slot);
                }
            }
            front_++;
        }

        // Refill budget: survivors go back, pulled DRAM tail frames fill the
        // rest, and one slot stays reserved for the incoming page.
        std::uint64_t refill_budget =
            batch > survivors.size() + 1 ? batch - survivors.size() - 1 : 0;
        std::vector<DramFrame> pulled;
        if (dram != nullptr && refill_budget > 0) {
            pulled = dram->pull_tail(refill_budget);
            if (on_pulled) {
                for (const auto &f : pulled) on_pulled(f);
            }
        }

        std::uint64_t rear_start = rear_;
        for (const auto &s : survivors) {
            reenqueue_survivor(s.meta, s.page);
        }
        for (const auto &frame : pulled) {
            if (!should_enqueue(frame)) {
                if (frame.dirty && cfg_.admit == AdmitFilter::CleanOnly) {
                    AdmitResult tmp;
                    flush_to_disk(frame.page, tmp);
                    out->insert(out->end(), tmp.disk_writes.begin(), tmp.disk_writes.end());
                }
                continue;  // already at the LRU tail; discarded
            }
            bool dirty = frame.dirty;
            if (cfg_.sync == SyncPolicy::WriteThrough && frame.dirty) {
                AdmitResult tmp;
                flush_to_disk(frame.page, tmp);
                out->insert(out->end(), tmp.disk_writes.begin(), tmp.disk_writes.end());
                dirty = false;
            }
            invalidate(frame.page.page_id);
            enqueue_raw(frame.page, dirty, false, false);
        }
        if (incoming != nullptr) {
            invalidate(incoming->page_id);
            enqueue_raw(*incoming, incoming_dirty, false, false);
        }
        // The whole rear batch goes out as one sequential write.
        std::uint64_t written = rear_ - rear_start;
        if (written > 0) charge_batch(IoKind::SeqWrite, rear_start, written);
    }

    bool all_referenced_valid(std::uint64_t batch) const {
        for (std::uint64_t i = 0; i < batch; i++) {
            const auto &slot = slots_[(front_ + i) % cfg_.capacity_frames];
            if (!slot || !slot->referenced || !slot->valid) return false;
        }
        return true;
    }

    // Removes the slot's meta and index entries after a dequeue.
    void drop_slot(std::uint64_t slot) {
        FlashFrameMeta m = *slots_[slot];
        forget_slot(slot);
        slots_[slot].reset();
        if (on_dequeue) on_dequeue(m, m.dirty && m.valid);
    }

    void forget_slot(std::uint64_t slot) {
        const FlashFrameMeta &m = *slots_[slot];
        auto it = valid_slot_.find(m.page_id);
        if (it != valid_slot_.end() && it->second == slot) {
            valid_slot_.erase(it);
        }
    }

    // Charges a contiguous batch starting at monotone queue position start,
    // split into two extents when it wraps the end of the queue file.
    void charge_batch(IoKind kind, std::uint64_t start, std::uint64_t count) {
        std::uint64_t slot = start % cfg_.capacity_frames;
        std::uint64_t first = std::min(count, cfg_.capacity_frames - slot);
        acc_->charge_pages(Device::Flash, kind, first);
        if (count > first) {
            acc_->charge_pages(Device::Flash, kind, count - first);
        }
    }

    FlashConfig cfg_;
    CostAccumulator *acc_;
    DiskStore *disk_;
    PageFile store_;
    std::vector<std::optional<FlashFrameMeta>> slots_;
    std::unordered_map<PageId, std::uint64_t> valid_slot_;
    std::unique_ptr<MetadataDirectory> meta_;
    std::uint64_t front_ = 0;  // monotone; slot = front_ % capacity
    std::uint64_t rear_ = 0;

    static void full_scan_restore(FaceTier &tier, CostAccumulator &acc, DiskStore &disk,
                                  RecoveryStats &stats);
};

}  // namespace face
