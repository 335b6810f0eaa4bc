#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "face/flash_cache.hpp"

namespace face {

// Lazy Cleaning baseline: an on-exit flash cache managed by LRU-2 with
// in-place page overwrite. Exactly one slot per cached page, and that copy is
// always current. Every replacement or overwrite costs a random flash write;
// dirty victims are flushed to disk. A dirty-fraction threshold emulates the
// background cleaner synchronously (1.0 = clean only on eviction).
//
// With sync == WriteThrough this doubles as the TAC-like baseline: dirty
// evictions go to disk immediately and cached copies are always clean.
class LcTier : public FlashTier {
public:
    LcTier(std::filesystem::path flash_img, FlashConfig cfg, std::size_t page_size,
           CostAccumulator &acc, DiskStore &disk, double clean_threshold = 1.0)
        : cfg_(cfg),
          acc_(&acc),
          disk_(&disk),
          store_(std::move(flash_img), page_size, cfg.capacity_frames, true),
          slots_(cfg.capacity_frames),
          clean_threshold_(clean_threshold) {
        if (cfg_.capacity_frames == 0) throw std::invalid_argument("flash capacity must be > 0");
        for (std::uint64_t s = cfg.capacity_frames; s > 0; s--) free_.push_back(s - 1);
    }

    std::optional<LookupResult> lookup(PageId id) override {
        auto it = by_page_.find(id);
        if (it == by_page_.end()) return std::nullopt;
        std::uint64_t slot = it->second;
        acc_->charge_pages(Device::Flash, IoKind::RandRead, 1);
        touch(slot);
        PageImage page = deserialize_page(store_.read_frame(slot), store_.page_size());
        return LookupResult{slots_[slot]->dirty, std::move(page)};
    }

    AdmitResult admit(const DramFrame &frame, DramBuffer *) override {
        AdmitResult result;
        bool incoming_dirty = frame.dirty;
        if (cfg_.sync == SyncPolicy::WriteThrough && frame.dirty) {
            flush_to_disk(frame.page, result);
            incoming_dirty = false;
        }
        auto it = by_page_.find(frame.page.page_id);
        if (it != by_page_.end()) {
            // In-place overwrite of the existing copy. Same-version
            // re-admits carry identical bytes, so only the flags are OR-ed.
            std::uint64_t slot = it->second;
            Meta &m = *slots_[slot];
            if (frame.page.page_lsn == m.lsn) {
                if (incoming_dirty && !m.dirty) {
                    m.dirty = true;
                    dirty_count_++;
                }
                touch(slot);
                result.enqueued = true;
                return result;
            }
            acc_->charge_pages(Device::Flash, IoKind::RandWrite, 1);
            store_.write_frame(slot, serialize_page(frame.page));
            if (incoming_dirty && !m.dirty) dirty_count_++;
            m.dirty = m.dirty || incoming_dirty;
            m.lsn = frame.page.page_lsn;
            touch(slot);
        } else {
            std::uint64_t slot;
            if (!free_.empty()) {
                slot = free_.back();
                free_.pop_back();
            } else {
                slot = evict_victim(result);
            }
            acc_->charge_pages(Device::Flash, IoKind::RandWrite, 1);
            store_.write_frame(slot, serialize_page(frame.page));
            Meta m;
            m.page_id = frame.page.page_id;
            m.dirty = incoming_dirty;
            m.lsn = frame.page.page_lsn;
            m.hist1 = 0;
            m.hist2 = 0;
            slots_[slot] = m;
            by_page_[frame.page.page_id] = slot;
            if (incoming_dirty) dirty_count_++;
            victims_.insert(key_of(slot));
            touch(slot);
        }
        result.enqueued = true;
        lazy_clean(result);
        return result;
    }

    std::uint64_t checkpoint(DramBuffer &dram) override {
        // Without recovery integration the flash tier is volatile, so a
        // database checkpoint must push dirty pages all the way to disk:
        // first stale flash copies, then the (newer) DRAM copies.
        std::uint64_t flushed = 0;
        for (std::uint64_t slot = 0; slot < slots_.size(); slot++) {
            if (slots_[slot] && slots_[slot]->dirty) {
                flush_slot(slot);
                flushed++;
            }
        }
        for (PageId id : dram.dirty_page_ids()) {
            const DramFrame *f = dram.peek(id);
            if (f == nullptr || !f->dirty) continue;
            disk_->write_page(f->page);
            dram.mark_disk_synced(id, f->page.page_lsn);
            flushed++;
        }
        return flushed;
    }

    void shutdown() override { store_.flush(); }

    std::uint64_t occupied_frames() const override {
        return cfg_.capacity_frames - free_.size();
    }

    // Single-copy invariant: one slot per page, index consistent.
    void verify_invariants() const {
        std::uint64_t occupied = 0, dirty = 0;
        for (std::uint64_t slot = 0; slot < slots_.size(); slot++) {
            if (!slots_[slot]) continue;
            occupied++;
            if (slots_[slot]->dirty) dirty++;
            auto it = by_page_.find(slots_[slot]->page_id);
            if (it == by_page_.end() || it->second != slot) {
                throw std::logic_error("page indexed to wrong slot");
            }
        }
        if (occupied != by_page_.size() || occupied != occupied_frames() ||
            dirty != dirty_count_ || victims_.size() != occupied) {
            throw std::logic_error("lc bookkeeping out of sync");
        }
    }

    bool contains(PageId id) const { return by_page_.count(id) > 0; }
    std::optional<Lsn> cached_lsn(PageId id) const {
        auto it = by_page_.find(id);
        if (it == by_page_.end()) return std::nullopt;
        return slots_[it->second]->lsn;
    }
    std::uint64_t dirty_frames() const { return dirty_count_; }

private:
    struct Meta {
        PageId page_id = 0;
        bool dirty = false;
        Lsn lsn = 0;
        std::uint64_t hist1 = 0;  // most recent reference time
        std::uint64_t hist2 = 0;  // second most recent (0 = seen once)
    };

    // Victim order: maximum backward-2 distance first, i.e. smallest hist2;
    // pages referenced once (hist2 == 0) evict before any page with two
    // references, ties broken by the older last reference.
    std::tuple<std::uint64_t, std::uint64_t, std::uint64_t> key_of(std::uint64_t slot) const {
        const Meta &m = *slots_[slot];
        return {m.hist2, m.hist1, slot};
    }

    void touch(std::uint64_t slot) {
        victims_.erase(key_of(slot));
        Meta &m = *slots_[slot];
        m.hist2 = m.hist1;
        m.hist1 = ++access_clock_;
        victims_.insert(key_of(slot));
    }

    std::uint64_t evict_victim(AdmitResult &result) {
        auto it = victims_.begin();
        std::uint64_t slot = std::get<2>(*it);
        victims_.erase(it);
        Meta m = *slots_[slot];
        if (m.dirty && cfg_.sync == SyncPolicy::WriteBack) {
            acc_->charge_pages(Device::Flash, IoKind::RandRead, 1);
            PageImage page = deserialize_page(store_.read_frame(slot), store_.page_size());
            flush_to_disk(page, result);
            dirty_count_--;
        } else if (m.dirty) {
            dirty_count_--;
        }
        by_page_.erase(m.page_id);
        slots_[slot].reset();
        return slot;
    }

    void flush_slot(std::uint64_t slot) {
        Meta &m = *slots_[slot];
        acc_->charge_pages(Device::Flash, IoKind::RandRead, 1);
        PageImage page = deserialize_page(store_.read_frame(slot), store_.page_size());
        disk_->write_page(page);
        m.dirty = false;
        dirty_count_--;
    }

    void lazy_clean(AdmitResult &) {
        if (clean_threshold_ >= 1.0) return;
        std::uint64_t limit =
            static_cast<std::uint64_t>(clean_threshold_ * cfg_.capacity_frames);
        // Clean in victim order until back under the threshold.
        auto it = victims_.begin();
        while (dirty_count_ > limit && it != victims_.end()) {
            std::uint64_t slot = std::get<2>(*it);
            if (slots_[slot]->dirty) flush_slot(slot);
            ++it;
        }
    }

    void flush_to_disk(const PageImage &page, AdmitResult &result) {
        disk_->write_page(page);
        result.disk_writes.emplace_back(page.page_id, page.page_lsn);
    }

    FlashConfig cfg_;
    CostAccumulator *acc_;
    DiskStore *disk_;
    PageFile store_;
    std::vector<std::optional<Meta>> slots_;
    std::unordered_map<PageId, std::uint64_t> by_page_;
    std::vector<std::uint64_t> free_;
    std::set<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>> victims_;
    std::uint64_t access_clock_ = 0;
    std::uint64_t dirty_count_ = 0;
    double clean_threshold_;
};

}  // namespace face
