#pragma once

#include <algorithm>
#include <list>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "face/page.hpp"

namespace face {

struct NotResident : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DuplicateInstall : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LsnRegression : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Where a page came from when it entered the DRAM buffer. Determines the
// initial dirty/fdirty flags.
enum class FetchSource { Disk, Flash };

struct DramFrame {
    PageImage page;
    bool dirty = false;   // newer than the disk copy
    bool fdirty = false;  // newer than the flash-cache copy
};

// Fixed-capacity LRU buffer pool. Holds the dirty/fdirty state machine:
//   fetch from disk   -> dirty = fdirty = false
//   fetch from flash  -> fdirty = false, dirty carried from flash metadata
//   update            -> dirty = fdirty = true
// Invariant: fdirty implies dirty.
class DramBuffer {
public:
    explicit DramBuffer(std::size_t capacity) : capacity_(capacity) {}

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return frames_.size(); }

    // Returns the resident frame and promotes it to MRU, or nullptr.
    // Flags are not touched.
    DramFrame *lookup(PageId id) {
        auto it = frames_.find(id);
        if (it == frames_.end()) return nullptr;
        lru_.splice(lru_.begin(), lru_, it->second.pos);
        return &it->second.frame;
    }

    // Peek without recency update (stats/oracles only).
    const DramFrame *peek(PageId id) const {
        auto it = frames_.find(id);
        return it == frames_.end() ? nullptr : &it->second.frame;
    }

    // Installs a fetched page at MRU. flash_dirty is the dirty flag carried
    // by the flash copy's metadata and is only meaningful for Flash fetches.
    // Returns the evicted LRU victim when the buffer was full.
    std::optional<DramFrame> install(PageImage page, FetchSource source, bool flash_dirty = false) {
        if (frames_.count(page.page_id)) {
            throw DuplicateInstall("page " + std::to_string(page.page_id) + " already resident");
        }
        std::optional<DramFrame> victim;
        if (frames_.size() == capacity_) {
            victim = remove_lru();
        }
        DramFrame frame;
        frame.page = std::move(page);
        if (source == FetchSource::Disk) {
            frame.dirty = false;
            frame.fdirty = false;
        } else {
            frame.dirty = flash_dirty;
            frame.fdirty = false;
        }
        PageId id = frame.page.page_id;
        lru_.push_front(id);
        frames_.emplace(id, Entry{std::move(frame), lru_.begin()});
        return victim;
    }

    // In-buffer update: replaces the body, bumps the LSN, sets both flags.
    void update(PageId id, const std::vector<std::uint8_t> &new_body, Lsn lsn) {
        auto it = frames_.find(id);
        if (it == frames_.end()) {
            throw NotResident("update of non-resident page " + std::to_string(id));
        }
        DramFrame &f = it->second.frame;
        if (lsn <= f.page.page_lsn) {
            throw LsnRegression("lsn " + std::to_string(lsn) + " not above " +
                                std::to_string(f.page.page_lsn));
        }
        if (new_body.size() != f.page.body.size()) {
            throw LengthMismatch("update body size mismatch");
        }
        f.page.body = new_body;
        f.page.page_lsn = lsn;
        f.dirty = true;
        f.fdirty = true;
        lru_.splice(lru_.begin(), lru_, it->second.pos);
    }

    // Removes up to n frames from the LRU end, returned in LRU-to-MRU order.
    std::vector<DramFrame> pull_tail(std::size_t n) {
        std::vector<DramFrame> pulled;
        pulled.reserve(std::min(n, frames_.size()));
        while (pulled.size() < n && !frames_.empty()) {
            pulled.push_back(remove_lru());
        }
        return pulled;
    }

    // Page ids of all dirty frames, ascending (stable iteration order for
    // checkpoints).
    std::vector<PageId> dirty_page_ids() const {
        std::vector<PageId> ids;
        for (const auto &[id, e] : frames_) {
            if (e.frame.dirty) ids.push_back(id);
        }
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    // Flag reconciliation used by the engine: the given version of the page
    // was just synced to flash / disk. No effect if the buffer holds a
    // different (newer) version.
    void mark_flash_synced(PageId id, Lsn lsn) {
        auto it = frames_.find(id);
        if (it != frames_.end() && it->second.frame.page.page_lsn == lsn) {
            it->second.frame.fdirty = false;
        }
    }
    void mark_disk_synced(PageId id, Lsn lsn) {
        auto it = frames_.find(id);
        if (it != frames_.end() && it->second.frame.page.page_lsn == lsn) {
            it->second.frame.dirty = false;
            it->second.frame.fdirty = false;
        }
    }

    void clear() {
        frames_.clear();
        lru_.clear();
    }

    // Recency order, most recent first (tests and diagnostics).
    std::vector<PageId> recency_order() const { return {lru_.begin(), lru_.end()}; }

private:
    struct Entry {
        DramFrame frame;
        std::list<PageId>::iterator pos;
    };

    DramFrame remove_lru() {
        PageId victim_id = lru_.back();
        lru_.pop_back();
        auto it = frames_.find(victim_id);
        DramFrame out = std::move(it->second.frame);
        frames_.erase(it);
        return out;
    }

    std::size_t capacity_;
    std::unordered_map<PageId, Entry> frames_;
    std::list<PageId> lru_;  // front = MRU, back = LRU
};

}  // namespace face
