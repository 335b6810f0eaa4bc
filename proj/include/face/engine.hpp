#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "face/baselines.hpp"
#include "face/device_model.hpp"
#include "face/dram_buffer.hpp"
#include "face/flash_cache.hpp"
#include "face/recovery.hpp"
#include "face/storage.hpp"

namespace face {

struct FreshnessViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EngineConfig {
    std::size_t page_size = kDefaultPageSize;
    std::uint64_t db_pages = 0;
    std::size_t dram_frames = 0;
    FlashConfig flash;  // capacity_frames == 0 disables the flash tier
    std::uint64_t segment_capacity = kDefaultSegmentCapacity;
    DeviceProfile flash_profile = DeviceProfile::mlc();
    DeviceProfile disk_profile = DeviceProfile::disk_single();
    double lc_clean_threshold = 1.0;
    bool verify_freshness = false;  // checked mode: assert every read is current
    bool checked_invariants = false;  // checked mode: re-verify queue invariants per op

    bool has_flash() const { return flash.capacity_frames > 0; }
    bool is_lc() const { return flash.replacement == Replacement::Lru2; }
};

// How a crash treats the metadata flush that may have been in flight.
enum class FaultKind {
    None,             // media exactly as written
    DropSuperblock,   // latest superblock write never happened
    TornSegment,      // ... and the unacknowledged segment is half-written
    AbsentSegment,    // ... and the unacknowledged segment never made it
};

struct FaultSpec {
    FaultKind kind = FaultKind::None;
    double keep_fraction = 0.5;  // entries kept of a torn segment
};

struct EngineCounters {
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
    std::uint64_t dram_hits = 0;
    std::uint64_t dram_misses = 0;
    std::uint64_t flash_hits = 0;
    std::uint64_t disk_fetches = 0;
    std::uint64_t evictions = 0;
    std::uint64_t dirty_evictions = 0;
    std::uint64_t disk_page_writes = 0;
    std::uint64_t flash_enqueues = 0;
    std::uint64_t checkpoints = 0;
};

// The assembled page store: DRAM buffer over an optional flash tier over the
// backing disk, every device access charged to the cost model. Traces are a
// serialized operation stream; one engine instance per working directory.
class Engine {
public:
    Engine(EngineConfig cfg, std::filesystem::path workdir, bool fresh = true)
        : cfg_(cfg),
          workdir_(std::move(workdir)),
          acc_(cfg.page_size, cfg.flash_profile, cfg.disk_profile),
          dram_(cfg.dram_frames) {
        if (cfg_.db_pages == 0) throw std::invalid_argument("db_pages must be > 0");
        if (cfg_.dram_frames == 0) throw std::invalid_argument("dram_frames must be > 0");
        std::filesystem::create_directories(workdir_);
        disk_ = std::make_unique<DiskStore>(workdir_ / "disk.img", cfg_.page_size, cfg_.db_pages,
                                            acc_, fresh);
        disk_->on_write = [this](PageId id, Lsn lsn) {
            counters_.disk_page_writes++;
            dram_.mark_disk_synced(id, lsn);
            if (on_disk_write) on_disk_write(id, lsn);
        };
        if (cfg_.has_flash()) {
            if (cfg_.is_lc()) {
                tier_ = std::make_unique<LcTier>(workdir_ / "flash.img", cfg_.flash,
                                                 cfg_.page_size, acc_, *disk_,
                                                 cfg_.lc_clean_threshold);
            } else if (fresh) {
                tier_ = make_face_tier(true);
            }
            // A non-fresh FaCE tier is built by restart().
        }
        wire_face_hooks();
    }

    // Reconstructs an engine from the durable files left by a crash or a
    // clean shutdown. Only meaningful for FaCE configurations (LC has no
    // persistent metadata and restarts cold).
    static std::pair<std::unique_ptr<Engine>, RecoveryStats> restart(
        EngineConfig cfg, std::filesystem::path workdir, FaceRecoveryOptions opts = {}) {
        auto engine = std::make_unique<Engine>(cfg, workdir, false);
        RecoveryStats stats;
        if (cfg.has_flash() && !cfg.is_lc()) {
            auto [tier, rstats] = FaceTier::restore(
                workdir / "flash.img", workdir / "flash.meta", cfg.flash,
                engine->metadata_config(), engine->acc_, *engine->disk_, opts);
            engine->tier_ = std::move(tier);
            engine->wire_face_hooks();
            stats = rstats;
            engine->lsn_clock_ = stats.max_lsn;
        }
        engine->last_recovery_ = stats;
        return {std::move(engine), stats};
    }

    // --- trace operations ----------------------------------------------

    const PageImage &read(PageId id) {
        check_page(id);
        counters_.reads++;
        return fetch(id);
    }

    // Applies a logical write: the page is fetched if absent, then updated
    // in the DRAM buffer under the next global LSN.
    Lsn write(PageId id, const std::vector<std::uint8_t> &body) {
        check_page(id);
        counters_.writes++;
        const PageImage &current = fetch(id);
        // Strictly increasing clock; floored above any recovered version.
        lsn_clock_ = std::max(lsn_clock_, current.page_lsn) + 1;
        Lsn lsn = lsn_clock_;
        dram_.update(id, body, lsn);
        if (cfg_.verify_freshness) shadow_[id] = lsn;
        return lsn;
    }

    // Database checkpoint. FaCE checks dirty DRAM pages into the flash cache
    // (never straight to disk); LC and the no-flash configuration must push
    // them to disk.
    void checkpoint() {
        counters_.checkpoints++;
        if (tier_) {
            tier_->checkpoint(dram_);
        } else {
            flush_dram_to_disk();
        }
    }

    // Clean shutdown: persist everything, then flush file buffers.
    void shutdown() {
        checkpoint();
        if (tier_) tier_->shutdown();
        disk_->flush();
    }

    // Crash: in-memory state is discarded, durable files stay, and the fault
    // injector decides the fate of a metadata flush modeled as in-flight.
    // The engine is unusable afterwards; reopen via restart().
    void crash(const FaultSpec &fault = {}) {
        if (auto *face = face_tier()) {
            face->data_file().flush();
            face->directory().raw_file().flush();
        }
        disk_->flush();
        std::filesystem::path meta_path = workdir_ / "flash.meta";
        bool was_face = face_tier() != nullptr;
        tier_.reset();
        dram_.clear();
        shadow_.clear();
        crashed_ = true;
        if (was_face && fault.kind != FaultKind::None) {
            inject_fault(meta_path, fault);
        }
    }

    // Post-restart sweep: every valid dirty flash frame must be readable and
    // at least as new as its disk copy. Nothing is flushed.
    std::uint64_t recover_dirty_pages() {
        auto *face = face_tier();
        if (face == nullptr) return 0;
        std::uint64_t count = 0;
        for (const auto &m : face->snapshot()) {
            if (!m.valid || !m.dirty) continue;
            acc_.charge_pages(Device::Flash, IoKind::RandRead, 1);
            PageImage flash_copy =
                deserialize_page(face->data_file().read_frame(m.frame_index), cfg_.page_size);
            PageImage disk_copy = disk_->read_page(m.page_id);
            if (flash_copy.page_lsn < disk_copy.page_lsn) {
                throw FreshnessViolation("dirty flash copy of page " +
                                         std::to_string(m.page_id) + " older than disk");
            }
            count++;
        }
        return count;
    }

    // --- accessors -------------------------------------------------------

    const EngineConfig &config() const { return cfg_; }
    const EngineCounters &counters() const { return counters_; }
    CostAccumulator &accumulator() { return acc_; }
    DramBuffer &dram() { return dram_; }
    DiskStore &disk() { return *disk_; }
    FlashTier *tier() { return tier_.get(); }
    FaceTier *face_tier() {
        return cfg_.has_flash() && !cfg_.is_lc() ? static_cast<FaceTier *>(tier_.get()) : nullptr;
    }
    LcTier *lc_tier() {
        return cfg_.has_flash() && cfg_.is_lc() ? static_cast<LcTier *>(tier_.get()) : nullptr;
    }
    Lsn current_lsn() const { return lsn_clock_; }
    const RecoveryStats &last_recovery() const { return last_recovery_; }
    const std::filesystem::path &workdir() const { return workdir_; }

    MetadataConfig metadata_config() const {
        MetadataConfig m;
        m.page_size = cfg_.page_size;
        m.capacity_frames = cfg_.flash.capacity_frames;
        m.segment_capacity = cfg_.segment_capacity;
        m.scan_depth = cfg_.flash.scan_depth;
        return m;
    }

    // Starts a measurement window: zeroes op counters and device charges.
    void reset_measurement() {
        counters_ = EngineCounters{};
        acc_.reset();
    }

    // Test taps.
    std::function<void(PageId, Lsn)> on_disk_write;
    std::function<void(PageId, Lsn, bool dirty)> on_flash_enqueue;
    std::function<void(PageId)> on_disk_fetch;

private:
    std::unique_ptr<FaceTier> make_face_tier(bool fresh) {
        return std::make_unique<FaceTier>(workdir_ / "flash.img", workdir_ / "flash.meta",
                                          cfg_.flash, metadata_config(), acc_, *disk_, fresh);
    }

    void wire_face_hooks() {
        if (auto *face = face_tier()) {
            face->on_enqueue = [this](const FlashFrameMeta &m) {
                counters_.flash_enqueues++;
                if (on_flash_enqueue) on_flash_enqueue(m.page_id, m.lsn, m.dirty);
            };
            face->on_pulled = [this](const DramFrame &f) {
                counters_.evictions++;
                if (f.dirty) counters_.dirty_evictions++;
            };
        }
    }

    void check_page(PageId id) const {
        if (crashed_) throw std::logic_error("engine used after crash");
        if (id >= cfg_.db_pages) throw std::out_of_range("page id beyond database");
    }

    const PageImage &fetch(PageId id) {
        if (DramFrame *hit = dram_.lookup(id)) {
            counters_.dram_hits++;
            verify(id, hit->page.page_lsn);
            return hit->page;
        }
        counters_.dram_misses++;
        std::optional<DramFrame> victim;
        if (tier_) {
            if (auto flash_hit = tier_->lookup(id)) {
                counters_.flash_hits++;
                verify(id, flash_hit->page.page_lsn);
                victim = dram_.install(std::move(flash_hit->page), FetchSource::Flash,
                                       flash_hit->dirty);
            } else {
                victim = install_from_disk(id);
            }
        } else {
            victim = install_from_disk(id);
        }
        if (victim) handle_eviction(*victim);
        if (cfg_.checked_invariants) {
            if (auto *face = face_tier()) face->verify_invariants();
            if (auto *lc = lc_tier()) lc->verify_invariants();
        }
        DramFrame *frame = dram_.lookup(id);
        return frame->page;
    }

    std::optional<DramFrame> install_from_disk(PageId id) {
        PageImage page = disk_->read_page(id);
        counters_.disk_fetches++;
        if (on_disk_fetch) on_disk_fetch(id);
        verify(id, page.page_lsn);
        return dram_.install(std::move(page), FetchSource::Disk);
    }

    void handle_eviction(const DramFrame &victim) {
        counters_.evictions++;
        if (victim.dirty) counters_.dirty_evictions++;
        if (tier_) {
            tier_->admit(victim, &dram_);
        } else if (victim.dirty) {
            disk_->write_page(victim.page);
        }
    }

    void flush_dram_to_disk() {
        for (PageId id : dram_.dirty_page_ids()) {
            const DramFrame *f = dram_.peek(id);
            if (f == nullptr || !f->dirty) continue;
            disk_->write_page(f->page);
        }
    }

    void verify(PageId id, Lsn got) {
        if (!cfg_.verify_freshness) return;
        auto it = shadow_.find(id);
        if (it == shadow_.end()) {
            shadow_[id] = got;  // unseen since start/restart; adopt
        } else if (it->second != got) {
            throw FreshnessViolation("page " + std::to_string(id) + " read lsn " +
                                     std::to_string(got) + ", latest is " +
                                     std::to_string(it->second));
        }
    }

    // Mutates flash.meta to model where the crash landed inside the
    // (segment write, superblock write) sequence of the last flush.
    void inject_fault(const std::filesystem::path &meta_path, const FaultSpec &fault) {
        MetaFile file(meta_path, false);
        std::optional<SuperBlock> newest, previous;
        std::uint64_t newest_slot = 0;
        for (std::uint64_t slot = 0; slot < 2; slot++) {
            auto bytes = file.read_at(slot * kSuperBlockSlotSize, kSuperBlockSlotSize);
            auto sb = decode_superblock(bytes.data());
            if (!sb) continue;
            if (!newest || sb->seq_no > newest->seq_no) {
                previous = newest;
                newest = sb;
                newest_slot = slot;
            } else {
                previous = sb;
            }
        }
        // With no earlier superblock to fall back to, dropping the newest
        // would model a corrupt store, which is a separate scenario.
        if (!newest || !previous) return;

        std::vector<std::uint8_t> zeros(kSuperBlockSlotSize, 0);
        file.write_at(newest_slot * kSuperBlockSlotSize, zeros.data(), zeros.size());

        if (fault.kind == FaultKind::TornSegment || fault.kind == FaultKind::AbsentSegment) {
            // The byte range of entries the dropped superblock had acked
            // beyond the surviving one.
            std::uint64_t from = previous->persisted_entries;
            std::uint64_t to = newest->persisted_entries;
            if (to > from) {
                std::uint64_t keep =
                    fault.kind == FaultKind::AbsentSegment
                        ? 0
                        : static_cast<std::uint64_t>((to - from) * fault.keep_fraction);
                std::uint64_t zero_from = from + keep;
                if (to > zero_from) {
                    std::uint64_t off = kSegmentRegionOffset + zero_from * kMetadataEntrySize;
                    std::vector<std::uint8_t> wipe((to - zero_from) * kMetadataEntrySize, 0);
                    file.write_at(off, wipe.data(), wipe.size());
                }
            }
        }
        file.flush();
    }

    EngineConfig cfg_;
    std::filesystem::path workdir_;
    CostAccumulator acc_;
    DramBuffer dram_;
    std::unique_ptr<DiskStore> disk_;
    std::unique_ptr<FlashTier> tier_;
    EngineCounters counters_;
    Lsn lsn_clock_ = 0;
    bool crashed_ = false;
    std::unordered_map<PageId, Lsn> shadow_;
    RecoveryStats last_recovery_;
};

}  // namespace face
