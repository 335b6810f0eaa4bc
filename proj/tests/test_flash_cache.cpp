#include "face/flash_cache.hpp"

#include <gtest/gtest.h>

#include <random>

#include "shadow_mvfifo.hpp"
#include "test_util.hpp"

namespace face {
namespace {

constexpr std::size_t kPage = 256;
constexpr std::uint64_t kDbPages = 4096;

DramFrame frame_of(PageId id, Lsn lsn, bool dirty, bool fdirty, std::uint8_t fill = 0) {
    DramFrame f;
    f.page = test::make_page(id, lsn, kPage, fill);
    f.dirty = dirty;
    f.fdirty = fdirty;
    return f;
}

struct TierFixture {
    test::TempDir dir{"tier"};
    CostAccumulator acc{kPage, DeviceProfile::mlc(), DeviceProfile::disk_single()};
    DiskStore disk{dir.path() / "disk.img", kPage, kDbPages, acc, true};

    std::unique_ptr<FaceTier> make(FlashConfig cfg, std::uint64_t seg_cap = 1000) {
        MetadataConfig m;
        m.page_size = kPage;
        m.capacity_frames = cfg.capacity_frames;
        m.segment_capacity = seg_cap;
        m.scan_depth = cfg.scan_depth;
        return std::make_unique<FaceTier>(dir.path() / "flash.img", dir.path() / "flash.meta",
                                          cfg, m, acc, disk, true);
    }

    std::uint64_t disk_writes() const {
        return acc.report().of(Device::Disk).by_kind[static_cast<int>(IoKind::RandWrite)].ops;
    }
    std::uint64_t flash_writes_bytes() const {
        const auto &d = acc.report().of(Device::Flash);
        return d.by_kind[static_cast<int>(IoKind::SeqWrite)].bytes +
               d.by_kind[static_cast<int>(IoKind::RandWrite)].bytes;
    }
};

FlashConfig config(std::uint64_t cap, Replacement r = Replacement::Basic,
                   SyncPolicy s = SyncPolicy::WriteBack, std::uint64_t scan = 4) {
    FlashConfig c;
    c.capacity_frames = cap;
    c.replacement = r;
    c.sync = s;
    c.scan_depth = scan;
    return c;
}

// Admission guard: enqueue iff fdirty or no valid copy cached.
TEST(FlashCache, AdmitGuardTable) {
    TierFixture fx;
    auto tier = fx.make(config(8));

    // fdirty page, absent: enqueued.
    EXPECT_TRUE(tier->admit(frame_of(1, 1, true, true), nullptr).enqueued);
    EXPECT_TRUE(tier->contains_valid(1));

    // fdirty page with an older version cached: enqueued, old invalidated.
    EXPECT_TRUE(tier->admit(frame_of(1, 2, true, true), nullptr).enqueued);
    EXPECT_EQ(tier->occupancy(), 2u);
    EXPECT_EQ(tier->valid_lsn(1), 2u);
    auto snap = tier->snapshot();
    ASSERT_EQ(snap.size(), 2u);
    EXPECT_FALSE(snap[0].valid);
    EXPECT_TRUE(snap[1].valid);

    // clean page, absent: conditional enqueue fires.
    EXPECT_TRUE(tier->admit(frame_of(2, 0, false, false), nullptr).enqueued);

    // clean page with identical valid copy: discarded, no new version, no I/O.
    std::uint64_t bytes_before = fx.flash_writes_bytes();
    EXPECT_FALSE(tier->admit(frame_of(2, 0, false, false), nullptr).enqueued);
    EXPECT_EQ(tier->occupancy(), 3u);
    EXPECT_EQ(fx.flash_writes_bytes(), bytes_before);

    // dirty but not fdirty with valid copy cached: discarded (same version
    // already staged; flash copy will carry the flush).
    EXPECT_TRUE(tier->admit(frame_of(3, 5, true, true), nullptr).enqueued);
    EXPECT_FALSE(tier->admit(frame_of(3, 5, true, false), nullptr).enqueued);

    tier->verify_invariants();
}

TEST(FlashCache, EvictBasicFlushRule) {
    TierFixture fx;
    auto tier = fx.make(config(8));

    // dirty + valid at front: one disk write.
    tier->admit(frame_of(1, 1, true, true), nullptr);
    auto writes = tier->evict_basic();
    ASSERT_EQ(writes.size(), 1u);
    EXPECT_EQ(writes[0].first, 1u);
    EXPECT_EQ(fx.disk.read_page_nocharge(1).page_lsn, 1u);

    // dirty + invalid at front: discarded.
    tier->admit(frame_of(2, 1, true, true), nullptr);
    tier->admit(frame_of(2, 2, true, true), nullptr);  // invalidates version 1
    EXPECT_TRUE(tier->evict_basic().empty());
    EXPECT_EQ(tier->occupancy(), 1u);

    // clean + valid at front: discarded, disk already current.
    tier->admit(frame_of(4, 0, false, false), nullptr);
    tier->evict_basic();  // drops the remaining version-2 of page 2 (flushes it)
    std::uint64_t before = fx.disk_writes();
    EXPECT_TRUE(tier->evict_basic().empty());
    EXPECT_EQ(fx.disk_writes(), before);

    EXPECT_THROW(tier->evict_basic(), EmptyQueue);
}

TEST(FlashCache, WriteThroughAdmitWritesDiskOnceAndEvictionFlushesNothing) {
    TierFixture fx;
    auto tier = fx.make(config(4, Replacement::Basic, SyncPolicy::WriteThrough));
    std::uint64_t before = fx.disk_writes();
    auto r = tier->admit(frame_of(9, 3, true, true), nullptr);
    EXPECT_TRUE(r.enqueued);
    ASSERT_EQ(r.disk_writes.size(), 1u);
    EXPECT_EQ(fx.disk_writes(), before + 1);
    // Flash metadata records the page as clean.
    auto snap = tier->snapshot();
    ASSERT_EQ(snap.size(), 1u);
    EXPECT_FALSE(snap[0].dirty);
    // Later flash eviction flushes nothing.
    EXPECT_TRUE(tier->evict_basic().empty());
    EXPECT_EQ(fx.disk_writes(), before + 1);
}

TEST(FlashCache, LookupReturnsNewestVersionAndSetsReferenced) {
    TierFixture fx;
    auto tier = fx.make(config(8));
    tier->admit(frame_of(5, 1, true, true, 0xA1), nullptr);
    tier->admit(frame_of(5, 7, true, true, 0xB2), nullptr);
    auto hit = tier->lookup(5);
    ASSERT_TRUE(hit.has_value());
    EXPECT_EQ(hit->page.page_lsn, 7u);
    EXPECT_EQ(hit->page.body[0], 0xB2);
    EXPECT_TRUE(hit->dirty);
    auto snap = tier->snapshot();
    EXPECT_TRUE(snap[1].referenced);
    EXPECT_FALSE(snap[0].referenced);

    // Pages with only invalidated versions miss.
    tier->invalidate(5);
    EXPECT_FALSE(tier->lookup(5).has_value());
    EXPECT_FALSE(tier->lookup(404).has_value());
}

TEST(FlashCache, InvalidateIsMetadataOnly) {
    TierFixture fx;
    auto tier = fx.make(config(8));
    tier->admit(frame_of(3, 2, true, true), nullptr);
    auto stats_before = fx.acc.report().simulated_seconds;
    tier->invalidate(3);
    tier->invalidate(12345);  // absent: no-op
    EXPECT_EQ(fx.acc.report().simulated_seconds, stats_before);
    EXPECT_FALSE(tier->contains_valid(3));
    tier->verify_invariants();
}

TEST(FlashCache, GroupReplacementEquivalentToRepeatedBasicEvictions) {
    TierFixture fx;
    std::mt19937_64 rng(31);
    for (int round = 0; round < 20; round++) {
        auto gr = fx.make(config(16, Replacement::GR, SyncPolicy::WriteBack, 6));
        auto basic = fx.make(config(16, Replacement::Basic, SyncPolicy::WriteBack, 6));
        for (int i = 0; i < 16; i++) {
            PageId id = rng() % 8;
            Lsn lsn = i + 1;
            bool dirty = rng() % 2;
            auto f = frame_of(id, lsn, dirty, dirty);
            gr->admit(f, nullptr);
            basic->admit(f, nullptr);
        }
        auto gr_writes = gr->evict_group_replacement();
        std::vector<std::pair<PageId, Lsn>> basic_writes;
        for (int i = 0; i < 6; i++) {
            auto w = basic->evict_basic();
            basic_writes.insert(basic_writes.end(), w.begin(), w.end());
        }
        EXPECT_EQ(gr_writes, basic_writes);
        auto snap_gr = gr->snapshot();
        auto snap_basic = basic->snapshot();
        ASSERT_EQ(snap_gr.size(), snap_basic.size());
        for (std::size_t i = 0; i < snap_gr.size(); i++) {
            EXPECT_EQ(snap_gr[i].page_id, snap_basic[i].page_id);
            EXPECT_EQ(snap_gr[i].lsn, snap_basic[i].lsn);
            EXPECT_EQ(snap_gr[i].dirty, snap_basic[i].dirty);
            EXPECT_EQ(snap_gr[i].valid, snap_basic[i].valid);
        }
        EXPECT_GE(16u - gr->occupancy(), 1u);  // frees at least one slot
    }
}

TEST(FlashCache, GscAllUnreferencedMatchesGroupReplacement) {
    TierFixture fx;
    auto gsc = fx.make(config(8, Replacement::GSC, SyncPolicy::WriteBack, 4));
    auto gr = fx.make(config(8, Replacement::GR, SyncPolicy::WriteBack, 4));
    for (int i = 0; i < 8; i++) {
        auto f = frame_of(i, i + 1, i % 2, i % 2);
        gsc->admit(f, nullptr);
        gr->admit(f, nullptr);
    }
    auto w1 = gsc->evict_group_second_chance(nullptr);
    auto w2 = gr->evict_group_replacement();
    EXPECT_EQ(w1, w2);
    auto s1 = gsc->snapshot();
    auto s2 = gr->snapshot();
    ASSERT_EQ(s1.size(), s2.size());
    for (std::size_t i = 0; i < s1.size(); i++) {
        EXPECT_EQ(s1[i].page_id, s2[i].page_id);
        EXPECT_EQ(s1[i].lsn, s2[i].lsn);
    }
}

TEST(FlashCache, GscAllReferencedForcesExactlyOneEviction) {
    TierFixture fx;
    auto tier = fx.make(config(4, Replacement::GSC, SyncPolicy::WriteBack, 4));
    for (int i = 0; i < 4; i++) {
        tier->admit(frame_of(i, i + 1, true, true), nullptr);
        tier->lookup(i);  // sets referenced
    }
    auto writes = tier->evict_group_second_chance(nullptr);
    // Front frame (page 0) forcibly evicted and flushed; three survivors.
    ASSERT_EQ(writes.size(), 1u);
    EXPECT_EQ(writes[0].first, 0u);
    auto snap = tier->snapshot();
    ASSERT_EQ(snap.size(), 3u);
    for (std::size_t i = 0; i < snap.size(); i++) {
        EXPECT_EQ(snap[i].page_id, i + 1);
        EXPECT_FALSE(snap[i].referenced);  // reset on the second chance
        EXPECT_TRUE(snap[i].valid);
    }
    EXPECT_EQ(tier->occupancy(), 3u);
    tier->verify_invariants();
}

TEST(FlashCache, GscPullsDramTailThroughAdmissionRule) {
    TierFixture fx;
    auto tier = fx.make(config(6, Replacement::GSC, SyncPolicy::WriteBack, 6));
    DramBuffer dram(16);
    for (int i = 0; i < 6; i++) tier->admit(frame_of(100 + i, i + 1, true, true), nullptr);
    tier->lookup(102);  // one survivor
    // DRAM holds 4 frames; two dirty, one clean-duplicate of a cached page.
    dram.install(test::make_page(200, 0, kPage), FetchSource::Disk);
    dram.install(test::make_page(201, 0, kPage), FetchSource::Disk);
    dram.update(201, std::vector<std::uint8_t>(kPage - kPageHeaderSize, 1), 50);
    dram.install(test::make_page(102, 3, kPage), FetchSource::Flash, true);  // same version cached
    dram.install(test::make_page(203, 0, kPage), FetchSource::Disk);

    tier->evict_group_second_chance(&dram);
    // Batch of 6 dequeued, survivor 102 re-enqueued; refill budget is
    // 6 - 1 - 1 = 4, so all four DRAM frames are pulled. 200 enqueues
    // (clean, absent), 201 enqueues (dirty), 102 is discarded (clean
    // duplicate of the surviving copy), 203 enqueues.
    EXPECT_EQ(dram.size(), 0u);
    auto snap = tier->snapshot();
    ASSERT_EQ(snap.size(), 4u);
    EXPECT_EQ(snap[0].page_id, 102u);
    EXPECT_EQ(snap[1].page_id, 200u);
    EXPECT_EQ(snap[2].page_id, 201u);
    EXPECT_TRUE(snap[2].dirty);
    EXPECT_EQ(snap[3].page_id, 203u);
    tier->verify_invariants();
}

TEST(FlashCache, GscShortBatchWhenDramCannotSupply) {
    TierFixture fx;
    auto tier = fx.make(config(4, Replacement::GSC, SyncPolicy::WriteBack, 4));
    DramBuffer dram(4);  // empty
    for (int i = 0; i < 4; i++) tier->admit(frame_of(i, i + 1, true, true), nullptr);
    tier->lookup(3);
    tier->evict_group_second_chance(&dram);
    auto snap = tier->snapshot();
    ASSERT_EQ(snap.size(), 1u);  // survivor only; nothing to pull
    EXPECT_EQ(snap[0].page_id, 3u);
}

TEST(FlashCache, SequentialAppendOnlyWritesAtRear) {
    TierFixture fx;
    auto tier = fx.make(config(16, Replacement::GSC, SyncPolicy::WriteBack, 4));
    DramBuffer dram(8);
    std::uint64_t writes_seen = 0;
    tier->data_file().set_write_observer([&](std::uint64_t slot) {
        ASSERT_EQ(slot, tier->rear() % tier->capacity());
        writes_seen++;
    });
    std::mt19937_64 rng(41);
    for (int i = 0; i < 500; i++) {
        PageId id = rng() % 24;
        bool dirty = rng() % 2;
        tier->admit(frame_of(id, i + 1, dirty, dirty), &dram);
        if (rng() % 4 == 0) tier->lookup(rng() % 24);
    }
    EXPECT_GT(writes_seen, 0u);
    tier->verify_invariants();
}

// Randomized equivalence against the naive multi-version list simulator,
// including the replacement modes, sync policies and DRAM pulls.
TEST(FlashCache, ShadowOracleRandomizedEquivalence) {
    std::mt19937_64 rng(20240807);
    for (int round = 0; round < 60; round++) {
        TierFixture fx;
        FlashConfig cfg;
        cfg.capacity_frames = 2 + rng() % 31;
        cfg.scan_depth = 1 + rng() % cfg.capacity_frames;
        cfg.replacement = static_cast<Replacement>(rng() % 3);
        cfg.sync = rng() % 4 == 0 ? SyncPolicy::WriteThrough : SyncPolicy::WriteBack;
        auto tier = fx.make(cfg);
        test::ShadowMvFifo shadow(cfg);
        DramBuffer dram_engine(64);
        DramBuffer dram_shadow(64);
        std::uint64_t next_lsn = 1;

        for (int step = 0; step < 300; step++) {
            int action = static_cast<int>(rng() % 6);
            PageId id = rng() % 12;
            switch (action) {
                case 0:
                case 1: {  // admit a synthetic evicted frame
                    bool dirty = rng() % 2;
                    bool fdirty = dirty && rng() % 2;
                    Lsn lsn = fdirty ? next_lsn++ : rng() % next_lsn;
                    auto f = frame_of(id, lsn, dirty, fdirty);
                    bool e1 = tier->admit(f, &dram_engine).enqueued;
                    bool e2 = shadow.admit(f, &dram_shadow);
                    ASSERT_EQ(e1, e2);
                    break;
                }
                case 2: {  // lookup
                    auto hit = tier->lookup(id);
                    auto expect = shadow.lookup(id);
                    ASSERT_EQ(hit.has_value(), expect.has_value());
                    if (hit) ASSERT_EQ(hit->page.page_lsn, *expect);
                    break;
                }
                case 3:  // invalidate
                    tier->invalidate(id);
                    shadow.invalidate(id);
                    break;
                case 4: {  // grow DRAM so GSC has pull candidates
                    if (dram_engine.size() < 48 && dram_engine.peek(id) == nullptr) {
                        bool dirty = rng() % 2;
                        Lsn lsn = dirty ? next_lsn++ : 0;
                        auto page = test::make_page(id, lsn, kPage);
                        dram_engine.install(page, FetchSource::Disk);
                        dram_shadow.install(page, FetchSource::Disk);
                        if (dirty) {
                            auto body = std::vector<std::uint8_t>(kPage - kPageHeaderSize, 7);
                            Lsn up = next_lsn++;
                            dram_engine.update(id, body, up);
                            dram_shadow.update(id, body, up);
                        }
                    }
                    break;
                }
                default: {  // explicit eviction op
                    if (tier->occupancy() == 0) break;
                    switch (cfg.replacement) {
                        case Replacement::Basic:
                            tier->evict_basic();
                            shadow.evict_basic();
                            break;
                        case Replacement::GR:
                            tier->evict_group_replacement();
                            shadow.evict_group_replacement();
                            break;
                        default:
                            tier->evict_group_second_chance(&dram_engine);
                            shadow.evict_group_second_chance(&dram_shadow);
                            break;
                    }
                    break;
                }
            }
            // Full metadata state comparison.
            auto snap = tier->snapshot();
            const auto &ref = shadow.queue();
            ASSERT_EQ(snap.size(), ref.size()) << "round " << round << " step " << step;
            for (std::size_t i = 0; i < snap.size(); i++) {
                ASSERT_EQ(snap[i].page_id, ref[i].id);
                ASSERT_EQ(snap[i].lsn, ref[i].lsn);
                ASSERT_EQ(snap[i].dirty, ref[i].dirty);
                ASSERT_EQ(snap[i].valid, ref[i].valid);
                ASSERT_EQ(snap[i].referenced, ref[i].referenced);
            }
            ASSERT_EQ(fx.disk_writes(), shadow.disk_writes);
            tier->verify_invariants();
        }
    }
}

}  // namespace
}  // namespace face
