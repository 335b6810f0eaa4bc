#include "face/device_model.hpp"

#include <gtest/gtest.h>

#include <random>

namespace face {
namespace {

CostAccumulator make_acc() {
    return CostAccumulator(4096, DeviceProfile::mlc(), DeviceProfile::disk_single());
}

TEST(DeviceModel, SingleDiskRandomReadCost) {
    auto acc = make_acc();
    double cost = acc.charge({Device::Disk, IoKind::RandRead, 4096});
    EXPECT_NEAR(cost, 1.0 / 409.0, 1e-12);
    EXPECT_NEAR(cost, 2.445e-3, 5e-6);
}

TEST(DeviceModel, GscBatchSequentialWriteCost) {
    auto acc = make_acc();
    double cost = acc.charge({Device::Flash, IoKind::SeqWrite, 64 * 4096});
    EXPECT_NEAR(cost, 262144.0 / 242.80e6, 1e-12);
    EXPECT_NEAR(cost, 1.08e-3, 1e-5);
}

TEST(DeviceModel, ZeroOrUnalignedBytesRejected) {
    auto acc = make_acc();
    EXPECT_THROW(acc.charge({Device::Flash, IoKind::SeqWrite, 0}), std::invalid_argument);
    EXPECT_THROW(acc.charge({Device::Flash, IoKind::RandRead, 100}), std::invalid_argument);
}

TEST(DeviceModel, CostLinearInBytesAndOps) {
    auto acc = make_acc();
    double one = acc.charge({Device::Flash, IoKind::SeqRead, 4096});
    double eight = acc.charge({Device::Flash, IoKind::SeqRead, 8 * 4096});
    EXPECT_NEAR(eight, 8 * one, 1e-15);
    double r1 = acc.charge({Device::Disk, IoKind::RandWrite, 4096});
    double r4 = acc.charge({Device::Disk, IoKind::RandWrite, 4 * 4096});
    EXPECT_NEAR(r4, 4 * r1, 1e-15);
}

TEST(DeviceModel, EmptyReportIsAllZero) {
    auto acc = make_acc();
    const StatsRecord &r = acc.report();
    EXPECT_EQ(r.simulated_seconds, 0.0);
    for (auto d : {Device::Flash, Device::Disk}) {
        EXPECT_EQ(r.of(d).total_ops(), 0u);
        EXPECT_EQ(r.of(d).total_bytes(), 0u);
        EXPECT_EQ(r.utilization(d), 0.0);
        EXPECT_EQ(r.iops4k(d), 0.0);
    }
}

TEST(DeviceModel, CountsMatchShadowTally) {
    auto acc = make_acc();
    std::mt19937_64 rng(3);
    std::uint64_t shadow_ops[2][4] = {};
    std::uint64_t shadow_bytes[2][4] = {};
    double shadow_clock = 0.0;
    for (int i = 0; i < 5000; i++) {
        auto dev = static_cast<Device>(rng() % 2);
        auto kind = static_cast<IoKind>(rng() % 4);
        std::uint64_t pages = 1 + rng() % 64;
        double cost = acc.charge({dev, kind, pages * 4096});
        shadow_ops[static_cast<int>(dev)][static_cast<int>(kind)] += pages;
        shadow_bytes[static_cast<int>(dev)][static_cast<int>(kind)] += pages * 4096;
        shadow_clock += cost;
    }
    const StatsRecord &r = acc.report();
    for (int d = 0; d < 2; d++) {
        for (int k = 0; k < 4; k++) {
            EXPECT_EQ(r.devices[d].by_kind[k].ops, shadow_ops[d][k]);
            EXPECT_EQ(r.devices[d].by_kind[k].bytes, shadow_bytes[d][k]);
        }
    }
    EXPECT_NEAR(r.simulated_seconds, shadow_clock, 1e-9);
    // Serialized devices: utilizations sum to one when busy.
    EXPECT_NEAR(r.utilization(Device::Flash) + r.utilization(Device::Disk), 1.0, 1e-9);
}

TEST(DeviceModel, BuiltInProfilesMatchMeasuredNumbers) {
    auto mlc = DeviceProfile::mlc();
    EXPECT_EQ(mlc.rand_read_iops, 28495);
    EXPECT_EQ(mlc.rand_write_iops, 6314);
    EXPECT_EQ(mlc.seq_read_bw_mb, 251.33);
    EXPECT_EQ(mlc.seq_write_bw_mb, 242.80);
    auto slc = DeviceProfile::slc();
    EXPECT_EQ(slc.rand_read_iops, 38427);
    EXPECT_EQ(slc.rand_write_iops, 5057);
    auto disk = DeviceProfile::disk_single();
    EXPECT_EQ(disk.rand_read_iops, 409);
    EXPECT_EQ(disk.rand_write_iops, 343);
    auto raid = DeviceProfile::disk_raid8();
    EXPECT_EQ(raid.rand_read_iops, 2598);
    EXPECT_EQ(raid.rand_write_iops, 2502);
}

}  // namespace
}  // namespace face
