#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace face {

enum class Device { Flash, Disk };
enum class IoKind { RandRead, RandWrite, SeqRead, SeqWrite };

inline constexpr int kDeviceCount = 2;
inline constexpr int kIoKindCount = 4;

inline const char *to_string(Device d) { return d == Device::Flash ? "flash" : "disk"; }

inline const char *to_string(IoKind k) {
    switch (k) {
        case IoKind::RandRead: return "rand_read";
        case IoKind::RandWrite: return "rand_write";
        case IoKind::SeqRead: return "seq_read";
        default: return "seq_write";
    }
}

// Measured 4KB random throughput (IOPS) and sequential bandwidth (MB/s)
// of one device in steady state.
struct DeviceProfile {
    double rand_read_iops;
    double rand_write_iops;
    double seq_read_bw_mb;
    double seq_write_bw_mb;

    DeviceProfile scaled(double factor) const {
        return {rand_read_iops * factor, rand_write_iops * factor,
                seq_read_bw_mb * factor, seq_write_bw_mb * factor};
    }

    static DeviceProfile mlc() { return {28495, 6314, 251.33, 242.80}; }
    static DeviceProfile slc() { return {38427, 5057, 259.2, 195.25}; }
    static DeviceProfile disk_single() { return {409, 343, 156, 154}; }
    static DeviceProfile disk_raid8() { return {2598, 2502, 848, 843}; }
};

struct IoCharge {
    Device device;
    IoKind kind;
    std::uint64_t bytes;  // positive multiple of page_size
};

struct DeviceKindStats {
    std::uint64_t ops = 0;
    std::uint64_t bytes = 0;
    double busy_seconds = 0.0;
};

struct DeviceStats {
    std::array<DeviceKindStats, kIoKindCount> by_kind{};

    std::uint64_t total_ops() const {
        std::uint64_t n = 0;
        for (const auto &k : by_kind) n += k.ops;
        return n;
    }
    std::uint64_t total_bytes() const {
        std::uint64_t n = 0;
        for (const auto &k : by_kind) n += k.bytes;
        return n;
    }
    double busy_seconds() const {
        double s = 0.0;
        for (const auto &k : by_kind) s += k.busy_seconds;
        return s;
    }
};

struct StatsRecord {
    std::array<DeviceStats, kDeviceCount> devices{};
    double simulated_seconds = 0.0;

    const DeviceStats &of(Device d) const { return devices[static_cast<int>(d)]; }

    double utilization(Device d) const {
        return simulated_seconds > 0.0 ? of(d).busy_seconds() / simulated_seconds : 0.0;
    }
    // Throughput in 4KB-equivalent page operations per simulated second.
    double iops4k(Device d) const {
        if (simulated_seconds <= 0.0) return 0.0;
        return (static_cast<double>(of(d).total_bytes()) / 4096.0) / simulated_seconds;
    }
};

// Accumulates busy time per (device, kind) under a serialized device model:
// charges simply extend the simulated clock, with no overlap between devices.
class CostAccumulator {
public:
    CostAccumulator(std::size_t page_size, DeviceProfile flash, DeviceProfile disk)
        : page_size_(page_size), profiles_{flash, disk} {}

    double charge(const IoCharge &c) {
        if (c.bytes == 0 || c.bytes % page_size_ != 0) {
            throw std::invalid_argument("io charge bytes must be a positive multiple of page size");
        }
        const DeviceProfile &p = profiles_[static_cast<int>(c.device)];
        double cost = 0.0;
        switch (c.kind) {
            case IoKind::RandRead:
                cost = (static_cast<double>(c.bytes) / page_size_) / p.rand_read_iops;
                break;
            case IoKind::RandWrite:
                cost = (static_cast<double>(c.bytes) / page_size_) / p.rand_write_iops;
                break;
            case IoKind::SeqRead:
                cost = static_cast<double>(c.bytes) / (p.seq_read_bw_mb * 1e6);
                break;
            case IoKind::SeqWrite:
                cost = static_cast<double>(c.bytes) / (p.seq_write_bw_mb * 1e6);
                break;
        }
        auto &slot = record_.devices[static_cast<int>(c.device)].by_kind[static_cast<int>(c.kind)];
        slot.ops += c.bytes / page_size_;
        slot.bytes += c.bytes;
        slot.busy_seconds += cost;
        record_.simulated_seconds += cost;
        return cost;
    }

    // Convenience for single-page charges.
    double charge_pages(Device d, IoKind k, std::uint64_t pages) {
        return charge({d, k, pages * page_size_});
    }

    const StatsRecord &report() const { return record_; }
    double clock_seconds() const { return record_.simulated_seconds; }
    std::size_t page_size() const { return page_size_; }
    const DeviceProfile &profile(Device d) const { return profiles_[static_cast<int>(d)]; }

    void reset() { record_ = StatsRecord{}; }

private:
    std::size_t page_size_;
    std::array<DeviceProfile, kDeviceCount> profiles_;
    StatsRecord record_;
};

}  // namespace face
