#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "face/device_model.hpp"
#include "face/page.hpp"

namespace face {

// Fixed-geometry file of page-sized frames, frame i at byte offset
// i * page_size. Created sparse; reads of never-written frames see zeros.
class PageFile {
public:
    PageFile() = default;

    PageFile(std::filesystem::path path, std::size_t page_size, std::uint64_t frame_count,
             bool truncate)
        : path_(std::move(path)), page_size_(page_size), frame_count_(frame_count) {
        namespace fs = std::filesystem;
        if (truncate || !fs::exists(path_)) {
            std::ofstream create(path_, std::ios::binary | std::ios::trunc);
            if (!create) throw std::runtime_error("cannot create " + path_.string());
        }
        fs::resize_file(path_, static_cast<std::uintmax_t>(frame_count_) * page_size_);
        file_.open(path_, std::ios::binary | std::ios::in | std::ios::out);
        if (!file_) throw std::runtime_error("cannot open " + path_.string());
    }

    std::uint64_t frame_count() const { return frame_count_; }
    std::size_t page_size() const { return page_size_; }
    const std::filesystem::path &path() const { return path_; }

    std::vector<std::uint8_t> read_frame(std::uint64_t frame) {
        check_frame(frame);
        std::vector<std::uint8_t> buf(page_size_);
        file_.seekg(static_cast<std::streamoff>(frame * page_size_));
        file_.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(page_size_));
        if (!file_) throw std::runtime_error("short read from " + path_.string());
        return buf;
    }

    void write_frame(std::uint64_t frame, const std::vector<std::uint8_t> &bytes) {
        check_frame(frame);
        if (bytes.size() != page_size_) {
            throw LengthMismatch("frame write must be exactly one page");
        }
        if (write_observer_) write_observer_(frame);
        file_.seekp(static_cast<std::streamoff>(frame * page_size_));
        file_.write(reinterpret_cast<const char *>(bytes.data()),
                    static_cast<std::streamsize>(bytes.size()));
        if (!file_) throw std::runtime_error("short write to " + path_.string());
    }

    void flush() { file_.flush(); }

    // Test hook: observes every frame write (used to verify append-only
    // write patterns from outside the cache).
    void set_write_observer(std::function<void(std::uint64_t)> fn) {
        write_observer_ = std::move(fn);
    }

private:
    void check_frame(std::uint64_t frame) const {
        if (frame >= frame_count_) {
            throw std::out_of_range("frame " + std::to_string(frame) + " out of range");
        }
    }

    std::filesystem::path path_;
    std::size_t page_size_ = 0;
    std::uint64_t frame_count_ = 0;
    mutable std::fstream file_;
    std::function<void(std::uint64_t)> write_observer_;
};

// Backing disk tier. Every access is a random page I/O charged to the disk
// device. Pages that were never written read back as a fresh image with the
// correct id and lsn 0.
class DiskStore {
public:
    DiskStore(std::filesystem::path path, std::size_t page_size, std::uint64_t page_count,
              CostAccumulator &acc, bool truncate)
        : file_(std::move(path), page_size, page_count, truncate), acc_(&acc) {}

    std::uint64_t page_count() const { return file_.frame_count(); }
    std::size_t page_size() const { return file_.page_size(); }

    PageImage read_page(PageId id) {
        acc_->charge_pages(Device::Disk, IoKind::RandRead, 1);
        return read_page_nocharge(id);
    }

    void write_page(const PageImage &p) {
        acc_->charge_pages(Device::Disk, IoKind::RandWrite, 1);
        if (on_write) on_write(p.page_id, p.page_lsn);
        file_.write_frame(p.page_id, serialize_page(p));
    }

    // Uncharged variants for oracles and recovery verification sweeps.
    PageImage read_page_nocharge(PageId id) {
        auto buf = file_.read_frame(id);
        PageImage p = deserialize_page(buf, file_.page_size());
        if (p.page_id != id) {
            // Never-written frame: synthesize the initial image.
            return PageImage(id, 0, file_.page_size());
        }
        return p;
    }

    Lsn lsn_of(PageId id) { return read_page_nocharge(id).page_lsn; }

    void flush() { file_.flush(); }

    // Notified after a disk write is charged, before bytes land. The engine
    // uses it to reconcile DRAM dirty flags and tests use it as an oracle tap.
    std::function<void(PageId, Lsn)> on_write;

private:
    PageFile file_;
    CostAccumulator *acc_;
};

}  // namespace face
