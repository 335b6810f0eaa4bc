#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "face/page.hpp"

namespace face::test {

// Unique scratch directory per fixture, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string &tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("face-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path &path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline PageImage random_page(std::mt19937_64 &rng, std::size_t page_size,
                             std::uint64_t max_id = 1 << 20) {
    PageImage p(rng() % max_id, rng(), page_size);
    for (auto &b : p.body) b = static_cast<std::uint8_t>(rng());
    return p;
}

inline PageImage make_page(PageId id, Lsn lsn, std::size_t page_size, std::uint8_t fill = 0) {
    PageImage p(id, lsn, page_size);
    for (auto &b : p.body) b = fill;
    return p;
}

}  // namespace face::test
