#pragma once

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "face/metadata.hpp"
#include "face/page.hpp"

namespace face {

struct TraceOp {
    enum class Kind { Read, Write };
    Kind kind;
    PageId page;
};

// Deterministic skewed OLTP-style trace: Zipf-distributed page references
// over a hot region of the database, with a fixed write fraction. The same
// spec always yields the identical operation stream.
struct WorkloadSpec {
    std::uint64_t op_count = 100000;
    double write_fraction = 0.2;
    double skew = 0.8;       // Zipf exponent; 0 = uniform
    double hot_region = 1.0; // fraction of db_pages the trace touches
    std::uint64_t seed = 1;
    std::uint64_t db_pages = 32768;
    std::uint64_t checkpoint_interval_ops = 0;  // 0 disables checkpoints
    std::uint64_t metadata_segment_capacity = kDefaultSegmentCapacity;
};

// Inverse-CDF Zipf sampler over ranks [0, n). Rank r has weight
// (r+1)^(-exponent).
class ZipfSampler {
public:
    ZipfSampler(std::uint64_t n, double exponent) : cumulative_(n) {
        if (n == 0) throw std::invalid_argument("zipf over empty universe");
        double acc = 0.0;
        for (std::uint64_t r = 0; r < n; r++) {
            acc += std::pow(static_cast<double>(r + 1), -exponent);
            cumulative_[r] = acc;
        }
        total_ = acc;
    }

    std::uint64_t sample(double u01) const {
        double target = u01 * total_;
        auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), target);
        if (it == cumulative_.end()) return cumulative_.size() - 1;
        return static_cast<std::uint64_t>(it - cumulative_.begin());
    }

    // Probability mass of the top-k ranks (analytic oracle for tests).
    double mass_of_top(std::uint64_t k) const {
        if (k == 0) return 0.0;
        k = std::min<std::uint64_t>(k, cumulative_.size());
        return cumulative_[k - 1] / total_;
    }

private:
    std::vector<double> cumulative_;
    double total_ = 0.0;
};

// Scatters hot ranks across the page id space with a multiplicative
// permutation so adjacent ranks do not map to adjacent pages.
inline PageId scatter_rank(std::uint64_t rank, std::uint64_t db_pages) {
    std::uint64_t a = 2654435761u;
    while (std::gcd<std::uint64_t, std::uint64_t>(a, db_pages) != 1) a += 2;
    return (rank * a) % db_pages;
}

class TraceGenerator {
public:
    explicit TraceGenerator(const WorkloadSpec &spec)
        : spec_(spec),
          rng_(spec.seed),
          zipf_(hot_pages(spec), spec.skew) {}

    TraceOp next() {
        double uk = uniform01();
        double up = uniform01();
        TraceOp op;
        op.kind = uk < spec_.write_fraction ? TraceOp::Kind::Write : TraceOp::Kind::Read;
        op.page = scatter_rank(zipf_.sample(up), spec_.db_pages);
        return op;
    }

    static std::uint64_t hot_pages(const WorkloadSpec &spec) {
        auto hot = static_cast<std::uint64_t>(spec.hot_region * static_cast<double>(spec.db_pages));
        return std::clamp<std::uint64_t>(hot, 1, spec.db_pages);
    }

    const ZipfSampler &zipf() const { return zipf_; }

private:
    double uniform01() {
        return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    }

    WorkloadSpec spec_;
    std::mt19937_64 rng_;
    ZipfSampler zipf_;
};

inline std::vector<TraceOp> generate_trace(const WorkloadSpec &spec) {
    TraceGenerator gen(spec);
    std::vector<TraceOp> ops;
    ops.reserve(spec.op_count);
    for (std::uint64_t i = 0; i < spec.op_count; i++) ops.push_back(gen.next());
    return ops;
}

// Deterministic page body for a logical write: a cheap pattern derived from
// (page, lsn) so content checks can recompute it.
inline std::vector<std::uint8_t> synth_body(PageId id, Lsn lsn, std::size_t page_size) {
    std::vector<std::uint8_t> body(page_size - kPageHeaderSize);
    std::uint64_t x = id * 0x9e3779b97f4a7c15ull ^ lsn * 0xbf58476d1ce4e5b9ull;
    for (std::size_t i = 0; i + 8 <= body.size(); i += 8) {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        store_le64(body.data() + i, x);
    }
    return body;
}

}  // namespace face
