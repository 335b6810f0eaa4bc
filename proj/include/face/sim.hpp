#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "face/analysis.hpp"
#include "face/engine.hpp"
#include "face/workload.hpp"

namespace face {

struct VerificationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimConfig {
    EngineConfig engine;
    WorkloadSpec workload;
    std::filesystem::path workdir = "face-run";
    bool keep_files = false;
    bool warmup = true;  // run flash-capacity ops before measuring
};

struct RunResult {
    std::string policy;
    std::string sync;
    std::uint64_t flash_frames = 0;
    std::uint64_t dram_frames = 0;
    std::uint64_t seed = 0;
    double dram_hit_rate = 0.0;
    double flash_hit_rate = 0.0;   // flash hits / DRAM misses
    double write_reduction = 0.0;  // 1 - disk writes / dirty DRAM evictions
    double flash_util = 0.0;
    double disk_util = 0.0;
    double flash_iops4k = 0.0;
    double sim_tput = 0.0;  // measured ops per simulated second
    double sim_seconds = 0.0;
    std::uint64_t measured_ops = 0;
    StatsRecord stats;
    EngineCounters counters;
};

inline std::string policy_name(const EngineConfig &cfg) {
    if (!cfg.has_flash()) return "none";
    return to_string(cfg.flash.replacement);
}

// CSV columns, fixed order; shared by `run`, `sweep` and `compare`.
inline const char *kRunCsvHeader =
    "policy,sync,flash_frames,dram_frames,flash_hit_rate,write_reduction,"
    "flash_util,disk_util,flash_iops4k,sim_tput,seed";

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string to_csv_row(const RunResult &r) {
    std::ostringstream os;
    os << r.policy << ',' << r.sync << ',' << r.flash_frames << ',' << r.dram_frames << ','
       << format_double(r.flash_hit_rate) << ',' << format_double(r.write_reduction) << ','
       << format_double(r.flash_util) << ',' << format_double(r.disk_util) << ','
       << format_double(r.flash_iops4k) << ',' << format_double(r.sim_tput) << ',' << r.seed;
    return os.str();
}

inline std::string to_json(const RunResult &r) {
    std::ostringstream os;
    os << "{\"schema\":1,\"policy\":\"" << r.policy << "\",\"sync\":\"" << r.sync
       << "\",\"flash_frames\":" << r.flash_frames << ",\"dram_frames\":" << r.dram_frames
       << ",\"flash_hit_rate\":" << format_double(r.flash_hit_rate)
       << ",\"write_reduction\":" << format_double(r.write_reduction)
       << ",\"flash_util\":" << format_double(r.flash_util)
       << ",\"disk_util\":" << format_double(r.disk_util)
       << ",\"flash_iops4k\":" << format_double(r.flash_iops4k)
       << ",\"sim_tput\":" << format_double(r.sim_tput)
       << ",\"dram_hit_rate\":" << format_double(r.dram_hit_rate)
       << ",\"sim_seconds\":" << format_double(r.sim_seconds)
       << ",\"measured_ops\":" << r.measured_ops << ",\"seed\":" << r.seed << "}";
    return os.str();
}

inline void apply_op(Engine &engine, const TraceOp &op) {
    if (op.kind == TraceOp::Kind::Write) {
        Lsn next = engine.current_lsn() + 1;
        engine.write(op.page, synth_body(op.page, next, engine.config().page_size));
    } else {
        engine.read(op.page);
    }
}

inline RunResult collect_result(Engine &engine, const SimConfig &cfg) {
    const EngineCounters &c = engine.counters();
    const StatsRecord &s = engine.accumulator().report();
    RunResult r;
    r.policy = policy_name(cfg.engine);
    r.sync = to_string(cfg.engine.flash.sync);
    r.flash_frames = cfg.engine.flash.capacity_frames;
    r.dram_frames = cfg.engine.dram_frames;
    r.seed = cfg.workload.seed;
    std::uint64_t ops = c.reads + c.writes;
    r.measured_ops = ops;
    r.dram_hit_rate = ops > 0 ? static_cast<double>(c.dram_hits) / ops : 0.0;
    r.flash_hit_rate =
        c.dram_misses > 0 ? static_cast<double>(c.flash_hits) / c.dram_misses : 0.0;
    r.write_reduction =
        c.dirty_evictions > 0
            ? std::max(0.0, 1.0 - static_cast<double>(c.disk_page_writes) / c.dirty_evictions)
            : 0.0;
    r.flash_util = s.utilization(Device::Flash);
    r.disk_util = s.utilization(Device::Disk);
    r.flash_iops4k = s.iops4k(Device::Flash);
    r.sim_seconds = s.simulated_seconds;
    r.sim_tput = r.sim_seconds > 0.0 ? ops / r.sim_seconds : 0.0;
    r.stats = s;
    r.counters = c;
    return r;
}

// One end-to-end simulation: build a fresh engine, warm the flash cache,
// then measure the workload with periodic database checkpoints.
inline RunResult run(const SimConfig &cfg) {
    std::filesystem::create_directories(cfg.workdir);
    EngineConfig ecfg = cfg.engine;
    ecfg.segment_capacity = cfg.workload.metadata_segment_capacity;
    Engine engine(ecfg, cfg.workdir, true);
    TraceGenerator gen(cfg.workload);
    std::uint64_t interval = cfg.workload.checkpoint_interval_ops;
    std::uint64_t since_checkpoint = 0;
    auto step = [&](const TraceOp &op) {
        apply_op(engine, op);
        if (interval > 0 && ++since_checkpoint >= interval) {
            engine.checkpoint();
            since_checkpoint = 0;
        }
    };
    if (cfg.warmup) {
        std::uint64_t warm = cfg.engine.flash.capacity_frames;
        for (std::uint64_t i = 0; i < warm; i++) step(gen.next());
    }
    engine.reset_measurement();
    for (std::uint64_t i = 0; i < cfg.workload.op_count; i++) step(gen.next());
    RunResult r = collect_result(engine, cfg);
    if (!cfg.keep_files) {
        engine.crash();  // drop state before deleting files
        std::filesystem::remove_all(cfg.workdir);
    }
    return r;
}

// Policy matrix for head-to-head comparisons (LC, FaCE, FaCE+GR, FaCE+GSC).
inline std::vector<SimConfig> compare_matrix(const SimConfig &base) {
    std::vector<SimConfig> out;
    for (Replacement r :
         {Replacement::Lru2, Replacement::Basic, Replacement::GR, Replacement::GSC}) {
        SimConfig c = base;
        c.engine.flash.replacement = r;
        out.push_back(c);
    }
    return out;
}

// --- dram-vs-flash sweep (same budget, two placements) ---------------------

struct DramFlashRow {
    int k = 0;
    double dram_tput = 0.0;
    double flash_tput = 0.0;
};

// For each step k, spends k budget units either on DRAM (flash disabled) or
// on flash (FaCE+GSC) at the configured capacity ratio, and reports the pair
// of simulated throughputs.
inline std::vector<DramFlashRow> dram_vs_flash_sweep(const SimConfig &base, int steps,
                                                     std::uint64_t dram_unit_frames,
                                                     std::uint64_t flash_per_dram = 10) {
    std::vector<DramFlashRow> rows;
    for (int k = 1; k <= steps; k++) {
        DramFlashRow row;
        row.k = k;
        {
            SimConfig c = base;
            c.engine.flash.capacity_frames = 0;
            c.engine.dram_frames = base.engine.dram_frames + k * dram_unit_frames;
            c.workdir = base.workdir / ("dram-" + std::to_string(k));
            row.dram_tput = run(c).sim_tput;
        }
        {
            SimConfig c = base;
            c.engine.flash.replacement = Replacement::GSC;
            c.engine.flash.capacity_frames = k * dram_unit_frames * flash_per_dram;
            c.workdir = base.workdir / ("flash-" + std::to_string(k));
            row.flash_tput = run(c).sim_tput;
        }
        rows.push_back(row);
    }
    return rows;
}

inline std::string to_csv(const std::vector<DramFlashRow> &rows) {
    std::ostringstream os;
    os << "k,dram_tpm,flash_tpm\n";
    for (const auto &r : rows) {
        os << r.k << ',' << format_double(r.dram_tput) << ',' << format_double(r.flash_tput)
           << '\n';
    }
    return os.str();
}

// --- crash experiment -------------------------------------------------------

struct CrashPointReport {
    std::uint64_t prefix_ops = 0;
    FaultKind fault = FaultKind::None;
    RecoveryStats recovery;
    double face_recovery_io_seconds = 0.0;
    double noflash_recovery_io_seconds = 0.0;
    std::uint64_t redo_pages = 0;
    std::uint64_t redo_from_flash = 0;
    std::uint64_t durable_pages_checked = 0;

    double flash_served_fraction() const {
        return redo_pages > 0 ? static_cast<double>(redo_from_flash) / redo_pages : 1.0;
    }
};

// Runs a workload prefix, crashes at the configured point, restarts, checks
// the durability oracle, and measures recovery I/O for both the FaCE engine
// and the no-flash baseline over the same redo set.
inline CrashPointReport run_crash_point(const SimConfig &base, std::uint64_t prefix_ops,
                                        const FaultSpec &fault) {
    CrashPointReport report;
    report.prefix_ops = prefix_ops;
    report.fault = fault.kind;

    // Oracle state shared by both engines (identical DRAM behavior gives an
    // identical eviction and checkpoint stream).
    std::map<PageId, Lsn> durable;     // max lsn that reached flash or disk
    std::set<PageId> redo;             // durably written since last checkpoint
    std::uint64_t interval = base.workload.checkpoint_interval_ops;

    auto drive = [&](Engine &engine, bool track) {
        TraceGenerator gen(base.workload);
        std::uint64_t since = 0;
        for (std::uint64_t i = 0; i < prefix_ops; i++) {
            apply_op(engine, gen.next());
            if (interval > 0 && ++since >= interval) {
                engine.checkpoint();
                if (track) redo.clear();  // redo = durable writes since completion
                since = 0;
            }
        }
    };

    double face_io = 0.0;
    {
        SimConfig cfg = base;
        cfg.workdir = base.workdir / "face";
        std::filesystem::create_directories(cfg.workdir);
        EngineConfig ecfg = cfg.engine;
        ecfg.segment_capacity = cfg.workload.metadata_segment_capacity;
        Engine engine(ecfg, cfg.workdir, true);
        engine.on_flash_enqueue = [&](PageId id, Lsn lsn, bool) {
            auto &d = durable[id];
            d = std::max(d, lsn);
            redo.insert(id);
        };
        engine.on_disk_write = [&](PageId id, Lsn lsn) {
            auto &d = durable[id];
            d = std::max(d, lsn);
            redo.insert(id);
        };
        drive(engine, true);
        engine.crash(fault);

        auto [restarted, stats] = Engine::restart(ecfg, cfg.workdir);
        report.recovery = stats;
        restarted->reset_measurement();
        double t0 = restarted->accumulator().clock_seconds();
        for (PageId id : redo) restarted->read(id);
        report.redo_pages = redo.size();
        report.redo_from_flash = restarted->counters().flash_hits;
        face_io = stats.sim_seconds + (restarted->accumulator().clock_seconds() - t0);

        // Durability: every page must read back at its durable-max lsn
        // (in-DRAM-only updates are legitimately lost; anything newer than
        // durable-max cannot exist).
        for (const auto &[id, lsn] : durable) {
            Lsn got = restarted->read(id).page_lsn;
            if (got < lsn) {
                throw VerificationFailure("page " + std::to_string(id) + " recovered at lsn " +
                                          std::to_string(got) + ", durable max was " +
                                          std::to_string(lsn));
            }
            report.durable_pages_checked++;
        }
    }
    report.face_recovery_io_seconds = face_io;

    {
        // No-flash baseline: same trace, same redo set read from disk.
        SimConfig cfg = base;
        cfg.workdir = base.workdir / "noflash";
        std::filesystem::create_directories(cfg.workdir);
        EngineConfig ecfg = cfg.engine;
        ecfg.flash.capacity_frames = 0;
        Engine engine(ecfg, cfg.workdir, true);
        drive(engine, false);
        engine.crash();
        auto [restarted, stats] = Engine::restart(ecfg, cfg.workdir);
        restarted->reset_measurement();
        double t0 = restarted->accumulator().clock_seconds();
        for (PageId id : redo) restarted->read(id);
        report.noflash_recovery_io_seconds =
            stats.sim_seconds + (restarted->accumulator().clock_seconds() - t0);
    }

    std::filesystem::remove_all(base.workdir);
    return report;
}

// Crash-point schedule: checkpoint-interval midpoints plus seeded random
// points, cycling through the fault kinds.
inline std::vector<CrashPointReport> run_crash_experiment(const SimConfig &base, int crash_points,
                                                          std::uint64_t seed) {
    std::vector<CrashPointReport> reports;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uint64_t interval = base.workload.checkpoint_interval_ops;
    for (int i = 0; i < crash_points; i++) {
        std::uint64_t prefix;
        if (interval > 0 && i % 2 == 0) {
            std::uint64_t k = 1 + (i / 2) % 3;
            prefix = k * interval + interval / 2;  // checkpoint midpoint
        } else {
            std::uint64_t span = std::max<std::uint64_t>(base.workload.op_count, 1);
            prefix = 1 + rng() % span;
        }
        FaultSpec fault;
        switch (i % 4) {
            case 0: fault.kind = FaultKind::None; break;
            case 1: fault.kind = FaultKind::DropSuperblock; break;
            case 2:
                fault.kind = FaultKind::TornSegment;
                fault.keep_fraction = 0.25 + 0.5 * ((i / 4) % 2);
                break;
            default: fault.kind = FaultKind::AbsentSegment; break;
        }
        SimConfig cfg = base;
        cfg.workload.seed = base.workload.seed + static_cast<std::uint64_t>(i) * 7919;
        cfg.workdir = base.workdir / ("crash-" + std::to_string(i));
        reports.push_back(run_crash_point(cfg, prefix, fault));
    }
    return reports;
}

}  // namespace face
