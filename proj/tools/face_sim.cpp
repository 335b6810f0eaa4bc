// face_sim: trace-driven simulator for the tiered page store.
//
// Subcommands: run (one configuration), sweep (cache-size / policy matrix or
// the dram-vs-flash budget table), compare (policy head-to-head), crash
// (fault-injection recovery experiment), breakeven (cost-model analysis).

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "face/face.hpp"

namespace {

struct CommonOpts {
    std::uint64_t flash_frames = 2048;
    std::uint64_t dram_frames = 256;
    std::uint64_t db_pages = 32768;
    std::string policy = "gsc";
    std::string sync = "writeback";
    std::uint64_t scan_depth = 64;
    bool scan_depth_set = false;
    std::string profile = "mlc";
    std::string disk_profile = "disk1";
    std::uint64_t seed = 1;
    std::uint64_t ops = 100000;
    double write_frac = 0.2;
    double skew = 0.8;
    double hot_region = 1.0;
    std::uint64_t ckpt_interval = 0;
    std::uint64_t seg_cap = 4000;
    std::string out = "csv";
    std::string workdir = "face-work";
};

void add_common(CLI::App *cmd, CommonOpts &o) {
    cmd->add_option("--flash-frames", o.flash_frames, "flash cache size in page frames");
    cmd->add_option("--dram-frames", o.dram_frames, "DRAM buffer size in page frames");
    cmd->add_option("--db-pages", o.db_pages, "database size in pages");
    cmd->add_option("--policy", o.policy, "face | gr | gsc | lru2")
        ->check(CLI::IsMember({"face", "gr", "gsc", "lru2"}));
    cmd->add_option("--sync", o.sync, "writeback | writethrough")
        ->check(CLI::IsMember({"writeback", "writethrough"}));
    auto *sd = cmd->add_option("--scan-depth", o.scan_depth, "GR/GSC batch size");
    sd->each([&o](const std::string &) { o.scan_depth_set = true; });
    cmd->add_option("--profile", o.profile, "flash device profile: mlc | slc")
        ->check(CLI::IsMember({"mlc", "slc"}));
    cmd->add_option("--disk-profile", o.disk_profile, "disk device profile: disk1 | raid8")
        ->check(CLI::IsMember({"disk1", "raid8"}));
    cmd->add_option("--seed", o.seed, "workload seed");
    cmd->add_option("--ops", o.ops, "measured operations");
    cmd->add_option("--write-frac", o.write_frac, "fraction of write operations");
    cmd->add_option("--skew", o.skew, "Zipf exponent");
    cmd->add_option("--hot-region", o.hot_region, "fraction of the database the trace touches");
    cmd->add_option("--ckpt-interval", o.ckpt_interval, "ops between database checkpoints");
    cmd->add_option("--seg-cap", o.seg_cap, "metadata segment capacity in entries");
    cmd->add_option("--out", o.out, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--workdir", o.workdir, "directory for engine files");
}

int validate(const CommonOpts &o) {
    if (o.policy == "lru2" && o.scan_depth_set) {
        std::cerr << "usage error: --scan-depth does not apply to --policy lru2\n";
        return 2;
    }
    return 0;
}

face::SimConfig to_sim_config(const CommonOpts &o) {
    face::SimConfig cfg;
    cfg.engine.db_pages = o.db_pages;
    cfg.engine.dram_frames = o.dram_frames;
    cfg.engine.flash.capacity_frames = o.flash_frames;
    if (o.policy == "face") cfg.engine.flash.replacement = face::Replacement::Basic;
    else if (o.policy == "gr") cfg.engine.flash.replacement = face::Replacement::GR;
    else if (o.policy == "gsc") cfg.engine.flash.replacement = face::Replacement::GSC;
    else cfg.engine.flash.replacement = face::Replacement::Lru2;
    cfg.engine.flash.sync = o.sync == "writeback" ? face::SyncPolicy::WriteBack
                                                  : face::SyncPolicy::WriteThrough;
    cfg.engine.flash.scan_depth =
        std::min<std::uint64_t>(o.scan_depth, std::max<std::uint64_t>(o.flash_frames, 1));
    cfg.engine.flash_profile =
        o.profile == "mlc" ? face::DeviceProfile::mlc() : face::DeviceProfile::slc();
    cfg.engine.disk_profile = o.disk_profile == "disk1" ? face::DeviceProfile::disk_single()
                                                        : face::DeviceProfile::disk_raid8();
    cfg.workload.op_count = o.ops;
    cfg.workload.write_fraction = o.write_frac;
    cfg.workload.skew = o.skew;
    cfg.workload.hot_region = o.hot_region;
    cfg.workload.seed = o.seed;
    cfg.workload.db_pages = o.db_pages;
    cfg.workload.checkpoint_interval_ops = o.ckpt_interval;
    cfg.workload.metadata_segment_capacity = o.seg_cap;
    cfg.workdir = o.workdir;
    return cfg;
}

void emit(const std::vector<face::RunResult> &rows, const std::string &out) {
    if (out == "json") {
        std::cout << "[";
        for (std::size_t i = 0; i < rows.size(); i++) {
            std::cout << (i ? "," : "") << "\n  " << face::to_json(rows[i]);
        }
        std::cout << "\n]\n";
    } else {
        std::cout << face::kRunCsvHeader << "\n";
        for (const auto &r : rows) std::cout << face::to_csv_row(r) << "\n";
    }
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"FaCE tiered page-store simulator"};
    app.require_subcommand(1);

    CommonOpts run_opts;
    auto *cmd_run = app.add_subcommand("run", "run one configuration");
    add_common(cmd_run, run_opts);

    CommonOpts sweep_opts;
    auto *cmd_sweep = app.add_subcommand("sweep", "flash-size sweep or dram-vs-flash table");
    add_common(cmd_sweep, sweep_opts);
    std::string axis = "flash";
    std::vector<std::uint64_t> sweep_sizes;
    int df_steps = 5;
    std::uint64_t df_unit = 32;
    cmd_sweep->add_option("--axis", axis, "flash | dramflash")
        ->check(CLI::IsMember({"flash", "dramflash"}));
    cmd_sweep->add_option("--sizes", sweep_sizes, "flash sizes (frames) for the flash axis");
    cmd_sweep->add_option("--steps", df_steps, "budget steps for the dramflash axis");
    cmd_sweep->add_option("--dram-unit", df_unit, "DRAM frames per budget unit");

    CommonOpts cmp_opts;
    auto *cmd_compare = app.add_subcommand("compare", "LC vs FaCE vs GR vs GSC at one size");
    add_common(cmd_compare, cmp_opts);

    CommonOpts crash_opts;
    auto *cmd_crash = app.add_subcommand("crash", "fault-injection recovery experiment");
    add_common(cmd_crash, crash_opts);
    int crash_points = 10;
    cmd_crash->add_option("--points", crash_points, "number of crash points");

    auto *cmd_breakeven = app.add_subcommand("breakeven", "break-even flash-size analysis");
    double be_delta = 1.0;
    std::string be_flash = "mlc", be_disk = "disk1";
    double be_read_weight = 1.0;
    double be_exponent = 0.0;
    cmd_breakeven->add_option("--delta", be_delta, "DRAM increment fraction");
    cmd_breakeven->add_option("--flash", be_flash, "flash profile: mlc | slc")
        ->check(CLI::IsMember({"mlc", "slc"}));
    cmd_breakeven->add_option("--disk", be_disk, "disk profile: disk1 | raid8")
        ->check(CLI::IsMember({"disk1", "raid8"}));
    cmd_breakeven->add_option("--read-weight", be_read_weight,
                              "read share for per-page access times");
    cmd_breakeven->add_option("--exponent", be_exponent,
                              "use this exponent directly instead of deriving it");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            if (int rc = validate(run_opts)) return rc;
            auto cfg = to_sim_config(run_opts);
            emit({face::run(cfg)}, run_opts.out);
        } else if (cmd_sweep->parsed()) {
            if (int rc = validate(sweep_opts)) return rc;
            auto base = to_sim_config(sweep_opts);
            if (axis == "dramflash") {
                auto rows = face::dram_vs_flash_sweep(base, df_steps, df_unit);
                std::cout << face::to_csv(rows);
            } else {
                if (sweep_sizes.empty()) {
                    for (int k = 1; k <= 5; k++) {
                        sweep_sizes.push_back(sweep_opts.db_pages * 4 * k / 100);
                    }
                }
                std::vector<face::RunResult> rows;
                for (std::uint64_t frames : sweep_sizes) {
                    auto cfg = base;
                    cfg.engine.flash.capacity_frames = frames;
                    cfg.engine.flash.scan_depth =
                        std::min<std::uint64_t>(cfg.engine.flash.scan_depth, frames);
                    cfg.workdir = base.workdir.string() + "-" + std::to_string(frames);
                    rows.push_back(face::run(cfg));
                }
                emit(rows, sweep_opts.out);
            }
        } else if (cmd_compare->parsed()) {
            if (int rc = validate(cmp_opts)) return rc;
            auto base = to_sim_config(cmp_opts);
            std::vector<face::RunResult> rows;
            for (auto cfg : face::compare_matrix(base)) {
                cfg.workdir = base.workdir.string() + "-" + face::policy_name(cfg.engine);
                rows.push_back(face::run(cfg));
            }
            emit(rows, cmp_opts.out);
        } else if (cmd_crash->parsed()) {
            if (int rc = validate(crash_opts)) return rc;
            auto base = to_sim_config(crash_opts);
            if (base.workload.checkpoint_interval_ops == 0) {
                base.workload.checkpoint_interval_ops = base.workload.op_count / 4 + 1;
            }
            auto reports = face::run_crash_experiment(base, crash_points, crash_opts.seed);
            std::cout << "prefix_ops,fault,segments_loaded,pages_scanned,entries_rebuilt,"
                         "redo_pages,flash_served_frac,face_io_s,noflash_io_s\n";
            for (const auto &r : reports) {
                std::cout << r.prefix_ops << ',' << static_cast<int>(r.fault) << ','
                          << r.recovery.segments_loaded << ',' << r.recovery.pages_scanned << ','
                          << r.recovery.entries_rebuilt << ',' << r.redo_pages << ','
                          << face::format_double(r.flash_served_fraction()) << ','
                          << face::format_double(r.face_recovery_io_seconds) << ','
                          << face::format_double(r.noflash_recovery_io_seconds) << "\n";
            }
        } else if (cmd_breakeven->parsed()) {
            face::BreakEvenParams p;
            auto fp = be_flash == "mlc" ? face::DeviceProfile::mlc() : face::DeviceProfile::slc();
            auto dp = be_disk == "disk1" ? face::DeviceProfile::disk_single()
                                         : face::DeviceProfile::disk_raid8();
            p.delta = be_delta;
            p.c_flash = face::per_page_access_time(fp, be_read_weight);
            p.c_disk = face::per_page_access_time(dp, be_read_weight);
            double exponent =
                be_exponent > 0.0 ? be_exponent : face::break_even_exponent(p);
            double theta = std::pow(1.0 + be_delta, exponent) - 1.0;
            std::cout << "delta,exponent,theta\n"
                      << face::format_double(be_delta) << ','
                      << face::format_double(exponent) << ',' << face::format_double(theta)
                      << "\n";
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
