// nearsim CLI: runs the verification, optimization, scaling, sweep, and
// trace-replay experiments and writes CSV results / gnuplot scripts.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nearsim/experiments.hpp"
#include "nearsim/results.hpp"
#include "nearsim/trace.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string csv_path;
    std::string plot_path;
    std::string reference_path;
    double tolerance_pct = 4.0;
    std::string trace_path;  // replay input
    std::string trace_out;   // capture output
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "config file (section.key = value)");
    cmd->add_option("--set", args.sets, "override: section.key=value")->take_all();
    cmd->add_option("--seed", args.seed, "experiment seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
    cmd->add_option("--csv", args.csv_path, "write results CSV here");
    cmd->add_option("--plot", args.plot_path, "write gnuplot script here");
    cmd->add_option("--reference", args.reference_path, "reference CSV to compare against");
    cmd->add_option("--tolerance", args.tolerance_pct,
                    "max relative error vs reference, percent");
}

int run_command(const std::string& name, CommonArgs& args) {
    using namespace nearsim;

    Config config;
    if (!args.config_path.empty()) config.merge_file(args.config_path);
    for (const std::string& kv : args.sets) config.set_kv(kv);
    const std::uint64_t seed = args.seed_given ? args.seed : config.get_u64("experiment.seed");

    ExperimentSpec spec = ExperimentSpec::make(name, config, seed);

    std::vector<ResultRow> rows;
    if (spec.kind == ExperimentKind::Replay) {
        if (args.trace_path.empty()) throw ConfigError("replay requires --trace <file>");
        const MemEventSeq trace = parse_trace(args.trace_path);
        auto points = experiment_points(spec);
        TableCache tables;
        const std::uint64_t capacity = config.get_u64("table.capacity");
        const auto table =
            tables.get(capacity, points[0].load_factor,
                       table_seed_for(seed, points[0].load_factor), kTableBaseAddress);
        const QueryBatch batch =
            batch_from_trace(trace, *table, kKeyRegionBase,
                             kKeyRegionBase + kKeyRegionStride * points[0].n_accel);
        points[0].batch_size = static_cast<std::uint32_t>(batch.size());
        points[0].n_batches = 1;
        MemEventSeq captured;
        PointOutcome out = run_point(points[0], config, tables, &batch,
                                     args.trace_out.empty() ? nullptr : &captured);
        if (!args.trace_out.empty()) emit_trace(captured, args.trace_out);
        rows.push_back(out.row);
    } else {
        rows = run_experiment(spec);
    }

    if (!args.csv_path.empty()) {
        emit_csv(rows, args.csv_path, &config);
        std::fprintf(stderr, "wrote %zu rows to %s\n", rows.size(), args.csv_path.c_str());
    } else {
        std::fputs(format_csv(rows, nullptr).c_str(), stdout);
    }
    if (!args.plot_path.empty()) {
        emit_plot_script(rows, args.plot_path);
        std::fprintf(stderr, "wrote plot script to %s\n", args.plot_path.c_str());
    }

    if (!args.reference_path.empty()) {
        const CompareReport rep =
            compare_reference(rows, args.reference_path, args.tolerance_pct);
        std::fprintf(stderr, "%s\n", rep.summary().c_str());
        if (!rep.pass) return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nearsim: near-memory key/value lookup accelerator simulator"};
    app.require_subcommand(1);

    const std::vector<std::string> names = {"verify", "optimize", "scale", "sweep", "replay"};
    const std::vector<std::string> descs = {
        "fixed-latency memory model, base engine design",
        "HMC model, cumulative optimization sets",
        "HMC model, all optimizations, 1..N accelerators",
        "generic cross-product from the config",
        "replay a captured memory trace through the pipeline",
    };

    std::vector<CommonArgs> args(names.size());
    std::vector<CLI::App*> cmds;
    for (std::size_t i = 0; i < names.size(); ++i) {
        CLI::App* cmd = app.add_subcommand(names[i], descs[i]);
        add_common(cmd, args[i]);
        if (names[i] == "replay") {
            cmd->add_option("--trace", args[i].trace_path, "input trace file")->required();
            cmd->add_option("--trace-out", args[i].trace_out, "capture the replayed trace");
        }
        cmds.push_back(cmd);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (cmds[i]->parsed()) return run_command(names[i], args[i]);
        }
        return 2;
    } catch (const nearsim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const nearsim::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
