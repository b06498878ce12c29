#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nearsim/config.hpp"

namespace nearsim {

// One experiment data point. Throughputs are recomputable from the row's own
// timing fields: mlookups_per_s = batch_size * n_batches / t_lookup_ns * 1e3.
struct ResultRow {
    std::string experiment;
    std::string memory_model;
    std::string opts;  // none | batch | batch+bus | batch+bus+out
    std::uint32_t n_accel = 1;
    double load_factor = 0.0;
    std::uint32_t scan_len = 0;
    std::string distribution;
    double hit_ratio = 0.0;
    std::uint32_t batch_size = 0;
    std::uint32_t n_batches = 0;
    double t_lookup_ns = 0.0;       // aggregate lookup time (see README)
    double t_full_lookup_ns = 0.0;  // wall time through the last readback
    double mlookups_per_s = 0.0;
    double full_mlookups_per_s = 0.0;
    std::uint64_t bank_conflicts = 0;
    std::uint64_t seed = 0;

    // Cross-product identity used for canonical ordering and reference
    // matching (everything except timings and seed).
    std::string key() const;
};

std::string csv_header();
std::string format_csv(const std::vector<ResultRow>& rows, const Config* config);
void emit_csv(const std::vector<ResultRow>& rows, const std::string& path,
              const Config* config);

// Parses a CSV produced by emit_csv (comments ignored). Round-trips exactly.
std::vector<ResultRow> parse_csv_text(const std::string& text);
std::vector<ResultRow> parse_csv(const std::string& path);

// Self-contained gnuplot script: lookups/s vs load factor, one series per
// optimization set or accelerator count (whichever the rows vary over).
std::string plot_script(const std::vector<ResultRow>& rows);
void emit_plot_script(const std::vector<ResultRow>& rows, const std::string& path);

struct CompareReport {
    double max_rel_err = 0.0;
    double mean_rel_err = 0.0;
    std::string worst_key;
    std::size_t points = 0;
    double tolerance = 0.0;  // fraction, e.g. 0.04
    bool pass = false;

    std::string summary() const;
};

// Per-point relative error on mlookups_per_s between produced rows and a
// reference CSV keyed by the same cross-product.
CompareReport compare_reference(const std::vector<ResultRow>& rows,
                                const std::string& reference_csv_path,
                                double tolerance_pct);

}  // namespace nearsim
