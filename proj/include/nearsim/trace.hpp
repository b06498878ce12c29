#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nearsim/kvstore.hpp"
#include "nearsim/memmodel.hpp"
#include "nearsim/workload.hpp"

namespace nearsim {

// Memory event interchange format, one record per line:
//   <t_ns> <CPU|ACC> <R|W> <0xADDR> <size>
// Timestamps must be non-decreasing. Hardware capture formats vary, so this
// ASCII form is the project's frozen interchange format.
using MemEventSeq = std::vector<TraceRecord>;

MemEventSeq parse_trace(const std::string& path);
MemEventSeq parse_trace_text(const std::string& text);
void emit_trace(const MemEventSeq& seq, const std::string& path);
std::string format_trace(const MemEventSeq& seq);

// Rebuild a query batch from the accelerator's hash-table reads in a trace.
// Addresses inside [key_region_lo, key_region_hi) are LSU0 key traffic and
// are skipped; reads covering the table region become probe indices
// (index = (addr - base) / 16). Keys hashing to those indices are
// synthesized when a bounded search finds them all; otherwise the batch runs
// in index-replay mode and drives LSU1-R directly.
QueryBatch batch_from_trace(const MemEventSeq& trace, const HashTable& table,
                            std::uint64_t key_region_lo = 0,
                            std::uint64_t key_region_hi = 0,
                            std::uint64_t synth_budget = 4'000'000);

}  // namespace nearsim
