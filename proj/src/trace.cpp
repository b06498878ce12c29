#include "nearsim/trace.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace nearsim {

namespace {

MemEventSeq parse_stream(std::istream& in) {
    MemEventSeq seq;
    std::string line;
    std::size_t line_no = 0;
    SimTime prev = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string src, op, addr;
        std::uint64_t t_ns = 0;
        std::uint64_t size = 0;
        if (!(ss >> t_ns)) {
            std::string rest;
            ss.clear();
            if (ss >> rest) throw ParseError(line_no, "expected integer timestamp");
            continue;  // blank line
        }
        if (!(ss >> src >> op >> addr >> size)) {
            throw ParseError(line_no, "expected `<t_ns> <CPU|ACC> <R|W> <0xADDR> <size>`");
        }
        std::string extra;
        if (ss >> extra) throw ParseError(line_no, "trailing field `" + extra + "`");

        TraceRecord r;
        r.at = t_ns * kPsPerNs;
        if (src == "CPU") {
            r.source = PortSource::Cpu;
        } else if (src == "ACC") {
            r.source = PortSource::Accel;
        } else {
            throw ParseError(line_no, "source must be CPU or ACC, got `" + src + "`");
        }
        if (op == "R") {
            r.op = MemOp::Read;
        } else if (op == "W") {
            r.op = MemOp::Write;
        } else {
            throw ParseError(line_no, "op must be R or W, got `" + op + "`");
        }
        if (addr.rfind("0x", 0) != 0 && addr.rfind("0X", 0) != 0) {
            throw ParseError(line_no, "address must be hex with 0x prefix");
        }
        try {
            std::size_t used = 0;
            r.address = std::stoull(addr.substr(2), &used, 16);
            if (used != addr.size() - 2) throw std::invalid_argument(addr);
        } catch (const std::exception&) {
            throw ParseError(line_no, "bad address `" + addr + "`");
        }
        if (size == 0) throw ParseError(line_no, "size must be >= 1");
        r.size = static_cast<std::uint32_t>(size);
        if (r.at < prev) throw ParseError(line_no, "timestamps must be non-decreasing");
        prev = r.at;
        seq.push_back(r);
    }
    return seq;
}

}  // namespace

MemEventSeq parse_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(0, "cannot open trace file: " + path);
    return parse_stream(f);
}

MemEventSeq parse_trace_text(const std::string& text) {
    std::istringstream ss(text);
    return parse_stream(ss);
}

std::string format_trace(const MemEventSeq& seq) {
    std::ostringstream out;
    char buf[96];
    for (const TraceRecord& r : seq) {
        std::snprintf(buf, sizeof(buf), "%llu %s %s 0x%llx %u\n",
                      static_cast<unsigned long long>(r.at / kPsPerNs),
                      r.source == PortSource::Cpu ? "CPU" : "ACC",
                      r.op == MemOp::Read ? "R" : "W",
                      static_cast<unsigned long long>(r.address), r.size);
        out << buf;
    }
    return out.str();
}

void emit_trace(const MemEventSeq& seq, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw SimError("cannot open " + path + " for writing");
    f << format_trace(seq);
    if (!f) throw SimError("short write to " + path);
}

QueryBatch batch_from_trace(const MemEventSeq& trace, const HashTable& table,
                            std::uint64_t key_region_lo, std::uint64_t key_region_hi,
                            std::uint64_t synth_budget) {
    const std::uint64_t lo = table.base_address();
    const std::uint64_t hi = lo + table.size_bytes();

    std::vector<ReplayProbe> probes;
    for (const TraceRecord& r : trace) {
        if (r.source != PortSource::Accel || r.op != MemOp::Read) continue;
        const std::uint64_t end = r.address + r.size;
        if (end <= key_region_hi && r.address >= key_region_lo && key_region_hi > 0) {
            continue;  // LSU0 key fetch
        }
        if (r.address < lo || end > hi) {
            std::ostringstream msg;
            msg << "trace read at 0x" << std::hex << r.address << "+" << std::dec << r.size
                << " outside table region [0x" << std::hex << lo << ", 0x" << hi << ")";
            throw TraceMismatchError(msg.str());
        }
        if ((r.address - lo) % kEntryBytes != 0 || r.size % kEntryBytes != 0) {
            throw TraceMismatchError("trace read not aligned to 16 B table entries");
        }
        probes.push_back(ReplayProbe{(r.address - lo) / kEntryBytes, r.size / kEntryBytes});
    }

    QueryBatch batch;
    if (probes.empty()) return batch;

    // Try to synthesize keys whose hash slot equals each probe index; the
    // candidate stream is a plain counter so results are reproducible.
    std::vector<std::uint64_t> keys(probes.size(), kReservedKey);
    std::uint64_t candidate = 0;
    bool ok = true;
    for (std::size_t i = 0; i < probes.size() && ok; ++i) {
        bool found = false;
        while (candidate < synth_budget) {
            const std::uint64_t k = candidate++;
            if (table.slot_of(k) == probes[i].index) {
                keys[i] = k;
                found = true;
                break;
            }
        }
        ok = found;
    }
    if (ok) {
        batch.keys = std::move(keys);
        batch.expected.reserve(batch.keys.size());
        for (const std::uint64_t k : batch.keys) {
            batch.expected.push_back(table.lookup(k).value);
        }
        return batch;
    }

    // Index-replay mode: keys cannot match anything (reserved), the recorded
    // packet sizes drive LSU1-R directly.
    batch.replay_probes = std::move(probes);
    return batch;
}

}  // namespace nearsim
