#include "nearsim/kvstore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "nearsim/rng.hpp"

namespace nearsim {

namespace {

bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}
std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

HashTable::HashTable(std::uint64_t capacity, std::uint64_t base_address)
    : mask_(capacity - 1), base_(base_address), entries_(capacity) {
    if (!is_pow2(capacity)) {
        throw ConfigError("table capacity must be a power of two, got " +
                          std::to_string(capacity));
    }
    // 95% occupancy guard keeps linear probing bounded.
    max_occupancy_ = static_cast<std::uint64_t>(std::floor(0.95 * static_cast<double>(capacity)));
}

std::uint32_t HashTable::insert(std::uint64_t key, std::uint32_t value) {
    if (key == kReservedKey) {
        throw MalformedRequestError("insert: key 2^64-1 is reserved");
    }
    const std::uint64_t home = slot_of(key);
    for (std::uint64_t p = 0; p < entries_.size(); ++p) {
        const std::uint64_t idx = (home + p) & mask_;
        TableEntry& e = entries_[idx];
        if (e.occupied() && e.key == key) {
            e.value = value;  // overwrite in place, placement unchanged
            return static_cast<std::uint32_t>(p + 1);
        }
        if (!e.occupied()) {
            if (occupied_ >= max_occupancy_) {
                throw TableFullError("insert: table at 95% occupancy guard (" +
                                     std::to_string(occupied_) + "/" +
                                     std::to_string(entries_.size()) + ")");
            }
            e.key = key;
            e.value = value;
            e.flags = 1;
            ++occupied_;
            const auto probes = static_cast<std::uint32_t>(p + 1);
            max_probe_len_ = std::max(max_probe_len_, probes);
            return probes;
        }
    }
    throw TableFullError("insert: no free slot");
}

SoftLookup HashTable::lookup(std::uint64_t key) const {
    const std::uint64_t home = slot_of(key);
    SoftLookup r;
    for (std::uint32_t p = 0; p < max_probe_len_; ++p) {
        const TableEntry& e = entries_[(home + p) & mask_];
        ++r.probes;
        if (e.occupied() && e.key == key) {
            r.value = e.value;
            return r;
        }
    }
    return r;  // miss scans the full probe sequence
}

HashTable HashTable::build(std::uint64_t capacity, double load_factor, std::uint64_t seed,
                           std::uint64_t base_address) {
    if (load_factor < 0.0 || load_factor > 0.95) {
        throw TableFullError("build_table: load factor " + std::to_string(load_factor) +
                             " outside [0, 0.95]");
    }
    HashTable t(capacity, base_address);
    const auto target =
        static_cast<std::uint64_t>(std::floor(load_factor * static_cast<double>(capacity)));
    std::mt19937_64 rng(seed);
    std::uint64_t inserted = 0;
    while (inserted < target) {
        const std::uint64_t key = rng();
        if (key == kReservedKey || t.contains(key)) continue;
        // Values are derived from the key so any copy of the table agrees.
        t.insert(key, static_cast<std::uint32_t>(mix64(key ^ 0xa5a5a5a5a5a5a5a5ull)));
        ++inserted;
    }
    return t;
}

std::vector<std::uint64_t> HashTable::stored_keys_ranked() const {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> order;  // (hashed slot, key)
    order.reserve(occupied_);
    for (const TableEntry& e : entries_) {
        if (e.occupied()) order.emplace_back(slot_of(e.key), e.key);
    }
    std::sort(order.begin(), order.end());
    std::vector<std::uint64_t> keys;
    keys.reserve(order.size());
    for (const auto& [slot, key] : order) keys.push_back(key);
    return keys;
}

std::vector<std::uint8_t> HashTable::serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(size_bytes());
    for (const TableEntry& e : entries_) {
        put_u64(out, e.key);
        put_u32(out, e.value);
        put_u32(out, e.flags);
    }
    return out;
}

void HashTable::dump(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SimError("cannot open " + path + " for writing");
    const auto bytes = serialize();
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw SimError("short write to " + path);
}

HashTable HashTable::load(const std::string& path, std::uint64_t base_address) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw SimError("cannot open " + path);
    const auto size = static_cast<std::uint64_t>(f.tellg());
    if (size == 0 || size % kEntryBytes != 0) {
        throw SimError(path + ": size not a multiple of 16");
    }
    f.seekg(0);
    std::vector<std::uint8_t> bytes(size);
    f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!f) throw SimError("short read from " + path);

    HashTable t(size / kEntryBytes, base_address);
    for (std::uint64_t i = 0; i < t.entries_.size(); ++i) {
        const std::uint8_t* p = bytes.data() + i * kEntryBytes;
        TableEntry e;
        e.key = get_u64(p);
        e.value = get_u32(p + 8);
        e.flags = get_u32(p + 12);
        t.entries_[i] = e;
        if (e.occupied()) ++t.occupied_;
    }
    // Recover the exact max probe length from placements.
    for (std::uint64_t i = 0; i < t.entries_.size(); ++i) {
        const TableEntry& e = t.entries_[i];
        if (!e.occupied()) continue;
        const std::uint64_t home = t.slot_of(e.key);
        const std::uint64_t disp = (i - home) & t.mask_;
        t.max_probe_len_ =
            std::max(t.max_probe_len_, static_cast<std::uint32_t>(disp + 1));
    }
    return t;
}

}  // namespace nearsim
