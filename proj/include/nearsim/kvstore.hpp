#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nearsim/errors.hpp"

namespace nearsim {

// Key 2^64-1 is reserved: never legal as user data, used as the miss marker
// in replayed batches. Value 0xFFFFFFFF is the CSU "key not found" output.
constexpr std::uint64_t kReservedKey = ~0ull;
constexpr std::uint32_t kNotFoundValue = 0xFFFFFFFFu;

// 64-bit finalizer standing in for the hardware hash unit: golden-ratio
// offset followed by the murmur3 fmix64 mix. Constants below are the ones
// frozen by the regression test.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ull;
    x ^= x >> 33;
    return x;
}

#pragma pack(push, 1)
struct TableEntry {
    std::uint64_t key = 0;
    std::uint32_t value = 0;
    std::uint32_t flags = 0;  // bit 0 = occupied

    bool occupied() const { return (flags & 1u) != 0; }
};
#pragma pack(pop)
static_assert(sizeof(TableEntry) == 16, "entry must serialize to 16 bytes");

constexpr std::uint32_t kEntryBytes = 16;

struct SoftLookup {
    std::uint32_t value = kNotFoundValue;  // kNotFoundValue on miss
    std::uint32_t probes = 0;              // slots examined
    bool found() const { return value != kNotFoundValue; }
};

// Open-addressing table with linear probing and wraparound. Capacity is a
// power of two so the slot index is a mask of the mixed key. After build the
// table is immutable for the duration of a simulation.
class HashTable {
public:
    HashTable(std::uint64_t capacity, std::uint64_t base_address);

    // Fill with floor(load_factor * capacity) distinct random keys.
    static HashTable build(std::uint64_t capacity, double load_factor, std::uint64_t seed,
                           std::uint64_t base_address = 0);

    std::uint64_t slot_of(std::uint64_t key) const { return mix64(key) & mask_; }

    // Places (or overwrites) key; returns slots probed to place it.
    std::uint32_t insert(std::uint64_t key, std::uint32_t value);

    // Scans forward from the hashed slot; gives up after max_probe_len slots.
    SoftLookup lookup(std::uint64_t key) const;

    bool contains(std::uint64_t key) const { return lookup(key).found(); }

    std::uint64_t capacity() const { return entries_.size(); }
    std::uint64_t occupied() const { return occupied_; }
    std::uint32_t max_probe_len() const { return max_probe_len_; }
    double load_factor() const {
        return static_cast<double>(occupied_) / static_cast<double>(entries_.size());
    }

    std::uint64_t base_address() const { return base_; }
    std::uint64_t entry_address(std::uint64_t idx) const { return base_ + idx * kEntryBytes; }
    std::uint64_t size_bytes() const { return entries_.size() * kEntryBytes; }
    const TableEntry& entry(std::uint64_t idx) const { return entries_[idx]; }

    // Stored keys ordered by hashed slot (ties by key value); used as the
    // zipf rank order for query generation.
    std::vector<std::uint64_t> stored_keys_ranked() const;

    // Flat binary image, little-endian fields, capacity*16 bytes.
    std::vector<std::uint8_t> serialize() const;
    void dump(const std::string& path) const;
    static HashTable load(const std::string& path, std::uint64_t base_address);

private:
    std::uint64_t mask_;
    std::uint64_t base_;
    std::uint64_t occupied_ = 0;
    std::uint64_t max_occupancy_;
    std::uint32_t max_probe_len_ = 0;
    std::vector<TableEntry> entries_;
};

}  // namespace nearsim
