#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nearsim/errors.hpp"

namespace nearsim {

// Flat `section.key = value` configuration. Every key must exist in the
// built-in registry (typo'd keys fail fast with the offending path); unset
// keys fall back to registry defaults. The effective key/value list is
// echoed into CSV metadata comments for provenance.
class Config {
public:
    Config();

    static Config from_file(const std::string& path);
    void merge_file(const std::string& path);

    // "section.key=value" (CLI --set) or separate pieces.
    void set_kv(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    bool is_known(const std::string& key) const;
    const std::string& get(const std::string& key) const;

    double get_double(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<std::uint64_t> get_u64_list(const std::string& key) const;

    // scan.table maps load factor -> scan length; interior points are
    // interpolated, end points clamp. Returns 0 when the table is empty
    // (meaning: use the hash table's max probe length).
    std::uint32_t scan_len_for(double load_factor) const;

    // Effective settings, sorted by key.
    std::vector<std::pair<std::string, std::string>> items() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace nearsim
