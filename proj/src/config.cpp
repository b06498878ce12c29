#include "nearsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nearsim {

namespace {

// Registry of every configuration key and its default.
const std::map<std::string, std::string>& registry() {
    static const std::map<std::string, std::string> kDefaults = {
        {"memory.model", "fixed"},
        {"memory.read_latency_ns", "85"},
        {"memory.write_latency_ns", "106"},
        {"memory.bandwidth_gbps", "10"},
        {"memory.max_outstanding", "16"},
        {"memory.size_mb", "1024"},

        {"hmc.links", "4"},
        {"hmc.link_gbps", "20"},
        {"hmc.quads", "4"},
        {"hmc.vaults", "32"},
        {"hmc.banks_per_vault", "16"},
        {"hmc.access_latency_ns", "78.6"},
        {"hmc.bank_busy_ns", "50"},
        {"hmc.queue_depth", "32"},
        {"hmc.interleave_bytes", "128"},
        {"hmc.vault_cycle_ps", "800"},

        {"accel.clock_ghz", "1.25"},
        {"accel.bus_width_bytes", "8"},
        {"accel.hash_delay", "4"},
        {"accel.csu_delay", "2"},
        {"accel.lsu_issue_delay", "1"},
        {"accel.fifo_depth", "1024"},
        {"accel.scratchpad_ns", "4"},
        {"accel.max_outstanding", "16"},
        {"accel.scan_len", "0"},
        {"accel.opt_batch_keys", "false"},
        {"accel.opt_double_bus", "false"},
        {"accel.opt_double_outstanding", "false"},
        {"accel.separate_ports", "false"},

        {"cpu.clock_ghz", "2.57"},
        {"cpu.flush_cycles_per_line", "20"},
        {"cpu.invalidate_cycles_per_line", "20"},
        {"cpu.line_bytes", "32"},
        {"cpu.config_write_cycles", "50"},

        {"table.capacity", "1048576"},
        {"table.load_factors", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"},
        {"scan.table", ""},

        {"workload.distribution", "uniform"},
        {"workload.zipf_alpha", "0.99"},
        {"workload.hit_ratio", "0.9"},
        {"workload.batch_size", "1024"},
        {"workload.n_batches", "64"},

        {"experiment.accels", "1,2,4,8"},
        {"experiment.opt_sets", "none,batch,batch+bus,batch+bus+out"},
        {"experiment.seed", "1"},
        {"experiment.jobs", "0"},
    };
    return kDefaults;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

}  // namespace

Config::Config() : values_(registry()) {}

Config Config::from_file(const std::string& path) {
    Config c;
    c.merge_file(path);
    return c;
}

void Config::merge_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected `key = value`");
        }
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void Config::set_kv(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got: " + assignment);
    }
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
    if (!is_known(key)) throw ConfigError("unknown config key: " + key);
    values_[key] = value;
}

bool Config::is_known(const std::string& key) const {
    return registry().count(key) != 0;
}

const std::string& Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got `" + v + "`");
    }
}

std::uint64_t Config::get_u64(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t used = 0;
        const unsigned long long u = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an unsigned integer, got `" + v + "`");
    }
}

bool Config::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError(key + ": expected a boolean, got `" + v + "`");
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& item : split(get(key), ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError(key + ": bad list element `" + item + "`");
        }
    }
    return out;
}

std::vector<std::uint64_t> Config::get_u64_list(const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (const std::string& item : split(get(key), ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stoull(item));
        } catch (const std::exception&) {
            throw ConfigError(key + ": bad list element `" + item + "`");
        }
    }
    return out;
}

std::uint32_t Config::scan_len_for(double load_factor) const {
    const std::string& spec = get("scan.table");
    if (trim(spec).empty()) return 0;
    std::vector<std::pair<double, double>> pts;
    for (const std::string& item : split(spec, ',')) {
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("scan.table: expected lf:len pairs, got `" + item + "`");
        }
        try {
            pts.emplace_back(std::stod(item.substr(0, colon)),
                             std::stod(item.substr(colon + 1)));
        } catch (const std::exception&) {
            throw ConfigError("scan.table: bad pair `" + item + "`");
        }
    }
    if (pts.empty()) return 0;
    std::sort(pts.begin(), pts.end());
    if (load_factor <= pts.front().first) {
        return static_cast<std::uint32_t>(std::llround(pts.front().second));
    }
    if (load_factor >= pts.back().first) {
        return static_cast<std::uint32_t>(std::llround(pts.back().second));
    }
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (load_factor <= pts[i].first) {
            const auto [x0, y0] = pts[i - 1];
            const auto [x1, y1] = pts[i];
            const double y = y0 + (y1 - y0) * (load_factor - x0) / (x1 - x0);
            return static_cast<std::uint32_t>(std::llround(y));
        }
    }
    return static_cast<std::uint32_t>(std::llround(pts.back().second));
}

std::vector<std::pair<std::string, std::string>> Config::items() const {
    return {values_.begin(), values_.end()};
}

}  // namespace nearsim
