#include "nearsim/results.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace nearsim {

namespace {

std::string fmt_double(double v, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string ResultRow::key() const {
    std::ostringstream os;
    os << experiment << '|' << memory_model << '|' << opts << '|' << n_accel << '|'
       << fmt_double(load_factor, 3) << '|' << scan_len << '|' << distribution << '|'
       << fmt_double(hit_ratio, 3) << '|' << batch_size << '|' << n_batches;
    return os.str();
}

std::string csv_header() {
    return "experiment,memory_model,opts,n_accel,load_factor,scan_len,distribution,"
           "hit_ratio,batch_size,n_batches,t_lookup_ns,t_full_lookup_ns,mlookups_per_s,"
           "full_mlookups_per_s,bank_conflicts,seed";
}

std::string format_csv(const std::vector<ResultRow>& rows, const Config* config) {
    std::ostringstream out;
    out << "# nearsim results\n";
    if (config) {
        for (const auto& [k, v] : config->items()) {
            out << "# config: " << k << " = " << v << "\n";
        }
    }
    out << csv_header() << "\n";
    for (const ResultRow& r : rows) {
        out << r.experiment << ',' << r.memory_model << ',' << r.opts << ',' << r.n_accel
            << ',' << fmt_double(r.load_factor, 3) << ',' << r.scan_len << ','
            << r.distribution << ',' << fmt_double(r.hit_ratio, 3) << ',' << r.batch_size
            << ',' << r.n_batches << ',' << fmt_double(r.t_lookup_ns, 3) << ','
            << fmt_double(r.t_full_lookup_ns, 3) << ',' << fmt_double(r.mlookups_per_s, 6)
            << ',' << fmt_double(r.full_mlookups_per_s, 6) << ',' << r.bank_conflicts
            << ',' << r.seed << "\n";
    }
    return out.str();
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path,
              const Config* config) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SimError("cannot open " + path + " for writing");
    f << format_csv(rows, config);
    if (!f) throw SimError("short write to " + path);
}

std::vector<ResultRow> parse_csv_text(const std::string& text) {
    std::vector<ResultRow> rows;
    std::istringstream in(text);
    std::string line;
    bool saw_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line != csv_header()) throw ParseError(line_no, "unexpected CSV header");
            saw_header = true;
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 16) throw ParseError(line_no, "expected 16 fields");
        try {
            ResultRow r;
            r.experiment = f[0];
            r.memory_model = f[1];
            r.opts = f[2];
            r.n_accel = static_cast<std::uint32_t>(std::stoul(f[3]));
            r.load_factor = std::stod(f[4]);
            r.scan_len = static_cast<std::uint32_t>(std::stoul(f[5]));
            r.distribution = f[6];
            r.hit_ratio = std::stod(f[7]);
            r.batch_size = static_cast<std::uint32_t>(std::stoul(f[8]));
            r.n_batches = static_cast<std::uint32_t>(std::stoul(f[9]));
            r.t_lookup_ns = std::stod(f[10]);
            r.t_full_lookup_ns = std::stod(f[11]);
            r.mlookups_per_s = std::stod(f[12]);
            r.full_mlookups_per_s = std::stod(f[13]);
            r.bank_conflicts = std::stoull(f[14]);
            r.seed = std::stoull(f[15]);
            rows.push_back(std::move(r));
        } catch (const std::exception&) {
            throw ParseError(line_no, "malformed row");
        }
    }
    if (!saw_header) throw ParseError(0, "missing CSV header");
    return rows;
}

std::vector<ResultRow> parse_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError(0, "cannot open CSV: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_csv_text(ss.str());
}

std::string plot_script(const std::vector<ResultRow>& rows) {
    if (rows.empty()) throw SimError("plot emission requires at least one row");

    // Series: accelerator counts when they vary, else optimization sets.
    std::set<std::uint32_t> accels;
    std::set<std::string> opt_sets;
    for (const ResultRow& r : rows) {
        accels.insert(r.n_accel);
        opt_sets.insert(r.opts);
    }
    const bool by_accel = accels.size() > 1;
    const bool full = by_accel;  // scaling results report full lookups

    struct Series {
        std::string title;
        std::vector<std::pair<double, double>> pts;
    };
    std::map<std::string, Series> series;
    for (const ResultRow& r : rows) {
        const std::string key = by_accel ? std::to_string(r.n_accel) + " accel" : r.opts;
        Series& s = series[key];
        s.title = key;
        s.pts.emplace_back(r.load_factor, full ? r.full_mlookups_per_s : r.mlookups_per_s);
    }

    std::ostringstream out;
    out << "#!/usr/bin/gnuplot\n";
    out << "# " << (full ? "full lookups" : "lookups") << "/s vs load factor\n";
    out << "set xlabel 'load factor'\n";
    out << "set ylabel 'M " << (full ? "full lookups" : "lookups") << "/s'\n";
    out << "set key outside right\n";
    out << "set grid\n";
    int idx = 0;
    for (auto& [k, s] : series) {
        std::sort(s.pts.begin(), s.pts.end());
        out << "$data" << idx << " << EOD\n";
        for (const auto& [x, y] : s.pts) {
            out << fmt_double(x, 3) << ' ' << fmt_double(y, 6) << "\n";
        }
        out << "EOD\n";
        ++idx;
    }
    out << "plot ";
    idx = 0;
    for (const auto& [k, s] : series) {
        if (idx) out << ", \\\n     ";
        out << "$data" << idx << " using 1:2 with linespoints title '" << s.title << "'";
        ++idx;
    }
    out << "\npause -1 'press enter'\n";
    return out.str();
}

void emit_plot_script(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw SimError("cannot open " + path + " for writing");
    f << plot_script(rows);
    if (!f) throw SimError("short write to " + path);
}

std::string CompareReport::summary() const {
    std::ostringstream os;
    os << (pass ? "PASS" : "FAIL") << ": " << points << " points, max error "
       << fmt_double(max_rel_err * 100.0, 3) << "%, mean error "
       << fmt_double(mean_rel_err * 100.0, 3) << "% (tolerance "
       << fmt_double(tolerance * 100.0, 3) << "%)";
    if (!worst_key.empty()) os << ", worst point: " << worst_key;
    return os.str();
}

CompareReport compare_reference(const std::vector<ResultRow>& rows,
                                const std::string& reference_csv_path,
                                double tolerance_pct) {
    const auto reference = parse_csv(reference_csv_path);
    std::map<std::string, const ResultRow*> ref_by_key;
    for (const ResultRow& r : reference) ref_by_key[r.key()] = &r;
    if (ref_by_key.size() != reference.size()) {
        throw KeyMismatchError("reference CSV has duplicate cross-product keys");
    }

    CompareReport rep;
    rep.tolerance = tolerance_pct / 100.0;
    if (rows.size() != reference.size()) {
        throw KeyMismatchError("cross-product size mismatch: " + std::to_string(rows.size()) +
                               " rows vs " + std::to_string(reference.size()) + " reference");
    }
    // Quantize through the CSV rendering so a row compared against its own
    // emitted file is exactly zero error.
    const auto quantize = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        return std::stod(buf);
    };
    double sum = 0.0;
    for (const ResultRow& r : rows) {
        const auto it = ref_by_key.find(r.key());
        if (it == ref_by_key.end()) {
            throw KeyMismatchError("no reference point for: " + r.key());
        }
        const double ref = quantize(it->second->mlookups_per_s);
        const double mine = quantize(r.mlookups_per_s);
        const double err = ref == 0.0 ? (mine == 0.0 ? 0.0 : 1.0)
                                      : std::abs(mine - ref) / ref;
        sum += err;
        if (err > rep.max_rel_err) {
            rep.max_rel_err = err;
            rep.worst_key = r.key();
        }
        ++rep.points;
    }
    rep.mean_rel_err = rep.points ? sum / static_cast<double>(rep.points) : 0.0;
    rep.pass = rep.max_rel_err <= rep.tolerance;
    return rep;
}

}  // namespace nearsim
