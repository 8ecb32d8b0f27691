#include "pklab/table_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pklab/config.hpp"
#include "pklab/errors.hpp"

namespace pklab {

namespace {

void append_hex(std::string& out, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    out += buf;
}

double parse_hex(const std::string& tok, const char* what) {
    const char* s = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
        throw DomainError(std::string("table_from_text: malformed ") + what + " field '" + tok +
                          "'");
    return v;
}

long parse_long(const std::string& tok, const char* what) {
    const char* s = tok.c_str();
    char* end = nullptr;
    long v = std::strtol(s, &end, 10);
    if (end == s || *end != '\0')
        throw DomainError(std::string("table_from_text: malformed ") + what + " field '" + tok +
                          "'");
    return v;
}

}  // namespace

std::string table_to_text(const CoefficientTable& table) {
    if (table.partial)
        throw DomainError("table_to_text: partial tables (failed entries) are not cacheable");
    std::string out = "pklab-table 1 ";
    out += std::to_string(table.params.k);
    out += ' ';
    out += std::to_string(table.params.m);
    out += ' ';
    append_hex(out, table.target_tol);
    out += ' ';
    out += std::to_string(static_cast<long>(config().precision_bits));
    out += '\n';
    auto emit = [&out](long n, const CoefficientEntry& e) {
        out += std::to_string(n);
        out += ' ';
        out += std::to_string(e.value.sign);
        out += ' ';
        append_hex(out, e.value.log_mag);
        out += ' ';
        append_hex(out, e.tail_bound);
        out += '\n';
    };
    for (long n = 1; n <= table.size(); ++n) emit(n, table.entries[static_cast<size_t>(n - 1)]);
    if (table.norm_entry) emit(table.params.m, *table.norm_entry);
    return out;
}

CoefficientTable table_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DomainError("table_from_text: empty input");
    std::istringstream hs(line);
    std::string magic, version, ks, ms, tols, bits;
    if (!(hs >> magic >> version >> ks >> ms >> tols >> bits) || magic != "pklab-table")
        throw DomainError("table_from_text: missing or malformed header");
    if (version != "1")
        throw DomainError("table_from_text: unsupported format version " + version);

    long k = parse_long(ks, "k");
    long m = parse_long(ms, "m");
    CoefficientTable table{ModularParams(k, m), {}, std::nullopt,
                           parse_hex(tols, "tol"), false};

    long expected = 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string ns, ss, lms, tbs;
        if (!(ls >> ns >> ss >> lms >> tbs))
            throw DomainError("table_from_text: short entry line '" + line + "'");
        long n = parse_long(ns, "n");
        CoefficientEntry e;
        e.value.sign = static_cast<int>(parse_long(ss, "sign"));
        if (e.value.sign < -1 || e.value.sign > 1)
            throw DomainError("table_from_text: sign out of range");
        e.value.log_mag = parse_hex(lms, "log_mag");
        e.tail_bound = parse_hex(tbs, "tail_bound");
        if (n == expected) {
            table.entries.push_back(e);
            ++expected;
        } else if (n == m && n > expected - 1 && !table.norm_entry) {
            table.norm_entry = e;
        } else {
            throw DomainError("table_from_text: entries out of order at n = " +
                              std::to_string(n));
        }
    }
    if (table.entries.empty()) throw DomainError("table_from_text: no entries");
    return table;
}

void write_table_file(const std::filesystem::path& path, const CoefficientTable& table) {
    std::string text = table_to_text(table);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DomainError("write_table_file: cannot open " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DomainError("write_table_file: short write to " + path.string());
}

CoefficientTable read_table_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("read_table_file: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return table_from_text(buf.str());
}

std::filesystem::path table_cache_path(const std::filesystem::path& dir,
                                       const ModularParams& params, long n_max, double tol) {
    std::string name = "pk_k" + std::to_string(params.k) + "_m" + std::to_string(params.m) +
                       "_N" + std::to_string(n_max) + "_t";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", tol);
    // hex-float characters not welcome in file names get folded
    for (const char* p = buf; *p; ++p) name += (*p == '+') ? 'P' : (*p == '.') ? '_' : *p;
    name += "_p" + std::to_string(static_cast<long>(config().precision_bits)) + ".tbl";
    return dir / name;
}

}  // namespace pklab
