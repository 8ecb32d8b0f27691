// pklab: command-line front end for the Poincare-series laboratory.
// Uniform exit codes: 0 ok, 2 domain error, 3 numeric failure, 4
// certification failure.  All output is deterministic for fixed flags.

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pklab/config.hpp"
#include "pklab/diagnostics.hpp"
#include "pklab/domain.hpp"
#include "pklab/errors.hpp"
#include "pklab/poincare.hpp"
#include "pklab/spectral.hpp"
#include "pklab/table_io.hpp"
#include "pklab/zeros.hpp"

using namespace pklab;
using nlohmann::ordered_json;

namespace {

struct GlobalFlags {
    int precision_bits = 256;
    double tol = 1e-10;
    int threads = 0;
    std::string cache_dir;
    std::string format = "json";
};

void apply_config(const GlobalFlags& g) {
    Config c;
    c.precision_bits = g.precision_bits;
    c.default_tol = g.tol;
    c.threads = g.threads;
    c.cache_dir = g.cache_dir;
    c.output_format = (g.format == "csv") ? OutputFormat::csv : OutputFormat::json;
    set_config(c);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit(const ordered_json& j, const std::vector<std::string>& csv_header,
          const std::function<void(std::string&)>& csv_body) {
    if (config().output_format == OutputFormat::json) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::string out;
    for (size_t i = 0; i < csv_header.size(); ++i) {
        if (i) out += ',';
        out += csv_header[i];
    }
    out += '\n';
    csv_body(out);
    std::cout << out;
}

long parse_schedule(const std::string& schedule, long k) {
    if (schedule == "m=1") return 1;
    if (schedule == "m=k") return k;
    if (schedule == "m=k*logk")
        return std::max(1L, static_cast<long>(std::floor(static_cast<double>(k) *
                                                         std::log(static_cast<double>(k)))));
    throw DomainError("unknown schedule '" + schedule +
                      "' (expected m=1, m=k, or m=k*logk)");
}

std::vector<long> parse_k_list(const std::string& text) {
    std::vector<long> ks;
    std::string tok;
    for (char ch : text + ",") {
        if (ch == ',') {
            if (!tok.empty()) ks.push_back(std::stol(tok));
            tok.clear();
        } else {
            tok += ch;
        }
    }
    if (ks.empty()) throw DomainError("--k-list is empty");
    return ks;
}

CoefficientTable table_for(const ModularParams& p, long n_max, double tol) {
    if (!config().cache_dir.empty()) {
        std::filesystem::path dir(config().cache_dir);
        std::filesystem::create_directories(dir);
        auto path = table_cache_path(dir, p, n_max, tol);
        if (std::filesystem::exists(path)) return read_table_file(path);
        CoefficientTable t = build_table(p, n_max, tol);
        write_table_file(path, t);
        // reread so cached and fresh runs print byte-identical summaries
        return read_table_file(path);
    }
    return build_table(p, n_max, tol);
}

// ---------------------------------------------------------------- coeff ----

int run_coeff(long k, long m, long n_max) {
    ModularParams p(k, m);
    CoefficientTable t = table_for(p, n_max, config().default_tol);
    std::cout << table_to_text(t);
    return 0;
}

// ----------------------------------------------------------------- eval ----

int run_eval(long k, long m, double x, double y) {
    if (y < 0.5) throw DomainError("eval: y must be >= 0.5");
    ModularParams p(k, m);
    double tol = config().default_tol;
    CoefficientTable t = table_for(p, suggest_table_length(p, y, tol), tol);
    LogComplex v = evaluate(t, ModularPoint{x, y});
    std::complex<double> z = v.to_complex();
    ordered_json j;
    j["k"] = k;
    j["m"] = m;
    j["x"] = x;
    j["y"] = y;
    j["log_mag"] = v.log_mag;
    j["phase"] = v.phase;
    j["re"] = z.real();
    j["im"] = z.imag();
    emit(j, {"k", "m", "x", "y", "log_mag", "phase", "re", "im"}, [&](std::string& out) {
        out += std::to_string(k) + ',' + std::to_string(m) + ',' + fmt_double(x) + ',' +
               fmt_double(y) + ',' + fmt_double(v.log_mag) + ',' + fmt_double(v.phase) + ',' +
               fmt_double(z.real()) + ',' + fmt_double(z.imag()) + '\n';
    });
    return 0;
}

// ----------------------------------------------------------------- norm ----

long eval_ready_length(const ModularParams& p, double tol) {
    return suggest_table_length(p, std::sqrt(3.0) / 2.0, tol);
}

int run_norm(long k, long m) {
    ModularParams p(k, m);
    double tol = config().default_tol;
    CoefficientTable t = table_for(p, eval_ready_length(p, tol), tol);
    SignedLogReal norm = petersson_norm_log(t);
    ordered_json j;
    j["k"] = k;
    j["m"] = m;
    j["log_norm"] = norm.log_mag;
    j["sign"] = norm.sign;
    j["norm"] = norm.to_double();
    emit(j, {"k", "m", "log_norm", "sign", "norm"}, [&](std::string& out) {
        out += std::to_string(k) + ',' + std::to_string(m) + ',' + fmt_double(norm.log_mag) +
               ',' + std::to_string(norm.sign) + ',' + fmt_double(norm.to_double()) + '\n';
    });
    return 0;
}

// ----------------------------------------------------------------- mass ----

int run_mass(long k, long m, const std::string& region_kind, std::vector<double> box,
             double quad_tol) {
    ModularParams p(k, m);
    double tol = config().default_tol;
    CoefficientTable t = table_for(p, eval_ready_length(p, tol), tol);
    QuadSpec q;
    q.tol = quad_tol;
    double value = 0.0;
    if (region_kind == "full") {
        auto one = [](double, double) { return std::complex<double>(1.0, 0.0); };
        value = weighted_density_integral(t, one, q, 1.0).real();
    } else {
        if (box.size() != 4) throw DomainError("mass: --box needs x0 x1 y0 y1");
        Region r = make_region(box[0], box[1], box[2], box[3], false);
        if (!r.subset_of_fundamental_domain(1e-12))
            throw DomainError("mass: box must sit inside the fundamental domain");
        value = mass_integral(t, r, q);
    }
    ordered_json j;
    j["k"] = k;
    j["m"] = m;
    j["region"] = region_kind;
    j["mass"] = value;
    emit(j, {"k", "m", "region", "mass"}, [&](std::string& out) {
        out += std::to_string(k) + ',' + std::to_string(m) + ',' + region_kind + ',' +
               fmt_double(value) + '\n';
    });
    return 0;
}

// ---------------------------------------------------------------- inner ----

int run_inner(long k, long m, double t_param, const std::string& mode, double quad_tol,
              bool constant_term_only) {
    ModularParams p(k, m);
    double tol = config().default_tol;
    long N = eval_ready_length(p, tol);
    if (mode != "direct") N = std::max(N, unfolded_table_length(p, t_param, tol));
    CoefficientTable t = table_for(p, N, tol);

    ordered_json j;
    j["k"] = k;
    j["m"] = m;
    j["t"] = t_param;
    j["mode"] = mode;

    std::complex<double> direct{};
    std::complex<double> unfolded{};
    if (mode == "direct" || mode == "both") {
        QuadSpec q;
        q.tol = quad_tol;
        direct = inner_product_direct(t, EisensteinSpec(t_param, 1e-8), q);
        j["direct_re"] = direct.real();
        j["direct_im"] = direct.imag();
    }
    if (mode == "unfolded" || mode == "both") {
        LogComplex u = inner_product_unfolded(t, EisensteinSpec(t_param, tol),
                                              constant_term_only);
        SignedLogReal norm = petersson_norm_log(t);
        unfolded = std::exp(u.log_mag - norm.log_mag) * std::polar(1.0, u.phase);
        j["unfolded_re"] = unfolded.real();
        j["unfolded_im"] = unfolded.imag();
        j["unfolded_log_mag"] = u.log_mag;
        j["unfolded_phase"] = u.phase;
        j["constant_term_only"] = constant_term_only;
    }
    if (mode == "both") {
        double gap = std::abs(direct - unfolded) / std::max(1e-300, std::abs(unfolded));
        j["relative_gap"] = gap;
    }
    emit(j, {"field", "value"}, [&](std::string& out) {
        for (auto& [key, val] : j.items())
            out += key + ',' + (val.is_string() ? val.get<std::string>() : val.dump()) + '\n';
    });
    return 0;
}

// ---------------------------------------------------------------- zeros ----

const char* locus_name(ZeroLocus l) {
    switch (l) {
        case ZeroLocus::Interior: return "interior";
        case ZeroLocus::Arc: return "arc";
        default: return "vertical_edge";
    }
}

int run_zeros(long k, long m, double y_max, double refine_tol) {
    ModularParams p(k, m);
    double tol = config().default_tol;
    long N = suggest_table_length(p, std::sqrt(3.0) / 2.0, tol, 35.0);
    CoefficientTable t = table_for(p, N, tol);
    double y = (y_max > 0.0) ? y_max : suggest_zero_free_height(t);
    ZeroInventory inv = zero_inventory(t, y, refine_tol);

    ordered_json j;
    j["k"] = k;
    j["m"] = m;
    j["y_max"] = inv.y_max;
    j["v_infinity"] = inv.v_infinity;
    j["total_weighted"] = inv.total_weighted.str();
    j["residual"] = inv.residual.str();
    j["certified"] = inv.certified;
    auto zs = ordered_json::array();
    for (const ZeroRecord& zr : inv.zeros) {
        ordered_json o;
        o["x"] = zr.point.x;
        o["y"] = zr.point.y;
        o["multiplicity"] = zr.multiplicity;
        o["weight"] = zr.weight.str();
        o["locus"] = locus_name(zr.locus);
        zs.push_back(o);
    }
    j["zeros"] = zs;
    emit(j, {"x", "y", "multiplicity", "weight", "locus"}, [&](std::string& out) {
        for (const ZeroRecord& zr : inv.zeros)
            out += fmt_double(zr.point.x) + ',' + fmt_double(zr.point.y) + ',' +
                   std::to_string(zr.multiplicity) + ',' + zr.weight.str() + ',' +
                   locus_name(zr.locus) + '\n';
    });
    return inv.certified ? 0 : 4;
}

// --------------------------------------------------------------- verify ----

int run_verify(const std::string& bound_id, const std::string& scale,
               const std::string& schedule, const std::string& k_list_text) {
    const bool full = (scale == "full");
    BoundReport rep;
    if (bound_id == "bessel_envelopes") {
        std::vector<long> nus = full ? std::vector<long>{15, 16, 32, 64, 128, 256, 512}
                                     : std::vector<long>{15, 16, 32, 64};
        int nx = full ? 200 : 60;
        std::vector<double> xs;
        for (int i = 0; i < nx; ++i)
            xs.push_back(0.01 + (2.0 - 0.01) * static_cast<double>(i) /
                                    static_cast<double>(nx - 1));
        rep = check_bessel_envelopes(nus, xs);
    } else if (bound_id == "kloosterman_weil") {
        rep = full ? check_kloosterman_bound(2000, 100) : check_kloosterman_bound(150, 12);
    } else if (bound_id == "smn_split" || bound_id == "pkmn_bound") {
        std::vector<SmnGridPoint> grid;
        std::vector<long> ks = full ? std::vector<long>{16, 24, 40} : std::vector<long>{16, 24};
        long mn = full ? 8 : 4;
        for (long k : ks)
            for (long m = 1; m <= mn; ++m)
                for (long n = 1; n <= mn; ++n) {
                    if (bound_id == "pkmn_bound" && n == m) continue;
                    grid.push_back({k, m, n});
                }
        rep = (bound_id == "smn_split") ? check_smn_split(grid, config().default_tol)
                                        : check_pkmn_bound(grid);
    } else if (bound_id == "pkmm_limit") {
        std::vector<long> ks = !k_list_text.empty()
                                   ? parse_k_list(k_list_text)
                                   : (full ? std::vector<long>{50, 100, 200, 400}
                                           : std::vector<long>{50, 100, 200});
        std::string sched = schedule.empty() ? "m=k" : schedule;
        rep = check_pkmm_limit(ks, [&](long k) { return parse_schedule(sched, k); });
    } else if (bound_id == "mass_convergence") {
        std::vector<long> ks = !k_list_text.empty() ? parse_k_list(k_list_text)
                                                    : std::vector<long>{16, 24};
        std::string sched = schedule.empty() ? "m=k*logk" : schedule;
        rep = check_mass_convergence(ks, [&](long k) { return parse_schedule(sched, k); },
                                     standard_bumps());
    } else {
        throw DomainError("unknown --bound id '" + bound_id + "'");
    }
    if (config().output_format == OutputFormat::csv)
        std::cout << report_to_csv(rep);
    else
        std::cout << report_to_json(rep) << "\n";
    return rep.pass ? 0 : 4;
}

// ------------------------------------------------------------- equidist ----

int run_equidist(const std::string& schedule, const std::string& k_list_text, int nx, int ny,
                 double y_top, double refine_tol) {
    std::vector<long> ks = parse_k_list(k_list_text);
    double tol = config().default_tol;
    std::vector<ZeroInventory> invs;
    for (long k : ks) {
        ModularParams p(k, parse_schedule(schedule, k));
        long N = suggest_table_length(p, std::sqrt(3.0) / 2.0, tol, 35.0);
        CoefficientTable t = table_for(p, N, tol);
        invs.push_back(zero_inventory(t, suggest_zero_free_height(t), refine_tol));
    }
    auto cells = partition_fundamental_domain(nx, ny, y_top);
    EquidistReport rep = zero_equidist_report(invs, cells);

    ordered_json j;
    j["schedule"] = schedule;
    j["y_top"] = y_top;
    auto cj = ordered_json::array();
    for (size_t c = 0; c < cells.size(); ++c) {
        ordered_json o;
        o["x0"] = cells[c].x0;
        o["x1"] = cells[c].x1;
        o["y0"] = cells[c].y0;
        o["y1"] = cells[c].y1;
        o["clipped"] = cells[c].clipped_by_unit_circle;
        o["area"] = cells[c].hyperbolic_area;
        o["target"] = rep.target[c];
        cj.push_back(o);
    }
    j["cells"] = cj;
    auto ej = ordered_json::array();
    bool all_certified = true;
    for (size_t i = 0; i < rep.entries.size(); ++i) {
        const EquidistEntry& e = rep.entries[i];
        ordered_json o;
        o["k"] = e.k;
        o["m"] = e.m;
        o["included"] = e.included;
        o["v_infinity"] = invs[i].v_infinity;
        o["y_max"] = invs[i].y_max;
        o["total_weighted"] = invs[i].total_weighted.str();
        o["sup_discrepancy"] = e.sup_discrepancy;
        o["scaled"] = e.scaled;
        ej.push_back(o);
        all_certified = all_certified && invs[i].certified;
    }
    j["entries"] = ej;
    emit(j, {"k", "m", "included", "sup_discrepancy"}, [&](std::string& out) {
        for (const EquidistEntry& e : rep.entries)
            out += std::to_string(e.k) + ',' + std::to_string(e.m) + ',' +
                   (e.included ? "true" : "false") + ',' + fmt_double(e.sup_discrepancy) + '\n';
    });
    return all_certified ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for holomorphic Poincare series"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags g;
    app.add_option("--precision-bits", g.precision_bits, "mantissa bits (>= 64)");
    app.add_option("--tol", g.tol, "target tolerance, in (0, 1e-4]");
    app.add_option("--threads", g.threads, "worker threads, 0 = auto");
    app.add_option("--cache-dir", g.cache_dir, "coefficient cache directory")
        ->envname("PKLAB_CACHE_DIR");
    app.add_option("--format", g.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));

    long k = 12, m = 1, n_max = 10;
    double x = 0.0, y = 1.0, t_param = 1.0;
    double quad_tol = 1e-6, y_max = 0.0, refine_tol = 1e-10, y_top = 6.0;
    int nx = 4, ny = 4;
    std::string mode = "both", region_kind = "full", bound_id, scale = "desk";
    std::string schedule = "m=k*logk", k_list_text;
    std::vector<double> box;
    bool constant_term_only = false;

    auto* c_coeff = app.add_subcommand("coeff", "Fourier coefficient table");
    c_coeff->add_option("--k", k)->required();
    c_coeff->add_option("--m", m)->required();
    c_coeff->add_option("--n-max", n_max)->required();

    auto* c_eval = app.add_subcommand("eval", "series value at a point");
    c_eval->add_option("--k", k)->required();
    c_eval->add_option("--m", m)->required();
    c_eval->add_option("--x", x)->required();
    c_eval->add_option("--y", y)->required();

    auto* c_norm = app.add_subcommand("norm", "Petersson norm");
    c_norm->add_option("--k", k)->required();
    c_norm->add_option("--m", m)->required();

    auto* c_mass = app.add_subcommand("mass", "normalized mass integral");
    c_mass->add_option("--k", k)->required();
    c_mass->add_option("--m", m)->required();
    c_mass->add_option("--region", region_kind)->check(CLI::IsMember({"full", "box"}));
    c_mass->add_option("--box", box, "x0 x1 y0 y1")->expected(4);
    c_mass->add_option("--quad-tol", quad_tol);

    auto* c_inner = app.add_subcommand("inner", "spectral inner product against E(z,1/2+it)");
    c_inner->add_option("--k", k)->required();
    c_inner->add_option("--m", m)->required();
    c_inner->add_option("--t", t_param)->required();
    c_inner->add_option("--mode", mode)->check(CLI::IsMember({"direct", "unfolded", "both"}));
    c_inner->add_option("--quad-tol", quad_tol);
    c_inner->add_flag("--constant-term-only", constant_term_only,
                      "suppress the cusp part of E (gamma closed form)");

    auto* c_zeros = app.add_subcommand("zeros", "certified zero inventory");
    c_zeros->add_option("--k", k)->required();
    c_zeros->add_option("--m", m)->required();
    c_zeros->add_option("--y-max", y_max, "0 = derive a certified zero-free height");
    c_zeros->add_option("--refine-tol", refine_tol);

    auto* c_verify = app.add_subcommand("verify", "run one bound report");
    c_verify->add_option("--bound", bound_id)->required();
    c_verify->add_option("--scale", scale)->check(CLI::IsMember({"desk", "full"}));
    c_verify->add_option("--schedule", schedule);
    c_verify->add_option("--k-list", k_list_text);

    auto* c_eq = app.add_subcommand("equidist", "zero-distribution discrepancy report");
    c_eq->add_option("--schedule", schedule)->required();
    c_eq->add_option("--k-list", k_list_text)->required();
    c_eq->add_option("--nx", nx);
    c_eq->add_option("--ny", ny);
    c_eq->add_option("--y-top", y_top);
    c_eq->add_option("--refine-tol", refine_tol);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        apply_config(g);
        if (app.got_subcommand(c_coeff)) return run_coeff(k, m, n_max);
        if (app.got_subcommand(c_eval)) return run_eval(k, m, x, y);
        if (app.got_subcommand(c_norm)) return run_norm(k, m);
        if (app.got_subcommand(c_mass)) return run_mass(k, m, region_kind, box, quad_tol);
        if (app.got_subcommand(c_inner))
            return run_inner(k, m, t_param, mode, quad_tol, constant_term_only);
        if (app.got_subcommand(c_zeros)) return run_zeros(k, m, y_max, refine_tol);
        if (app.got_subcommand(c_verify))
            return run_verify(bound_id, scale, schedule, k_list_text);
        if (app.got_subcommand(c_eq))
            return run_equidist(schedule, k_list_text, nx, ny, y_top, refine_tol);
        throw DomainError("no subcommand");
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 2;
    } catch (const CertificationError& e) {
        std::cerr << "certification failure: " << e.what() << "\n";
        return 4;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
