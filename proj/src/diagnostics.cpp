#include "pklab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "pklab/arith.hpp"
#include "pklab/config.hpp"
#include "pklab/domain.hpp"
#include "pklab/errors.hpp"
#include "pklab/parallel.hpp"
#include "pklab/poincare.hpp"
#include "pklab/special.hpp"

namespace pklab {

namespace {

SignedLogReal abs_slr(const SignedLogReal& x) {
    return SignedLogReal::from_log(x.sign == 0 ? 0 : +1, x.log_mag);
}

// |lhs| / rhs on the linear scale; 0 for an exactly-zero lhs
double point_ratio(const BoundPoint& pt) {
    if (pt.lhs.sign == 0) return 0.0;
    return std::exp(pt.lhs.log_mag - pt.rhs.log_mag);
}

bool finite_sides(const BoundPoint& pt) {
    bool lhs_ok = (pt.lhs.sign == 0) || std::isfinite(pt.lhs.log_mag);
    bool rhs_ok = (pt.rhs.sign > 0) && std::isfinite(pt.rhs.log_mag);
    return lhs_ok && rhs_ok;
}

// calibration convention: the measured sup becomes the constant, pass means
// every tuple produced finite sides
void finish_calibration(BoundReport& rep) {
    double sup = 0.0;
    bool ok = true;
    for (auto& pt : rep.grid) {
        if (!finite_sides(pt)) {
            pt.flagged = true;
            ok = false;
            continue;
        }
        sup = std::max(sup, point_ratio(pt));
    }
    rep.sup_ratio = sup;
    rep.calibrated_constant = ok ? sup : -1.0;
    rep.pass = ok;
}

// trend convention: verdict decided by the caller, constant encodes it
void finish_trend(BoundReport& rep, bool verdict) {
    double sup = 0.0;
    for (const auto& pt : rep.grid) sup = std::max(sup, point_ratio(pt));
    rep.sup_ratio = sup;
    rep.calibrated_constant = verdict ? sup : -1.0;
    rep.pass = verdict;
}

// least-squares slope of log(ratio) against log(k); -inf log-values are
// clamped at the double underflow edge so an exact zero cannot poison the fit
double loglog_slope(const std::vector<double>& log_k, const std::vector<double>& log_r) {
    const size_t n = log_k.size();
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += log_k[i];
        my += std::max(log_r[i], -745.0);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dx = log_k[i] - mx;
        sxy += dx * (std::max(log_r[i], -745.0) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

}  // namespace

BoundReport check_bessel_envelopes(const std::vector<long>& nu_set,
                                   const std::vector<double>& x_grid) {
    if (nu_set.empty() || x_grid.empty())
        throw DomainError("check_bessel_envelopes: empty grid");
    for (long nu : nu_set)
        if (nu < 15) throw DomainError("check_bessel_envelopes: envelopes are stated for nu >= 15");
    for (double x : x_grid)
        if (!(x > 0.0) || !std::isfinite(x))
            throw DomainError("check_bessel_envelopes: x-grid must be positive and finite");

    BoundReport rep;
    rep.bound_id = "bessel_envelopes";
    for (long nu : nu_set) {
        EnvelopeParams ep = EnvelopeParams::make(nu);
        for (double x : x_grid) {
            SignedLogReal J = bessel_j_log(nu, static_cast<double>(nu) * x);
            SignedLogReal rhs = (x <= 1.0)
                                    ? envelope_f(ep, x)
                                    : SignedLogReal::from_log(+1, std::log(envelope_g(ep, x)));
            rep.grid.push_back({{static_cast<double>(nu), x}, abs_slr(J), rhs, false});
        }
    }
    double sup = 0.0;
    bool ok = true;
    for (auto& pt : rep.grid) {
        if (!finite_sides(pt)) {
            pt.flagged = true;
            ok = false;
            continue;
        }
        sup = std::max(sup, point_ratio(pt));
    }
    rep.sup_ratio = sup;
    rep.calibrated_constant = 10.0;  // pinned: the envelopes absorb J up to this factor
    rep.pass = ok && sup <= rep.calibrated_constant;
    return rep;
}

BoundReport check_kloosterman_bound(long c_max, long mn_max) {
    if (c_max < 1 || mn_max < 1)
        throw DomainError("check_kloosterman_bound: ranges must be >= 1");

    BoundReport rep;
    rep.bound_id = "kloosterman_weil";

    struct Slot {
        BoundPoint best;
        std::vector<BoundPoint> violations;
        double sup = 0.0;
    };
    std::vector<Slot> slots(static_cast<size_t>(c_max));

    // gcd(m, n) is modulus-independent; build it once
    std::vector<long long> gmn(static_cast<size_t>(mn_max) * static_cast<size_t>(mn_max));
    for (long m = 1; m <= mn_max; ++m)
        for (long n = 1; n <= mn_max; ++n)
            gmn[static_cast<size_t>(m - 1) * static_cast<size_t>(mn_max) +
                static_cast<size_t>(n - 1)] = std::gcd(static_cast<long long>(m),
                                                       static_cast<long long>(n));

    parallel_for(static_cast<size_t>(c_max), [&](size_t i) {
        const long long c = static_cast<long long>(i) + 1;
        KloostermanModulus km(c);
        // log RHS per divisor d of c: omega*(c/d) log 2 + (log c + log d)/2
        std::vector<std::pair<long long, double>> rhs_by_d;
        for (long long d : divisors(c))
            rhs_by_d.emplace_back(d, omega_star(c / d).to_double() * std::log(2.0) +
                                         0.5 * (std::log(static_cast<double>(c)) +
                                                std::log(static_cast<double>(d))));
        Slot& slot = slots[i];
        double best_ratio = -1.0;
        for (long m = 1; m <= mn_max; ++m) {
            for (long n = 1; n <= mn_max; ++n) {
                double v = km.sum(m, n);
                long long d = std::gcd(
                    gmn[static_cast<size_t>(m - 1) * static_cast<size_t>(mn_max) +
                        static_cast<size_t>(n - 1)],
                    c);
                double lrhs = 0.0;
                for (const auto& [dd, lr] : rhs_by_d)
                    if (dd == d) {
                        lrhs = lr;
                        break;
                    }
                double ratio = (v == 0.0) ? 0.0 : std::exp(std::log(std::fabs(v)) - lrhs);
                if (ratio > best_ratio) {
                    best_ratio = ratio;
                    slot.best = {{static_cast<double>(c), static_cast<double>(m),
                                  static_cast<double>(n)},
                                 SignedLogReal::from_double(std::fabs(v)),
                                 SignedLogReal::from_log(+1, lrhs),
                                 false};
                }
                if (ratio > 1.0 + 1e-9)
                    slot.violations.push_back({{static_cast<double>(c), static_cast<double>(m),
                                                static_cast<double>(n)},
                                               SignedLogReal::from_double(std::fabs(v)),
                                               SignedLogReal::from_log(+1, lrhs),
                                               true});
            }
        }
        slot.sup = std::max(best_ratio, 0.0);
    });

    double sup = 0.0;
    size_t violations = 0;
    for (const Slot& slot : slots) {
        rep.grid.push_back(slot.best);
        for (const BoundPoint& v : slot.violations) {
            rep.grid.push_back(v);
            ++violations;
        }
        sup = std::max(sup, slot.sup);
    }
    rep.sup_ratio = sup;
    // the inequality carries constant exactly 1; the slack only absorbs the
    // rounding of the cosine sums
    rep.calibrated_constant = 1.0 + 1e-9;
    rep.pass = (violations == 0) && sup <= rep.calibrated_constant;
    return rep;
}

BoundReport check_smn_split(const std::vector<SmnGridPoint>& grid, double tol) {
    if (grid.empty()) throw DomainError("check_smn_split: empty grid");

    BoundReport rep;
    rep.bound_id = "smn_split";
    for (const SmnGridPoint& gp : grid) {
        if (gp.k < 16) throw DomainError("check_smn_split: bounds are stated for k >= 16");
        ModularParams p(gp.k, gp.m);
        SmnSplit sp = smn_split(p, gp.n, tol);  // truncation failure propagates

        const double k = static_cast<double>(gp.k);
        const double mn = static_cast<double>(gp.m) * static_cast<double>(gp.n);
        const long long g = std::gcd(static_cast<long long>(gp.m), static_cast<long long>(gp.n));

        double rhs_low = epsilon_weight(1.0, sp.q) *
                         (sigma(-0.5, g) * std::pow(mn, 0.25) / k +
                          sigma_truncated(0.5, g, sp.q) * std::pow(k, 1.0 / 6.0) /
                              std::pow(mn, 0.25));
        double rhs_high = sp.q / k + std::pow(k, -1.0 / 3.0);

        rep.grid.push_back({{k, static_cast<double>(gp.m), static_cast<double>(gp.n), 0.0},
                            abs_slr(sp.low),
                            SignedLogReal::from_double(rhs_low),
                            false});
        rep.grid.push_back({{k, static_cast<double>(gp.m), static_cast<double>(gp.n), 1.0},
                            abs_slr(sp.high),
                            SignedLogReal::from_double(rhs_high),
                            false});
    }
    finish_calibration(rep);
    return rep;
}

BoundReport check_pkmn_bound(const std::vector<SmnGridPoint>& grid) {
    if (grid.empty()) throw DomainError("check_pkmn_bound: empty grid");
    const double eps = 0.05;
    const double tol = config().default_tol;

    BoundReport rep;
    rep.bound_id = "pkmn_bound";
    for (const SmnGridPoint& gp : grid) {
        if (gp.k < 16) throw DomainError("check_pkmn_bound: bound is stated for k >= 16");
        if (gp.n == gp.m)
            throw DomainError("check_pkmn_bound: the diagonal n == m is excluded");
        ModularParams p(gp.k, gp.m);
        CoefficientEntry e = coefficient(p, gp.n, tol);

        const double k = static_cast<double>(gp.k);
        const double mn = static_cast<double>(gp.m) * static_cast<double>(gp.n);
        const long long g = std::gcd(static_cast<long long>(gp.m), static_cast<long long>(gp.n));
        double log_rhs =
            0.5 * (k - 1.0) *
                (std::log(static_cast<double>(gp.n)) - std::log(static_cast<double>(gp.m))) +
            log_add_exp((0.25 + eps) * std::log(mn) - std::log(k),
                        0.5 * std::log(static_cast<double>(g)) + std::log(k) / 6.0 -
                            (0.25 - eps) * std::log(mn));

        rep.grid.push_back({{k, static_cast<double>(gp.m), static_cast<double>(gp.n)},
                            abs_slr(e.value),
                            SignedLogReal::from_log(+1, log_rhs),
                            false});
    }
    finish_calibration(rep);
    return rep;
}

BoundReport check_pkmm_limit(const std::vector<long>& k_list,
                             const std::function<long(long)>& m_of_k) {
    if (k_list.size() < 2)
        throw DomainError("check_pkmm_limit: need at least two weights for a trend");
    const double tol = config().default_tol;

    BoundReport rep;
    rep.bound_id = "pkmm_limit";
    std::vector<double> log_k, log_r;
    for (long k : k_list) {
        long m = m_of_k(k);
        ModularParams p(k, m);
        CoefficientEntry e = coefficient(p, m, tol);
        SignedLogReal diff = SignedLogReal::add(e.value, -SignedLogReal::one());
        rep.grid.push_back({{static_cast<double>(k), static_cast<double>(m)},
                            abs_slr(diff),
                            SignedLogReal::one(),
                            false});
        log_k.push_back(std::log(static_cast<double>(k)));
        log_r.push_back(diff.sign == 0 ? -std::numeric_limits<double>::infinity()
                                       : diff.log_mag);
    }
    // an exact zero means |p - 1| fell below the working-precision floor
    // (2^{-precision_bits} next to 1); it counts as converged, not as a
    // broken trend, and a later nonzero value rises above -inf and fails
    bool decreasing = true;
    for (size_t i = 1; i < log_r.size(); ++i) {
        if (std::isinf(log_r[i]) && log_r[i] < 0.0) continue;
        if (!(log_r[i] < log_r[i - 1])) decreasing = false;
    }
    bool slope_ok = loglog_slope(log_k, log_r) <= -0.2;
    finish_trend(rep, decreasing && slope_ok);
    return rep;
}

namespace {

// plateau profile: 1 on the inner half, cosine-squared ramp to 0 at the edge
double taper(double u) {
    u = std::fabs(u);
    if (u <= 0.5) return 1.0;
    if (u >= 1.0) return 0.0;
    double c = std::cos(M_PI * (u - 0.5));
    return c * c;
}

}  // namespace

double BumpSpec::value(double x, double y) const {
    const double hx = 0.5 * (x_hi - x_lo);
    const double hy = 0.5 * (y_hi - y_lo);
    if (hx <= 0.0 || hy <= 0.0) return 0.0;
    // exact zero on and outside the box edge keeps the support sharp even
    // when the scaled offset rounds to just under 1
    if (x <= x_lo || x >= x_hi || y <= y_lo || y >= y_hi) return 0.0;
    return taper((x - 0.5 * (x_lo + x_hi)) / hx) * taper((y - 0.5 * (y_lo + y_hi)) / hy);
}

std::vector<BumpSpec> standard_bumps() {
    return {
        {-0.35, 0.35, 1.02, 1.90},  // tall central plateau just above the arc
        {-0.45, 0.45, 1.50, 3.50},  // wide high-altitude box
        {0.38, 0.48, 0.93, 1.10},   // small box hugging the circle on the right
    };
}

BoundReport check_mass_convergence(const std::vector<long>& k_list,
                                   const std::function<long(long)>& m_of_k,
                                   const std::vector<BumpSpec>& bumps) {
    if (k_list.size() < 2)
        throw DomainError("check_mass_convergence: need at least two weights for a trend");
    if (bumps.empty()) throw DomainError("check_mass_convergence: no test bumps");

    const double kThreeOverPi = 3.0 / M_PI;
    std::vector<Region> boxes;
    double y_min = std::numeric_limits<double>::infinity();
    for (const BumpSpec& b : bumps) {
        Region r = make_region(b.x_lo, b.x_hi, b.y_lo, b.y_hi, false);
        if (!r.subset_of_fundamental_domain(1e-9))
            throw DomainError("check_mass_convergence: bump support leaves the fundamental domain");
        boxes.push_back(r);
        y_min = std::min(y_min, b.y_lo);
    }

    QuadSpec qs;
    qs.tol = 1e-7;
    const double tol = config().default_tol;

    // the limit side <psi, 1> is weight-independent
    std::vector<double> reference(bumps.size());
    for (size_t j = 0; j < bumps.size(); ++j) {
        const BumpSpec& b = bumps[j];
        reference[j] = kThreeOverPi * region_integral_real(
                                          boxes[j], [&](double x, double y) { return b.value(x, y); }, qs);
    }

    BoundReport rep;
    rep.bound_id = "mass_convergence";
    std::vector<std::vector<double>> disc(bumps.size());
    for (long k : k_list) {
        long m = m_of_k(k);
        ModularParams p(k, m);
        CoefficientTable table = build_table(p, suggest_table_length(p, y_min, tol, 0.0), tol);
        for (size_t j = 0; j < bumps.size(); ++j) {
            const BumpSpec& b = bumps[j];
            double num = region_integral_real(
                boxes[j],
                [&](double x, double y) { return b.value(x, y) * mass_density(table, {x, y}); },
                qs);
            double d = std::fabs(num - reference[j]);
            disc[j].push_back(d);
            rep.grid.push_back({{static_cast<double>(k), static_cast<double>(m),
                                 static_cast<double>(j)},
                                SignedLogReal::from_double(d),
                                SignedLogReal::from_double(reference[j]),
                                false});
        }
    }
    bool decreasing = true;
    for (const auto& seq : disc)
        for (size_t i = 1; i < seq.size(); ++i)
            if (!(seq[i] < seq[i - 1])) decreasing = false;
    finish_trend(rep, decreasing);
    return rep;
}

namespace {

nlohmann::ordered_json slr_to_json(const SignedLogReal& x) {
    nlohmann::ordered_json j;
    j["sign"] = x.sign;
    if (x.sign == 0)
        j["log_mag"] = nullptr;  // -inf is not representable in JSON
    else
        j["log_mag"] = x.log_mag;
    return j;
}

void csv_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

std::string report_to_json(const BoundReport& report) {
    nlohmann::ordered_json j;
    j["bound_id"] = report.bound_id;
    j["sup_ratio"] = report.sup_ratio;
    j["calibrated_constant"] = report.calibrated_constant;
    j["pass"] = report.pass;
    auto pts = nlohmann::ordered_json::array();
    for (const BoundPoint& pt : report.grid) {
        nlohmann::ordered_json o;
        o["params"] = pt.params;
        o["lhs"] = slr_to_json(pt.lhs);
        o["rhs"] = slr_to_json(pt.rhs);
        o["flagged"] = pt.flagged;
        pts.push_back(o);
    }
    j["grid"] = pts;
    return j.dump(2);
}

std::string report_to_csv(const BoundReport& report) {
    std::string out =
        "bound_id,sup_ratio,calibrated_constant,pass,index,params,"
        "lhs_sign,lhs_log_mag,rhs_sign,rhs_log_mag,flagged\n";
    for (size_t i = 0; i < report.grid.size(); ++i) {
        const BoundPoint& pt = report.grid[i];
        out += report.bound_id;
        out += ',';
        csv_double(out, report.sup_ratio);
        out += ',';
        csv_double(out, report.calibrated_constant);
        out += ',';
        out += report.pass ? "true" : "false";
        out += ',';
        out += std::to_string(i);
        out += ',';
        for (size_t p = 0; p < pt.params.size(); ++p) {
            if (p) out += ';';
            csv_double(out, pt.params[p]);
        }
        out += ',';
        out += std::to_string(pt.lhs.sign);
        out += ',';
        csv_double(out, pt.lhs.log_mag);
        out += ',';
        out += std::to_string(pt.rhs.sign);
        out += ',';
        csv_double(out, pt.rhs.log_mag);
        out += ',';
        out += pt.flagged ? "true" : "false";
        out += '\n';
    }
    return out;
}

}  // namespace pklab
