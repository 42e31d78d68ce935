// Command-line front end for the qsr shared library.
//
// Subcommands: moments, precision, scan, simulate, verify. Scene and PSF
// come from a flat "key = value" config file; angles are radians. Exit
// codes: 0 success, 1 validation error, 2 numerical non-convergence,
// 3 verification failure.
#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qsr/qsr.h"

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

struct CliError {
    int code;
    std::string message;
};

[[noreturn]] void fail(int code, const std::string& msg) { throw CliError{code, msg}; }

void check(qsr_status st) {
    if (st == QSR_OK) return;
    fail(static_cast<int>(st), qsr_last_error());
}

// ---- flat key = value config ----

struct Config {
    std::map<std::string, std::string> kv;
    std::vector<std::string> order;  // original key order for echoing

    bool has(const std::string& k) const { return kv.count(k) != 0; }

    std::string str(const std::string& k, const std::string& fallback) const {
        auto it = kv.find(k);
        return it == kv.end() ? fallback : it->second;
    }

    double num(const std::string& k, double fallback) const {
        auto it = kv.find(k);
        if (it == kv.end()) return fallback;
        return parse_num(k, it->second);
    }

    double num_required(const std::string& k) const {
        auto it = kv.find(k);
        if (it == kv.end()) fail(1, "config: missing required key '" + k + "'");
        return parse_num(k, it->second);
    }

    static double parse_num(const std::string& k, const std::string& v) {
        std::size_t pos = 0;
        double out = 0.0;
        try {
            out = std::stod(v, &pos);
        } catch (...) {
            fail(1, "config: key '" + k + "': not a number: '" + v + "'");
        }
        if (pos != v.size())
            fail(1, "config: key '" + k + "': trailing characters in '" + v +
                        "' (values are plain numbers; angles are radians)");
        return out;
    }
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "psf",      "sigma1",    "sigma2",   "beta",      "grid_file", "x_bar",
        "y_bar",    "r",         "alpha",    "epsilon",   "n_total",   "scan",
        "n_alpha",  "n_eps",     "n_r",      "alpha_min", "alpha_max", "eps_min",
        "eps_max",  "r_min",     "r_max",    "r_list",    "trials",    "n_photons"};
    return keys;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) fail(1, "cannot open config file: " + path);
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            fail(1, path + ": line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (!known_keys().count(key))
            fail(1, path + ": line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (cfg.kv.count(key))
            fail(1, path + ": line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        cfg.kv[key] = val;
        cfg.order.push_back(key);
    }
    return cfg;
}

struct PsfHandle {
    qsr_psf* p = nullptr;
    PsfHandle() = default;
    PsfHandle(const PsfHandle&) = delete;
    PsfHandle& operator=(const PsfHandle&) = delete;
    ~PsfHandle() { qsr_psf_destroy(p); }
};

void make_psf(const Config& cfg, PsfHandle& out) {
    std::string kind = cfg.str("psf", "gaussian");
    if (kind == "gaussian") {
        check(qsr_psf_create_gaussian(cfg.num_required("sigma1"), cfg.num_required("sigma2"),
                                      cfg.num("beta", 0.0), &out.p));
    } else if (kind == "grid") {
        if (!cfg.has("grid_file")) fail(1, "config: psf = grid requires grid_file");
        check(qsr_psf_load_grid(cfg.str("grid_file", "").c_str(), &out.p));
    } else {
        fail(1, "config: psf must be 'gaussian' or 'grid', got '" + kind + "'");
    }
}

qsr_scene make_scene(const Config& cfg) {
    qsr_scene s;
    s.x_bar = cfg.num("x_bar", 0.0);
    s.y_bar = cfg.num("y_bar", 0.0);
    s.r = cfg.num("r", 0.0);
    s.alpha = cfg.num("alpha", 0.0);
    s.epsilon = cfg.num("epsilon", 0.0);
    s.n_total = cfg.num("n_total", 1.0);
    return s;
}

std::string config_echo(const Config& cfg, std::uint64_t seed) {
    std::ostringstream os;
    os << "#";
    for (const std::string& k : cfg.order) os << " " << k << "=" << cfg.kv.at(k);
    os << " seed=" << seed;
    return os.str();
}

struct Output {
    std::FILE* f = stdout;
    bool owned = false;
    ~Output() {
        if (owned && f) std::fclose(f);
    }
    void open(const std::string& path) {
        if (path.empty()) return;
        f = std::fopen(path.c_str(), "w");
        if (!f) fail(1, "cannot open output file: " + path);
        owned = true;
    }
};

// ---- subcommands ----

int threads_opt = 0;
std::uint64_t seed_opt = 12345;
std::string out_path;
std::string format_opt = "csv";

char sep() { return format_opt == "tsv" ? '\t' : ','; }

void cmd_moments(const Config& cfg) {
    PsfHandle psf;
    make_psf(cfg, psf);
    qsr_scene scene = make_scene(cfg);
    qsr_base_moments b;
    qsr_geometry_moments g;
    check(qsr_compute_base_moments(psf.p, threads_opt, &b));
    check(qsr_compute_geometry_moments(psf.p, scene.r, scene.alpha, threads_opt, &g));

    Output out;
    out.open(out_path);
    std::fprintf(out.f, "%s\n", config_echo(cfg, seed_opt).c_str());
    std::fprintf(out.f, "kappa_x      = %.12g\n", b.kappa_x);
    std::fprintf(out.f, "kappa_y      = %.12g\n", b.kappa_y);
    std::fprintf(out.f, "eta          = %.12g\n", b.eta);
    std::fprintf(out.f, "delta        = %.12g\n", g.delta);
    std::fprintf(out.f, "gamma_x      = %.12g\n", g.gamma_x);
    std::fprintf(out.f, "gamma_y      = %.12g\n", g.gamma_y);
    std::fprintf(out.f, "kappa_r      = %.12g\n", g.kappa_r);
    std::fprintf(out.f, "kappa_r_perp = %.12g\n", g.kappa_r_perp);
}

void cmd_precision(const Config& cfg) {
    PsfHandle psf;
    make_psf(cfg, psf);
    qsr_scene scene = make_scene(cfg);
    qsr_precision_report rep;
    check(qsr_compute_precision_report(psf.p, &scene, threads_opt, &rep));

    Output out;
    out.open(out_path);
    char d = sep();
    std::fprintf(out.f, "%s\n", config_echo(cfg, seed_opt).c_str());
    std::fprintf(out.f, "quantity%cvalue\n", d);
    auto row = [&](const char* name, double v) { std::fprintf(out.f, "%s%c%.12g\n", name, d, v); };
    row("h_r", rep.h_r);
    row("var_r", rep.h_r > 0 ? 1.0 / rep.h_r : INFINITY);
    row("h_r_limit", rep.h_r_limit);
    row("h_alpha", rep.h_alpha);
    row("var_alpha", rep.h_alpha > 0 ? 1.0 / rep.h_alpha : INFINITY);
    row("h_alpha_smallr", rep.h_alpha_smallr);
    row("alpha_opt", rep.alpha_opt);
    row("alpha_wor", rep.alpha_wor);
    row("xi", rep.xi);
    row("h_r_direct", rep.h_r_direct);
    row("a_factor", rep.a_factor);
    row("delta", rep.geom.delta);
    row("qfim_cond", rep.cond);
    if (rep.r_zero_degenerate)
        std::fprintf(out.f, "# note: r = 0 -> QFIM is singular (alpha row vanishes); h_r is the "
                            "closed-form limit and h_alpha = 0 (azimuth undefined)\n");
    if (rep.cond_warning)
        std::fprintf(out.f, "# warning: QFIM condition number %.3g > 1e12; inverse-route values "
                            "are unreliable this close to r = 0\n",
                     rep.cond);
    if (rep.imbalance_warning)
        std::fprintf(out.f, "# warning: |epsilon| = %g is close to 1; precision degrades "
                            "monotonically with |epsilon| and vanishes at a dark source\n",
                     std::abs(scene.epsilon));
    if (rep.azimuth_degenerate)
        std::fprintf(out.f, "# note: circularly symmetric PSF; all azimuths are equivalent (xi = 1)\n");
}

void cmd_scan(const Config& cfg) {
    PsfHandle psf;
    make_psf(cfg, psf);
    qsr_scene scene = make_scene(cfg);
    std::string kind = cfg.str("scan", "alpha_eps");

    Output out;
    out.open(out_path);
    char d = sep();
    std::fprintf(out.f, "%s\n", config_echo(cfg, seed_opt).c_str());

    auto linspace = [](double lo, double hi, int n) {
        std::vector<double> v(n);
        for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
        return v;
    };

    if (kind == "alpha_eps") {
        int n_alpha = static_cast<int>(cfg.num("n_alpha", 181));
        int n_eps = static_cast<int>(cfg.num("n_eps", 41));
        if (n_alpha < 1 || n_eps < 1) fail(1, "config: scan grid sizes must be >= 1");
        std::vector<double> alphas = linspace(cfg.num("alpha_min", -0.5 * kPi),
                                              cfg.num("alpha_max", 0.5 * kPi), n_alpha);
        std::vector<double> epss =
            linspace(cfg.num("eps_min", -0.98), cfg.num("eps_max", 0.98), n_eps);
        std::fprintf(out.f, "alpha%cepsilon%ch_r_limit\n", d, d);
        for (double a : alphas) {
            for (double e : epss) {
                double h = 0.0;
                check(qsr_precision_r_limit_at(psf.p, a, e, scene.n_total, threads_opt, &h));
                std::fprintf(out.f, "%.12g%c%.12g%c%.12g\n", a, d, e, d, h);
            }
        }
    } else if (kind == "r_alpha") {
        int n_r = static_cast<int>(cfg.num("n_r", 41));
        int n_alpha = static_cast<int>(cfg.num("n_alpha", 181));
        if (n_r < 1 || n_alpha < 1) fail(1, "config: scan grid sizes must be >= 1");
        std::vector<double> rs = linspace(cfg.num("r_min", 1e-3), cfg.num("r_max", 1.0), n_r);
        std::vector<double> alphas =
            linspace(cfg.num("alpha_min", 0.0), cfg.num("alpha_max", kPi), n_alpha);
        std::fprintf(out.f, "r%calpha%ch_alpha\n", d, d);
        for (double r : rs) {
            for (double a : alphas) {
                qsr_scene s = scene;
                s.r = r;
                s.alpha = a;
                double h = 0.0;
                int degen = 0;
                check(qsr_precision_alpha_at(psf.p, &s, threads_opt, &h, &degen));
                std::fprintf(out.f, "%.12g%c%.12g%c%.12g\n", r, d, a, d, h);
            }
        }
    } else {
        fail(1, "config: scan must be 'alpha_eps' or 'r_alpha', got '" + kind + "'");
    }
}

void cmd_simulate(const Config& cfg) {
    if (out_path.empty()) fail(1, "simulate requires --out (CSV plus sidecar metadata file)");
    PsfHandle psf;
    make_psf(cfg, psf);
    qsr_scene scene = make_scene(cfg);

    std::vector<double> r_list;
    {
        std::string spec = cfg.str("r_list", "");
        if (spec.empty()) fail(1, "config: simulate requires r_list (comma-separated)");
        std::stringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) r_list.push_back(Config::parse_num("r_list", trim(tok)));
    }
    int trials = static_cast<int>(cfg.num("trials", 50));
    long long n_photons = static_cast<long long>(cfg.num("n_photons", 10000));

    std::vector<qsr_experiment_row> rows(r_list.size());
    check(qsr_rayleigh_experiment(psf.p, scene.epsilon, scene.alpha, r_list.data(),
                                  static_cast<int>(r_list.size()), n_photons, trials, seed_opt,
                                  threads_opt, rows.data()));

    Output out;
    out.open(out_path);
    char d = sep();
    std::fprintf(out.f, "%s\n", config_echo(cfg, seed_opt).c_str());
    std::fprintf(out.f, "r%cempirical_var%ccrb_var%ctrials%cconverged\n", d, d, d, d);
    for (const auto& row : rows)
        std::fprintf(out.f, "%.12g%c%.12g%c%.12g%c%d%c%d\n", row.r, d, row.empirical_var, d,
                     row.crb_var, d, row.trials, d, row.converged);

    std::ofstream meta(out_path + ".meta");
    if (!meta.good()) fail(1, "cannot open sidecar metadata file: " + out_path + ".meta");
    meta << "command = simulate\n";
    meta << "seed = " << seed_opt << "\n";
    meta << "n_photons = " << n_photons << "\n";
    meta << "trials = " << trials << "\n";
    for (const std::string& k : cfg.order) meta << k << " = " << cfg.kv.at(k) << "\n";
}

// verification suite; tol_scale != 1 is a test hook that corrupts tolerances
void cmd_verify(const Config& cfg, double tol_scale) {
    PsfHandle psf;
    make_psf(cfg, psf);
    bool grid_psf = cfg.str("psf", "gaussian") == "grid";
    qsr_scene scene = make_scene(cfg);
    if (scene.n_total <= 0) scene.n_total = 1.0;

    Output out;
    out.open(out_path);
    int failures = 0;
    auto report = [&](const char* name, double measured, double tol) {
        bool ok = measured <= tol;
        if (!ok) ++failures;
        std::fprintf(out.f, "[%s] %-32s measured=%.3e tol=%.3e\n", ok ? "PASS" : "FAIL", name,
                     measured, tol);
    };

    double qfim_tol = (grid_psf ? 1e-5 : 1e-6) * tol_scale;
    double ev_tol = (grid_psf ? 1e-6 : 1e-10) * tol_scale;
    double sld_tol = (grid_psf ? 1e-6 : 1e-8) * tol_scale;
    double rot_tol = (grid_psf ? 1e-5 : 1e-9) * tol_scale;
    double limit_tol = 1e-4 * tol_scale;

    const double r_probe[2] = {0.3, 1.0};
    const double a_probe[2] = {0.5, 1.7};
    const double e_probe[2] = {0.0, 0.4};

    // closed-form QFIM vs Gram-subspace oracle, plus eigenvalues
    double worst_q = 0.0, worst_ev = 0.0;
    for (double r : r_probe) {
        for (double a : a_probe) {
            for (double e : e_probe) {
                qsr_scene s = scene;
                s.r = r;
                s.alpha = a;
                s.epsilon = e;
                double closed[16];
                check(qsr_compute_qfim(psf.p, &s, threads_opt, closed));
                qsr_oracle_result oracle;
                check(qsr_oracle_qfim(psf.p, &s, 2.5e-4, threads_opt, &oracle));
                for (int k = 0; k < 16; ++k) {
                    double ref = closed[k];
                    double diff = std::abs(oracle.qfim[k] - ref);
                    worst_q =
                        std::max(worst_q, std::abs(ref) > 1e-10 ? diff / std::abs(ref) : diff);
                }
                qsr_geometry_moments g;
                check(qsr_compute_geometry_moments(psf.p, r, a, threads_opt, &g));
                qsr_eigensystem es;
                check(qsr_compute_eigensystem(g.delta, e, &es));
                worst_ev = std::max(worst_ev, std::abs(oracle.lambda1 - es.lambda1));
                worst_ev = std::max(worst_ev, std::abs(oracle.lambda2 - es.lambda2));
            }
        }
    }
    report("qfim_oracle_agreement", worst_q, qfim_tol);
    report("eigenvalue_agreement", worst_ev, ev_tol);

    // SLD compatibility + negative control
    {
        qsr_scene s = scene;
        s.r = 0.5;
        s.alpha = 1.0;
        s.epsilon = 0.3;
        double res = 0.0;
        check(qsr_sld_residual(psf.p, &s, threads_opt, &res));
        report("sld_residual_real_psf", res, sld_tol);
        double res_c = 0.0;
        check(qsr_sld_residual_chirped(1.0, 1.4, 0.4, 0.1, &s, &res_c));
        report("sld_negative_control", res_c > 1e-3 * tol_scale ? 0.0 : 1.0, 0.5);
    }

    // coordinate invariance of H_r under rotation
    {
        double worst = 0.0;
        for (double theta : {0.37, 1.1}) {
            PsfHandle rot;
            check(qsr_psf_rotate(psf.p, theta, &rot.p));
            for (double e : e_probe) {
                qsr_scene s0 = scene;
                s0.r = 0.4;
                s0.alpha = 0.8;
                s0.epsilon = e;
                qsr_scene s1 = s0;
                s1.alpha += theta;
                qsr_precision_report rep0, rep1;
                check(qsr_compute_precision_report(psf.p, &s0, threads_opt, &rep0));
                check(qsr_compute_precision_report(rot.p, &s1, threads_opt, &rep1));
                worst = std::max(worst, std::abs(rep1.h_r - rep0.h_r) / rep0.h_r);
            }
        }
        report("coordinate_invariance_h_r", worst, rot_tol);
    }

    // small-r limits
    {
        qsr_scene s = scene;
        s.alpha = 0.8;
        s.epsilon = 0.3;
        s.r = 1e-4;
        qsr_precision_report rep;
        check(qsr_compute_precision_report(psf.p, &s, threads_opt, &rep));
        report("h_r_small_r_limit", std::abs(rep.h_r - rep.h_r_limit) / rep.h_r_limit, limit_tol);
        qsr_scene s2 = s;
        s2.r = 1e-3;
        qsr_precision_report rep2;
        check(qsr_compute_precision_report(psf.p, &s2, threads_opt, &rep2));
        report("h_alpha_small_r_limit",
               std::abs(rep2.h_alpha - rep2.h_alpha_smallr) / rep2.h_alpha_smallr, limit_tol);
    }

    std::fprintf(out.f, "%s: %d check group(s) failed\n", failures == 0 ? "OK" : "FAILED",
                 failures);
    if (failures > 0) fail(3, "verification failed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum/classical precision limits for two-point-source resolution"};
    app.require_subcommand(1);

    std::string config_path;
    double tol_scale = 1.0;

    app.add_option("--seed", seed_opt, "RNG master seed");
    app.add_option("--threads", threads_opt, "worker threads (0 = auto)");
    app.add_option("--out", out_path, "output file (default: stdout)");
    app.add_option("--format", format_opt, "csv or tsv")->check(CLI::IsMember({"csv", "tsv"}));

    CLI::App* c_moments = app.add_subcommand("moments", "PSF and geometry moments");
    CLI::App* c_precision = app.add_subcommand("precision", "precision report for one scene");
    CLI::App* c_scan = app.add_subcommand("scan", "parameter scans (alpha_eps or r_alpha)");
    CLI::App* c_simulate = app.add_subcommand("simulate", "Monte Carlo MLE experiment");
    CLI::App* c_verify = app.add_subcommand("verify", "oracle verification suite");
    for (CLI::App* sub : {c_moments, c_precision, c_scan, c_simulate, c_verify})
        sub->add_option("--config", config_path, "flat key = value config file")->required();
    c_verify->add_option("--tolerance-scale", tol_scale,
                         "scale verification tolerances (test hook)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        Config cfg = load_config(config_path);
        if (c_moments->parsed()) cmd_moments(cfg);
        if (c_precision->parsed()) cmd_precision(cfg);
        if (c_scan->parsed()) cmd_scan(cfg);
        if (c_simulate->parsed()) cmd_simulate(cfg);
        if (c_verify->parsed()) cmd_verify(cfg, tol_scale);
    } catch (const CliError& e) {
        std::fprintf(stderr, "error: %s\n", e.message.c_str());
        return e.code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
