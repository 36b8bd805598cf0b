// Command line driver: certified Weyl coefficients, envelope estimates and
// sweeps, series-coefficient checks, spectral growth classifiers, Krein
// string and Sturm-Liouville reductions.
//
// Exit codes: 0 success, 2 envelope violation, 3 configuration error,
// 4 numeric failure.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "canweyl/canweyl.hpp"

namespace cw = canweyl;
using nlohmann::json;

namespace {

struct Options {
    std::string config_path;
    std::string out;
    double q = -1.0;
    double eps = -1.0;
    std::string grid;
    std::vector<double> angles;
    std::string format;
    double r = -1.0;
    double theta = M_PI / 2;
    double t = -1.0;
    int order = 8;
    std::string name;
    std::vector<double> y_values;
    double gamma = 1.0;
    double t_lo = -1.0, t_hi = -1.0;
    double kappa = 0.1;
};

cw::RunConfig load_config(const Options& opt) {
    cw::RunConfig cfg;
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path);
        if (!in) throw cw::Error("cannot open config file: " + opt.config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = cw::parse_config(ss.str());
    }
    if (opt.q > 0.0) {
        if (!(opt.q < cw::q_upper_limit))
            throw cw::SchemaError("q must lie in (0, 1 - 1/sqrt 2)", "q");
        cfg.q = opt.q;
    }
    if (opt.eps > 0.0) cfg.eps = opt.eps;
    if (!opt.grid.empty()) {
        double mn, mx;
        int n;
        if (std::sscanf(opt.grid.c_str(), "%lf:%lf:%d", &mn, &mx, &n) != 3 || !(mn > 0.0) ||
            !(mx > mn) || n < 1)
            throw cw::SchemaError("--grid must be MIN:MAX:N with 0 < MIN < MAX", "grid");
        cfg.grid = {mn, mx, n};
    }
    if (!opt.angles.empty()) cfg.angles = opt.angles;
    if (!opt.out.empty()) cfg.out = opt.out;
    if (!opt.format.empty()) {
        if (opt.format != "csv" && opt.format != "json")
            throw cw::SchemaError("--format must be csv or json", "format");
        cfg.format = opt.format;
    }
    return cfg;
}

const cw::Hamiltonian& need_hamiltonian(const cw::RunConfig& cfg) {
    if (!cfg.hamiltonian)
        throw cw::SchemaError("this command needs a 'hamiltonian' entry in the config",
                              "hamiltonian");
    return *cfg.hamiltonian;
}

std::ostream& open_out(const cw::RunConfig& cfg, std::ofstream& file) {
    if (cfg.out.empty()) return std::cout;
    file.open(cfg.out);
    if (!file) throw cw::Error("cannot open output file: " + cfg.out);
    return file;
}

void emit(const cw::RunConfig& cfg, const json& j) {
    std::ofstream file;
    std::ostream& os = open_out(cfg, file);
    os << j.dump(2) << "\n";
}

json bundle_json(const cw::EstimateBundle& b) {
    json env = json::array();
    for (const auto& e : b.envelope)
        env.push_back({{"theta", e.theta},
                       {"lower_abs", e.lower_abs},
                       {"upper_abs", e.upper_abs},
                       {"upper_re", e.upper_re},
                       {"lower_im", e.lower_im},
                       {"upper_im", e.upper_im}});
    return {{"r", b.r},       {"t_crit", b.t_crit}, {"A", b.A},
            {"L", b.L},       {"sigma", b.sigma},   {"envelope", env}};
}

const char* verdict_name(cw::IntegralVerdict v) {
    switch (v) {
        case cw::IntegralVerdict::Convergent: return "convergent";
        case cw::IntegralVerdict::Divergent: return "divergent";
        default: return "inconclusive";
    }
}

const char* membership_name(cw::Membership m) {
    switch (m) {
        case cw::Membership::Yes: return "yes";
        case cw::Membership::No: return "no";
        default: return "unknown";
    }
}

int cmd_estimate(const cw::RunConfig& cfg) {
    const auto& h0 = need_hamiltonian(cfg);
    auto [prefixes, h] = cw::split_all_indivisible(h0);
    cw::EstimatorConfig ec;
    ec.q = cfg.q;
    json rows = json::array();
    for (double r : cfg.grid.values()) rows.push_back(bundle_json(cw::estimate_bundle(h, r, cfg.angles, ec)));
    emit(cfg, {{"split_prefixes", prefixes.size()}, {"bundles", rows}});
    return 0;
}

int cmd_weyl(const cw::RunConfig& cfg, const Options& opt) {
    const auto& h = need_hamiltonian(cfg);
    json rows = json::array();
    std::vector<double> rs = opt.r > 0.0 ? std::vector<double>{opt.r} : cfg.grid.values();
    for (double r : rs) {
        const cw::complex z = r * cw::complex(std::cos(opt.theta), std::sin(opt.theta));
        cw::CertifiedValue q = cw::weyl_coefficient(h, z, cfg.eps);
        rows.push_back({{"r", r},
                        {"theta", opt.theta},
                        {"re", q.value.real()},
                        {"im", q.value.imag()},
                        {"eps_cert", q.radius}});
    }
    emit(cfg, {{"values", rows}});
    return 0;
}

int cmd_bounds_check(const cw::RunConfig& cfg, const Options& opt) {
    const auto& h = need_hamiltonian(cfg);
    if (!(opt.r > 0.0 && opt.t_lo > 0.0 && opt.t_hi > opt.t_lo))
        throw cw::SchemaError("bounds-check needs --r and a bracket --t-lo < --t-hi", "t_lo");
    cw::EstimatorConfig ec;
    ec.q = cfg.q;
    cw::BracketBounds bb = cw::bracket_bounds(h, opt.r, opt.t_lo, opt.t_hi, opt.theta, ec);
    emit(cfg, {{"r", opt.r},
               {"theta", opt.theta},
               {"A_lower", bb.A_lower},
               {"A_upper", bb.A_upper},
               {"L_lower", bb.L_lower},
               {"L_upper", bb.L_upper},
               {"lower_abs", bb.envelope.lower_abs},
               {"upper_abs", bb.envelope.upper_abs},
               {"upper_re", bb.envelope.upper_re},
               {"lower_im", bb.envelope.lower_im},
               {"upper_im", bb.envelope.upper_im}});
    return 0;
}

int cmd_series_check(const cw::RunConfig& cfg, const Options& opt) {
    const auto& h = need_hamiltonian(cfg);
    const double t = opt.t > 0.0 ? opt.t : 1.0;
    cw::BoundReport rep = cw::verify_coefficient_bounds(h, t, opt.order);
    json viol = json::array();
    for (const auto& v : rep.violations)
        viol.push_back({{"rule", v.rule}, {"n", v.n}, {"m", v.m}});
    emit(cfg, {{"t", t}, {"order", opt.order}, {"checks", rep.checks},
               {"ok", rep.ok}, {"violations", viol}});
    return rep.ok ? 0 : 2;
}

int cmd_spectral(const cw::RunConfig& cfg, const Options& opt) {
    json out;
    cw::RegVarFunction g = cfg.weight ? *cfg.weight : cw::RegVarFunction::power_fn(1.0, opt.gamma);
    if (cfg.hamiltonian) {
        const auto& h = *cfg.hamiltonian;
        const double a_prime =
            std::isfinite(h.right()) ? 0.5 * (h.left() + h.right()) : h.left() + 1.0;
        cw::GrowthClassReport kac = cw::kac_criterion(h, g, a_prime);
        cw::GrowthClassReport fg = cw::fg_criterion(h, g);
        json conds = json::array();
        for (const auto& c : kac.conditions)
            conds.push_back({{"name", c.name}, {"verdict", verdict_name(c.verdict)}});
        out["kac"] = {{"conditions", conds},
                      {"weighted_class", membership_name(kac.weighted_class)},
                      {"weighted_class_variant", membership_name(kac.weighted_class_variant)},
                      {"diagonally_dominant", kac.diagonally_dominant}};
        out["tail"] = {{"tail_class", membership_name(fg.tail_class)},
                       {"tail_class_little_o", membership_name(fg.tail_class_little_o)},
                       {"limsup_primary", fg.limsup_primary},
                       {"limsup_secondary", fg.limsup_secondary}};
    }
    if (cfg.measure) {
        cw::TauberianReport rep = cw::tauberian_check(*cfg.measure, g);
        out["tauberian"] = {{"alpha", rep.alpha},
                            {"lhs_limsup", rep.lhs_limsup},
                            {"rhs_limsup", rep.rhs_limsup},
                            {"lower_constant", rep.lower_constant},
                            {"upper_constant", rep.upper_constant},
                            {"lower_ok", rep.lower_ok},
                            {"upper_ok", rep.upper_ok}};
    }
    if (out.empty())
        throw cw::SchemaError("spectral needs a 'hamiltonian' or 'measure' entry", "config");
    emit(cfg, out);
    return 0;
}

int cmd_string(const cw::RunConfig& cfg, const Options& opt) {
    if (!cfg.string) throw cw::SchemaError("string command needs a 'string' entry", "string");
    const auto& s = *cfg.string;
    json rows = json::array();
    std::vector<double> ys = opt.y_values.empty() ? std::vector<double>{1.0, 100.0, 10000.0}
                                                  : opt.y_values;
    for (double y : ys) {
        cw::CertifiedValue qs = cw::string_coefficient(s, cw::complex(-y, 0.0), cfg.eps);
        cw::KasaharaEstimate ke = cw::kasahara_estimate(s, y, cfg.q, cfg.eps);
        rows.push_back({{"y", y},
                        {"q_s", qs.value.real()},
                        {"eps_cert", qs.radius},
                        {"f_inv", ke.f_inv_value},
                        {"ratio", ke.ratio},
                        {"band", {ke.band_lo, ke.band_hi}},
                        {"within_band", ke.within_band}});
    }
    json out = {{"regular", cw::string_is_regular(s)}, {"values", rows}};
    if (cfg.weight) {
        cw::IntegralVerdict v = cw::string_kac_criterion(s, [&](double r) { return (*cfg.weight)(r); });
        out["kac_verdict"] = verdict_name(v);
    }
    emit(cfg, out);
    return 0;
}

int cmd_sl(const cw::RunConfig& cfg, const Options& opt) {
    if (!cfg.sl) throw cw::SchemaError("sl command needs an 'sl' entry", "sl");
    const auto& prob = *cfg.sl;
    json rows = json::array();
    for (double r : cfg.grid.values()) {
        cw::SlEnvelope env = cw::sl_envelope(prob, r, opt.theta, opt.kappa);
        json row = {{"r", r},          {"theta", opt.theta}, {"x_hat", env.x_hat},
                    {"B", env.B},      {"C1", env.C1},       {"C2", env.C2},
                    {"lower", env.lower}, {"upper", env.upper}};
        if (!prob.q) {
            cw::CertifiedValue qd = cw::sl_dirichlet_q(
                prob, r * cw::complex(std::cos(opt.theta), std::sin(opt.theta)), cfg.eps);
            row["abs_q_dirichlet"] = std::abs(qd.value);
            row["eps_cert"] = qd.radius;
            row["within"] =
                std::abs(qd.value) >= env.lower - qd.radius && std::abs(qd.value) <= env.upper + qd.radius;
        }
        if (env.potential_case) row["r0"] = env.r0;
        rows.push_back(row);
    }
    emit(cfg, {{"rows", rows}});
    return 0;
}

int cmd_sweep(const cw::RunConfig& cfg) {
    const auto& h = need_hamiltonian(cfg);
    cw::EstimatorConfig ec;
    ec.q = cfg.q;
    cw::SweepResult res = cw::run_sweep(h, cfg.grid, cfg.angles, ec, cfg.eps);
    std::ofstream file;
    std::ostream& os = open_out(cfg, file);
    if (cfg.format == "csv") {
        cw::write_csv(os, res.rows);
    } else {
        json rows = json::array();
        for (const auto& w : res.rows)
            rows.push_back({{"r", w.r}, {"theta", w.theta}, {"t_crit", w.t_crit},
                            {"A", w.A}, {"L", w.L}, {"lower_abs", w.lower_abs},
                            {"upper_abs", w.upper_abs}, {"abs_q", w.abs_q},
                            {"re_q", w.re_q}, {"im_q", w.im_q}, {"eps_cert", w.eps_cert},
                            {"envelope_ok", w.envelope_ok}});
        os << rows.dump(2) << "\n";
    }
    json summary = {{"rows", res.summary.rows},
                    {"violations", res.summary.violations},
                    {"split_prefixes", res.summary.split_prefixes},
                    {"min_slack", res.summary.min_slack},
                    {"max_slack", res.summary.max_slack},
                    {"slope_A", res.summary.slope_A},
                    {"slope_L", res.summary.slope_L},
                    {"slope_abs_q", res.summary.slope_abs_q},
                    {"slope_im_q", res.summary.slope_im_q}};
    std::cerr << summary.dump(2) << "\n";
    return res.summary.violations == 0 ? 0 : 2;
}

int cmd_corpus(const cw::RunConfig& cfg, const Options& opt) {
    if (opt.name.empty()) {
        json names = json::array();
        for (const auto& n : cw::corpus::names()) names.push_back(n);
        emit(cfg, {{"corpus", names}});
        return 0;
    }
    cw::corpus::by_name(opt.name);  // validates the name
    json j = {{"hamiltonian", {{"type", "corpus"}, {"name", opt.name}}},
              {"q", cfg.q},
              {"eps", cfg.eps},
              {"grid",
               {{"min", cfg.grid.r_min}, {"max", cfg.grid.r_max}, {"points", cfg.grid.points}}},
              {"angles", cfg.angles},
              {"format", cfg.format}};
    emit(cfg, j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certified high-energy estimates for Weyl coefficients of 2d canonical systems"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config_path, "JSON configuration file");
    app.add_option("--out", opt.out, "output path (default stdout)");
    app.add_option("--q", opt.q, "envelope parameter in (0, 1 - 1/sqrt 2)");
    app.add_option("--eps", opt.eps, "certificate target for the solver");
    app.add_option("--grid", opt.grid, "geometric grid MIN:MAX:N");
    app.add_option("--angles", opt.angles, "angles in (0, pi)")->delimiter(',');
    app.add_option("--format", opt.format, "csv or json");

    auto* estimate = app.add_subcommand("estimate", "envelope bundles on the grid");
    auto* weyl = app.add_subcommand("weyl", "certified Weyl coefficient values");
    weyl->add_option("--r", opt.r, "single radius (otherwise the grid)");
    weyl->add_option("--theta", opt.theta, "angle in (0, pi)");
    auto* bounds = app.add_subcommand("bounds-check", "bracket-based weaker bounds");
    bounds->add_option("--r", opt.r, "radius");
    bounds->add_option("--theta", opt.theta, "angle");
    bounds->add_option("--t-lo", opt.t_lo, "bracket lower end");
    bounds->add_option("--t-hi", opt.t_hi, "bracket upper end");
    auto* series = app.add_subcommand("series-check", "series coefficient bound verification");
    series->add_option("--t", opt.t, "evaluation point");
    series->add_option("--order", opt.order, "top coefficient order (<= 10)");
    auto* spectral = app.add_subcommand("spectral", "growth classifiers / Tauberian checks");
    spectral->add_option("--gamma", opt.gamma, "power weight exponent");
    auto* stringcmd = app.add_subcommand("string", "Krein string coefficient and estimates");
    stringcmd->add_option("--y", opt.y_values, "evaluation points on (0, inf)")->delimiter(',');
    auto* sl = app.add_subcommand("sl", "Sturm-Liouville envelopes");
    sl->add_option("--theta", opt.theta, "angle in (0, 2 pi)");
    sl->add_option("--kappa", opt.kappa, "parameter in (0, 1/2 - 1/(2 sqrt 2))");
    auto* sweep = app.add_subcommand("sweep", "envelope sweep with CSV output");
    auto* corpus = app.add_subcommand("corpus", "built-in model Hamiltonians");
    corpus->add_option("--name", opt.name, "emit an expanded config for this fixture");

    CLI11_PARSE(app, argc, argv);

    try {
        cw::RunConfig cfg = load_config(opt);
        if (estimate->parsed()) return cmd_estimate(cfg);
        if (weyl->parsed()) return cmd_weyl(cfg, opt);
        if (bounds->parsed()) return cmd_bounds_check(cfg, opt);
        if (series->parsed()) return cmd_series_check(cfg, opt);
        if (spectral->parsed()) return cmd_spectral(cfg, opt);
        if (stringcmd->parsed()) return cmd_string(cfg, opt);
        if (sl->parsed()) return cmd_sl(cfg, opt);
        if (sweep->parsed()) return cmd_sweep(cfg);
        if (corpus->parsed()) return cmd_corpus(cfg, opt);
    } catch (const cw::ParseError& e) {
        std::cerr << "config parse error at line " << e.line << ", column " << e.column << ": "
                  << e.what() << "\n";
        return 3;
    } catch (const cw::SchemaError& e) {
        std::cerr << "config error (" << e.key << "): " << e.what() << "\n";
        return 3;
    } catch (const cw::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
