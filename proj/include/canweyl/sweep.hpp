#pragma once

// Envelope sweep: for each (r, theta) on a geometric grid, the estimate
// bundle, the certified Weyl coefficient, and the envelope verdict.  Rows
// are computed in parallel but emitted in (r, theta) order with a
// deterministic summary, so output is stable across runs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "canweyl/corpus.hpp"
#include "canweyl/estimator.hpp"
#include "canweyl/weyl.hpp"

namespace canweyl {

struct SweepGrid {
    double r_min = 1.0, r_max = 1e5;
    int points = 12;

    std::vector<double> values() const {
        std::vector<double> rs;
        if (points == 1) {
            rs.push_back(r_min);
            return rs;
        }
        for (int i = 0; i < points; ++i)
            rs.push_back(r_min * std::pow(r_max / r_min, (double)i / (points - 1)));
        return rs;
    }
};

struct SweepRow {
    double r, theta;
    double t_crit, A, L;
    double lower_abs, upper_abs;
    double abs_q, re_q, im_q;
    double eps_cert;
    bool envelope_ok;
    double slack;  // least margin across the five envelope inequalities, relative to A
};

struct SweepSummary {
    int rows = 0;
    int violations = 0;
    int split_prefixes = 0;
    double min_slack = inf, max_slack = -inf;
    double slope_A = 0.0, slope_L = 0.0, slope_abs_q = 0.0, slope_im_q = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    SweepSummary summary;
};

inline int sweep_thread_count() {
    if (const char* env = std::getenv("CANONICAL_WEYL_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? (int)hc : 1;
}

namespace detail {

inline double loglog_slope(const std::vector<double>& r, const std::vector<double>& v) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(v[i] > 0.0) || !(r[i] > 0.0)) continue;
        const double x = std::log(r[i]), y = std::log(v[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return 0.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Runs the envelope sweep; leading indivisible intervals are split off and
/// the verdicts apply to the remaining tail (count reported in the summary).
inline SweepResult run_sweep(const Hamiltonian& h, const SweepGrid& grid,
                             const std::vector<double>& angles, const EstimatorConfig& cfg = {},
                             double eps_target = 1e-8, int threads = 0) {
    cfg.validate();
    auto [prefixes, tail] = split_all_indivisible(h);
    const std::vector<double> rs = grid.values();

    struct Task {
        double r, theta;
    };
    std::vector<Task> tasks;
    for (double r : rs)
        for (double th : angles) tasks.push_back({r, th});

    std::vector<SweepRow> rows(tasks.size());
    const int nthreads = threads > 0 ? threads : sweep_thread_count();
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(tasks.size());
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& tk = tasks[i];
            SweepRow& row = rows[i];
            row.r = tk.r;
            row.theta = tk.theta;
            try {
                EstimateBundle b = estimate_bundle(tail, tk.r, {tk.theta}, cfg);
                const AngleEnvelope& e = b.envelope[0];
                const complex z = tk.r * complex(std::cos(tk.theta), std::sin(tk.theta));
                CertifiedValue q = weyl_coefficient(tail, z, eps_target);
                row.t_crit = b.t_crit;
                row.A = b.A;
                row.L = b.L;
                row.lower_abs = e.lower_abs;
                row.upper_abs = e.upper_abs;
                row.abs_q = std::abs(q.value);
                row.re_q = q.value.real();
                row.im_q = q.value.imag();
                row.eps_cert = q.radius;
                const double eps = q.radius;
                const double margins[5] = {
                    e.upper_abs + eps - row.abs_q, row.abs_q - e.lower_abs + eps,
                    e.upper_re + eps - std::abs(row.re_q), e.upper_im + eps - row.im_q,
                    row.im_q - e.lower_im + eps};
                double slack = margins[0];
                for (double m : margins) slack = std::min(slack, m);
                row.slack = slack / std::max(b.A, 1e-300);
                row.envelope_ok = slack >= 0.0;
            } catch (const Error& err) {
                errors[i] = err.what();
                row.envelope_ok = false;
                row.slack = -inf;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (std::size_t i = 0; i < tasks.size(); ++i)
        if (!errors[i].empty()) throw Error("sweep row (r=" + std::to_string(tasks[i].r) +
                                            "): " + errors[i]);

    SweepResult res;
    res.rows = std::move(rows);
    res.summary.rows = (int)res.rows.size();
    res.summary.split_prefixes = (int)prefixes.size();
    for (const auto& row : res.rows) {
        if (!row.envelope_ok) ++res.summary.violations;
        res.summary.min_slack = std::min(res.summary.min_slack, row.slack);
        res.summary.max_slack = std::max(res.summary.max_slack, row.slack);
    }
    // fitted log-log slopes along the angle closest to pi/2
    double best = inf;
    double th_star = angles.empty() ? M_PI / 2 : angles[0];
    for (double th : angles)
        if (std::abs(th - M_PI / 2) < best) {
            best = std::abs(th - M_PI / 2);
            th_star = th;
        }
    std::vector<double> rv, Av, Lv, qv, iv;
    for (const auto& row : res.rows)
        if (row.theta == th_star) {
            rv.push_back(row.r);
            Av.push_back(row.A);
            Lv.push_back(row.L);
            qv.push_back(row.abs_q);
            iv.push_back(row.im_q);
        }
    res.summary.slope_A = detail::loglog_slope(rv, Av);
    res.summary.slope_L = detail::loglog_slope(rv, Lv);
    res.summary.slope_abs_q = detail::loglog_slope(rv, qv);
    res.summary.slope_im_q = detail::loglog_slope(rv, iv);
    return res;
}

inline void write_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "r,theta,t_crit,A,L,lower_abs,upper_abs,abs_q,re_q,im_q,eps_cert,envelope_ok\n";
    char buf[512];
    for (const auto& w : rows) {
        std::snprintf(buf, sizeof buf,
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                      w.r, w.theta, w.t_crit, w.A, w.L, w.lower_abs, w.upper_abs, w.abs_q,
                      w.re_q, w.im_q, w.eps_cert, w.envelope_ok ? 1 : 0);
        os << buf;
    }
}

}  // namespace canweyl
