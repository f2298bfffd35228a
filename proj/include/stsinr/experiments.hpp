#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stsinr/delay.hpp"
#include "stsinr/estimate.hpp"
#include "stsinr/graph.hpp"
#include "stsinr/io.hpp"
#include "stsinr/marks.hpp"
#include "stsinr/oracle.hpp"
#include "stsinr/parallel.hpp"
#include "stsinr/point_pattern.hpp"
#include "stsinr/stats.hpp"

namespace stsinr {

// Seed derivation for replicated runs: every replicate gets its own pattern
// and mark seeds, all pure functions of the config seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return hash_combine(hash_combine(mix64(seed), tag), index);
}

namespace seeds {
inline constexpr std::uint64_t pattern = 0x706174ull;
inline constexpr std::uint64_t marks = 0x6d726bull;
}  // namespace seeds

// Poisson pattern, with the shifted grid superposed when configured.
inline PointPattern make_model_pattern(const ModelParams& params, std::uint64_t pattern_seed,
                                       bool with_grid) {
    PointPattern pat = sample_poisson(params.lambda_m, params.window, pattern_seed);
    if (with_grid) {
        if (!params.grid_step)
            throw std::invalid_argument("make_model_pattern: grid requested without a step");
        PointPattern grid =
            sample_shifted_grid(*params.grid_step, params.window, hash_combine(pattern_seed, 1));
        pat = superpose(pat, grid);
    }
    return pat;
}

// ---------------------------------------------------------------------------
// Degree / path-count study (mass transport check and the hard in-degree
// bound). Torus only: on the plane, boundary bias would fake a violation.
// ---------------------------------------------------------------------------

struct DegreeStudyConfig {
    ModelParams model;
    int slots = 200;
    std::vector<int> k_list = {1, 2};
    int phi_replicates = 1;
    unsigned workers = 1;
};

struct DegreeRow {
    int k = 0;
    double mean_out = 0.0;
    double mean_in = 0.0;
    double diff = 0.0;
    double joint_se = 0.0;
    double bound = 0.0;      // xi^k with xi = 1/T + 2
    double max_in = 0.0;     // largest per-vertex in-count seen
    std::uint64_t samples = 0;
    bool in_bound_ok = true;
    bool means_agree = true;
};

struct DegreeStudyResult {
    std::vector<DegreeRow> rows;
    bool all_in_bounds_ok = true;
    bool all_means_agree = true;
    std::string csv;
};

namespace detail {

struct SlotCsr {
    std::vector<int> offsets;
    std::vector<int> targets;
};

inline SlotCsr to_csr(const std::vector<std::vector<int>>& adj) {
    SlotCsr csr;
    csr.offsets.reserve(adj.size() + 1);
    csr.offsets.push_back(0);
    for (const auto& row : adj) {
        for (int j : row) csr.targets.push_back(j);
        csr.offsets.push_back(static_cast<int>(csr.targets.size()));
    }
    return csr;
}

}  // namespace detail

inline DegreeStudyResult run_degree_study(const DegreeStudyConfig& cfg) {
    cfg.model.validate();
    if (cfg.model.window.boundary != BoundaryMode::torus)
        throw std::invalid_argument(
            "run_degree_study: mass transport needs a torus window (plane mode refused)");
    if (cfg.slots < 1 || cfg.k_list.empty())
        throw std::invalid_argument("run_degree_study: need slots >= 1 and a nonempty k list");
    const int k_max = *std::max_element(cfg.k_list.begin(), cfg.k_list.end());
    if (k_max < 0) throw std::invalid_argument("run_degree_study: k must be >= 0");

    const double xi = 1.0 / cfg.model.threshold + 2.0;
    const std::size_t n_k = cfg.k_list.size();

    // accumulators across replicates
    std::vector<double> sum_out(n_k, 0.0), sum_in(n_k, 0.0), sum_d(n_k, 0.0), sum_d2(n_k, 0.0);
    std::vector<double> max_in(n_k, 0.0);
    std::uint64_t vertex_samples = 0;
    std::uint64_t slot_samples = 0;

    for (int rep = 0; rep < cfg.phi_replicates; ++rep) {
        PointPattern pattern = make_model_pattern(
            cfg.model, derive_seed(cfg.model.seed, seeds::pattern, static_cast<std::uint64_t>(rep)),
            cfg.model.grid_step.has_value());
        MarkStream stream(derive_seed(cfg.model.seed, seeds::marks, static_cast<std::uint64_t>(rep)),
                          cfg.model.aloha_p, cfg.model.fading_mu, cfg.model.noise);
        const int n = static_cast<int>(pattern.size());
        if (n == 0) continue;

        // adjacency for slots [-k_max, slots + k_max)
        const int total_slots = cfg.slots + 2 * k_max;
        std::vector<detail::SlotCsr> csr(static_cast<std::size_t>(total_slots));
        parallel_for(static_cast<std::size_t>(total_slots), cfg.workers, [&](std::size_t s) {
            std::int64_t slot = static_cast<std::int64_t>(s) - k_max;
            csr[s] = detail::to_csr(slot_adjacency(pattern, cfg.model, stream, slot));
        });
        auto adj_at = [&](std::int64_t slot) -> const detail::SlotCsr& {
            return csr[static_cast<std::size_t>(slot + k_max)];
        };

        // H^out,k(v, m): recurse backward in time so H at m+1 is available.
        std::vector<std::vector<double>> out_next(
            static_cast<std::size_t>(k_max) + 1, std::vector<double>(static_cast<std::size_t>(n)));
        std::vector<std::vector<double>> out_cur = out_next;
        std::vector<std::vector<std::vector<double>>> out_at_slot(
            static_cast<std::size_t>(cfg.slots));
        for (std::int64_t m = cfg.slots + k_max - 1; m >= 0; --m) {
            const detail::SlotCsr& a = adj_at(m);
            std::fill(out_cur[0].begin(), out_cur[0].end(), 1.0);
            for (int k = 1; k <= k_max; ++k) {
                for (int v = 0; v < n; ++v) {
                    double acc = 0.0;
                    for (int e = a.offsets[static_cast<std::size_t>(v)];
                         e < a.offsets[static_cast<std::size_t>(v) + 1]; ++e)
                        acc += out_next[static_cast<std::size_t>(k - 1)]
                                       [static_cast<std::size_t>(a.targets[static_cast<std::size_t>(e)])];
                    out_cur[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)] = acc;
                }
            }
            if (m < cfg.slots) {
                auto& keep = out_at_slot[static_cast<std::size_t>(m)];
                keep.resize(n_k);
                for (std::size_t ki = 0; ki < n_k; ++ki)
                    keep[ki] = out_cur[static_cast<std::size_t>(cfg.k_list[ki])];
            }
            out_cur.swap(out_next);
        }

        // H^in,k(v, m): forward in time, pushing counts along edges of slot m-1.
        std::vector<std::vector<double>> in_prev(
            static_cast<std::size_t>(k_max) + 1, std::vector<double>(static_cast<std::size_t>(n)));
        std::vector<std::vector<double>> in_cur = in_prev;
        for (std::int64_t m = -k_max; m < cfg.slots; ++m) {
            std::fill(in_cur[0].begin(), in_cur[0].end(), 1.0);
            for (int k = 1; k <= k_max; ++k)
                std::fill(in_cur[static_cast<std::size_t>(k)].begin(),
                          in_cur[static_cast<std::size_t>(k)].end(), 0.0);
            if (m > -k_max) {
                const detail::SlotCsr& a = adj_at(m - 1);
                for (int k = 1; k <= k_max; ++k) {
                    auto& dst = in_cur[static_cast<std::size_t>(k)];
                    const auto& src = in_prev[static_cast<std::size_t>(k - 1)];
                    for (int i = 0; i < n; ++i) {
                        double c = src[static_cast<std::size_t>(i)];
                        if (c == 0.0) continue;
                        for (int e = a.offsets[static_cast<std::size_t>(i)];
                             e < a.offsets[static_cast<std::size_t>(i) + 1]; ++e)
                            dst[static_cast<std::size_t>(a.targets[static_cast<std::size_t>(e)])] +=
                                c;
                    }
                }
            }
            if (m >= 0) {
                const auto& outs = out_at_slot[static_cast<std::size_t>(m)];
                for (std::size_t ki = 0; ki < n_k; ++ki) {
                    double so = 0.0, si = 0.0;
                    const auto& ov = outs[ki];
                    const auto& iv = in_cur[static_cast<std::size_t>(cfg.k_list[ki])];
                    for (int v = 0; v < n; ++v) {
                        so += ov[static_cast<std::size_t>(v)];
                        double ival = iv[static_cast<std::size_t>(v)];
                        si += ival;
                        if (ival > max_in[ki]) max_in[ki] = ival;
                    }
                    double mo = so / n;
                    double mi = si / n;
                    sum_out[ki] += mo;
                    sum_in[ki] += mi;
                    sum_d[ki] += mo - mi;
                    sum_d2[ki] += (mo - mi) * (mo - mi);
                }
            }
            in_cur.swap(in_prev);
        }
        vertex_samples += static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(cfg.slots);
        slot_samples += static_cast<std::uint64_t>(cfg.slots);
    }

    DegreeStudyResult res;
    std::ostringstream csv;
    csv << "k,mean_out,mean_in,diff,joint_se,xi_pow_k,max_in,samples,in_bound_ok\n";
    for (std::size_t ki = 0; ki < n_k; ++ki) {
        DegreeRow row;
        row.k = cfg.k_list[ki];
        double s = static_cast<double>(slot_samples);
        row.mean_out = sum_out[ki] / s;
        row.mean_in = sum_in[ki] / s;
        row.diff = row.mean_out - row.mean_in;
        // Slot-wise SE of the per-slot mean difference. The per-slot diffs
        // telescope, so this overestimates the true SE of the overall mean;
        // conservative in the right direction.
        double var = s > 1.5 ? (sum_d2[ki] - sum_d[ki] * sum_d[ki] / s) / (s - 1.0) : 0.0;
        row.joint_se = std::sqrt(std::max(var, 0.0) / s);
        row.bound = std::pow(xi, row.k);
        row.max_in = max_in[ki];
        row.samples = vertex_samples;
        row.in_bound_ok = row.max_in <= row.bound;
        row.means_agree = std::fabs(row.diff) <= 3.0 * row.joint_se || row.diff == 0.0;
        res.all_in_bounds_ok = res.all_in_bounds_ok && row.in_bound_ok;
        res.all_means_agree = res.all_means_agree && row.means_agree;
        csv << row.k << ',' << fmt_double(row.mean_out) << ',' << fmt_double(row.mean_in) << ','
            << fmt_double(row.diff) << ',' << fmt_double(row.joint_se) << ','
            << fmt_double(row.bound) << ',' << fmt_double(row.max_in) << ',' << row.samples << ','
            << (row.in_bound_ok ? 1 : 0) << '\n';
        res.rows.push_back(row);
    }
    res.csv = csv.str();
    return res;
}

// ---------------------------------------------------------------------------
// Exit-delay tail study at the typical node (Palm point at the origin), with
// the exact SNR-trial survival curve from the oracle as overlay.
// ---------------------------------------------------------------------------

struct ExitTailStudyConfig {
    ModelParams model;  // pure Poisson, constant noise
    int replicates = 10000;
    std::int64_t horizon = 2000;
    std::vector<double> q_list = {1, 2, 5, 10, 20, 50};
    unsigned workers = 1;
};

struct ExitTailRow {
    double q = 0.0;
    SurvivalPoint exit;
    SurvivalPoint trials;
    SurvivalPoint snr_trials;
    double oracle_exact = 0.0;
    double oracle_lower_bound = 0.0;
    double one_over_q = 0.0;
};

struct ExitTailStudyResult {
    std::vector<ExitTailRow> rows;
    double censored_fraction = 0.0;
    bool horizon_warning = false;
    // min of q * P{exit > q} over the configured q >= 10: the witness that
    // the exit tail is heavy (stays clear of zero) at reachable q.
    double heavy_tail_floor = 0.0;
    std::string csv;
    std::string outcomes_csv;  // raw per-replicate batch
};

inline ExitTailStudyResult run_exit_tail_study(const ExitTailStudyConfig& cfg) {
    cfg.model.validate();
    if (cfg.model.grid_step)
        throw std::invalid_argument("run_exit_tail_study: pure Poisson model required");
    if (cfg.model.noise.kind != NoiseKind::constant)
        throw std::invalid_argument("run_exit_tail_study: constant noise required");
    if (cfg.replicates < 1) throw std::invalid_argument("run_exit_tail_study: replicates >= 1");

    const std::size_t n = static_cast<std::size_t>(cfg.replicates);
    std::vector<DelayOutcome> outcomes(n);

    parallel_for(n, cfg.workers, [&](std::size_t r) {
        PointPattern base = sample_poisson(cfg.model.lambda_m, cfg.model.window,
                                           derive_seed(cfg.model.seed, seeds::pattern, r));
        PointPattern pattern = palm_add(base, {Vec2{0.0, 0.0}});
        MarkStream stream(derive_seed(cfg.model.seed, seeds::marks, r), cfg.model.aloha_p,
                          cfg.model.fading_mu, cfg.model.noise);
        outcomes[r] = exit_delay(pattern, cfg.model, stream, 0, 0, cfg.horizon);
    });

    std::vector<std::int64_t> exit_v(n), trials_v(n), snr_v(n);
    std::vector<std::uint8_t> exit_c(n), snr_c(n);
    for (std::size_t r = 0; r < n; ++r) {
        exit_v[r] = outcomes[r].value;
        exit_c[r] = outcomes[r].censored ? 1 : 0;
        trials_v[r] = outcomes[r].trials.value_or(0);
        snr_v[r] = outcomes[r].snr_trials.value_or(0);
        snr_c[r] = outcomes[r].snr_trials_censored ? 1 : 0;
    }

    ExitTailStudyResult res;
    std::uint64_t censored = 0;
    for (auto c : exit_c) censored += c;
    res.censored_fraction = static_cast<double>(censored) / static_cast<double>(n);

    oracle::TailCurve curve = oracle::snr_trial_curve(cfg.q_list, cfg.model);
    std::ostringstream csv;
    csv << "q,exit_survival,exit_se,trials_survival,trials_se,snr_survival,snr_se,"
           "oracle_value,oracle_method,tolerance,oracle_lower_bound,one_over_q,"
           "q_times_exit_survival,indeterminate\n";
    res.heavy_tail_floor = std::numeric_limits<double>::infinity();
    for (std::size_t qi = 0; qi < cfg.q_list.size(); ++qi) {
        ExitTailRow row;
        row.q = cfg.q_list[qi];
        row.exit = survival_at(row.q, exit_v, exit_c);
        row.trials = survival_at(row.q, trials_v, exit_c);
        row.snr_trials = survival_at(row.q, snr_v, snr_c);
        row.oracle_exact = curve.entries[qi].exact;
        row.oracle_lower_bound = curve.entries[qi].lower_bound;
        row.one_over_q = curve.entries[qi].one_over_q;
        res.rows.push_back(row);
        if (row.q >= 10.0)
            res.heavy_tail_floor = std::min(res.heavy_tail_floor, row.q * row.exit.survival);
        csv << fmt_double(row.q) << ',' << fmt_double(row.exit.survival) << ','
            << fmt_double(row.exit.se) << ',' << fmt_double(row.trials.survival) << ','
            << fmt_double(row.trials.se) << ',' << fmt_double(row.snr_trials.survival) << ','
            << fmt_double(row.snr_trials.se) << ',' << fmt_double(row.oracle_exact)
            << ",quadrature,3se," << fmt_double(row.oracle_lower_bound) << ','
            << fmt_double(row.one_over_q) << ',' << fmt_double(row.q * row.exit.survival) << ','
            << row.snr_trials.indeterminate << '\n';
    }
    if (!std::isfinite(res.heavy_tail_floor)) res.heavy_tail_floor = 0.0;
    res.csv = csv.str();

    std::ostringstream batch;
    write_outcome_header(batch);
    for (std::size_t r = 0; r < n; ++r)
        write_outcome_row(batch, outcomes[r], derive_seed(cfg.model.seed, seeds::marks, r));
    res.outcomes_csv = batch.str();

    // Horizon adequacy: at the smallest q of interest, censored samples whose
    // lower bound does not settle the comparison make the estimate mushy.
    if (!res.rows.empty()) {
        const auto& first = res.rows.front();
        double indeterminate = static_cast<double>(first.snr_trials.indeterminate +
                                                   first.exit.indeterminate) /
                               static_cast<double>(n);
        res.horizon_warning = indeterminate > 0.5;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Point-to-point local delay validation: Monte Carlo against the quadrature
// oracle, conditional geometric law per pattern, and the delay chain.
// ---------------------------------------------------------------------------

struct LocalDelayStudyConfig {
    ModelParams model;  // pure Poisson; the pair is Palm-added at distance r
    double r = 1.0;
    int phi_replicates = 1000;
    int mark_replicates = 10;
    std::int64_t horizon = 200000;
    int chain_replicates = 200;   // sub-sample on which the full chain is run
    int geom_patterns = 2;        // patterns given the per-pattern geometric test
    int geom_replicates = 20000;  // mark replications per geometric test
    unsigned workers = 1;
};

struct GeometricCheck {
    double pi = 0.0;
    double conditional_mean = 0.0;  // 1/pi
    double mc_mean = 0.0;
    double rel_err = 0.0;
    double ks_p_value = 0.0;
};

struct LocalDelayStudyResult {
    Estimate mc_mean;                  // clustered by pattern
    double oracle_mean = 0.0;
    double rel_err = 0.0;
    std::vector<GeometricCheck> geometric;
    double chain_exit_mean = 0.0;
    double chain_e2e_mean = 0.0;
    double chain_local_mean = 0.0;
    std::uint64_t chain_violations = 0;
    std::uint64_t censored = 0;
    std::string csv;
};

inline LocalDelayStudyResult run_local_delay_validation(const LocalDelayStudyConfig& cfg) {
    cfg.model.validate();
    if (cfg.model.grid_step)
        throw std::invalid_argument("run_local_delay_validation: pure Poisson model required");
    double radius = 0.5 * std::min(cfg.model.window.width, cfg.model.window.height);
    if (radius < 5.0 * cfg.r)
        throw std::invalid_argument(
            "run_local_delay_validation: window radius below 5r, interference truncation bias");

    const Vec2 x{-0.5 * cfg.r, 0.0};
    const Vec2 y{0.5 * cfg.r, 0.0};
    const std::size_t n_phi = static_cast<std::size_t>(cfg.phi_replicates);
    std::vector<double> phi_means(n_phi, 0.0);
    std::vector<std::uint64_t> phi_censored(n_phi, 0);

    parallel_for(n_phi, cfg.workers, [&](std::size_t rep) {
        PointPattern base = sample_poisson(cfg.model.lambda_m, cfg.model.window,
                                           derive_seed(cfg.model.seed, seeds::pattern, rep));
        PointPattern pattern = palm_add(base, {x, y});
        detail::PairChannel channel(pattern, cfg.model, 0, 1);
        double acc = 0.0;
        std::uint64_t censored = 0;
        for (int mr = 0; mr < cfg.mark_replicates; ++mr) {
            MarkStream stream(
                derive_seed(cfg.model.seed, seeds::marks,
                            rep * static_cast<std::uint64_t>(cfg.mark_replicates) +
                                static_cast<std::uint64_t>(mr)),
                cfg.model.aloha_p, cfg.model.fading_mu, cfg.model.noise);
            std::int64_t value = cfg.horizon;
            bool done = false;
            for (std::int64_t m = 0; m < cfg.horizon; ++m) {
                if (channel.success(stream, m)) {
                    value = m + 1;
                    done = true;
                    break;
                }
            }
            if (!done) ++censored;
            acc += static_cast<double>(value);
        }
        phi_means[rep] = acc / cfg.mark_replicates;
        phi_censored[rep] = censored;
    });

    LocalDelayStudyResult res;
    for (auto c : phi_censored) res.censored += c;
    res.mc_mean = make_estimate("local_delay_mean", phi_means, res.censored);
    res.oracle_mean = oracle::mean_local_delay_poisson(cfg.r, cfg.model);
    res.rel_err = std::fabs(res.mc_mean.value - res.oracle_mean) / res.oracle_mean;

    // Conditional geometric law on a few fixed patterns.
    for (int g = 0; g < cfg.geom_patterns; ++g) {
        std::uint64_t rep = static_cast<std::uint64_t>(cfg.phi_replicates + g);
        PointPattern base = sample_poisson(cfg.model.lambda_m, cfg.model.window,
                                           derive_seed(cfg.model.seed, seeds::pattern, rep));
        PointPattern pattern = palm_add(base, {x, y});
        detail::PairChannel channel(pattern, cfg.model, 0, 1);
        GeometricCheck check;
        check.pi = oracle::success_prob_given_pattern(pattern, cfg.model, 0, 1);
        check.conditional_mean = 1.0 / check.pi;
        std::vector<std::int64_t> waits(static_cast<std::size_t>(cfg.geom_replicates));
        parallel_for(waits.size(), cfg.workers, [&](std::size_t mr) {
            MarkStream stream(derive_seed(cfg.model.seed, hash_combine(seeds::marks, rep), mr),
                              cfg.model.aloha_p, cfg.model.fading_mu, cfg.model.noise);
            std::int64_t value = cfg.horizon;
            for (std::int64_t m = 0; m < cfg.horizon; ++m) {
                if (channel.success(stream, m)) {
                    value = m + 1;
                    break;
                }
            }
            waits[mr] = value - 1;  // geometric number of failures
        });
        double mean_wait = 0.0;
        for (auto w : waits) mean_wait += static_cast<double>(w);
        check.mc_mean = mean_wait / static_cast<double>(waits.size()) + 1.0;
        check.rel_err = std::fabs(check.mc_mean - check.conditional_mean) / check.conditional_mean;
        double pi = check.pi;
        check.ks_p_value = ks_test_discrete(waits, [pi](std::int64_t k) {
                               if (k < 0) return 0.0;
                               return 1.0 - std::pow(1.0 - pi, static_cast<double>(k + 1));
                           }).p_value;
        res.geometric.push_back(check);
    }

    // Chain on a sub-sample, same marks per replicate.
    const std::size_t n_chain = static_cast<std::size_t>(cfg.chain_replicates);
    std::vector<double> ch_exit(n_chain), ch_e2e(n_chain), ch_local(n_chain);
    std::vector<std::uint8_t> ch_bad(n_chain, 0), ch_cens(n_chain, 0);
    parallel_for(n_chain, cfg.workers, [&](std::size_t rep) {
        PointPattern base = sample_poisson(cfg.model.lambda_m, cfg.model.window,
                                           derive_seed(cfg.model.seed, seeds::pattern, rep));
        PointPattern pattern = palm_add(base, {x, y});
        MarkStream stream(derive_seed(cfg.model.seed, seeds::marks, rep), cfg.model.aloha_p,
                          cfg.model.fading_mu, cfg.model.noise);
        DelayOutcome ex = exit_delay(pattern, cfg.model, stream, 0, 0, cfg.horizon);
        DelayOutcome pp = end_to_end(pattern, cfg.model, stream, x, y, 0, cfg.horizon);
        DelayOutcome lo = local_delay(pattern, cfg.model, stream, 0, 1, 0, cfg.horizon);
        ch_exit[rep] = static_cast<double>(ex.value);
        ch_e2e[rep] = static_cast<double>(pp.value);
        ch_local[rep] = static_cast<double>(lo.value);
        if (ex.censored || pp.censored || lo.censored) ch_cens[rep] = 1;
        if (!(ex.value <= pp.value && pp.value <= lo.value)) ch_bad[rep] = 1;
    });
    MeanSe me = mean_se(ch_exit);
    MeanSe mp = mean_se(ch_e2e);
    MeanSe ml = mean_se(ch_local);
    res.chain_exit_mean = me.mean;
    res.chain_e2e_mean = mp.mean;
    res.chain_local_mean = ml.mean;
    for (auto b : ch_bad) res.chain_violations += b;

    std::ostringstream csv;
    csv << "statistic,value,se,samples,censored,oracle_value,oracle_method,tolerance\n";
    csv << "local_delay_mean," << fmt_double(res.mc_mean.value) << ',' << fmt_double(res.mc_mean.se)
        << ',' << res.mc_mean.samples << ',' << res.mc_mean.censored << ','
        << fmt_double(res.oracle_mean) << ",quadrature,0.1\n";
    for (const auto& g : res.geometric)
        csv << "conditional_mean," << fmt_double(g.mc_mean) << ",," << cfg.geom_replicates << ",0,"
            << fmt_double(g.conditional_mean) << ",closed_form,0.01\n";
    csv << "chain_exit_mean," << fmt_double(res.chain_exit_mean) << ',' << fmt_double(me.se) << ','
        << n_chain << ",0,,,\n";
    csv << "chain_e2e_mean," << fmt_double(res.chain_e2e_mean) << ',' << fmt_double(mp.se) << ','
        << n_chain << ",0,,,\n";
    csv << "chain_local_mean," << fmt_double(res.chain_local_mean) << ',' << fmt_double(ml.se)
        << ',' << n_chain << ",0,,,\n";
    res.csv = csv.str();
    return res;
}

// ---------------------------------------------------------------------------
// Campbell check: Palm-mean interference at the typical node beyond an
// exclusion radius, replicated over patterns and slots.
// ---------------------------------------------------------------------------

struct CampbellCheckConfig {
    ModelParams model;  // pure Poisson
    double eps = 1.0;
    int phi_replicates = 200;
    int slots_per_phi = 50;
    unsigned workers = 1;
};

struct CampbellCheckResult {
    Estimate empirical;  // clustered by pattern
    double oracle = 0.0;
    bool within_3se = false;
};

inline CampbellCheckResult run_campbell_check(const CampbellCheckConfig& cfg) {
    cfg.model.validate();
    if (cfg.model.grid_step)
        throw std::invalid_argument("run_campbell_check: pure Poisson model required");
    const std::size_t n_phi = static_cast<std::size_t>(cfg.phi_replicates);
    std::vector<double> phi_means(n_phi);
    parallel_for(n_phi, cfg.workers, [&](std::size_t rep) {
        PointPattern base = sample_poisson(cfg.model.lambda_m, cfg.model.window,
                                           derive_seed(cfg.model.seed, seeds::pattern, rep));
        PointPattern pattern = palm_add(base, {Vec2{0.0, 0.0}});
        MarkStream stream(derive_seed(cfg.model.seed, seeds::marks, rep), cfg.model.aloha_p,
                          cfg.model.fading_mu, cfg.model.noise);
        const int n = static_cast<int>(pattern.size());
        const Vec2 origin{0.0, 0.0};
        // inverse path loss for the points beyond the exclusion radius
        std::vector<std::pair<int, double>> far;
        far.reserve(static_cast<std::size_t>(n));
        for (int k = 1; k < n; ++k) {
            double r2 = pattern.window.distance_sq(pattern.position(k), origin);
            if (r2 > cfg.eps * cfg.eps)
                far.emplace_back(k, 1.0 / cfg.model.pathloss_from_r2(r2));
        }
        double acc = 0.0;
        for (int s = 0; s < cfg.slots_per_phi; ++s) {
            std::uint64_t mac_base = stream.mac_slot_base(s);
            std::uint64_t fbase = stream.fading_receiver_base(0, s);
            double slot_sum = 0.0;
            for (const auto& [k, inv_l] : far) {
                if (!stream.transmits_with_base(mac_base, k)) continue;
                slot_sum += stream.fading_with_base(fbase, k) * inv_l;
            }
            acc += slot_sum;
        }
        phi_means[rep] = acc / cfg.slots_per_phi;
    });
    CampbellCheckResult res;
    res.empirical = make_estimate("campbell_interference", phi_means);
    res.oracle = oracle::campbell_interference(cfg.eps, cfg.model);
    res.within_3se = std::fabs(res.empirical.value - res.oracle) <= 3.0 * res.empirical.se;
    return res;
}

// ---------------------------------------------------------------------------
// Time-constant study: end-to-end delay over a geometric distance ladder,
// reported as p_hat / t per rung, for the pure Poisson and Poisson+Grid
// models.
// ---------------------------------------------------------------------------

struct TimeConstantStudyConfig {
    ModelParams model;  // window is rebuilt per rung; grid_step used by the grid tag
    std::vector<double> ladder = {10, 20, 40, 80};
    Vec2 direction{1.0, 0.0};
    int mark_replicates = 200;
    std::int64_t horizon = 40000;
    double margin = 10.0;  // window padding around the measured segment
    bool run_poisson = true;
    bool run_grid = true;
    double stabilization_threshold = 0.15;
    bool auto_range = true;
    unsigned workers = 1;
};

struct TimeConstantRung {
    double t = 0.0;
    Estimate p_hat;
    double p_over_t = 0.0;
    std::uint64_t censored = 0;
};

struct TimeConstantTable {
    std::string model_tag;
    Vec2 direction;
    std::vector<TimeConstantRung> rungs;
    double top_rel_change = 0.0;
    bool stabilized = false;
    bool strictly_increasing = false;
};

struct TimeConstantStudyResult {
    std::vector<TimeConstantTable> tables;
    std::string csv;
};

inline double auto_edge_range(const ModelParams& params) {
    // exp(-mu T w (A r)^beta) <= 1e-17 makes skipped pairs unobservable at
    // any feasible replication count.
    if (params.noise.kind != NoiseKind::constant) return std::numeric_limits<double>::infinity();
    double budget = std::log(1e17);
    return std::pow(budget / (params.fading_mu * params.threshold * params.noise.level),
                    1.0 / params.pathloss_beta) /
           params.pathloss_a;
}

inline TimeConstantStudyResult run_time_constant_study(const TimeConstantStudyConfig& cfg) {
    if (cfg.ladder.empty()) throw std::invalid_argument("run_time_constant_study: empty ladder");
    for (std::size_t i = 1; i < cfg.ladder.size(); ++i)
        if (!(cfg.ladder[i] > cfg.ladder[i - 1]))
            throw std::invalid_argument("run_time_constant_study: ladder must be increasing");
    double dnorm = std::hypot(cfg.direction.x, cfg.direction.y);
    if (!(dnorm > 0.0)) throw std::invalid_argument("run_time_constant_study: null direction");
    const Vec2 dir{cfg.direction.x / dnorm, cfg.direction.y / dnorm};
    if (cfg.run_grid && !cfg.model.grid_step)
        throw std::invalid_argument("run_time_constant_study: grid tag requested without grid_step");

    TimeConstantStudyResult res;
    std::ostringstream csv;
    csv << "model,t,p_hat,se,p_over_t,censored,samples\n";

    std::vector<std::pair<std::string, bool>> tags;
    if (cfg.run_poisson) tags.emplace_back("poisson", false);
    if (cfg.run_grid) tags.emplace_back("poisson+grid", true);

    // One window, sized for the top of the ladder, shared by every rung so
    // all rungs measure the same ambient model.
    const double t_max = cfg.ladder.back();
    for (const auto& [tag, with_grid] : tags) {
        TimeConstantTable table;
        table.model_tag = tag;
        table.direction = dir;
        for (std::size_t rung_i = 0; rung_i < cfg.ladder.size(); ++rung_i) {
            double t = cfg.ladder[rung_i];
            ModelParams params = cfg.model;
            params.window.width = std::fabs(t_max * dir.x) + 2.0 * cfg.margin;
            params.window.height = std::fabs(t_max * dir.y) + 2.0 * cfg.margin;
            params.window.boundary = BoundaryMode::plane_with_guard;
            params.window.guard_margin = 0.5 * cfg.margin;
            params.validate();
            const Vec2 x{-0.5 * t * dir.x, -0.5 * t * dir.y};
            const Vec2 y{0.5 * t * dir.x, 0.5 * t * dir.y};
            if (!params.window.inside_guard(x) || !params.window.inside_guard(y))
                throw std::invalid_argument("run_time_constant_study: endpoints violate the guard");

            FloodOptions flood;
            if (cfg.auto_range) flood.max_edge_range = auto_edge_range(params);

            const std::size_t reps = static_cast<std::size_t>(cfg.mark_replicates);
            std::vector<double> values(reps);
            std::vector<std::uint8_t> censored(reps);
            std::uint64_t tag_salt = hash_combine(with_grid ? 2u : 1u, rung_i);
            parallel_for(reps, cfg.workers, [&](std::size_t rep) {
                std::uint64_t idx = hash_combine(tag_salt, rep);
                PointPattern pattern = make_model_pattern(
                    params, derive_seed(params.seed, seeds::pattern, idx), with_grid);
                MarkStream stream(derive_seed(params.seed, seeds::marks, idx), params.aloha_p,
                                  params.fading_mu, params.noise);
                DelayOutcome out =
                    end_to_end(pattern, params, stream, x, y, 0, cfg.horizon, flood);
                values[rep] = static_cast<double>(out.value);
                censored[rep] = out.censored ? 1 : 0;
            });

            TimeConstantRung rung;
            rung.t = t;
            for (auto c : censored) rung.censored += c;
            rung.p_hat = make_estimate("p_hat", values, rung.censored);
            rung.p_over_t = rung.p_hat.value / t;
            table.rungs.push_back(rung);
            csv << tag << ',' << fmt_double(t) << ',' << fmt_double(rung.p_hat.value) << ','
                << fmt_double(rung.p_hat.se) << ',' << fmt_double(rung.p_over_t) << ','
                << rung.censored << ',' << reps << '\n';
        }
        if (table.rungs.size() >= 2) {
            double last = table.rungs[table.rungs.size() - 1].p_over_t;
            double prev = table.rungs[table.rungs.size() - 2].p_over_t;
            table.top_rel_change = std::fabs(last - prev) / prev;
            table.stabilized = table.top_rel_change < cfg.stabilization_threshold;
            table.strictly_increasing = true;
            for (std::size_t i = 1; i < table.rungs.size(); ++i)
                if (!(table.rungs[i].p_over_t > table.rungs[i - 1].p_over_t))
                    table.strictly_increasing = false;
        }
        res.tables.push_back(std::move(table));
    }
    res.csv = csv.str();
    return res;
}

}  // namespace stsinr
