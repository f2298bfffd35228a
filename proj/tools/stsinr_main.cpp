// Command-line front end: parses the run config, dispatches the studies and
// writes CSV outputs plus a replayable manifest. All numerics live in the
// headers under include/stsinr; this file is a thin shell.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "stsinr/config.hpp"
#include "stsinr/delay.hpp"
#include "stsinr/experiments.hpp"
#include "stsinr/graph.hpp"
#include "stsinr/io.hpp"
#include "stsinr/oracle.hpp"
#include "stsinr/stats.hpp"
#include "stsinr/version.hpp"

namespace fs = std::filesystem;
using namespace stsinr;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::int64_t> seed_override;
    unsigned workers = default_workers();
};

Config load_config(const CliOptions& opt) {
    if (opt.config_path.empty()) throw std::invalid_argument("missing --config");
    return Config::parse(read_text_file(opt.config_path));
}

ModelParams load_model(const Config& cfg, const CliOptions& opt) {
    ModelParams model = model_from_config(cfg);
    if (opt.seed_override) model.seed = static_cast<std::uint64_t>(*opt.seed_override);
    return model;
}

void write_manifest(const fs::path& dir, const Config& cfg, const ModelParams& model,
                    const std::string& study, double wall_seconds) {
    std::ostringstream os;
    os << "study = " << study << '\n';
    os << "version = " << kVersion << '\n';
    os << "seed = " << model.seed << '\n';
    os << "fingerprint = " << fingerprint_of(cfg.raw_text() + "|seed=" + std::to_string(model.seed))
       << '\n';
    os << "wall_clock_seconds = " << wall_seconds << '\n';
    os << "config_echo_begin\n" << cfg.raw_text() << "config_echo_end\n";
    write_text_file(dir / "manifest.txt", os.str());
}

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int cmd_generate(const CliOptions& opt) {
    Config cfg = load_config(opt);
    ModelParams model = load_model(cfg, opt);
    std::int64_t edge_slots = cfg.get_int("study", "edge_dump_slots", 0);
    std::string variant_s = cfg.get_string("study", "edge_variant", "sinr");
    cfg.ensure_all_consumed();
    EdgeVariant variant = variant_s == "snr" ? EdgeVariant::snr : EdgeVariant::sinr;

    Stopwatch watch;
    PointPattern pattern = make_model_pattern(model, derive_seed(model.seed, seeds::pattern, 0),
                                              model.grid_step.has_value());
    fs::path dir(opt.out_dir);
    write_text_file(dir / "pattern.csv", pattern_to_csv(pattern));
    if (edge_slots > 0) {
        MarkStream stream(derive_seed(model.seed, seeds::marks, 0), model.aloha_p, model.fading_mu,
                          model.noise);
        std::ostringstream os;
        dump_edges(pattern, model, stream, 0, edge_slots, variant, os);
        write_text_file(dir / "edges.csv", os.str());
    }
    write_manifest(dir, cfg, model, "generate", watch.seconds());
    std::cout << "generate: " << pattern.size() << " points -> " << (dir / "pattern.csv").string()
              << "\n";
    return 0;
}

int cmd_degree(const CliOptions& opt) {
    Config cfg = load_config(opt);
    DegreeStudyConfig study;
    study.model = load_model(cfg, opt);
    study.slots = static_cast<int>(cfg.get_int("study", "slots"));
    study.k_list = cfg.get_int_list("study", "k_list");
    study.phi_replicates = static_cast<int>(cfg.get_int("study", "phi_replicates", 1));
    study.workers = opt.workers;
    cfg.ensure_all_consumed();

    Stopwatch watch;
    DegreeStudyResult res = run_degree_study(study);
    fs::path dir(opt.out_dir);
    write_text_file(dir / "degree.csv", res.csv);
    write_manifest(dir, cfg, study.model, "degree", watch.seconds());
    for (const auto& row : res.rows)
        std::cout << "k=" << row.k << " mean_out=" << row.mean_out << " mean_in=" << row.mean_in
                  << " |diff|=" << std::fabs(row.diff) << " 3se=" << 3.0 * row.joint_se
                  << " max_in=" << row.max_in << " bound=" << row.bound << "\n";
    if (!res.all_in_bounds_ok) {
        std::cerr << "degree: in-path bound violated\n";
        return 2;
    }
    return 0;
}

int cmd_exit_tail(const CliOptions& opt) {
    Config cfg = load_config(opt);
    ExitTailStudyConfig study;
    study.model = load_model(cfg, opt);
    study.replicates = static_cast<int>(cfg.get_int("study", "replicates"));
    study.horizon = cfg.get_int("study", "horizon");
    study.q_list = cfg.get_double_list("study", "q_list");
    study.workers = opt.workers;
    cfg.ensure_all_consumed();

    Stopwatch watch;
    ExitTailStudyResult res = run_exit_tail_study(study);
    fs::path dir(opt.out_dir);
    write_text_file(dir / "exit_tail.csv", res.csv);
    write_text_file(dir / "outcomes.csv", res.outcomes_csv);
    write_manifest(dir, cfg, study.model, "exit-tail", watch.seconds());
    std::cout << "exit-tail: censored fraction " << res.censored_fraction
              << ", heavy-tail floor " << res.heavy_tail_floor << "\n";
    for (const auto& row : res.rows)
        std::cout << "q=" << row.q << " snr_survival=" << row.snr_trials.survival
                  << " oracle=" << row.oracle_exact << "\n";
    if (res.horizon_warning)
        std::cout << "warning: horizon too small, over half the samples are indeterminate at the "
                     "smallest q\n";
    return 0;
}

int cmd_local_delay(const CliOptions& opt) {
    Config cfg = load_config(opt);
    LocalDelayStudyConfig study;
    study.model = load_model(cfg, opt);
    study.r = cfg.get_double("study", "r");
    study.phi_replicates = static_cast<int>(cfg.get_int("study", "phi_replicates"));
    study.mark_replicates = static_cast<int>(cfg.get_int("study", "mark_replicates"));
    study.horizon = cfg.get_int("study", "horizon", 200000);
    study.chain_replicates = static_cast<int>(cfg.get_int("study", "chain_replicates", 200));
    study.geom_patterns = static_cast<int>(cfg.get_int("study", "geom_patterns", 2));
    study.geom_replicates = static_cast<int>(cfg.get_int("study", "geom_replicates", 20000));
    study.workers = opt.workers;
    cfg.ensure_all_consumed();

    Stopwatch watch;
    LocalDelayStudyResult res = run_local_delay_validation(study);
    fs::path dir(opt.out_dir);
    write_text_file(dir / "local_delay.csv", res.csv);
    write_manifest(dir, cfg, study.model, "local-delay", watch.seconds());
    std::cout << "local-delay: mc=" << res.mc_mean.value << " oracle=" << res.oracle_mean
              << " rel_err=" << res.rel_err << " censored=" << res.censored << "\n";
    for (const auto& g : res.geometric)
        std::cout << "  conditional mean mc=" << g.mc_mean << " oracle=" << g.conditional_mean
                  << " ks_p=" << g.ks_p_value << "\n";
    std::cout << "  chain means exit=" << res.chain_exit_mean << " e2e=" << res.chain_e2e_mean
              << " local=" << res.chain_local_mean << " violations=" << res.chain_violations
              << "\n";
    return 0;
}

int cmd_time_constant(const CliOptions& opt) {
    Config cfg = load_config(opt);
    TimeConstantStudyConfig study;
    study.model = load_model(cfg, opt);
    study.ladder = cfg.get_double_list("study", "ladder");
    study.direction = Vec2{cfg.get_double("study", "direction_x", 1.0),
                           cfg.get_double("study", "direction_y", 0.0)};
    study.mark_replicates = static_cast<int>(cfg.get_int("study", "mark_replicates"));
    study.horizon = cfg.get_int("study", "horizon");
    study.margin = cfg.get_double("study", "margin", 10.0);
    std::string models = cfg.get_string("study", "models", "poisson,poisson_grid");
    study.run_poisson = models.find("poisson") != std::string::npos;
    study.run_grid = models.find("grid") != std::string::npos;
    study.stabilization_threshold = cfg.get_double("study", "stabilization_threshold", 0.15);
    study.auto_range = cfg.get_bool("study", "auto_range", true);
    study.workers = opt.workers;
    cfg.ensure_all_consumed();

    Stopwatch watch;
    TimeConstantStudyResult res = run_time_constant_study(study);
    fs::path dir(opt.out_dir);
    write_text_file(dir / "time_constant.csv", res.csv);
    write_manifest(dir, cfg, study.model, "time-constant", watch.seconds());
    for (const auto& table : res.tables) {
        std::cout << table.model_tag << ":";
        for (const auto& rung : table.rungs)
            std::cout << " p/t(" << rung.t << ")=" << rung.p_over_t
                      << (rung.censored ? "(censored rung)" : "");
        std::cout << " top_change=" << table.top_rel_change
                  << (table.stabilized ? " [stabilized]" : "")
                  << (table.strictly_increasing ? " [increasing]" : "") << "\n";
    }
    return 0;
}

// Statistical cross-validation of the Monte Carlo machinery against the
// closed forms. Exit 2 when any check fails.
int cmd_validate(const CliOptions& opt) {
    Config cfg = load_config(opt);
    ModelParams model = load_model(cfg, opt);
    int campbell_phi = static_cast<int>(cfg.get_int("study", "campbell_phi", 400));
    int campbell_slots = static_cast<int>(cfg.get_int("study", "campbell_slots", 25));
    double campbell_eps = cfg.get_double("study", "campbell_eps", 1.0);
    int geom_replicates = static_cast<int>(cfg.get_int("study", "geom_replicates", 20000));
    int tail_replicates = static_cast<int>(cfg.get_int("study", "tail_replicates", 20000));
    std::int64_t horizon = cfg.get_int("study", "horizon", 100000);
    cfg.ensure_all_consumed();

    Stopwatch watch;
    int failures = 0;
    auto verdict = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
        if (!ok) ++failures;
    };

    {  // quadrature vs closed antiderivative for the delay integral
        double c = (1.0 - model.aloha_p) * model.threshold * model.pathloss(1.0);
        double a_beta = std::pow(model.pathloss_a, model.pathloss_beta);
        double beta = model.pathloss_beta;
        auto integrand = [&](double u) {
            return 0.5 * model.threshold * model.pathloss(1.0) /
                   (a_beta * std::pow(u, 0.5 * beta) + c);
        };
        double quadrature = integrate_semi_infinite(integrand, 1e-10);
        double closed = model.threshold * model.pathloss(1.0) / (model.pathloss_a * model.pathloss_a) *
                        std::pow(c, 2.0 / beta - 1.0) * M_PI / (beta * std::sin(2.0 * M_PI / beta));
        double rel = std::fabs(quadrature - closed) / closed;
        std::ostringstream detail;
        detail << "quadrature=" << quadrature << " closed=" << closed << " rel=" << rel;
        verdict("quadrature vs antiderivative", rel < 1e-8, detail.str());
    }

    {  // Campbell mean interference
        CampbellCheckConfig ccfg;
        ccfg.model = model;
        ccfg.eps = campbell_eps;
        ccfg.phi_replicates = campbell_phi;
        ccfg.slots_per_phi = campbell_slots;
        ccfg.workers = opt.workers;
        CampbellCheckResult res = run_campbell_check(ccfg);
        std::ostringstream detail;
        detail << "empirical=" << res.empirical.value << " oracle=" << res.oracle
               << " 3se=" << 3.0 * res.empirical.se;
        verdict("campbell interference", res.within_3se, detail.str());
    }

    {  // conditional geometric law on one fixed pattern
        PointPattern base =
            sample_poisson(model.lambda_m, model.window, derive_seed(model.seed, seeds::pattern, 7));
        PointPattern pattern = palm_add(base, {Vec2{-0.5, 0.0}, Vec2{0.5, 0.0}});
        double pi = oracle::success_prob_given_pattern(pattern, model, 0, 1);
        detail::PairChannel channel(pattern, model, 0, 1);
        std::vector<std::int64_t> waits(static_cast<std::size_t>(geom_replicates));
        parallel_for(waits.size(), opt.workers, [&](std::size_t mr) {
            MarkStream stream(derive_seed(model.seed, seeds::marks, mr), model.aloha_p,
                              model.fading_mu, model.noise);
            std::int64_t value = horizon;
            for (std::int64_t m = 0; m < horizon; ++m)
                if (channel.success(stream, m)) {
                    value = m + 1;
                    break;
                }
            waits[mr] = value - 1;
        });
        double mean = 0.0;
        for (auto w : waits) mean += static_cast<double>(w);
        mean = mean / static_cast<double>(waits.size()) + 1.0;
        double rel = std::fabs(mean - 1.0 / pi) * pi;
        KsResult ks = ks_test_discrete(waits, [pi](std::int64_t k) {
            if (k < 0) return 0.0;
            return 1.0 - std::pow(1.0 - pi, static_cast<double>(k + 1));
        });
        std::ostringstream detail;
        detail << "mc=" << mean << " 1/pi=" << 1.0 / pi << " rel=" << rel
               << " ks_p=" << ks.p_value;
        verdict("conditional geometric law", rel < 0.01 && ks.p_value >= 0.01, detail.str());
    }

    if (model.noise.kind == NoiseKind::constant && !model.grid_step) {
        // SNR trial tail vs the exact quadrature curve
        ExitTailStudyConfig tcfg;
        tcfg.model = model;
        tcfg.replicates = tail_replicates;
        tcfg.horizon = 2000;
        tcfg.q_list = {1, 2, 5};
        tcfg.workers = opt.workers;
        ExitTailStudyResult res = run_exit_tail_study(tcfg);
        bool ok = true;
        std::ostringstream detail;
        for (const auto& row : res.rows) {
            double se = std::sqrt(row.oracle_exact * (1.0 - row.oracle_exact) /
                                  static_cast<double>(tail_replicates));
            double tol = 3.0 * std::max(se, row.snr_trials.se);
            bool row_ok = std::fabs(row.snr_trials.survival - row.oracle_exact) <= tol;
            ok = ok && row_ok;
            detail << " q=" << row.q << " mc=" << row.snr_trials.survival
                   << " oracle=" << row.oracle_exact;
        }
        verdict("snr trial tail", ok, detail.str());
    }

    fs::path dir(opt.out_dir);
    std::ostringstream summary;
    summary << "failures = " << failures << "\n";
    write_text_file(dir / "validate.txt", summary.str());
    write_manifest(dir, cfg, model, "validate", watch.seconds());
    return failures == 0 ? 0 : 2;
}

// Hard (non-statistical) invariants on a small model; every violation is a
// bug, not noise.
int cmd_selftest(const CliOptions& opt) {
    Config cfg = load_config(opt);
    ModelParams model = load_model(cfg, opt);
    int slots = static_cast<int>(cfg.get_int("study", "slots", 50));
    int pairs = static_cast<int>(cfg.get_int("study", "pairs", 2000));
    int chains = static_cast<int>(cfg.get_int("study", "chains", 30));
    int triples = static_cast<int>(cfg.get_int("study", "triples", 30));
    std::int64_t horizon = cfg.get_int("study", "horizon", 4000);
    cfg.ensure_all_consumed();

    Stopwatch watch;
    int failures = 0;
    auto verdict = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
        if (!ok) ++failures;
    };

    PointPattern pattern = make_model_pattern(model, derive_seed(model.seed, seeds::pattern, 0),
                                              model.grid_step.has_value());
    MarkStream stream(derive_seed(model.seed, seeds::marks, 0), model.aloha_p, model.fading_mu,
                      model.noise);
    const int n = static_cast<int>(pattern.size());
    if (n < 3) {
        std::cerr << "selftest: degenerate pattern, enlarge the window\n";
        return 1;
    }

    {  // in-degree bound
        double xi = 1.0 / model.threshold + 2.0;
        double worst = 0.0;
        for (int s = 0; s < slots; ++s) {
            auto adj = slot_adjacency(pattern, model, stream, s);
            std::vector<int> indeg(pattern.size(), 0);
            for (const auto& row : adj)
                for (int j : row) ++indeg[static_cast<std::size_t>(j)];
            for (int d : indeg) worst = std::max(worst, static_cast<double>(d));
        }
        std::ostringstream detail;
        detail << "max in-degree " << worst << " bound " << xi;
        verdict("in-degree bound", worst <= xi, detail.str());
    }

    {  // SNR graph contains the SINR graph
        std::uint64_t salt = mix64(model.seed ^ 0xabcdef);
        std::uint64_t violations = 0;
        for (int t = 0; t < pairs; ++t) {
            std::uint64_t h = hash_combine(salt, static_cast<std::uint64_t>(t));
            int i = static_cast<int>(h % static_cast<std::uint64_t>(n));
            int j = static_cast<int>((h >> 20) % static_cast<std::uint64_t>(n));
            if (i == j) continue;
            std::int64_t s = static_cast<std::int64_t>((h >> 40) % 64);
            SlotView view(pattern, model, stream, s, /*with_power=*/false);
            if (edge(view, i, j, EdgeVariant::sinr) && !edge(view, i, j, EdgeVariant::snr))
                ++violations;
        }
        verdict("sinr edges within snr graph", violations == 0,
                std::to_string(violations) + " violations");
    }

    {  // trial/delay chain
        std::uint64_t violations = 0;
        std::uint64_t conclusive = 0;
        for (int t = 0; t < chains; ++t) {
            MarkStream ms(derive_seed(model.seed, seeds::marks, 100 + t), model.aloha_p,
                          model.fading_mu, model.noise);
            std::uint64_t h = mix64(model.seed + t);
            int i = static_cast<int>(h % static_cast<std::uint64_t>(n));
            int j = pattern.nearest(Vec2{pattern.position(i).x + 1.0, pattern.position(i).y});
            if (j == i) continue;
            DelayOutcome ex = exit_delay(pattern, model, ms, i, 0, horizon);
            DelayOutcome pp =
                end_to_end(pattern, model, ms, pattern.position(i), pattern.position(j), 0, horizon);
            DelayOutcome lo = local_delay(pattern, model, ms, i, j, 0, horizon);
            if (ex.censored || pp.censored || lo.censored) continue;
            ++conclusive;
            bool ok = *ex.snr_trials <= *ex.trials && *ex.trials <= ex.value &&
                      ex.value <= pp.value && pp.value <= lo.value;
            if (!ok) ++violations;
        }
        verdict("delay chain", violations == 0,
                std::to_string(conclusive) + " conclusive, " + std::to_string(violations) +
                    " violations");
    }

    {  // subadditivity
        std::uint64_t violations = 0;
        std::uint64_t conclusive = 0;
        UniformStream pts(model.seed, 0x747269ull);
        for (int t = 0; t < triples; ++t) {
            MarkStream ms(derive_seed(model.seed, seeds::marks, 500 + t), model.aloha_p,
                          model.fading_mu, model.noise);
            auto draw = [&]() {
                return Vec2{(pts.next() - 0.5) * model.window.width,
                            (pts.next() - 0.5) * model.window.height};
            };
            SubadditivityRecord rec =
                subadditivity_check(pattern, model, ms, draw(), draw(), draw(), 0, horizon);
            if (!rec.conclusive) continue;
            ++conclusive;
            if (!rec.satisfied) ++violations;
        }
        verdict("subadditivity", violations == 0,
                std::to_string(conclusive) + " conclusive, " + std::to_string(violations) +
                    " violations");
    }

    {  // determinism of the sampler + marks
        PointPattern again = make_model_pattern(model, derive_seed(model.seed, seeds::pattern, 0),
                                                model.grid_step.has_value());
        bool same = pattern_to_csv(again) == pattern_to_csv(pattern);
        std::ostringstream os1, os2;
        dump_edges(pattern, model, stream, 0, 3, EdgeVariant::sinr, os1);
        dump_edges(again, model, stream, 0, 3, EdgeVariant::sinr, os2);
        same = same && os1.str() == os2.str();
        verdict("determinism", same, "replayed pattern and edge dump are bit-identical");
    }

    fs::path dir(opt.out_dir);
    std::ostringstream summary;
    summary << "failures = " << failures << "\n";
    write_text_file(dir / "selftest.txt", summary.str());
    write_manifest(dir, cfg, model, "selftest", watch.seconds());
    std::cout << "selftest wall clock: " << watch.seconds() << " s\n";
    return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"space-time SINR graph simulation laboratory"};
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "run configuration file")->required(false);
    app.add_option("--seed", opt.seed_override, "override [model] seed");
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--workers", opt.workers, "worker threads (default: hardware)");

    auto* generate = app.add_subcommand("generate", "sample a pattern and write pattern.csv");
    auto* degree = app.add_subcommand("degree", "degree / path-count study (mass transport)");
    auto* exit_tail = app.add_subcommand("exit-tail", "exit-delay tail study at the typical node");
    auto* local_delay_cmd =
        app.add_subcommand("local-delay", "point-to-point local delay validation");
    auto* time_constant = app.add_subcommand("time-constant", "delay-over-distance ladder study");
    auto* validate = app.add_subcommand("validate", "statistical checks against the oracles");
    auto* selftest = app.add_subcommand("selftest", "hard invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (opt.config_path.empty()) {
            std::cerr << "parameter error: missing --config\n\n" << app.help();
            return 1;
        }
        if (opt.out_dir.empty())
            opt.out_dir = "out-" + app.get_subcommands().front()->get_name();
        if (generate->parsed()) return cmd_generate(opt);
        if (degree->parsed()) return cmd_degree(opt);
        if (exit_tail->parsed()) return cmd_exit_tail(opt);
        if (local_delay_cmd->parsed()) return cmd_local_delay(opt);
        if (time_constant->parsed()) return cmd_time_constant(opt);
        if (validate->parsed()) return cmd_validate(opt);
        if (selftest->parsed()) return cmd_selftest(opt);
    } catch (const std::invalid_argument& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
