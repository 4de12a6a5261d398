// Command-line front end for the camirada library.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "camirada/camirada.hpp"

namespace fs = std::filesystem;
using namespace camirada;

namespace {

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw Error("cannot write " + p.string());
    return out;
}

std::map<std::string, GeneSet> load_target_sets(const std::string& path) {
    const auto t = load_tool_targets(path, path);
    std::map<std::string, GeneSet> out;
    for (const auto& [m, genes] : t.targets) out.emplace(m, GeneSet{m, genes});
    return out;
}

std::set<std::string> load_ids(const std::string& path) { return load_gene_set(path).members; }

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& sets) {
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw DomainError("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, std::string_view(kv).substr(0, eq), std::string_view(kv).substr(eq + 1));
    }
}

// Options shared by the walk-based subcommands.
struct WalkOptions {
    double restart = 0.7;
    double tol = 1e-10;
    int max_iter = 1000;
    bool unweighted = false;

    void add(CLI::App* app) {
        app->add_option("--restart", restart, "Restart probability")->capture_default_str();
        app->add_option("--tol", tol, "L1 convergence tolerance")->capture_default_str();
        app->add_option("--max-iter", max_iter, "Iteration cap")->capture_default_str();
        app->add_flag("--unweighted", unweighted, "Ignore a third edge-list column");
    }
    RwrParams params() const { return {restart, tol, max_iter}; }
};

struct ScoreOptions : WalkOptions {
    double beta = 0.5;
    std::string mode = "balanced";
    std::string es2 = "reference";

    void add(CLI::App* app) {
        WalkOptions::add(app);
        app->add_option("--beta", beta, "Weight of the target-side score")->capture_default_str();
        app->add_option("--es-mode,--mode", mode, "balanced or literal")->capture_default_str();
        app->add_option("--es2-weights", es2, "reference or targets")->capture_default_str();
    }
    ScoreParams params() const { return {beta, WalkOptions::params(), parse_es_mode(mode), parse_es2_weights(es2)}; }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"microRNA-disease association ranking by network enrichment"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "camirada 1.0");

    // targets
    auto* targets = app.add_subcommand("targets", "Consensus targets from several tool lists");
    std::vector<std::string> tool_files;
    int min_support = 3, min_targets = 3;
    std::string targets_out;
    targets->add_option("--tool", tool_files, "mirna<TAB>gene file, one per tool")->required();
    targets->add_option("--min-support", min_support, "Tools that must agree")->capture_default_str();
    targets->add_option("--min-targets", min_targets, "Minimum surviving targets")->capture_default_str();
    targets->add_option("-o,--out", targets_out, "Output file (default stdout)");

    // build-coexpr
    auto* coexpr = app.add_subcommand("build-coexpr", "Co-expression network and DEG calls from expression");
    std::string expr_file, net_out, degs_out, soft_out, seeds_file;
    std::string powers = "1..20";
    double fit_cut = 0.85, min_weight = 0.01, p_cut = 0.05, fold_cut = 0.1;
    int topk = 10000;
    unsigned coexpr_threads = 0;
    WalkOptions coexpr_walk;
    coexpr->add_option("--expression,--expr", expr_file, "Expression matrix TSV")->required();
    coexpr->add_option("--network-out,--out-network", net_out, "Edge list output")->required();
    coexpr->add_option("--degs-out", degs_out, "DEG list output");
    coexpr->add_option("--soft-report,--out-report", soft_out, "Per-power scale-free fit table");
    coexpr->add_option("--powers", powers, "Candidate powers, e.g. 1..20 or 2,4,6")->capture_default_str();
    coexpr->add_option("--fit-cut", fit_cut)->capture_default_str();
    coexpr->add_option("--min-weight", min_weight)->capture_default_str();
    coexpr->add_option("--p-cut", p_cut)->capture_default_str();
    coexpr->add_option("--fold-cut", fold_cut)->capture_default_str();
    coexpr->add_option("--subnetwork-seeds,--seeds", seeds_file, "Extract the top-k walk subnetwork from these seeds");
    coexpr->add_option("--topk", topk)->capture_default_str();
    coexpr->add_option("--threads", coexpr_threads, "0 = all cores")->capture_default_str();
    coexpr_walk.add(coexpr);

    // rwr
    auto* walk = app.add_subcommand("rwr", "Random walk with restart from a seed set");
    std::string walk_net, walk_seeds, walk_out;
    std::size_t walk_top = 0;
    WalkOptions walk_opts;
    walk->add_option("--network", walk_net, "Edge list")->required();
    walk->add_option("--seeds", walk_seeds, "Seed genes, one per line")->required();
    walk->add_option("--top", walk_top, "Print only the first N genes (0 = all)");
    walk->add_option("-o,--out", walk_out, "Output file (default stdout)");
    walk_opts.add(walk);

    // score
    auto* score = app.add_subcommand("score", "Association scores of microRNA target sets against a reference");
    std::string score_net, score_targets, score_ref;
    ScoreOptions score_opts;
    score->add_option("--network", score_net, "Edge list")->required();
    score->add_option("--targets", score_targets, "mirna<TAB>gene file")->required();
    score->add_option("--reference", score_ref, "Reference genes, one per line")->required();
    score_opts.add(score);

    // nulls
    auto* nulls = app.add_subcommand("nulls", "Permutation p-values under degree-preserving rewiring");
    std::string nulls_net, nulls_targets, nulls_ref, nulls_samples;
    ScoreOptions nulls_opts;
    int permutations = 1000, swap_factor = 10;
    std::uint64_t seed = 20190101;
    unsigned nulls_threads = 0;
    bool per_mirna = false;
    nulls->add_option("--network", nulls_net, "Edge list")->required();
    nulls->add_option("--targets", nulls_targets, "mirna<TAB>gene file")->required();
    nulls->add_option("--reference", nulls_ref, "Reference genes, one per line")->required();
    nulls->add_option("-m,--permutations", permutations)->capture_default_str();
    nulls->add_option("--swap-factor", swap_factor)->capture_default_str();
    nulls->add_option("--seed", seed)->capture_default_str();
    nulls->add_option("--threads", nulls_threads, "0 = all cores")->capture_default_str();
    nulls->add_flag("--per-mirna", per_mirna, "Rewire separately for every microRNA");
    nulls->add_option("--samples", nulls_samples, "Directory for sorted null samples, one <mirna>.tsv each");
    nulls_opts.add(nulls);

    // combine
    auto* comb = app.add_subcommand("combine", "Combine p-values");
    std::string comb_method = "sumlog", comb_file;
    std::size_t comb_r = 1;
    std::vector<double> comb_values;
    comb->add_option("--method", comb_method, "sumlog, sumz, logitp, meanp, sump, wilkinson")->capture_default_str();
    comb->add_option("-r", comb_r, "Order statistic for wilkinson")->capture_default_str();
    comb->add_option("--input", comb_file, "Rows of id<TAB>p1<TAB>p2...");
    comb->add_option("pvalues", comb_values, "p-values to combine");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "ROC/AUC of a scored list (lower is better)");
    std::string eval_scores, eval_pos, eval_neg, eval_roc;
    std::vector<std::size_t> eval_top;
    eval->add_option("--scores", eval_scores, "id<TAB>score file; a ranked table is also accepted")->required();
    eval->add_option("--positives", eval_pos, "Positive ids, one per line")->required();
    eval->add_option("--negatives", eval_neg, "Negative ids, one per line");
    eval->add_option("--top", eval_top, "AUC restricted to the best N entries, e.g. 65,130,260")->delimiter(',');
    eval->add_option("--roc", eval_roc, "Write ROC points here");

    // run
    auto* run = app.add_subcommand("run", "Full pipeline");
    std::string cfg_file, run_ppi, run_disease, run_tfs, run_expr, run_coexpr, run_degs, run_pos, run_neg, out_dir;
    std::vector<std::string> run_tools, overrides;
    run->add_option("--config", cfg_file, "key = value config file");
    run->add_option("--set", overrides, "Override a config key (key=value)");
    run->add_option("--tool", run_tools, "mirna<TAB>gene file, one per tool")->required();
    run->add_option("--ppi", run_ppi, "PPI edge list")->required();
    run->add_option("--disease-genes", run_disease, "Disease genes")->required();
    run->add_option("--tfs", run_tfs, "Transcription factors")->required();
    auto* expr_opt = run->add_option("--expression", run_expr, "Expression matrix TSV");
    auto* net_opt = run->add_option("--coexpr-network", run_coexpr, "Prebuilt co-expression edge list");
    run->add_option("--degs", run_degs, "DEG list for --coexpr-network")->needs(net_opt);
    expr_opt->excludes(net_opt);
    run->add_option("--positives", run_pos, "Known associated microRNAs");
    run->add_option("--negatives", run_neg, "Known non-associated microRNAs");
    run->add_option("-o,--out", out_dir, "Output directory")->required();

    // stats
    auto* stats = app.add_subcommand("stats", "Size of a network");
    std::string stats_net;
    bool stats_unweighted = false;
    stats->add_option("--network", stats_net, "Edge list")->required();
    stats->add_flag("--unweighted", stats_unweighted);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*targets) {
            std::vector<ToolTargets> tools;
            for (const auto& f : tool_files) tools.push_back(load_tool_targets(f, f));
            const auto c = consensus_targets(tools, min_support, min_targets);
            for (const auto& m : c.dropped) std::cerr << "dropped " << m << '\n';
            if (targets_out.empty()) {
                write_targets(c.targets, std::cout);
            } else {
                auto out = open_out(targets_out);
                write_targets(c.targets, out);
            }
        } else if (*coexpr) {
            const auto expr = load_expression(expr_file);
            const auto corr = correlation_matrix(expr, coexpr_threads);
            const auto ps = detail::parse_powers(powers);
            const auto rep = pick_soft_threshold(corr, ps, fit_cut);
            auto net = adjacency_network(corr, rep.chosen_power, min_weight);
            if (!seeds_file.empty())
                net = extract_subnetwork(net, load_gene_set(seeds_file), static_cast<std::size_t>(topk), coexpr_walk.params());
            auto out = open_out(net_out);
            write_edge_list(net, out);
            if (!soft_out.empty()) {
                auto s = open_out(soft_out);
                write_soft_threshold_report(rep, s);
            }
            const auto degs = detect_degs(expr, p_cut, fold_cut);
            if (!degs_out.empty()) {
                auto d = open_out(degs_out);
                for (const auto& g : degs.degs.members) d << g << '\n';
            }
            std::cout << "power=" << rep.chosen_power << (rep.qualified ? "" : " (best fit, below cut)")
                      << " nodes=" << net.node_count() << " edges=" << net.edge_count() << " degs=" << degs.degs.size()
                      << '\n';
        } else if (*walk) {
            const auto net = load_edge_list(walk_net, !walk_opts.unweighted);
            const auto ranks = rwr(TransitionOperator(net), load_gene_set(walk_seeds), walk_opts.params());
            if (!ranks.converged) std::cerr << "warning: walk stopped at max_iter before reaching tol\n";
            std::ofstream file;
            if (!walk_out.empty()) file = open_out(walk_out);
            std::ostream& out = walk_out.empty() ? std::cout : file;
            const auto n = walk_top ? std::min(walk_top, ranks.size()) : ranks.size();
            out << "gene\tscore\trank\n";
            for (std::size_t i = 0; i < n; ++i)
                out << ranks.gene_at(i) << '\t' << detail::format_sig(ranks.score_at(i), 12) << '\t' << i + 1 << '\n';
        } else if (*score) {
            const auto net = load_edge_list(score_net, !score_opts.unweighted);
            const TransitionOperator op(net);
            const ChannelScorer scorer(op, load_gene_set(score_ref), score_opts.params());
            std::cout << "mirna\tmapped_targets\tes1\tes2\tes\n";
            for (const auto& [m, set] : load_target_sets(score_targets)) {
                const auto nodes = scorer.map(set);
                if (nodes.empty()) {
                    std::cout << m << "\t0\tNA\tNA\tNA\n";
                    continue;
                }
                const auto s = scorer.score(nodes);
                std::cout << m << '\t' << nodes.size() << '\t' << detail::format_sig(s.es1.value) << '\t'
                          << detail::format_sig(s.es2.value) << '\t' << detail::format_sig(s.es) << '\n';
            }
        } else if (*nulls) {
            const auto net = load_edge_list(nulls_net, !nulls_opts.unweighted);
            RunConfig cfg;
            cfg.beta = nulls_opts.beta;
            cfg.restart = nulls_opts.restart;
            cfg.tol = nulls_opts.tol;
            cfg.max_iter = nulls_opts.max_iter;
            cfg.es_mode = parse_es_mode(nulls_opts.mode);
            cfg.es2_weights = parse_es2_weights(nulls_opts.es2);
            cfg.permutations = permutations;
            cfg.swap_factor = swap_factor;
            cfg.base_seed = seed;
            cfg.threads = nulls_threads;
            cfg.share_rewiring = !per_mirna;
            const ChannelSpec spec{"network", &net, load_gene_set(nulls_ref)};
            const auto res = run_channel(spec, load_target_sets(nulls_targets), cfg);
            std::cout << "mirna\tmapped_targets\tes\tp\tpermutations\tnote\n";
            for (const auto& [m, cs] : res.scores)
                std::cout << m << '\t' << cs.mapped_targets << '\t' << detail::num_or_na(cs.es) << '\t'
                          << detail::num_or_na(cs.p) << '\t' << cs.permutations << '\t' << cs.note << '\n';
            if (!nulls_samples.empty()) {
                fs::create_directories(nulls_samples);
                for (const auto& [m, cs] : res.scores) {
                    if (!cs.scored) continue;
                    auto o = open_out(fs::path(nulls_samples) / (m + ".tsv"));
                    for (double x : cs.null) o << detail::format_sig(x) << '\n';
                }
            }
        } else if (*comb) {
            const auto method = parse_combine_method(comb_method);
            auto eval_one = [&](const std::vector<double>& pv) {
                auto c = combine(method, pv, comb_r);
                if (!c.warning.empty()) std::cerr << "warning: " << c.warning << '\n';
                return c;
            };
            if (!comb_file.empty()) {
                std::vector<std::pair<std::string, CombinedP>> rows;
                std::ifstream in(comb_file);
                if (!in) throw Error("cannot open " + comb_file);
                std::string line;
                std::size_t lineno = 0;
                while (std::getline(in, line)) {
                    ++lineno;
                    if (detail::is_comment_or_blank(line)) continue;
                    const auto cols = detail::split_tsv(line);
                    std::vector<double> pv;
                    for (std::size_t i = 1; i < cols.size(); ++i) {
                        const auto v = detail::parse_double(cols[i]);
                        if (!v) throw ParseError(comb_file, lineno, "non-numeric p-value");
                        pv.push_back(*v);
                    }
                    rows.emplace_back(std::string(detail::trim(cols[0])), eval_one(pv));
                }
                std::stable_sort(rows.begin(), rows.end(),
                                 [](const auto& a, const auto& b) { return a.second.p < b.second.p; });
                std::cout << "mirna\tstatistic\tcombined_p\n";
                for (const auto& [id, c] : rows)
                    std::cout << id << '\t' << detail::format_sig(c.statistic) << '\t' << detail::format_sig(c.p) << '\n';
            } else {
                const auto c = eval_one(comb_values);
                std::cout << detail::format_sig(c.statistic) << '\t' << detail::format_sig(c.p) << '\n';
            }
        } else if (*eval) {
            std::ifstream in(eval_scores);
            if (!in) throw Error("cannot open " + eval_scores);
            std::vector<ScoredEntry> entries;
            std::string line;
            std::size_t lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                if (detail::is_comment_or_blank(line) || line.starts_with("rank\t")) continue;
                const auto cols = detail::split_tsv(line);
                if (cols.size() == 10) { // ranked table: rank, mirna, ..., combined_p
                    if (detail::trim(cols[0]) == "NA") continue;
                    const auto v = detail::parse_double(cols[9]);
                    if (!v) throw ParseError(eval_scores, lineno, "non-numeric score");
                    entries.push_back({std::string(detail::trim(cols[1])), *v});
                } else if (cols.size() == 2) {
                    const auto v = detail::parse_double(cols[1]);
                    if (!v) throw ParseError(eval_scores, lineno, "non-numeric score");
                    entries.push_back({std::string(detail::trim(cols[0])), *v});
                } else {
                    throw ParseError(eval_scores, lineno, "expected id<TAB>score");
                }
            }
            const auto neg = eval_neg.empty() ? std::set<std::string>{} : load_ids(eval_neg);
            const auto ev = evaluate_scores("scores", std::move(entries), load_ids(eval_pos), neg, eval_top);
            if (!ev) throw DomainError("labels leave no positive or no non-positive entry");
            std::vector<Evaluation> evs{*ev};
            write_auc_summary(evs, std::cout);
            if (!eval_roc.empty()) {
                auto out = open_out(eval_roc);
                write_roc(*ev, out);
            }
        } else if (*run) {
            RunConfig cfg = cfg_file.empty() ? RunConfig{} : load_config(cfg_file);
            apply_overrides(cfg, overrides);
            cfg.validate();
            PipelineInputs in;
            for (const auto& f : run_tools) in.tool_targets.push_back(load_tool_targets(f, fs::path(f).stem().string()));
            in.ppi = load_edge_list(run_ppi, false);
            in.disease_genes = load_gene_set(run_disease);
            in.tfs = load_gene_set(run_tfs);
            if (!run_expr.empty()) {
                in.expression = load_expression(run_expr);
            } else if (!run_coexpr.empty()) {
                in.coexpr_network = load_edge_list(run_coexpr, true);
                if (!run_degs.empty()) in.degs = load_gene_set(run_degs);
            }
            if (!run_pos.empty()) in.positives = load_ids(run_pos);
            if (!run_neg.empty()) in.negatives = load_ids(run_neg);

            const auto result = run_pipeline(cfg, in);
            fs::create_directories(out_dir);
            const fs::path dir(out_dir);
            {
                auto o = open_out(dir / "ranked.tsv");
                write_ranked_table(result, o);
            }
            {
                auto o = open_out(dir / "channels.tsv");
                write_channel_table(result, o);
            }
            {
                auto o = open_out(dir / "report.txt");
                write_report(result.report, o);
            }
            {
                auto o = open_out(dir / "config.txt");
                write_config(cfg, o);
            }
            if (result.report.soft_threshold_run) {
                auto o = open_out(dir / "soft_threshold.tsv");
                write_soft_threshold_report(result.report.soft_threshold, o);
            }
            if (!result.evaluations.empty()) {
                auto o = open_out(dir / "auc.tsv");
                write_auc_summary(result.evaluations, o);
                for (const auto& ev : result.evaluations) {
                    auto r = open_out(dir / ("roc_" + ev.label + ".tsv"));
                    write_roc(ev, r);
                }
            }
            for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
            std::cout << "ranked=" << result.ranked.size() << " appendix=" << result.appendix.size() << '\n';
        } else if (*stats) {
            const auto net = load_edge_list(stats_net, !stats_unweighted);
            std::cout << "nodes=" << net.node_count() << " edges=" << net.edge_count() << '\n';
        }
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
