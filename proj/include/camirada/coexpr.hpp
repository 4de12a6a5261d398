#pragma once

// Co-expression network construction: correlation, soft-threshold power
// selection by scale-free fit, adjacency sparsification, differential
// expression calls, and RWR-ranked subnetwork extraction.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "camirada/detail/parallel.hpp"
#include "camirada/detail/text.hpp"
#include "camirada/error.hpp"
#include "camirada/netcore.hpp"
#include "camirada/propagate.hpp"
#include "camirada/special.hpp"

namespace camirada {

enum class SampleGroup { normal, tumor };

/// Genes x samples, row-major.
struct ExpressionMatrix {
    std::vector<GeneId> genes;
    std::vector<std::string> samples;
    std::vector<SampleGroup> groups;
    std::vector<double> values;
    std::size_t dropped_rows = 0; ///< rows discarded at load for missing values

    std::size_t gene_count() const noexcept { return genes.size(); }
    std::size_t sample_count() const noexcept { return samples.size(); }
    double at(std::size_t g, std::size_t s) const { return values[g * samples.size() + s]; }
    std::span<const double> row(std::size_t g) const { return {values.data() + g * samples.size(), samples.size()}; }

    std::size_t group_size(SampleGroup grp) const {
        return static_cast<std::size_t>(std::count(groups.begin(), groups.end(), grp));
    }

    void validate() const {
        if (groups.size() != samples.size()) throw Error("expression: group labels do not match samples");
        if (values.size() != genes.size() * samples.size()) throw Error("expression: value count mismatch");
    }
};

namespace detail {
inline bool is_missing(std::string_view tok) {
    tok = trim(tok);
    return tok.empty() || tok == "NA" || tok == "NaN" || tok == "nan" || tok == "na";
}
} // namespace detail

/// Expression TSV: a row of sample ids, a row of group labels (normal/tumor),
/// then `gene<TAB>v1<TAB>...`. The two header rows may carry a leading label
/// cell. Rows with missing values are dropped and counted.
inline ExpressionMatrix read_expression(std::istream& in, const std::string& source = "<stream>") {
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_comment_or_blank(line)) continue;
        lines.emplace_back(lineno, line);
    }
    if (lines.size() < 3) throw ParseError(source, lineno, "expression file needs two header rows and data");

    const auto first_data = detail::split_tsv(lines[2].second);
    if (first_data.size() < 2) throw ParseError(source, lines[2].first, "data row has no values");
    const std::size_t ns = first_data.size() - 1;

    auto header_cells = [&](std::size_t which) {
        auto cells = detail::split_tsv(lines[which].second);
        if (cells.size() == ns + 1)
            cells.erase(cells.begin());
        else if (cells.size() != ns)
            throw ParseError(source, lines[which].first,
                             "header has " + std::to_string(cells.size()) + " cells for " + std::to_string(ns) +
                                 " samples");
        return cells;
    };

    ExpressionMatrix m;
    for (const auto c : header_cells(0)) m.samples.emplace_back(detail::trim(c));
    for (const auto c : header_cells(1)) {
        const auto t = detail::trim(c);
        if (t == "normal" || t == "Normal" || t == "NORMAL")
            m.groups.push_back(SampleGroup::normal);
        else if (t == "tumor" || t == "Tumor" || t == "TUMOR")
            m.groups.push_back(SampleGroup::tumor);
        else
            throw ParseError(source, lines[1].first, "group label must be 'normal' or 'tumor', got '" + std::string(t) + "'");
    }
    for (std::size_t r = 2; r < lines.size(); ++r) {
        const auto cells = detail::split_tsv(lines[r].second);
        if (cells.size() != ns + 1)
            throw ParseError(source, lines[r].first, "expected " + std::to_string(ns + 1) + " columns");
        const auto gene = detail::trim(cells[0]);
        if (gene.empty() || detail::has_whitespace(gene)) throw ParseError(source, lines[r].first, "invalid gene id");
        std::vector<double> row;
        row.reserve(ns);
        bool missing = false;
        for (std::size_t c = 1; c <= ns; ++c) {
            if (detail::is_missing(cells[c])) {
                missing = true;
                break;
            }
            const auto v = detail::parse_double(cells[c]);
            if (!v || !std::isfinite(*v))
                throw ParseError(source, lines[r].first, "non-numeric value '" + std::string(cells[c]) + "'");
            row.push_back(*v);
        }
        if (missing) {
            ++m.dropped_rows;
            continue;
        }
        m.genes.emplace_back(gene);
        m.values.insert(m.values.end(), row.begin(), row.end());
    }
    return m;
}

inline ExpressionMatrix load_expression(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open expression file: " + path);
    return read_expression(in, path);
}

/// Dense symmetric gene x gene matrix.
struct CorrelationMatrix {
    std::vector<GeneId> genes;
    std::vector<double> values;
    std::size_t dropped_zero_variance = 0;

    std::size_t size() const noexcept { return genes.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * genes.size() + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * genes.size() + j]; }
};

/// Pearson correlation between every pair of genes; zero-variance genes are dropped.
inline CorrelationMatrix correlation_matrix(const ExpressionMatrix& expr, unsigned threads = 1) {
    expr.validate();
    const auto ns = expr.sample_count();
    if (ns < 3) throw DomainError("correlation_matrix: need at least 3 samples");

    CorrelationMatrix out;
    std::vector<std::vector<double>> z; // centred rows scaled to unit norm
    for (std::size_t g = 0; g < expr.gene_count(); ++g) {
        const auto row = expr.row(g);
        double mean = 0.0;
        for (const double v : row) mean += v;
        mean /= static_cast<double>(ns);
        std::vector<double> c(ns);
        double ss = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            c[s] = row[s] - mean;
            ss += c[s] * c[s];
        }
        if (!(ss > 0.0)) {
            ++out.dropped_zero_variance;
            continue;
        }
        const double inv = 1.0 / std::sqrt(ss);
        for (auto& v : c) v *= inv;
        out.genes.push_back(expr.genes[g]);
        z.push_back(std::move(c));
    }
    if (out.genes.empty()) throw DomainError("correlation_matrix: every gene has zero variance");

    const auto n = out.genes.size();
    out.values.assign(n * n, 0.0);
    detail::parallel_for(n, threads, [&](std::size_t i) {
        out.at(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t s = 0; s < ns; ++s) dot += z[i][s] * z[j][s];
            dot = std::clamp(dot, -1.0, 1.0);
            out.values[i * n + j] = dot;
        }
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) out.at(j, i) = out.at(i, j);
    return out;
}

struct SoftThresholdRow {
    int power = 1;
    double scale_free_fit = 0.0; ///< -sign(slope) * R^2
    double slope = 0.0;
    double r_squared = 0.0;
    double mean_connectivity = 0.0;
    bool fittable = true;
};

struct SoftThresholdReport {
    std::vector<SoftThresholdRow> rows;
    int chosen_power = 1;
    bool qualified = true; ///< false when no power reached the cut and the best fit was taken
    double fit_cut = 0.85;
};

inline constexpr int kScaleFreeBins = 10;

/// Unsigned soft-threshold connectivity k_i = sum_{j != i} |corr_ij|^power.
inline std::vector<double> soft_connectivity(const CorrelationMatrix& corr, int power) {
    const auto n = corr.size();
    std::vector<double> k(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) k[i] += std::pow(std::abs(corr.at(i, j)), power);
    return k;
}

/// Scale-free fit of a connectivity vector: 10 equal-width bins over
/// [min k, max k], least-squares line of log10(bin frequency) on
/// log10(mean k in bin) over non-empty bins.
inline SoftThresholdRow scale_free_fit(std::span<const double> k, int power) {
    SoftThresholdRow row;
    row.power = power;
    const auto n = k.size();
    double mean = 0.0;
    for (const double v : k) mean += v;
    row.mean_connectivity = n ? mean / static_cast<double>(n) : 0.0;
    const auto [lo_it, hi_it] = std::minmax_element(k.begin(), k.end());
    if (n == 0 || !(*hi_it > *lo_it) || !(*lo_it > 0.0)) {
        row.fittable = false;
        row.scale_free_fit = std::numeric_limits<double>::quiet_NaN();
        return row;
    }
    const double lo = *lo_it, hi = *hi_it;
    const double width = (hi - lo) / kScaleFreeBins;
    std::vector<double> sum(kScaleFreeBins, 0.0);
    std::vector<std::size_t> count(kScaleFreeBins, 0);
    for (const double v : k) {
        auto b = static_cast<int>((v - lo) / width);
        b = std::clamp(b, 0, kScaleFreeBins - 1);
        sum[b] += v;
        ++count[b];
    }
    std::vector<double> xs, ys;
    for (int b = 0; b < kScaleFreeBins; ++b) {
        if (count[b] == 0) continue;
        xs.push_back(std::log10(sum[b] / static_cast<double>(count[b])));
        ys.push_back(std::log10(static_cast<double>(count[b]) / static_cast<double>(n)));
    }
    const double m = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) {
        row.fittable = false;
        row.scale_free_fit = std::numeric_limits<double>::quiet_NaN();
        return row;
    }
    row.slope = sxy / sxx;
    row.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 0.0;
    const double sign = row.slope > 0.0 ? 1.0 : (row.slope < 0.0 ? -1.0 : 0.0);
    row.scale_free_fit = -sign * row.r_squared;
    return row;
}

/// Smallest power whose scale-free fit reaches `fit_cut`; otherwise the power
/// with the best fit, with `qualified` cleared.
inline SoftThresholdReport pick_soft_threshold(const CorrelationMatrix& corr, std::span<const int> powers,
                                               double fit_cut = 0.85) {
    if (powers.empty()) throw DomainError("pick_soft_threshold: no candidate powers");
    if (!(fit_cut >= 0.0 && fit_cut < 1.0)) throw DomainError("pick_soft_threshold: fit_cut must lie in [0, 1)");
    SoftThresholdReport rep;
    rep.fit_cut = fit_cut;
    for (const int p : powers) {
        if (p < 1) throw DomainError("pick_soft_threshold: powers must be positive");
        const auto k = soft_connectivity(corr, p);
        rep.rows.push_back(scale_free_fit(k, p));
    }
    for (const auto& r : rep.rows)
        if (r.fittable && r.scale_free_fit >= fit_cut) {
            rep.chosen_power = r.power;
            rep.qualified = true;
            return rep;
        }
    rep.qualified = false;
    const SoftThresholdRow* best = nullptr;
    for (const auto& r : rep.rows)
        if (r.fittable && (!best || r.scale_free_fit > best->scale_free_fit)) best = &r;
    rep.chosen_power = best ? best->power : rep.rows.front().power;
    return rep;
}

/// Weighted network with weight |corr_ij|^power for pairs above `min_weight`.
/// Every gene of the matrix is a node, including ones left without edges.
inline Network adjacency_network(const CorrelationMatrix& corr, int power, double min_weight = 0.01) {
    if (power < 1) throw DomainError("adjacency_network: power must be >= 1");
    if (!(min_weight >= 0.0)) throw DomainError("adjacency_network: min_weight must be >= 0");
    auto table = std::make_shared<NodeTable>(corr.genes);
    std::vector<Edge> edges;
    const auto n = corr.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double w = std::pow(std::abs(corr.at(i, j)), power);
            if (w > min_weight && w > 0.0)
                edges.push_back({static_cast<NodeIndex>(i), static_cast<NodeIndex>(j), w});
        }
    return Network(std::move(table), std::move(edges));
}

struct DegStat {
    GeneId gene;
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
    double log2_fold_change = 0.0; ///< mean(tumor) - mean(normal) on log-scale values
};

struct DegResult {
    GeneSet degs;
    std::vector<DegStat> stats;
};

/// Welch two-sample t-test per gene; a gene is called when p < p_cut and
/// |log2 fold change| >= fold_cut.
inline DegResult detect_degs(const ExpressionMatrix& expr, double p_cut = 0.05, double fold_cut = 0.1) {
    expr.validate();
    const auto n_normal = expr.group_size(SampleGroup::normal);
    const auto n_tumor = expr.group_size(SampleGroup::tumor);
    if (n_normal < 2 || n_tumor < 2) throw DomainError("detect_degs: each group needs at least 2 samples");

    DegResult out;
    out.degs.name = "degs";
    for (std::size_t g = 0; g < expr.gene_count(); ++g) {
        double sum[2] = {0.0, 0.0};
        for (std::size_t s = 0; s < expr.sample_count(); ++s) sum[expr.groups[s] == SampleGroup::tumor] += expr.at(g, s);
        const double n0 = static_cast<double>(n_normal), n1 = static_cast<double>(n_tumor);
        const double m0 = sum[0] / n0, m1 = sum[1] / n1;
        double ss[2] = {0.0, 0.0};
        for (std::size_t s = 0; s < expr.sample_count(); ++s) {
            const bool t = expr.groups[s] == SampleGroup::tumor;
            const double d = expr.at(g, s) - (t ? m1 : m0);
            ss[t] += d * d;
        }
        const double a = ss[0] / (n0 - 1.0) / n0;
        const double b = ss[1] / (n1 - 1.0) / n1;
        DegStat st;
        st.gene = expr.genes[g];
        st.log2_fold_change = m1 - m0;
        const double se2 = a + b;
        if (se2 > 0.0) {
            st.t = (m1 - m0) / std::sqrt(se2);
            st.df = se2 * se2 / (a * a / (n0 - 1.0) + b * b / (n1 - 1.0));
            st.p = std::min(1.0, 2.0 * special::student_t_sf(std::abs(st.t), st.df));
        } else {
            st.df = n0 + n1 - 2.0;
            st.t = m1 == m0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), m1 - m0);
            st.p = m1 == m0 ? 1.0 : 0.0;
        }
        if (st.p < p_cut && std::abs(st.log2_fold_change) >= fold_cut) out.degs.members.insert(st.gene);
        out.stats.push_back(std::move(st));
    }
    return out;
}

/// Nodes with at least one incident edge, ascending.
inline std::vector<NodeIndex> connected_nodes(const Network& net) {
    std::vector<NodeIndex> keep;
    for (NodeIndex i = 0; i < net.node_count(); ++i)
        if (net.degree(i) > 0) keep.push_back(i);
    return keep;
}

/// Induced subgraph on the k best nodes of a walk from `seeds`, reduced to its
/// largest connected component. Isolated nodes of `net` are removed before the
/// walk since they have no outgoing transitions.
inline Network extract_subnetwork(const Network& net, const GeneSet& seeds, std::size_t k, const RwrParams& params) {
    if (k < 1) throw DomainError("extract_subnetwork: k must be >= 1");
    const auto keep = connected_nodes(net);
    const Network core = keep.size() == net.node_count() ? net : induced_subgraph(net, keep);
    if (core.edge_count() == 0) throw DomainError("extract_subnetwork: network has no edges");
    const TransitionOperator op(core);
    const auto ranks = rwr(op, seeds, params);
    const auto top = top_k_nodes(ranks, k);
    const auto sub = induced_subgraph(core, top);
    if (sub.edge_count() == 0) throw DomainError("extract_subnetwork: induced subgraph has no edges");
    return largest_connected_component(sub);
}

} // namespace camirada
