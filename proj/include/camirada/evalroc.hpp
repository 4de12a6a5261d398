#pragma once

// ROC/AUC evaluation of a ranked list where lower scores are stronger
// predictions (p-values).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "camirada/error.hpp"

namespace camirada {

struct ScoredEntry {
    std::string id;
    double score = 0.0;
};

/// Scored entries with positive and negative label sets. Entries in neither
/// set are unlabeled and count as non-positives.
class LabeledScores {
public:
    LabeledScores(std::vector<ScoredEntry> entries, std::set<std::string> positives, std::set<std::string> negatives)
        : entries_(std::move(entries)), positives_(std::move(positives)), negatives_(std::move(negatives)) {
        std::unordered_set<std::string> ids;
        for (const auto& e : entries_) {
            if (std::isnan(e.score)) throw DomainError("labeled scores: NaN score for " + e.id);
            if (!ids.insert(e.id).second) throw DomainError("labeled scores: duplicate entry " + e.id);
        }
        for (const auto& p : positives_) {
            if (negatives_.count(p)) throw DomainError("labeled scores: " + p + " is both positive and negative");
            if (!ids.count(p)) throw DomainError("labeled scores: positive " + p + " has no score");
        }
        for (const auto& n : negatives_)
            if (!ids.count(n)) throw DomainError("labeled scores: negative " + n + " has no score");
    }

    std::span<const ScoredEntry> entries() const noexcept { return entries_; }
    const std::set<std::string>& positives() const noexcept { return positives_; }
    const std::set<std::string>& negatives() const noexcept { return negatives_; }
    bool is_positive(const std::string& id) const { return positives_.count(id) > 0; }

    std::size_t positive_count() const noexcept { return positives_.size(); }
    std::size_t non_positive_count() const noexcept { return entries_.size() - positives_.size(); }

    /// Entries sorted by ascending score, ties by id.
    std::vector<ScoredEntry> sorted_entries() const {
        auto s = entries_;
        std::sort(s.begin(), s.end(), [](const ScoredEntry& a, const ScoredEntry& b) {
            return a.score != b.score ? a.score < b.score : a.id < b.id;
        });
        return s;
    }

private:
    std::vector<ScoredEntry> entries_;
    std::set<std::string> positives_;
    std::set<std::string> negatives_;
};

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
};

/// Entries with score strictly below `threshold` are predicted positive.
inline Confusion confusion_at(const LabeledScores& ls, double threshold) {
    Confusion c;
    for (const auto& e : ls.entries()) {
        const bool predicted = e.score < threshold;
        if (ls.is_positive(e.id))
            (predicted ? c.tp : c.fn) += 1;
        else
            (predicted ? c.fp : c.tn) += 1;
    }
    return c;
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Sweeps the threshold over -inf, every distinct score, and +inf; AUC by
/// the trapezoidal rule.
inline RocCurve roc_and_auc(const LabeledScores& ls) {
    const auto npos = ls.positive_count();
    const auto nneg = ls.non_positive_count();
    if (npos == 0) throw DomainError("roc_and_auc: no positive entries");
    if (nneg == 0) throw DomainError("roc_and_auc: no non-positive entries");
    const auto sorted = ls.sorted_entries();

    RocCurve roc;
    const double inf = std::numeric_limits<double>::infinity();
    std::size_t tp = 0, fp = 0;
    auto emit = [&](double thr) {
        roc.points.push_back({static_cast<double>(fp) / static_cast<double>(nneg),
                              static_cast<double>(tp) / static_cast<double>(npos), thr});
    };
    emit(-inf);
    std::size_t i = 0;
    while (i < sorted.size()) {
        // Threshold equal to this score: everything strictly below is predicted.
        emit(sorted[i].score);
        const double s = sorted[i].score;
        while (i < sorted.size() && sorted[i].score == s) {
            (ls.is_positive(sorted[i].id) ? tp : fp) += 1;
            ++i;
        }
    }
    emit(inf);

    double auc = 0.0;
    for (std::size_t k = 1; k < roc.points.size(); ++k) {
        const auto& a = roc.points[k - 1];
        const auto& b = roc.points[k];
        auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    roc.auc = auc;
    return roc;
}

struct TopAuc {
    std::size_t n = 0;
    double auc = std::numeric_limits<double>::quiet_NaN();
    bool skipped = false; ///< restriction lacked a positive or a non-positive
};

/// AUC recomputed on the n best-scored entries for each n.
inline std::vector<TopAuc> auc_at_top(const LabeledScores& ls, std::span<const std::size_t> ns) {
    const auto sorted = ls.sorted_entries();
    std::vector<TopAuc> out;
    for (const auto n : ns) {
        if (n > sorted.size())
            throw DomainError("auc_at_top: n = " + std::to_string(n) + " exceeds " + std::to_string(sorted.size()) +
                              " entries");
        std::vector<ScoredEntry> head(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n));
        std::set<std::string> pos, neg;
        for (const auto& e : head) {
            if (ls.positives().count(e.id)) pos.insert(e.id);
            if (ls.negatives().count(e.id)) neg.insert(e.id);
        }
        TopAuc t;
        t.n = n;
        if (pos.empty() || pos.size() == head.size()) {
            t.skipped = true;
        } else {
            t.auc = roc_and_auc(LabeledScores(std::move(head), std::move(pos), std::move(neg))).auc;
        }
        out.push_back(t);
    }
    return out;
}

} // namespace camirada
