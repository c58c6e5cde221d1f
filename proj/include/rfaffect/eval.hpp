#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rfaffect/synth.hpp"  // seedmix

namespace rfaffect {

struct ConfusionMatrix {
    std::vector<std::vector<long>> counts;  // rows = true, cols = predicted

    int n_classes() const { return static_cast<int>(counts.size()); }
    long total() const {
        long t = 0;
        for (const auto& row : counts)
            t = std::accumulate(row.begin(), row.end(), t);
        return t;
    }
    long trace() const {
        long t = 0;
        for (std::size_t i = 0; i < counts.size(); ++i)
            t += counts[i][i];
        return t;
    }
    double accuracy() const { return static_cast<double>(trace()) / static_cast<double>(total()); }
};

inline ConfusionMatrix confusion_matrix(const std::vector<int>& y_true,
                                        const std::vector<int>& y_pred, int n_classes) {
    if (y_true.size() != y_pred.size() || y_true.empty())
        throw std::invalid_argument("confusion_matrix: size mismatch or empty input");
    ConfusionMatrix cm;
    cm.counts.assign(static_cast<std::size_t>(n_classes),
                     std::vector<long>(static_cast<std::size_t>(n_classes), 0));
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || y_true[i] >= n_classes || y_pred[i] < 0 || y_pred[i] >= n_classes)
            throw std::invalid_argument("confusion_matrix: label out of range");
        ++cm.counts[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
    }
    return cm;
}

struct PrfReport {
    std::vector<double> precision, recall, f1;   // per class
    std::vector<bool> degenerate;                // zero-denominator classes
    double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
    double std_precision = 0, std_recall = 0, std_f1 = 0;  // population std across classes
    double micro_precision = 0, micro_recall = 0, micro_f1 = 0;
    double accuracy = 0;
};

inline PrfReport prf_metrics(const ConfusionMatrix& cm) {
    const int k = cm.n_classes();
    if (k == 0 || cm.total() == 0)
        throw std::invalid_argument("prf_metrics: empty confusion matrix");
    PrfReport r;
    r.accuracy = cm.accuracy();
    for (int c = 0; c < k; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        long tp = cm.counts[ci][ci];
        long col = 0, row = 0;
        for (int j = 0; j < k; ++j) {
            col += cm.counts[static_cast<std::size_t>(j)][ci];
            row += cm.counts[ci][static_cast<std::size_t>(j)];
        }
        bool bad = col == 0 || row == 0;
        double p = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
        double rec = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
        double f = p + rec > 0 ? 2.0 * p * rec / (p + rec) : 0.0;
        r.precision.push_back(p);
        r.recall.push_back(rec);
        r.f1.push_back(f);
        r.degenerate.push_back(bad);
    }
    auto mean_std = [k](const std::vector<double>& v, double& mean, double& sd) {
        mean = std::accumulate(v.begin(), v.end(), 0.0) / k;
        double ss = 0.0;
        for (double x : v)
            ss += (x - mean) * (x - mean);
        sd = std::sqrt(ss / k);
    };
    mean_std(r.precision, r.macro_precision, r.std_precision);
    mean_std(r.recall, r.macro_recall, r.std_recall);
    mean_std(r.f1, r.macro_f1, r.std_f1);
    // Single-label multiclass: pooled TP = trace, pooled FP = pooled FN, so
    // micro precision, recall and F1 all collapse to accuracy.
    r.micro_precision = r.accuracy;
    r.micro_recall = r.accuracy;
    r.micro_f1 = r.accuracy;
    return r;
}

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0) .. (1,1)
    double auc = 0.0;
    std::string tag;  // "class<i>", "micro", "macro"
};

/// Threshold sweep from +inf downward; tied scores step jointly, which makes
/// the trapezoidal area equal the Mann-Whitney statistic with half credit for
/// ties.
inline RocCurve roc_auc(const std::vector<int>& y_bin, const std::vector<double>& scores) {
    if (y_bin.size() != scores.size() || y_bin.empty())
        throw std::invalid_argument("roc_auc: size mismatch or empty input");
    long n_pos = 0, n_neg = 0;
    for (int y : y_bin) {
        if (y != 0 && y != 1)
            throw std::invalid_argument("roc_auc: labels must be 0/1");
        (y == 1 ? n_pos : n_neg) += 1;
    }
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("roc_auc: need both classes present");

    std::vector<std::size_t> order(y_bin.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.emplace_back(0.0, 0.0);
    double auc = 0.0;
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        long step_tp = 0, step_fp = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (y_bin[order[j]] == 1 ? step_tp : step_fp) += 1;
            ++j;
        }
        double fpr0 = static_cast<double>(fp) / static_cast<double>(n_neg);
        double tpr0 = static_cast<double>(tp) / static_cast<double>(n_pos);
        tp += step_tp;
        fp += step_fp;
        double fpr1 = static_cast<double>(fp) / static_cast<double>(n_neg);
        double tpr1 = static_cast<double>(tp) / static_cast<double>(n_pos);
        auc += 0.5 * (tpr0 + tpr1) * (fpr1 - fpr0);
        curve.points.emplace_back(fpr1, tpr1);
        i = j;
    }
    curve.auc = auc;
    return curve;
}

struct MulticlassRoc {
    std::vector<RocCurve> per_class;     // curves for classes present in y
    std::vector<bool> class_present;     // size n_classes
    RocCurve micro;
    RocCurve macro;
};

inline MulticlassRoc multiclass_roc(const std::vector<int>& y,
                                    const std::vector<std::vector<double>>& score_matrix) {
    if (y.empty() || score_matrix.size() != y.size())
        throw std::invalid_argument("multiclass_roc: size mismatch or empty input");
    const auto k = score_matrix.front().size();
    for (const auto& row : score_matrix)
        if (row.size() != k)
            throw std::invalid_argument("multiclass_roc: ragged score matrix");

    MulticlassRoc out;
    out.class_present.assign(k, false);
    for (int label : y) {
        if (label < 0 || static_cast<std::size_t>(label) >= k)
            throw std::invalid_argument("multiclass_roc: label out of range");
        out.class_present[static_cast<std::size_t>(label)] = true;
    }

    std::vector<int> pooled_y;
    std::vector<double> pooled_s;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<int> bin(y.size());
        std::vector<double> sc(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            bin[i] = y[i] == static_cast<int>(c) ? 1 : 0;
            sc[i] = score_matrix[i][c];
            pooled_y.push_back(bin[i]);
            pooled_s.push_back(sc[i]);
        }
        if (!out.class_present[c])
            continue;
        RocCurve curve = roc_auc(bin, sc);
        curve.tag = "class" + std::to_string(c);
        out.per_class.push_back(std::move(curve));
    }

    out.micro = roc_auc(pooled_y, pooled_s);
    out.micro.tag = "micro";

    // Macro: mean TPR of per-class curves interpolated on a common FPR grid.
    const int grid_n = 101;
    auto tpr_at = [](const RocCurve& c, double fpr) {
        const auto& pts = c.points;
        if (fpr <= pts.front().first)
            return pts.front().second;
        double best = 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            double f0 = pts[i].first, f1 = pts[i + 1].first;
            if (fpr < f0 || fpr > f1)
                continue;
            double t = f1 > f0 ? (fpr - f0) / (f1 - f0) : 1.0;
            best = std::max(best, pts[i].second + t * (pts[i + 1].second - pts[i].second));
        }
        return best;
    };
    out.macro.tag = "macro";
    double prev_f = 0.0, prev_t = 0.0;
    for (int g = 0; g < grid_n; ++g) {
        double fpr = static_cast<double>(g) / (grid_n - 1);
        double tpr = 0.0;
        for (const auto& c : out.per_class)
            tpr += tpr_at(c, fpr);
        tpr /= static_cast<double>(out.per_class.size());
        out.macro.points.emplace_back(fpr, tpr);
        if (g > 0)
            out.macro.auc += 0.5 * (prev_t + tpr) * (fpr - prev_f);
        prev_f = fpr;
        prev_t = tpr;
    }
    return out;
}

struct FoldPrediction {
    std::size_t sample_index = 0;
    int true_label = 0;
    int predicted = 0;
    std::vector<double> scores;
};

struct EvaluationReport {
    double accuracy = 0.0;
    PrfReport prf;
    ConfusionMatrix cm;
    std::vector<FoldPrediction> log;  // ordered by sample index
};

/// One cross-validation fold: fit on train_idx, emit (predicted label,
/// per-class scores) for each test index, in order.
using FoldRunner = std::function<std::vector<std::pair<int, std::vector<double>>>(
    const std::vector<std::size_t>& train_idx, const std::vector<std::size_t>& test_idx,
    std::uint64_t fold_seed)>;

/// Leave-one-out driver. With groups, folds leave out one whole group
/// (leave-subject-out); otherwise one sample per fold. Fold seeds derive from
/// (seed, fold index), so reports are identical for any worker count.
inline EvaluationReport loocv(const std::vector<int>& labels, int n_classes,
                              const FoldRunner& run_fold, std::uint64_t seed, int workers = 1,
                              const std::vector<int>* groups = nullptr) {
    const std::size_t n = labels.size();
    if (n < 2)
        throw std::invalid_argument("loocv: need at least 2 samples");
    if (groups && groups->size() != n)
        throw std::invalid_argument("loocv: group list size mismatch");

    std::vector<std::vector<std::size_t>> folds;
    if (groups) {
        std::vector<int> uniq = *groups;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        if (uniq.size() < 2)
            throw std::invalid_argument("loocv: need at least 2 groups");
        for (int g : uniq) {
            std::vector<std::size_t> test;
            for (std::size_t i = 0; i < n; ++i)
                if ((*groups)[i] == g)
                    test.push_back(i);
            folds.push_back(std::move(test));
        }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            folds.push_back({i});
    }

    std::vector<std::vector<std::pair<int, std::vector<double>>>> results(folds.size());
    std::atomic<std::size_t> cursor{0};
    std::mutex err_mutex;
    std::string error;

    auto work = [&]() {
        for (;;) {
            const std::size_t f = cursor.fetch_add(1);
            if (f >= folds.size())
                return;
            {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!error.empty())
                    return;
            }
            try {
                const auto& test = folds[f];
                std::vector<std::size_t> train;
                train.reserve(n - test.size());
                for (std::size_t i = 0; i < n; ++i)
                    if (std::find(test.begin(), test.end(), i) == test.end())
                        train.push_back(i);
                std::uint64_t fold_seed = seedmix::derive(seed, 0xF1, static_cast<std::uint64_t>(f));
                auto preds = run_fold(train, test, fold_seed);
                if (preds.size() != test.size())
                    throw std::runtime_error("fold runner returned wrong prediction count");
                results[f] = std::move(preds);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (error.empty())
                    error = "loocv fold " + std::to_string(f) + ": " + e.what();
                return;
            }
        }
    };

    const int thread_n = std::max(1, std::min<int>(workers, static_cast<int>(folds.size())));
    if (thread_n == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(thread_n));
        for (int t = 0; t < thread_n; ++t)
            pool.emplace_back(work);
        for (auto& th : pool)
            th.join();
    }
    if (!error.empty())
        throw std::runtime_error(error);

    EvaluationReport report;
    report.log.resize(n);
    std::vector<int> y_pred(n, 0);
    for (std::size_t f = 0; f < folds.size(); ++f)
        for (std::size_t t = 0; t < folds[f].size(); ++t) {
            const std::size_t i = folds[f][t];
            FoldPrediction fp;
            fp.sample_index = i;
            fp.true_label = labels[i];
            fp.predicted = results[f][t].first;
            fp.scores = std::move(results[f][t].second);
            y_pred[i] = fp.predicted;
            report.log[i] = std::move(fp);
        }
    report.cm = confusion_matrix(labels, y_pred, n_classes);
    report.prf = prf_metrics(report.cm);
    report.accuracy = report.prf.accuracy;
    return report;
}

struct TsneResult {
    std::vector<std::array<double, 2>> embedding;
    double kl_initial = 0.0;
    double kl_final = 0.0;
};

/// Exact t-SNE with per-point bandwidth matched to the target perplexity by
/// binary search, early exaggeration x12 for the first 250 iterations, and
/// momentum 0.5 switching to 0.8. Updates use per-coordinate adaptive gains,
/// and the step shrinks by the exaggeration factor while it is active.
inline TsneResult tsne(const std::vector<std::vector<double>>& x, double perplexity,
                       int iterations, std::uint64_t seed) {
    const std::size_t n = x.size();
    if (n < 10)
        throw std::invalid_argument("tsne: need at least 10 samples");
    if (!(perplexity > 1.0) || perplexity >= (static_cast<double>(n) - 1.0) / 3.0)
        throw std::invalid_argument("tsne: perplexity must lie in (1, (N-1)/3)");
    if (iterations < 1)
        throw std::invalid_argument("tsne: iterations must be >= 1");
    const std::size_t d = x.front().size();
    for (const auto& row : x)
        if (row.size() != d)
            throw std::invalid_argument("tsne: ragged input");

    std::vector<std::vector<double>> dist2(n, std::vector<double>(n, 0.0));
    double max_d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t f = 0; f < d; ++f) {
                double diff = x[i][f] - x[j][f];
                s += diff * diff;
            }
            dist2[i][j] = s;
            dist2[j][i] = s;
            max_d2 = std::max(max_d2, s);
        }
    if (max_d2 <= 0.0)
        throw std::invalid_argument("tsne: all points identical");

    // Conditional distributions with binary-searched precision.
    const double log_perp = std::log(perplexity);
    std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        double beta = 1.0, lo = 0.0, hi = 1e300;
        for (int it = 0; it < 200; ++it) {
            double sum = 0.0, weighted = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i)
                    continue;
                double w = std::exp(-beta * dist2[i][j]);
                p[i][j] = w;
                sum += w;
                weighted += w * dist2[i][j];
            }
            // Shannon entropy of the normalized row, in nats
            double entropy = sum > 0.0 ? std::log(sum) + beta * weighted / sum : 0.0;
            double gap = entropy - log_perp;
            if (std::abs(gap) < 1e-4)
                break;
            if (gap > 0.0) {
                lo = beta;
                beta = hi >= 1e300 ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            sum += p[i][j];
        for (std::size_t j = 0; j < n; ++j)
            p[i][j] = j == i ? 0.0 : std::max(p[i][j] / sum, 0.0);
    }
    // Symmetrize
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = (p[i][j] + p[j][i]) / (2.0 * static_cast<double>(n));
            v = std::max(v, 1e-12);
            p[i][j] = v;
            p[j][i] = v;
        }

    std::uint64_t rng = seedmix::derive(seed, 0xD0);
    auto gauss = [&rng]() {
        // Box-Muller on the shared stream
        double u1 = (static_cast<double>(seedmix::next(rng) >> 11) + 0.5) * 0x1.0p-53;
        double u2 = (static_cast<double>(seedmix::next(rng) >> 11) + 0.5) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    };
    std::vector<std::array<double, 2>> y(n), inc(n, {0.0, 0.0});
    for (auto& pt : y) {
        pt[0] = 1e-4 * gauss();
        pt[1] = 1e-4 * gauss();
    }

    auto kl_divergence = [&](const std::vector<std::array<double, 2>>& emb) {
        double qsum = 0.0;
        std::vector<std::vector<double>> qu(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                double dx = emb[i][0] - emb[j][0], dy = emb[i][1] - emb[j][1];
                double w = 1.0 / (1.0 + dx * dx + dy * dy);
                qu[i][j] = w;
                qu[j][i] = w;
                qsum += 2.0 * w;
            }
        double kl = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j)
                    continue;
                double q = std::max(qu[i][j] / qsum, 1e-12);
                kl += p[i][j] * std::log(p[i][j] / q);
            }
        return kl;
    };

    TsneResult out;
    out.kl_initial = kl_divergence(y);

    const int exaggeration_end = std::min(iterations, 250);
    // Learning rate scaled to the sample count, with per-coordinate adaptive
    // gains; a fixed large step blows the layout apart under exaggeration.
    const double eta = std::max(static_cast<double>(n) / 12.0, 50.0);
    std::vector<std::array<double, 2>> gains(n, {1.0, 1.0});
    std::vector<std::vector<double>> qu(n, std::vector<double>(n, 0.0));
    for (int iter = 0; iter < iterations; ++iter) {
        const double exag = iter < exaggeration_end ? 12.0 : 1.0;
        // Exaggeration scales the attractive curvature by the same factor, so
        // shrink the step to match and keep the updates stable.
        const double step = eta / exag;
        const double momentum = iter < 250 ? 0.5 : 0.8;
        double qsum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
                double w = 1.0 / (1.0 + dx * dx + dy * dy);
                qu[i][j] = w;
                qu[j][i] = w;
                qsum += 2.0 * w;
            }
        for (std::size_t i = 0; i < n; ++i) {
            double gx = 0.0, gy = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i)
                    continue;
                double q = qu[i][j] / qsum;
                double coef = 4.0 * (exag * p[i][j] - q) * qu[i][j];
                gx += coef * (y[i][0] - y[j][0]);
                gy += coef * (y[i][1] - y[j][1]);
            }
            const double grad[2] = {gx, gy};
            for (int a = 0; a < 2; ++a) {
                bool opposed = (grad[a] > 0.0) != (inc[i][a] > 0.0);
                gains[i][a] = opposed ? gains[i][a] + 0.2 : gains[i][a] * 0.8;
                gains[i][a] = std::max(gains[i][a], 0.01);
                inc[i][a] = momentum * inc[i][a] - step * gains[i][a] * grad[a];
            }
        }
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i][0] += inc[i][0];
            y[i][1] += inc[i][1];
            mx += y[i][0];
            my += y[i][1];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        for (auto& pt : y) {
            pt[0] -= mx;
            pt[1] -= my;
        }
    }

    out.kl_final = kl_divergence(y);
    out.embedding = std::move(y);
    return out;
}

}  // namespace rfaffect
