#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfaffect/synth.hpp"  // seedmix

namespace rfaffect {

using FeatureRows = std::vector<std::vector<double>>;

namespace classicdetail {

inline void check_training_input(const FeatureRows& x, const std::vector<int>& y) {
    if (x.empty())
        throw std::invalid_argument("fit: empty training set");
    if (y.size() != x.size())
        throw std::invalid_argument("fit: label count does not match row count");
    const std::size_t d = x.front().size();
    if (d == 0)
        throw std::invalid_argument("fit: zero-width feature rows");
    for (const auto& row : x)
        if (row.size() != d)
            throw std::invalid_argument("fit: ragged feature matrix");
    for (int label : y)
        if (label < 0)
            throw std::invalid_argument("fit: negative label");
}

inline int infer_n_classes(const std::vector<int>& y) {
    int n_classes = 0;
    for (int label : y)
        n_classes = std::max(n_classes, label + 1);
    std::vector<bool> present(static_cast<std::size_t>(n_classes), false);
    for (int label : y)
        present[static_cast<std::size_t>(label)] = true;
    if (std::count(present.begin(), present.end(), true) < 2)
        throw std::invalid_argument("fit: need at least 2 distinct classes");
    return n_classes;
}

inline int argmax_lowest(const std::vector<double>& v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[static_cast<std::size_t>(best)])
            best = static_cast<int>(i);
    return best;
}

inline void write_double(std::ostream& os, double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    os << buf;
}

inline double read_double(std::istream& is) {
    std::string tok;
    if (!(is >> tok))
        throw std::runtime_error("model load: unexpected end of stream");
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw std::runtime_error("model load: bad numeric token '" + tok + "'");
    return v;
}

inline long read_int(std::istream& is) {
    long v = 0;
    if (!(is >> v))
        throw std::runtime_error("model load: expected integer");
    return v;
}

inline void expect_token(std::istream& is, const std::string& want) {
    std::string tok;
    if (!(is >> tok) || tok != want)
        throw std::runtime_error("model load: expected token '" + want + "'");
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

}  // namespace classicdetail

class Classifier {
  public:
    virtual ~Classifier() = default;
    virtual void fit(const FeatureRows& x, const std::vector<int>& y) = 0;
    /// Per-class scores summing to 1 for the fitted class count.
    virtual std::vector<double> predict_proba(const std::vector<double>& x) const = 0;
    /// Ranking scores for ROC: probabilities for most models, signed margins
    /// for the SVM.
    virtual std::vector<double> predict_scores(const std::vector<double>& x) const {
        return predict_proba(x);
    }
    virtual const char* kind() const = 0;
    virtual void save(std::ostream& os) const = 0;
    virtual void load(std::istream& is) = 0;

    int predict(const std::vector<double>& x) const {
        return classicdetail::argmax_lowest(predict_scores(x));
    }
    int n_classes() const { return n_classes_; }
    int n_features() const { return n_features_; }

  protected:
    void require_fitted() const {
        if (n_classes_ == 0)
            throw std::logic_error("predict before fit");
    }
    void check_query(const std::vector<double>& x) const {
        require_fitted();
        if (static_cast<int>(x.size()) != n_features_)
            throw std::invalid_argument("predict: feature width mismatch");
    }
    int n_classes_ = 0;
    int n_features_ = 0;
};

class KnnClassifier final : public Classifier {
  public:
    explicit KnnClassifier(int k = 5) : k_(k) {
        if (k < 1)
            throw std::invalid_argument("knn: k must be >= 1");
    }

    void fit(const FeatureRows& x, const std::vector<int>& y) override {
        classicdetail::check_training_input(x, y);
        if (static_cast<std::size_t>(k_) > x.size())
            throw std::invalid_argument("knn: k exceeds training size");
        train_x_ = x;
        train_y_ = y;
        n_classes_ = classicdetail::infer_n_classes(y);
        n_features_ = static_cast<int>(x.front().size());
    }

    /// Vote fractions among the k nearest neighbours (Euclidean); distance
    /// ties rank by training index.
    std::vector<double> predict_proba(const std::vector<double>& x) const override {
        check_query(x);
        const std::size_t n = train_x_.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> dist(n);
        for (std::size_t i = 0; i < n; ++i)
            dist[i] = classicdetail::sq_dist(train_x_[i], x);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
        std::vector<double> proba(static_cast<std::size_t>(n_classes_), 0.0);
        for (int j = 0; j < k_; ++j)
            proba[static_cast<std::size_t>(train_y_[order[static_cast<std::size_t>(j)]])] +=
                1.0 / static_cast<double>(k_);
        return proba;
    }

    const char* kind() const override { return "knn"; }

    void save(std::ostream& os) const override {
        os << k_ << ' ' << n_classes_ << ' ' << n_features_ << ' ' << train_x_.size() << '\n';
        for (std::size_t i = 0; i < train_x_.size(); ++i) {
            for (double v : train_x_[i]) {
                classicdetail::write_double(os, v);
                os << ' ';
            }
            os << train_y_[i] << '\n';
        }
    }

    void load(std::istream& is) override {
        k_ = static_cast<int>(classicdetail::read_int(is));
        n_classes_ = static_cast<int>(classicdetail::read_int(is));
        n_features_ = static_cast<int>(classicdetail::read_int(is));
        auto n = static_cast<std::size_t>(classicdetail::read_int(is));
        train_x_.assign(n, std::vector<double>(static_cast<std::size_t>(n_features_)));
        train_y_.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& v : train_x_[i])
                v = classicdetail::read_double(is);
            train_y_[i] = static_cast<int>(classicdetail::read_int(is));
        }
    }

    int k() const { return k_; }

  private:
    int k_;
    FeatureRows train_x_;
    std::vector<int> train_y_;
};

struct TreeConfig {
    int max_depth = 8;  // 0 = unlimited
    int min_samples_split = 2;
    double min_gain = 1e-12;
};

namespace treedetail {

struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> proba;
};

inline double gini(const std::vector<double>& counts, double total) {
    double g = 1.0;
    for (double c : counts) {
        double p = c / total;
        g -= p * p;
    }
    return g;
}

struct Builder {
    const FeatureRows& x;
    const std::vector<int>& y;
    int n_classes;
    TreeConfig cfg;
    int mtry;
    std::uint64_t* rng;  // nullptr = consider all features
    std::vector<Node>& nodes;

    int build(std::vector<std::size_t>& idx, int depth) {
        std::vector<double> counts(static_cast<std::size_t>(n_classes), 0.0);
        for (std::size_t i : idx)
            counts[static_cast<std::size_t>(y[i])] += 1.0;
        const auto total = static_cast<double>(idx.size());

        Node node;
        node.proba.resize(static_cast<std::size_t>(n_classes));
        for (int c = 0; c < n_classes; ++c)
            node.proba[static_cast<std::size_t>(c)] = counts[static_cast<std::size_t>(c)] / total;

        bool pure = *std::max_element(counts.begin(), counts.end()) == total;
        bool depth_stop = cfg.max_depth > 0 && depth >= cfg.max_depth;
        if (pure || depth_stop || static_cast<int>(idx.size()) < cfg.min_samples_split) {
            nodes.push_back(std::move(node));
            return static_cast<int>(nodes.size()) - 1;
        }

        const int d = static_cast<int>(x.front().size());
        std::vector<int> candidates(static_cast<std::size_t>(d));
        std::iota(candidates.begin(), candidates.end(), 0);
        if (rng && mtry < d) {
            for (int i = 0; i < mtry; ++i) {
                auto j = static_cast<std::size_t>(i) +
                         static_cast<std::size_t>(seedmix::next(*rng) %
                                                  static_cast<std::uint64_t>(d - i));
                std::swap(candidates[static_cast<std::size_t>(i)], candidates[j]);
            }
            candidates.resize(static_cast<std::size_t>(mtry));
            std::sort(candidates.begin(), candidates.end());
        }

        const double parent_gini = gini(counts, total);
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_gain = cfg.min_gain;
        std::vector<std::size_t> sorted = idx;
        for (int f : candidates) {
            std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                return x[a][static_cast<std::size_t>(f)] < x[b][static_cast<std::size_t>(f)];
            });
            std::vector<double> left_counts(static_cast<std::size_t>(n_classes), 0.0);
            for (std::size_t pos = 0; pos + 1 < sorted.size(); ++pos) {
                left_counts[static_cast<std::size_t>(y[sorted[pos]])] += 1.0;
                double va = x[sorted[pos]][static_cast<std::size_t>(f)];
                double vb = x[sorted[pos + 1]][static_cast<std::size_t>(f)];
                if (vb <= va)
                    continue;
                auto n_left = static_cast<double>(pos + 1);
                double n_right = total - n_left;
                std::vector<double> right_counts(static_cast<std::size_t>(n_classes));
                for (int c = 0; c < n_classes; ++c)
                    right_counts[static_cast<std::size_t>(c)] =
                        counts[static_cast<std::size_t>(c)] - left_counts[static_cast<std::size_t>(c)];
                double gain = parent_gini - (n_left / total) * gini(left_counts, n_left) -
                              (n_right / total) * gini(right_counts, n_right);
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = 0.5 * (va + vb);
                }
            }
        }

        if (best_feature < 0) {
            nodes.push_back(std::move(node));
            return static_cast<int>(nodes.size()) - 1;
        }

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : idx) {
            if (x[i][static_cast<std::size_t>(best_feature)] <= best_threshold)
                left_idx.push_back(i);
            else
                right_idx.push_back(i);
        }
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.proba.clear();
        nodes.push_back(std::move(node));
        auto self = static_cast<int>(nodes.size()) - 1;
        int left = build(left_idx, depth + 1);
        int right = build(right_idx, depth + 1);
        nodes[static_cast<std::size_t>(self)].left = left;
        nodes[static_cast<std::size_t>(self)].right = right;
        return self;
    }
};

}  // namespace treedetail

/// CART with Gini impurity. Splits test x[f] <= t where t is the midpoint
/// between consecutive distinct values; the gain comparison keeps the first
/// (lowest feature index, lowest threshold) candidate on ties.
class DecisionTreeClassifier final : public Classifier {
  public:
    explicit DecisionTreeClassifier(TreeConfig cfg = {}) : cfg_(cfg) {}

    void fit(const FeatureRows& x, const std::vector<int>& y) override {
        classicdetail::check_training_input(x, y);
        n_classes_ = classicdetail::infer_n_classes(y);
        n_features_ = static_cast<int>(x.front().size());
        nodes_.clear();
        std::vector<std::size_t> idx(x.size());
        std::iota(idx.begin(), idx.end(), 0);
        treedetail::Builder builder{x, y, n_classes_, cfg_, n_features_, nullptr, nodes_};
        builder.build(idx, 0);
    }

    /// Fit on a subset of rows, sub-sampling mtry candidate features per node
    /// from the given stream. Used by the forest.
    void fit_subsample(const FeatureRows& x, const std::vector<int>& y,
                       const std::vector<std::size_t>& rows, int n_classes, int mtry,
                       std::uint64_t& rng) {
        n_classes_ = n_classes;
        n_features_ = static_cast<int>(x.front().size());
        nodes_.clear();
        FeatureRows sub_x;
        std::vector<int> sub_y;
        sub_x.reserve(rows.size());
        sub_y.reserve(rows.size());
        for (std::size_t r : rows) {
            sub_x.push_back(x[r]);
            sub_y.push_back(y[r]);
        }
        std::vector<std::size_t> idx(sub_x.size());
        std::iota(idx.begin(), idx.end(), 0);
        treedetail::Builder builder{sub_x, sub_y, n_classes_, cfg_, mtry, &rng, nodes_};
        builder.build(idx, 0);
    }

    std::vector<double> predict_proba(const std::vector<double>& x) const override {
        check_query(x);
        int at = 0;
        while (nodes_[static_cast<std::size_t>(at)].feature >= 0) {
            const auto& node = nodes_[static_cast<std::size_t>(at)];
            at = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                             : node.right;
        }
        return nodes_[static_cast<std::size_t>(at)].proba;
    }

    const char* kind() const override { return "tree"; }

    void save(std::ostream& os) const override {
        os << n_classes_ << ' ' << n_features_ << ' ' << cfg_.max_depth << ' '
           << cfg_.min_samples_split << ' ' << nodes_.size() << '\n';
        for (const auto& node : nodes_) {
            os << node.feature << ' ';
            classicdetail::write_double(os, node.threshold);
            os << ' ' << node.left << ' ' << node.right;
            if (node.feature < 0)
                for (double p : node.proba) {
                    os << ' ';
                    classicdetail::write_double(os, p);
                }
            os << '\n';
        }
    }

    void load(std::istream& is) override {
        n_classes_ = static_cast<int>(classicdetail::read_int(is));
        n_features_ = static_cast<int>(classicdetail::read_int(is));
        cfg_.max_depth = static_cast<int>(classicdetail::read_int(is));
        cfg_.min_samples_split = static_cast<int>(classicdetail::read_int(is));
        auto n_nodes = static_cast<std::size_t>(classicdetail::read_int(is));
        nodes_.assign(n_nodes, {});
        for (auto& node : nodes_) {
            node.feature = static_cast<int>(classicdetail::read_int(is));
            node.threshold = classicdetail::read_double(is);
            node.left = static_cast<int>(classicdetail::read_int(is));
            node.right = static_cast<int>(classicdetail::read_int(is));
            if (node.feature < 0) {
                node.proba.resize(static_cast<std::size_t>(n_classes_));
                for (auto& p : node.proba)
                    p = classicdetail::read_double(is);
            }
        }
    }

    std::size_t node_count() const { return nodes_.size(); }
    TreeConfig& config() { return cfg_; }

  private:
    TreeConfig cfg_;
    std::vector<treedetail::Node> nodes_;
};

struct ForestConfig {
    int n_trees = 100;
    bool bootstrap = true;
    int mtry = 0;  // 0 = sqrt(d) with bootstrap, d without
    TreeConfig tree;
    std::uint64_t seed = 1;
};

/// Bagged CART ensemble; probabilities average over trees. With
/// bootstrap=false and mtry=0 every tree sees all rows and all features, so
/// n_trees=1 reproduces a single DecisionTreeClassifier exactly.
class RandomForestClassifier final : public Classifier {
  public:
    explicit RandomForestClassifier(ForestConfig cfg = {}) : cfg_(cfg) {
        if (cfg.n_trees < 1)
            throw std::invalid_argument("forest: n_trees must be >= 1");
    }

    void fit(const FeatureRows& x, const std::vector<int>& y) override {
        classicdetail::check_training_input(x, y);
        n_classes_ = classicdetail::infer_n_classes(y);
        n_features_ = static_cast<int>(x.front().size());
        const std::size_t n = x.size();
        int mtry = cfg_.mtry;
        if (mtry <= 0)
            mtry = cfg_.bootstrap
                       ? std::max(1, static_cast<int>(std::floor(std::sqrt(n_features_))))
                       : n_features_;
        mtry = std::min(mtry, n_features_);

        trees_.clear();
        trees_.reserve(static_cast<std::size_t>(cfg_.n_trees));
        for (int t = 0; t < cfg_.n_trees; ++t) {
            std::uint64_t rng = seedmix::derive(cfg_.seed, 0xF0, static_cast<std::uint64_t>(t));
            std::vector<std::size_t> rows;
            rows.reserve(n);
            if (cfg_.bootstrap) {
                for (std::size_t i = 0; i < n; ++i)
                    rows.push_back(static_cast<std::size_t>(seedmix::next(rng) %
                                                            static_cast<std::uint64_t>(n)));
            } else {
                rows.resize(n);
                std::iota(rows.begin(), rows.end(), 0);
            }
            DecisionTreeClassifier tree(cfg_.tree);
            tree.fit_subsample(x, y, rows, n_classes_, mtry, rng);
            trees_.push_back(std::move(tree));
        }
    }

    std::vector<double> predict_proba(const std::vector<double>& x) const override {
        check_query(x);
        std::vector<double> proba(static_cast<std::size_t>(n_classes_), 0.0);
        for (const auto& tree : trees_) {
            std::vector<double> p = tree.predict_proba(x);
            for (std::size_t c = 0; c < proba.size(); ++c)
                proba[c] += p[c];
        }
        for (auto& p : proba)
            p /= static_cast<double>(trees_.size());
        return proba;
    }

    const char* kind() const override { return "forest"; }

    void save(std::ostream& os) const override {
        os << n_classes_ << ' ' << n_features_ << ' ' << cfg_.n_trees << ' '
           << (cfg_.bootstrap ? 1 : 0) << ' ' << cfg_.mtry << ' ' << cfg_.seed << '\n';
        for (const auto& tree : trees_)
            tree.save(os);
    }

    void load(std::istream& is) override {
        n_classes_ = static_cast<int>(classicdetail::read_int(is));
        n_features_ = static_cast<int>(classicdetail::read_int(is));
        cfg_.n_trees = static_cast<int>(classicdetail::read_int(is));
        cfg_.bootstrap = classicdetail::read_int(is) != 0;
        cfg_.mtry = static_cast<int>(classicdetail::read_int(is));
        cfg_.seed = static_cast<std::uint64_t>(classicdetail::read_int(is));
        trees_.assign(static_cast<std::size_t>(cfg_.n_trees), DecisionTreeClassifier{});
        for (auto& tree : trees_)
            tree.load(is);
    }

    ForestConfig& config() { return cfg_; }
    const std::vector<DecisionTreeClassifier>& trees() const { return trees_; }

  private:
    ForestConfig cfg_;
    std::vector<DecisionTreeClassifier> trees_;
};

/// Linear discriminant analysis with a pooled within-class covariance
/// (ridge 1e-6 on the diagonal) and softmax posteriors over the
/// discriminant scores.
class LdaClassifier final : public Classifier {
  public:
    void fit(const FeatureRows& x, const std::vector<int>& y) override {
        classicdetail::check_training_input(x, y);
        n_classes_ = classicdetail::infer_n_classes(y);
        n_features_ = static_cast<int>(x.front().size());
        const std::size_t n = x.size();
        const auto d = static_cast<std::size_t>(n_features_);
        const auto c = static_cast<std::size_t>(n_classes_);
        if (n <= c)
            throw std::invalid_argument("lda: need more samples than classes");

        means_.assign(c, std::vector<double>(d, 0.0));
        std::vector<double> counts(c, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            counts[static_cast<std::size_t>(y[i])] += 1.0;
            for (std::size_t j = 0; j < d; ++j)
                means_[static_cast<std::size_t>(y[i])][j] += x[i][j];
        }
        log_priors_.assign(c, -1e300);
        for (std::size_t k = 0; k < c; ++k) {
            if (counts[k] == 0.0)
                continue;
            for (auto& m : means_[k])
                m /= counts[k];
            log_priors_[k] = std::log(counts[k] / static_cast<double>(n));
        }

        std::vector<std::vector<double>> sigma(d, std::vector<double>(d, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            const auto& mu = means_[static_cast<std::size_t>(y[i])];
            for (std::size_t r = 0; r < d; ++r) {
                double dr = x[i][r] - mu[r];
                for (std::size_t s = 0; s < d; ++s)
                    sigma[r][s] += dr * (x[i][s] - mu[s]);
            }
        }
        const double denom = static_cast<double>(n) - static_cast<double>(c);
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t s = 0; s < d; ++s)
                sigma[r][s] /= denom;
            sigma[r][r] += 1e-6;
        }

        // Cholesky factorization, then invert through the triangular factor.
        std::vector<std::vector<double>> chol(d, std::vector<double>(d, 0.0));
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t s = 0; s <= r; ++s) {
                double sum = sigma[r][s];
                for (std::size_t k = 0; k < s; ++k)
                    sum -= chol[r][k] * chol[s][k];
                if (r == s) {
                    if (sum <= 0.0)
                        throw std::runtime_error("lda: covariance not positive definite");
                    chol[r][r] = std::sqrt(sum);
                } else {
                    chol[r][s] = sum / chol[s][s];
                }
            }
        }
        precision_.assign(d, std::vector<double>(d, 0.0));
        std::vector<double> col(d);
        for (std::size_t j = 0; j < d; ++j) {
            std::fill(col.begin(), col.end(), 0.0);
            col[j] = 1.0;
            for (std::size_t r = 0; r < d; ++r) {  // forward solve L z = e_j
                double sum = col[r];
                for (std::size_t k = 0; k < r; ++k)
                    sum -= chol[r][k] * col[k];
                col[r] = sum / chol[r][r];
            }
            for (std::size_t ri = d; ri-- > 0;) {  // back solve L^T w = z
                double sum = col[ri];
                for (std::size_t k = ri + 1; k < d; ++k)
                    sum -= chol[k][ri] * col[k];
                col[ri] = sum / chol[ri][ri];
            }
            for (std::size_t r = 0; r < d; ++r)
                precision_[r][j] = col[r];
        }
    }

    std::vector<double> predict_proba(const std::vector<double>& x) const override {
        check_query(x);
        const auto d = static_cast<std::size_t>(n_features_);
        std::vector<double> scores(static_cast<std::size_t>(n_classes_));
        for (std::size_t k = 0; k < scores.size(); ++k) {
            if (log_priors_[k] <= -1e299) {
                scores[k] = -1e300;
                continue;
            }
            std::vector<double> w(d, 0.0);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t s = 0; s < d; ++s)
                    w[r] += precision_[r][s] * means_[k][s];
            scores[k] = classicdetail::dot(w, x) - 0.5 * classicdetail::dot(w, means_[k]) +
                        log_priors_[k];
        }
        double peak = *std::max_element(scores.begin(), scores.end());
        double total = 0.0;
        for (auto& s : scores) {
            s = std::exp(s - peak);
            total += s;
        }
        for (auto& s : scores)
            s /= total;
        return scores;
    }

    const char* kind() const override { return "lda"; }

    void save(std::ostream& os) const override {
        os << n_classes_ << ' ' << n_features_ << '\n';
        auto dump_row = [&](const std::vector<double>& row) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i)
                    os << ' ';
                classicdetail::write_double(os, row[i]);
            }
            os << '\n';
        };
        dump_row(log_priors_);
        for (const auto& m : means_)
            dump_row(m);
        for (const auto& r : precision_)
            dump_row(r);
    }

    void load(std::istream& is) override {
        n_classes_ = static_cast<int>(classicdetail::read_int(is));
        n_features_ = static_cast<int>(classicdetail::read_int(is));
        const auto c = static_cast<std::size_t>(n_classes_);
        const auto d = static_cast<std::size_t>(n_features_);
        log_priors_.resize(c);
        for (auto& v : log_priors_)
            v = classicdetail::read_double(is);
        means_.assign(c, std::vector<double>(d));
        for (auto& m : means_)
            for (auto& v : m)
                v = classicdetail::read_double(is);
        precision_.assign(d, std::vector<double>(d));
        for (auto& r : precision_)
            for (auto& v : r)
                v = classicdetail::read_double(is);
    }

  private:
    std::vector<std::vector<double>> means_;
    std::vector<double> log_priors_;
    std::vector<std::vector<double>> precision_;
};

enum class SvmKernel { linear, rbf };

struct SvmConfig {
    SvmKernel kernel = SvmKernel::rbf;
    double c = 1.0;
    double gamma = 0.0;  // 0 = 1/d
    int max_epochs = 1000;
    double tol = 1e-10;
};

/// One-vs-rest soft-margin SVM trained by dual coordinate ascent. The bias is
/// folded into the kernel as K(x,z)+1, so each binary problem is purely
/// box-constrained.
class SvmClassifier final : public Classifier {
  public:
    explicit SvmClassifier(SvmConfig cfg = {}) : cfg_(cfg) {
        if (cfg.c <= 0.0)
            throw std::invalid_argument("svm: need C > 0");
    }

    void fit(const FeatureRows& x, const std::vector<int>& y) override {
        classicdetail::check_training_input(x, y);
        n_classes_ = classicdetail::infer_n_classes(y);
        n_features_ = static_cast<int>(x.front().size());
        gamma_ = cfg_.gamma > 0.0 ? cfg_.gamma : 1.0 / static_cast<double>(n_features_);
        support_ = x;
        const std::size_t n = x.size();

        std::vector<std::vector<double>> gram(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double k = kernel(x[i], x[j]) + 1.0;
                gram[i][j] = k;
                gram[j][i] = k;
            }

        beta_.assign(static_cast<std::size_t>(n_classes_), std::vector<double>(n, 0.0));
        for (int cls = 0; cls < n_classes_; ++cls) {
            std::vector<double> sign(n);
            for (std::size_t i = 0; i < n; ++i)
                sign[i] = y[i] == cls ? 1.0 : -1.0;
            std::vector<double> alpha(n, 0.0), decision(n, 0.0);
            for (int epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
                double max_step = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double grad = 1.0 - sign[i] * decision[i];
                    double next = std::clamp(alpha[i] + grad / gram[i][i], 0.0, cfg_.c);
                    double step = next - alpha[i];
                    if (step == 0.0)
                        continue;
                    alpha[i] = next;
                    max_step = std::max(max_step, std::abs(step));
                    for (std::size_t j = 0; j < n; ++j)
                        decision[j] += step * sign[i] * gram[i][j];
                }
                if (max_step < cfg_.tol)
                    break;
            }
            for (std::size_t i = 0; i < n; ++i)
                beta_[static_cast<std::size_t>(cls)][i] = alpha[i] * sign[i];
        }
    }

    std::vector<double> predict_scores(const std::vector<double>& x) const override {
        return decision_values(x);
    }

    std::vector<double> decision_values(const std::vector<double>& x) const {
        check_query(x);
        const std::size_t n = support_.size();
        std::vector<double> kvec(n);
        for (std::size_t i = 0; i < n; ++i)
            kvec[i] = kernel(support_[i], x) + 1.0;
        std::vector<double> scores(static_cast<std::size_t>(n_classes_), 0.0);
        for (std::size_t cls = 0; cls < scores.size(); ++cls)
            scores[cls] = classicdetail::dot(beta_[cls], kvec);
        return scores;
    }

    std::vector<double> predict_proba(const std::vector<double>& x) const override {
        std::vector<double> scores = decision_values(x);
        double peak = *std::max_element(scores.begin(), scores.end());
        double total = 0.0;
        for (auto& s : scores) {
            s = std::exp(s - peak);
            total += s;
        }
        for (auto& s : scores)
            s /= total;
        return scores;
    }

    const char* kind() const override {
        return cfg_.kernel == SvmKernel::linear ? "svm_linear" : "svm_rbf";
    }

    void save(std::ostream& os) const override {
        os << (cfg_.kernel == SvmKernel::linear ? 0 : 1) << ' ';
        classicdetail::write_double(os, cfg_.c);
        os << ' ';
        classicdetail::write_double(os, gamma_);
        os << ' ' << n_classes_ << ' ' << n_features_ << ' ' << support_.size() << '\n';
        for (const auto& row : support_) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i)
                    os << ' ';
                classicdetail::write_double(os, row[i]);
            }
            os << '\n';
        }
        for (const auto& b : beta_) {
            for (std::size_t i = 0; i < b.size(); ++i) {
                if (i)
                    os << ' ';
                classicdetail::write_double(os, b[i]);
            }
            os << '\n';
        }
    }

    void load(std::istream& is) override {
        cfg_.kernel = classicdetail::read_int(is) == 0 ? SvmKernel::linear : SvmKernel::rbf;
        cfg_.c = classicdetail::read_double(is);
        gamma_ = classicdetail::read_double(is);
        n_classes_ = static_cast<int>(classicdetail::read_int(is));
        n_features_ = static_cast<int>(classicdetail::read_int(is));
        auto n = static_cast<std::size_t>(classicdetail::read_int(is));
        support_.assign(n, std::vector<double>(static_cast<std::size_t>(n_features_)));
        for (auto& row : support_)
            for (auto& v : row)
                v = classicdetail::read_double(is);
        beta_.assign(static_cast<std::size_t>(n_classes_), std::vector<double>(n));
        for (auto& b : beta_)
            for (auto& v : b)
                v = classicdetail::read_double(is);
    }

    SvmConfig& config() { return cfg_; }

  private:
    double kernel(const std::vector<double>& a, const std::vector<double>& b) const {
        if (cfg_.kernel == SvmKernel::linear)
            return classicdetail::dot(a, b);
        return std::exp(-gamma_ * classicdetail::sq_dist(a, b));
    }

    SvmConfig cfg_;
    double gamma_ = 0.0;
    FeatureRows support_;
    std::vector<std::vector<double>> beta_;
};

inline constexpr const char* kModelMagic = "RFAFFECT-MODEL-v1";

inline std::unique_ptr<Classifier> make_classifier(const std::string& kind) {
    if (kind == "knn")
        return std::make_unique<KnnClassifier>();
    if (kind == "tree")
        return std::make_unique<DecisionTreeClassifier>();
    if (kind == "forest")
        return std::make_unique<RandomForestClassifier>();
    if (kind == "lda")
        return std::make_unique<LdaClassifier>();
    if (kind == "svm_linear")
        return std::make_unique<SvmClassifier>(SvmConfig{SvmKernel::linear, 1.0, 0.0, 1000, 1e-10});
    if (kind == "svm_rbf")
        return std::make_unique<SvmClassifier>();
    throw std::invalid_argument("unknown classifier kind '" + kind + "'");
}

inline void save_model(std::ostream& os, const Classifier& model) {
    os << kModelMagic << '\n' << model.kind() << '\n';
    model.save(os);
}

inline std::unique_ptr<Classifier> load_model(std::istream& is) {
    std::string magic, kind;
    if (!std::getline(is, magic) || magic != kModelMagic)
        throw std::runtime_error("model load: bad magic line");
    if (!std::getline(is, kind))
        throw std::runtime_error("model load: missing kind line");
    auto model = make_classifier(kind);
    model->load(is);
    return model;
}

}  // namespace rfaffect
