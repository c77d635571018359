#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "codestylo/common.hpp"
#include "codestylo/taxonomy.hpp"

namespace stylo {

struct BoostParams {
    int num_rounds = 200;
    double learning_rate = 0.1;
    int max_depth = 6;
    double lambda = 1.0;  // L2 on leaf weights
    double gamma = 0.0;   // minimum split gain
    double min_child_weight = 1.0;
    std::uint64_t seed = 0;
};

// A regression tree stored as a flat node array. Leaves have feature == -1
// and carry the weight; internal nodes route x[feature] < threshold left.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;
    double cover = 0.0;  // sum of hessians reaching this node during training
    double gain = 0.0;   // split gain (internal nodes only)
};

struct Tree {
    std::vector<TreeNode> nodes;

    double score(const std::vector<double>& x) const {
        int idx = 0;
        while (nodes[idx].feature >= 0) {
            const TreeNode& n = nodes[idx];
            idx = x[n.feature] < n.threshold ? n.left : n.right;
        }
        return nodes[idx].weight;
    }
};

struct TreeEnsemble {
    std::vector<Tree> trees;
    double base_score = 0.0;  // initial log-odds
    BoostParams params;
    std::vector<std::string> feature_names;
    std::string taxonomy_hash;
    std::vector<double> train_loss;  // mean logistic loss after each round

    double margin(const std::vector<double>& x) const {
        if (x.size() != feature_names.size())
            throw Error("predict: expected " + std::to_string(feature_names.size()) +
                        " features, got " + std::to_string(x.size()));
        double m = base_score;
        for (const auto& t : trees) m += t.score(x);
        return m;
    }

    double probability(const std::vector<double>& x) const {
        return 1.0 / (1.0 + std::exp(-margin(x)));
    }
};

namespace boostdetail {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = -std::numeric_limits<double>::infinity();
};

inline double leaf_objective(double g, double h, double lambda) {
    return g * g / (h + lambda);
}

// Exact greedy split search over all (feature, midpoint-threshold) candidates
// for the given row set. Ties resolved to the lowest feature index, then the
// lowest threshold.
inline SplitChoice best_split(const std::vector<std::vector<double>>& X,
                              const std::vector<double>& grad,
                              const std::vector<double>& hess,
                              const std::vector<int>& rows,
                              const BoostParams& p) {
    SplitChoice best;
    double g_total = 0.0, h_total = 0.0;
    for (int r : rows) {
        g_total += grad[r];
        h_total += hess[r];
    }
    double parent = leaf_objective(g_total, h_total, p.lambda);
    std::size_t nfeat = X.empty() ? 0 : X[0].size();
    std::vector<std::pair<double, int>> vals;
    for (std::size_t f = 0; f < nfeat; ++f) {
        vals.clear();
        for (int r : rows) vals.emplace_back(X[r][f], r);
        std::sort(vals.begin(), vals.end());
        double g_left = 0.0, h_left = 0.0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            g_left += grad[vals[i].second];
            h_left += hess[vals[i].second];
            if (vals[i].first == vals[i + 1].first) continue;
            double h_right = h_total - h_left;
            if (h_left < p.min_child_weight || h_right < p.min_child_weight) continue;
            double g_right = g_total - g_left;
            double gain = 0.5 * (leaf_objective(g_left, h_left, p.lambda) +
                                 leaf_objective(g_right, h_right, p.lambda) - parent) -
                          p.gamma;
            if (gain <= 0.0) continue;
            double threshold = (vals[i].first + vals[i + 1].first) / 2.0;
            bool better = gain > best.gain;
            if (!better && gain == best.gain) {
                better = static_cast<int>(f) < best.feature ||
                         (static_cast<int>(f) == best.feature && threshold < best.threshold);
            }
            if (better) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = threshold;
                best.gain = gain;
            }
        }
    }
    return best;
}

inline int grow(Tree& tree, const std::vector<std::vector<double>>& X,
                const std::vector<double>& grad, const std::vector<double>& hess,
                std::vector<int> rows, int depth, const BoostParams& p) {
    double g = 0.0, h = 0.0;
    for (int r : rows) {
        g += grad[r];
        h += hess[r];
    }
    SplitChoice split;
    if (depth < p.max_depth) split = best_split(X, grad, hess, rows, p);
    int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[idx].cover = h;
    if (!split.found) {
        tree.nodes[idx].weight = -g / (h + p.lambda) * p.learning_rate;
        return idx;
    }
    std::vector<int> left_rows, right_rows;
    for (int r : rows) {
        (X[r][split.feature] < split.threshold ? left_rows : right_rows).push_back(r);
    }
    tree.nodes[idx].feature = split.feature;
    tree.nodes[idx].threshold = split.threshold;
    tree.nodes[idx].gain = split.gain;
    int l = grow(tree, X, grad, hess, std::move(left_rows), depth + 1, p);
    int r = grow(tree, X, grad, hess, std::move(right_rows), depth + 1, p);
    tree.nodes[idx].left = l;
    tree.nodes[idx].right = r;
    return idx;
}

}  // namespace boostdetail

// Second-order gradient boosting on the logistic loss. Deterministic for a
// fixed input order; no subsampling.
inline TreeEnsemble train(const std::vector<std::vector<double>>& X,
                          const std::vector<int>& labels, const BoostParams& params,
                          std::vector<std::string> feature_names = {},
                          std::string taxonomy_hash_value = "") {
    if (X.size() != labels.size() || X.size() < 2)
        throw Error("train: need at least 2 rows with matching labels");
    int pos = 0;
    for (int y : labels) pos += y;
    if (pos == 0 || pos == static_cast<int>(labels.size()))
        throw Error("train: both classes must be present");
    std::size_t nfeat = X[0].size();
    for (const auto& row : X) {
        if (row.size() != nfeat) throw Error("train: ragged feature matrix");
        for (double v : row) {
            if (std::isnan(v)) throw Error("train: NaN feature value");
        }
    }
    if (feature_names.empty()) {
        for (std::size_t f = 0; f < nfeat; ++f) feature_names.push_back("f" + std::to_string(f));
    }
    if (feature_names.size() != nfeat) throw Error("train: feature name count mismatch");

    TreeEnsemble ens;
    ens.params = params;
    ens.feature_names = std::move(feature_names);
    ens.taxonomy_hash = std::move(taxonomy_hash_value);
    double prevalence = static_cast<double>(pos) / labels.size();
    ens.base_score = std::log(prevalence / (1.0 - prevalence));

    std::size_t n = X.size();
    std::vector<double> margin(n, ens.base_score), grad(n), hess(n);
    std::vector<int> all_rows(n);
    for (std::size_t i = 0; i < n; ++i) all_rows[i] = static_cast<int>(i);

    for (int round = 0; round < params.num_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            double p = 1.0 / (1.0 + std::exp(-margin[i]));
            grad[i] = p - labels[i];
            hess[i] = p * (1.0 - p);
        }
        Tree tree;
        boostdetail::grow(tree, X, grad, hess, all_rows, 0, params);
        ens.trees.push_back(tree);
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            margin[i] += tree.score(X[i]);
            // numerically stable logistic loss
            double m = margin[i];
            double l = m > 0 ? std::log1p(std::exp(-m)) + (1 - labels[i]) * m
                             : std::log1p(std::exp(m)) - labels[i] * m;
            loss += l;
        }
        ens.train_loss.push_back(loss / n);
    }
    return ens;
}

inline double predict_margin(const TreeEnsemble& ens, const std::vector<double>& x) {
    return ens.margin(x);
}

inline nlohmann::json to_json(const TreeEnsemble& ens) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : ens.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes) {
            nodes.push_back({{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"weight", n.weight},
                             {"cover", n.cover},
                             {"gain", n.gain}});
        }
        trees.push_back({{"nodes", nodes}});
    }
    return nlohmann::json{
        {"params",
         {{"num_rounds", ens.params.num_rounds},
          {"learning_rate", ens.params.learning_rate},
          {"max_depth", ens.params.max_depth},
          {"lambda", ens.params.lambda},
          {"gamma", ens.params.gamma},
          {"min_child_weight", ens.params.min_child_weight},
          {"seed", ens.params.seed}}},
        {"base_score", ens.base_score},
        {"feature_names", ens.feature_names},
        {"taxonomy_hash", ens.taxonomy_hash},
        {"trees", trees}};
}

inline TreeEnsemble ensemble_from_json(const nlohmann::json& j) {
    TreeEnsemble ens;
    try {
        const auto& p = j.at("params");
        ens.params.num_rounds = p.at("num_rounds").get<int>();
        ens.params.learning_rate = p.at("learning_rate").get<double>();
        ens.params.max_depth = p.at("max_depth").get<int>();
        ens.params.lambda = p.at("lambda").get<double>();
        ens.params.gamma = p.at("gamma").get<double>();
        ens.params.min_child_weight = p.at("min_child_weight").get<double>();
        ens.params.seed = p.at("seed").get<std::uint64_t>();
        ens.base_score = j.at("base_score").get<double>();
        ens.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        ens.taxonomy_hash = j.at("taxonomy_hash").get<std::string>();
        for (const auto& jt : j.at("trees")) {
            Tree t;
            for (const auto& jn : jt.at("nodes")) {
                TreeNode n;
                n.feature = jn.at("feature").get<int>();
                n.threshold = jn.at("threshold").get<double>();
                n.left = jn.at("left").get<int>();
                n.right = jn.at("right").get<int>();
                n.weight = jn.at("weight").get<double>();
                n.cover = jn.at("cover").get<double>();
                n.gain = jn.value("gain", 0.0);
                t.nodes.push_back(n);
            }
            if (t.nodes.empty()) throw Error("model tree with no nodes");
            ens.trees.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("corrupt model file: ") + e.what());
    }
    return ens;
}

inline void save(const TreeEnsemble& ens, const std::string& path) {
    write_file(path, to_json(ens).dump(1) + "\n");
}

// Loads a model; unless `force`, refuses a taxonomy hash that differs from
// the current feature configuration (column drift guard).
inline TreeEnsemble load(const std::string& path, bool force = false) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("corrupt model file '" + path + "': " + e.what());
    }
    TreeEnsemble ens = ensemble_from_json(j);
    if (!force && !ens.taxonomy_hash.empty() && ens.taxonomy_hash != taxonomy_hash())
        throw Error("model taxonomy hash " + ens.taxonomy_hash +
                    " does not match current configuration " + taxonomy_hash() +
                    "; refusing to load (use force to override)");
    return ens;
}

}  // namespace stylo
