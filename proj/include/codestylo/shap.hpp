#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "codestylo/common.hpp"
#include "codestylo/model.hpp"

namespace stylo {

struct Explanation {
    double base_value = 0.0;  // expected margin over the background set
    double fx = 0.0;          // margin at x
    std::vector<double> phi;  // per-feature, aligned with ensemble.feature_names

    // feature indices sorted by |phi| descending, ties by feature index
    std::vector<int> ordering() const {
        std::vector<int> idx(phi.size());
        for (std::size_t i = 0; i < phi.size(); ++i) idx[i] = static_cast<int>(i);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return std::fabs(phi[a]) > std::fabs(phi[b]);
        });
        return idx;
    }
};

namespace shapdetail {

// One entry of the path-subset bookkeeping in the TreeSHAP recursion.
struct PathElem {
    int feature = -1;
    double zero_fraction = 1.0;  // proportion flowing through when excluded
    double one_fraction = 1.0;   // 1 if x follows this split, else 0
    double pweight = 1.0;
};

inline void extend(std::vector<PathElem>& m, double pz, double po, int pi) {
    int l = static_cast<int>(m.size());
    m.push_back({pi, pz, po, l == 0 ? 1.0 : 0.0});
    for (int i = l - 1; i >= 0; --i) {
        m[i + 1].pweight += po * m[i].pweight * (i + 1) / (l + 1);
        m[i].pweight = pz * m[i].pweight * (l - i) / (l + 1);
    }
}

inline void unwind(std::vector<PathElem>& m, int i) {
    int l = static_cast<int>(m.size()) - 1;
    double n = m[l].pweight;
    double one = m[i].one_fraction, zero = m[i].zero_fraction;
    for (int j = l - 1; j >= 0; --j) {
        if (one != 0.0) {
            double t = m[j].pweight;
            m[j].pweight = n * (l + 1) / ((j + 1) * one);
            n = t - m[j].pweight * zero * (l - j) / (l + 1);
        } else {
            m[j].pweight = zero != 0.0 ? m[j].pweight * (l + 1) / (zero * (l - j)) : 0.0;
        }
    }
    for (int j = i; j < l; ++j) {
        m[j].feature = m[j + 1].feature;
        m[j].zero_fraction = m[j + 1].zero_fraction;
        m[j].one_fraction = m[j + 1].one_fraction;
    }
    m.pop_back();
}

inline double unwound_sum(const std::vector<PathElem>& m, int i) {
    int l = static_cast<int>(m.size()) - 1;
    double one = m[i].one_fraction, zero = m[i].zero_fraction;
    double total = 0.0;
    double n = m[l].pweight;
    for (int j = l - 1; j >= 0; --j) {
        if (one != 0.0) {
            double tmp = n * (l + 1) / ((j + 1) * one);
            total += tmp;
            n = m[j].pweight - tmp * zero * (l - j) / (l + 1);
        } else if (zero != 0.0) {
            total += m[j].pweight * (l + 1) / (zero * (l - j));
        }
    }
    return total;
}

// Number of background rows reaching every node of the tree.
inline std::vector<double> background_covers(const Tree& tree,
                                             const std::vector<std::vector<double>>& background) {
    std::vector<double> cover(tree.nodes.size(), 0.0);
    for (const auto& z : background) {
        int idx = 0;
        while (true) {
            cover[idx] += 1.0;
            const TreeNode& n = tree.nodes[idx];
            if (n.feature < 0) break;
            idx = z[n.feature] < n.threshold ? n.left : n.right;
        }
    }
    return cover;
}

inline void recurse(const Tree& tree, const std::vector<double>& cover,
                    const std::vector<double>& x, std::vector<double>& phi, int node,
                    std::vector<PathElem> m, double pz, double po, int pi) {
    extend(m, pz, po, pi);
    const TreeNode& n = tree.nodes[node];
    if (n.feature < 0) {
        for (int i = 1; i < static_cast<int>(m.size()); ++i) {
            double w = unwound_sum(m, i);
            phi[m[i].feature] += w * (m[i].one_fraction - m[i].zero_fraction) * n.weight;
        }
        return;
    }
    int hot = x[n.feature] < n.threshold ? n.left : n.right;
    int cold = hot == n.left ? n.right : n.left;
    double iz = 1.0, io = 1.0;
    int found = -1;
    for (int k = 1; k < static_cast<int>(m.size()); ++k) {
        if (m[k].feature == n.feature) { found = k; break; }
    }
    if (found >= 0) {
        iz = m[found].zero_fraction;
        io = m[found].one_fraction;
        unwind(m, found);
    }
    double denom = cover[node];
    double hot_frac = denom > 0.0 ? cover[hot] / denom : 0.0;
    double cold_frac = denom > 0.0 ? cover[cold] / denom : 0.0;
    recurse(tree, cover, x, phi, hot, m, iz * hot_frac, io, n.feature);
    recurse(tree, cover, x, phi, cold, m, iz * cold_frac, 0.0, n.feature);
}

inline double expected_value(const Tree& tree, const std::vector<double>& cover) {
    double total = 0.0;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (tree.nodes[i].feature < 0) total += cover[i] * tree.nodes[i].weight;
    }
    return cover[0] > 0.0 ? total / cover[0] : 0.0;
}

}  // namespace shapdetail

// Exact path-dependent tree-Shapley values; conditioning distribution is the
// background matrix routed down each tree. Positive phi pushes the margin
// toward the ai class.
inline Explanation shap_values_precomputed(const TreeEnsemble& ens,
                                           const std::vector<double>& x,
                                           const std::vector<std::vector<double>>& covers) {
    if (x.size() != ens.feature_names.size())
        throw Error("shap_values: feature count mismatch");
    Explanation ex;
    ex.phi.assign(x.size(), 0.0);
    ex.base_value = ens.base_score;
    ex.fx = ens.margin(x);
    for (std::size_t t = 0; t < ens.trees.size(); ++t) {
        const Tree& tree = ens.trees[t];
        ex.base_value += shapdetail::expected_value(tree, covers[t]);
        if (tree.nodes[0].feature < 0) continue;  // constant tree: no attribution
        shapdetail::recurse(tree, covers[t], x, ex.phi, 0, {}, 1.0, 1.0, -1);
    }
    return ex;
}

inline std::vector<std::vector<double>> ensemble_covers(
    const TreeEnsemble& ens, const std::vector<std::vector<double>>& background) {
    if (background.empty()) throw Error("shap_values: empty background set");
    std::vector<std::vector<double>> covers;
    covers.reserve(ens.trees.size());
    for (const auto& tree : ens.trees)
        covers.push_back(shapdetail::background_covers(tree, background));
    return covers;
}

inline Explanation shap_values(const TreeEnsemble& ens, const std::vector<double>& x,
                               const std::vector<std::vector<double>>& background) {
    return shap_values_precomputed(ens, x, ensemble_covers(ens, background));
}

struct SummaryReport {
    // (feature index, mean |phi|), sorted descending, ties by feature name
    std::vector<std::pair<int, double>> ranking;
    // per-instance (feature index, feature value, phi) triples for plotting
    std::vector<std::vector<std::pair<double, double>>> points;  // [feature][instance]
};

inline SummaryReport summarize(const TreeEnsemble& ens,
                               const std::vector<std::vector<double>>& matrix,
                               const std::vector<std::vector<double>>& background) {
    if (matrix.empty()) throw Error("summarize: empty matrix");
    std::size_t nfeat = ens.feature_names.size();
    SummaryReport report;
    report.points.assign(nfeat, {});
    std::vector<double> mean_abs(nfeat, 0.0);
    auto covers = ensemble_covers(ens, background);
    for (const auto& row : matrix) {
        Explanation ex = shap_values_precomputed(ens, row, covers);
        double recon = ex.base_value;
        for (double p : ex.phi) recon += p;
        if (std::fabs(recon - ex.fx) > 1e-6)
            throw Error("summarize: local accuracy violated");
        for (std::size_t f = 0; f < nfeat; ++f) {
            mean_abs[f] += std::fabs(ex.phi[f]);
            report.points[f].emplace_back(row[f], ex.phi[f]);
        }
    }
    for (std::size_t f = 0; f < nfeat; ++f) {
        mean_abs[f] /= static_cast<double>(matrix.size());
        report.ranking.emplace_back(static_cast<int>(f), mean_abs[f]);
    }
    std::sort(report.ranking.begin(), report.ranking.end(),
              [&](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  return ens.feature_names[a.first] < ens.feature_names[b.first];
              });
    return report;
}

struct WaterfallRow {
    std::string name;  // feature name or "other features" aggregate
    double value = 0.0;
    double phi = 0.0;
    int aggregated = 0;  // number of features folded into this row
};

// Top-k features by |phi| plus one aggregate remainder, ordered ascending by
// |phi| (aggregate first) as in the usual waterfall presentation.
inline std::vector<WaterfallRow> waterfall(const Explanation& ex,
                                           const std::vector<std::string>& names,
                                           const std::vector<double>& x, int top_k) {
    if (top_k < 1) throw Error("waterfall: top_k must be >= 1");
    auto order = ex.ordering();
    int shown = std::min<int>(top_k, static_cast<int>(order.size()));
    std::vector<WaterfallRow> rows;
    if (shown < static_cast<int>(order.size())) {
        WaterfallRow rest;
        rest.aggregated = static_cast<int>(order.size()) - shown;
        rest.name = std::to_string(rest.aggregated) + " other features";
        for (int i = shown; i < static_cast<int>(order.size()); ++i)
            rest.phi += ex.phi[order[i]];
        rows.push_back(std::move(rest));
    }
    for (int i = shown - 1; i >= 0; --i) {
        int f = order[i];
        rows.push_back({names[f], x[f], ex.phi[f], 0});
    }
    return rows;
}

// Secondary, model-internal importance: total split gain per feature. Not
// comparable with the Shapley ranking and reported separately.
inline std::vector<std::pair<int, double>> gain_importance(const TreeEnsemble& ens) {
    std::map<int, double> totals;
    for (const auto& tree : ens.trees) {
        for (const auto& n : tree.nodes) {
            if (n.feature >= 0) totals[n.feature] += n.gain;
        }
    }
    std::vector<std::pair<int, double>> out;
    for (const auto& [f, g] : totals) out.emplace_back(f, g);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

inline nlohmann::json explanation_to_json(const Explanation& ex,
                                          const std::vector<std::string>& names,
                                          const std::string& id) {
    nlohmann::json phi = nlohmann::json::object();
    for (std::size_t i = 0; i < names.size(); ++i) phi[names[i]] = ex.phi[i];
    double recon = ex.base_value;
    for (double p : ex.phi) recon += p;
    return nlohmann::json{{"id", id},
                          {"base_value", ex.base_value},
                          {"fx", ex.fx},
                          {"local_accuracy_gap", std::fabs(recon - ex.fx)},
                          {"phi", phi}};
}

}  // namespace stylo
