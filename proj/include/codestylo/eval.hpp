#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "codestylo/common.hpp"
#include "codestylo/corpus.hpp"
#include "codestylo/features.hpp"
#include "codestylo/metrics.hpp"
#include "codestylo/model.hpp"
#include "codestylo/rng.hpp"
#include "codestylo/shap.hpp"

namespace stylo {

enum class FeatureSet { all, non_gameable, no_halstead, ngram2, ngram3 };
enum class Subset { full, correct_only, random_matched, easy, medium, hard };

inline std::string to_string(FeatureSet fs) {
    switch (fs) {
        case FeatureSet::all: return "all";
        case FeatureSet::non_gameable: return "non-gameable";
        case FeatureSet::no_halstead: return "no-halstead";
        case FeatureSet::ngram2: return "ngram2";
        default: return "ngram3";
    }
}

inline FeatureSet feature_set_from_string(const std::string& s) {
    if (s == "all") return FeatureSet::all;
    if (s == "non-gameable") return FeatureSet::non_gameable;
    if (s == "no-halstead") return FeatureSet::no_halstead;
    if (s == "ngram2") return FeatureSet::ngram2;
    if (s == "ngram3") return FeatureSet::ngram3;
    throw Error("invalid feature set '" + s +
                "' (choices: all, non-gameable, no-halstead, ngram2, ngram3)");
}

inline std::string to_string(Subset s) {
    switch (s) {
        case Subset::full: return "full";
        case Subset::correct_only: return "correct-only";
        case Subset::random_matched: return "random-matched";
        case Subset::easy: return "easy";
        case Subset::medium: return "medium";
        default: return "hard";
    }
}

inline Subset subset_from_string(const std::string& s) {
    if (s == "full") return Subset::full;
    if (s == "correct-only") return Subset::correct_only;
    if (s == "random-matched") return Subset::random_matched;
    if (s == "easy") return Subset::easy;
    if (s == "medium") return Subset::medium;
    if (s == "hard") return Subset::hard;
    throw Error("invalid subset '" + s +
                "' (choices: full, correct-only, random-matched, easy, medium, hard)");
}

// The two features trivially alterable without changing code structure.
inline const std::vector<std::string>& gameable_features() {
    static const std::vector<std::string> names = {"emptyLinesDensity", "whiteSpaceRatio"};
    return names;
}

inline const std::vector<std::string>& halstead_features() {
    static const std::vector<std::string> names = {
        "numberOfDistinctOperands", "numberOfDistinctOperators",
        "totalNumberOfOperands", "totalNumberOfOperators"};
    return names;
}

// Token-stream-derived feature rows, used alongside n-grams in the baseline.
inline std::vector<std::string> lexical_feature_names() {
    std::vector<std::string> names = {"avgIdentifierLength", "keywordsDensity",
                                      "numKeywordsDensity", "numLiteralsDensity"};
    for (const auto& kw : feature_keywords()) names.push_back(kw + "_Density");
    for (const auto& h : halstead_features()) names.push_back(h);
    return names;
}

struct FoldPlan {
    int k = 0;
    std::map<std::string, int> assignments;  // problem_id -> fold index
};

// Seeded shuffle of the distinct problem ids followed by round-robin
// assignment. Fold sizes differ by at most one problem.
inline FoldPlan group_kfold(const std::vector<std::string>& problem_ids, int k,
                            std::uint64_t seed) {
    std::set<std::string> distinct(problem_ids.begin(), problem_ids.end());
    if (k < 2 || k > static_cast<int>(distinct.size()))
        throw Error("group_kfold: k must be in [2, distinct problems]; k=" +
                    std::to_string(k) + ", problems=" + std::to_string(distinct.size()));
    std::vector<std::string> order(distinct.begin(), distinct.end());
    Rng rng(Rng::derive(seed, "group_kfold"));
    rng.shuffle(order);
    FoldPlan plan;
    plan.k = k;
    for (std::size_t i = 0; i < order.size(); ++i)
        plan.assignments[order[i]] = static_cast<int>(i % k);
    return plan;
}

struct ExperimentConfig {
    FeatureSet feature_set = FeatureSet::all;
    Subset subset = Subset::full;
    int k = 10;
    std::uint64_t seed = 0;
    BoostParams boost;
    bool with_summary = true;  // SHAP summary of the full-data refit
};

struct EvalReport {
    ExperimentConfig config;
    std::vector<MetricsRow> folds;
    MetricsRow mean;
    MetricsRow naive;  // analytic random-guess baseline on the same records
    std::vector<std::pair<std::string, double>> shap_ranking;  // name, mean |phi|
    std::vector<std::string> feature_names;
    int num_records = 0;
    int num_problems = 0;
};

// Analytic random-guess baseline: guessing each class with probability 1/2
// gives recall 1/2 and precision equal to the positive prevalence (0.5 on
// balanced data). AUC is undefined and left absent.
inline MetricsRow naive_baseline_row(const std::vector<int>& labels) {
    if (labels.empty()) throw Error("naive baseline: empty labels");
    double pos = 0.0;
    for (int y : labels) pos += y;
    double prevalence = pos / labels.size();
    MetricsRow m;
    m.accuracy = 0.5;
    m.precision = prevalence;
    m.recall = 0.5;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.auc_roc = std::nullopt;
    return m;
}

namespace evaldetail {

inline MetricsRow mean_row(const std::vector<MetricsRow>& rows) {
    MetricsRow mean;
    if (rows.empty()) return mean;
    double auc_sum = 0.0;
    int auc_count = 0;
    for (const auto& r : rows) {
        mean.accuracy += r.accuracy;
        mean.precision += r.precision;
        mean.recall += r.recall;
        mean.f1 += r.f1;
        if (r.auc_roc) {
            auc_sum += *r.auc_roc;
            ++auc_count;
        }
    }
    double n = static_cast<double>(rows.size());
    mean.accuracy /= n;
    mean.precision /= n;
    mean.recall /= n;
    mean.f1 /= n;
    if (auc_count > 0) mean.auc_roc = auc_sum / auc_count;
    return mean;
}

// Applies the subset filter from the experiment config.
inline Corpus select_subset(const Corpus& corpus, Subset subset, std::uint64_t seed) {
    switch (subset) {
        case Subset::full:
            return corpus;
        case Subset::correct_only:
            return filter_correct(corpus, seed);
        case Subset::easy:
        case Subset::medium:
        case Subset::hard: {
            if (!corpus.has_bins())
                throw Error("difficulty subset requires binned corpus (run bin_difficulty)");
            int want = subset == Subset::easy ? 0 : subset == Subset::medium ? 1 : 2;
            Corpus out;
            out.difficulty_bins = corpus.difficulty_bins;
            out.num_bins = corpus.num_bins;
            for (const auto& r : corpus.records) {
                if (corpus.difficulty_bins.at(r.problem_id) == want) out.records.push_back(r);
            }
            return out;
        }
        case Subset::random_matched: {
            // Match the correct-only subset's per-bin problem counts, then one
            // human and one ai solution per sampled problem (seeded).
            if (!corpus.has_bins())
                throw Error("random-matched subset requires binned corpus");
            Corpus correct = filter_correct(corpus, seed);
            std::map<int, std::set<std::string>> correct_problems, all_problems;
            for (const auto& r : correct.records)
                correct_problems[corpus.difficulty_bins.at(r.problem_id)].insert(r.problem_id);
            std::map<std::string, std::vector<std::size_t>> humans, ais;
            for (std::size_t i = 0; i < corpus.records.size(); ++i) {
                const auto& r = corpus.records[i];
                (r.label == Label::human ? humans : ais)[r.problem_id].push_back(i);
            }
            for (const auto& [pid, bin] : corpus.difficulty_bins) {
                if (humans.count(pid) && ais.count(pid)) all_problems[bin].insert(pid);
            }
            Rng rng(Rng::derive(seed, "random_matched"));
            Corpus out;
            out.difficulty_bins = corpus.difficulty_bins;
            out.num_bins = corpus.num_bins;
            std::set<std::size_t> chosen;
            for (const auto& [bin, want_set] : correct_problems) {
                std::vector<std::string> pool(all_problems[bin].begin(),
                                              all_problems[bin].end());
                std::size_t want = std::min(want_set.size(), pool.size());
                rng.shuffle(pool);
                for (std::size_t i = 0; i < want; ++i) {
                    const auto& h = humans[pool[i]];
                    const auto& a = ais[pool[i]];
                    chosen.insert(h[rng.uniform_below(h.size())]);
                    chosen.insert(a[rng.uniform_below(a.size())]);
                }
            }
            for (std::size_t i = 0; i < corpus.records.size(); ++i) {
                if (chosen.count(i)) out.records.push_back(corpus.records[i]);
            }
            return out;
        }
    }
    throw Error("unreachable subset");
}

// Column indices of the canonical layout kept by a stylometry feature set.
inline std::vector<int> selected_columns(FeatureSet fs) {
    const auto& names = canonical_feature_names();
    std::set<std::string> drop;
    if (fs == FeatureSet::non_gameable)
        drop.insert(gameable_features().begin(), gameable_features().end());
    if (fs == FeatureSet::no_halstead)
        drop.insert(halstead_features().begin(), halstead_features().end());
    std::vector<int> cols;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (!drop.count(names[i])) cols.push_back(static_cast<int>(i));
    }
    return cols;
}

}  // namespace evaldetail

// Runs one grouped cross-validation experiment over a stylometry feature set
// (all / non-gameable / no-halstead) or an n-gram baseline (ngram2 / ngram3,
// n-gram vocabulary rebuilt from each training fold).
inline EvalReport run_experiment(const Corpus& input, const ExperimentConfig& config) {
    Corpus corpus = evaldetail::select_subset(input, config.subset, config.seed);
    if (corpus.records.empty()) throw Error("experiment subset selected no records");

    bool is_ngram = config.feature_set == FeatureSet::ngram2 ||
                    config.feature_set == FeatureSet::ngram3;
    int ngram_n = config.feature_set == FeatureSet::ngram2 ? 2 : 3;

    // Shared preprocessing: strip comments once, extract stylometry features
    // and (for baselines) n-gram counts.
    std::vector<std::string> stripped;
    std::vector<FeatureVector> fvs;
    std::vector<std::map<std::string, int>> grams;
    std::vector<int> labels;
    std::vector<std::string> problems;
    for (const auto& r : corpus.records) {
        std::string code = strip_comments(r.source);
        stripped.push_back(code);
        fvs.push_back(extract(code));
        if (is_ngram) grams.push_back(ngram_features(tokenize(code), ngram_n));
        labels.push_back(r.label == Label::ai ? 1 : 0);
        problems.push_back(r.problem_id);
    }

    FoldPlan plan = group_kfold(problems, config.k, config.seed);

    EvalReport report;
    report.config = config;
    report.num_records = static_cast<int>(corpus.records.size());
    report.num_problems = static_cast<int>(plan.assignments.size());
    report.naive = naive_baseline_row(labels);

    auto cols = evaldetail::selected_columns(
        is_ngram ? FeatureSet::all : config.feature_set);
    const auto& canonical = canonical_feature_names();

    std::vector<std::string> lexical = lexical_feature_names();
    std::vector<int> lexical_cols;
    for (const auto& name : lexical) {
        for (std::size_t i = 0; i < canonical.size(); ++i) {
            if (canonical[i] == name) lexical_cols.push_back(static_cast<int>(i));
        }
    }

    // Builds the design matrix for a row subset. For baselines the n-gram
    // vocabulary comes from the training rows only; test-only grams drop out.
    auto build_matrix = [&](const std::vector<int>& rows,
                            const std::vector<std::string>& vocab) {
        std::vector<std::vector<double>> X;
        for (int r : rows) {
            std::vector<double> x;
            if (is_ngram) {
                for (int c : lexical_cols) x.push_back(fvs[r].values[c]);
                for (const auto& g : vocab) {
                    auto it = grams[r].find(g);
                    x.push_back(it == grams[r].end() ? 0.0 : it->second);
                }
            } else {
                for (int c : cols) x.push_back(fvs[r].values[c]);
            }
            X.push_back(std::move(x));
        }
        return X;
    };
    auto vocab_of = [&](const std::vector<int>& rows) {
        std::set<std::string> vocab;
        for (int r : rows) {
            for (const auto& [g, _] : grams[r]) vocab.insert(g);
        }
        return std::vector<std::string>(vocab.begin(), vocab.end());
    };
    auto labels_of = [&](const std::vector<int>& rows) {
        std::vector<int> y;
        for (int r : rows) y.push_back(labels[r]);
        return y;
    };

    BoostParams params = config.boost;
    params.seed = config.seed;

    for (int fold = 0; fold < config.k; ++fold) {
        std::vector<int> train_rows, test_rows;
        std::set<std::string> train_problems, test_problems;
        for (std::size_t i = 0; i < problems.size(); ++i) {
            if (plan.assignments.at(problems[i]) == fold) {
                test_rows.push_back(static_cast<int>(i));
                test_problems.insert(problems[i]);
            } else {
                train_rows.push_back(static_cast<int>(i));
                train_problems.insert(problems[i]);
            }
        }
        for (const auto& p : test_problems) {
            if (train_problems.count(p))
                throw Error("fold leakage: problem " + p + " in both train and test");
        }
        if (test_rows.empty() || train_rows.empty())
            throw Error("fold " + std::to_string(fold) + " has an empty side");

        std::vector<std::string> vocab;
        if (is_ngram) vocab = vocab_of(train_rows);
        auto X_train = build_matrix(train_rows, vocab);
        auto X_test = build_matrix(test_rows, vocab);
        TreeEnsemble model = train(X_train, labels_of(train_rows), params);
        std::vector<double> probs;
        for (const auto& x : X_test) probs.push_back(model.probability(x));
        report.folds.push_back(compute_metrics(probs, labels_of(test_rows)));
    }
    report.mean = evaldetail::mean_row(report.folds);

    // Full-data refit for the global SHAP summary (not for metrics).
    if (is_ngram) {
        std::vector<std::string> vocab_names = lexical;
        // vocabulary of the final refit is reported for transparency
        std::vector<int> all_rows(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) all_rows[i] = static_cast<int>(i);
        for (const auto& g : vocab_of(all_rows)) vocab_names.push_back("ngram:" + g);
        report.feature_names = vocab_names;
    } else {
        for (int c : cols) report.feature_names.push_back(canonical[c]);
        if (config.with_summary) {
            std::vector<int> all_rows(labels.size());
            for (std::size_t i = 0; i < labels.size(); ++i)
                all_rows[i] = static_cast<int>(i);
            auto X = build_matrix(all_rows, {});
            TreeEnsemble model =
                train(X, labels, params, report.feature_names, taxonomy_hash());
            SummaryReport summary = summarize(model, X, X);
            for (const auto& [f, v] : summary.ranking)
                report.shap_ranking.emplace_back(report.feature_names[f], v);
        }
    }
    return report;
}

// Token n-gram baseline entry point; n=4 is
// refused (its feature matrix was reported to exhaust memory).
inline EvalReport run_baselines(const Corpus& corpus, int n, ExperimentConfig config) {
    if (n != 2 && n != 3)
        throw Error("n-gram baseline supports n in {2, 3}; n=" + std::to_string(n) +
                    " is unsupported (n=4 exhausts memory at corpus scale)");
    config.feature_set = n == 2 ? FeatureSet::ngram2 : FeatureSet::ngram3;
    return run_experiment(corpus, config);
}

inline nlohmann::json metrics_to_json(const MetricsRow& m) {
    nlohmann::json j{{"accuracy", m.accuracy},
                     {"precision", m.precision},
                     {"recall", m.recall},
                     {"f1", m.f1}};
    if (m.auc_roc) j["auc_roc"] = *m.auc_roc;
    else j["auc_roc"] = nullptr;
    return j;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : r.folds) folds.push_back(metrics_to_json(f));
    nlohmann::json ranking = nlohmann::json::array();
    for (const auto& [name, v] : r.shap_ranking)
        ranking.push_back({{"name", name}, {"mean_abs_phi", v}});
    return nlohmann::json{
        {"config",
         {{"feature_set", to_string(r.config.feature_set)},
          {"subset", to_string(r.config.subset)},
          {"k", r.config.k},
          {"seed", r.config.seed},
          {"num_rounds", r.config.boost.num_rounds},
          {"learning_rate", r.config.boost.learning_rate},
          {"max_depth", r.config.boost.max_depth},
          {"lambda", r.config.boost.lambda},
          {"gamma", r.config.boost.gamma},
          {"min_child_weight", r.config.boost.min_child_weight}}},
        {"seed", r.config.seed},
        {"num_records", r.num_records},
        {"num_problems", r.num_problems},
        {"folds", folds},
        {"mean", metrics_to_json(r.mean)},
        {"naive_baseline", metrics_to_json(r.naive)},
        {"shap_ranking", ranking},
        {"feature_count", r.feature_names.size()}};
}

// CSV with metric rows and one column per experiment.
inline std::string metrics_table_csv(
    const std::vector<std::pair<std::string, MetricsRow>>& columns) {
    std::string out = "Metric";
    for (const auto& [name, _] : columns) out += "," + name;
    out += "\n";
    auto row = [&](const std::string& label, auto getter) {
        out += label;
        for (const auto& [_, m] : columns) {
            char buf[32];
            auto v = getter(m);
            if (v) std::snprintf(buf, sizeof buf, ",%.4f", *v);
            else std::snprintf(buf, sizeof buf, ",-");
            out += buf;
        }
        out += "\n";
    };
    using Get = std::optional<double>;
    row("Accuracy", [](const MetricsRow& m) -> Get { return m.accuracy; });
    row("Precision", [](const MetricsRow& m) -> Get { return m.precision; });
    row("Recall", [](const MetricsRow& m) -> Get { return m.recall; });
    row("F1-score", [](const MetricsRow& m) -> Get { return m.f1; });
    row("AUC-ROC", [](const MetricsRow& m) -> Get { return m.auc_roc; });
    return out;
}

}  // namespace stylo
