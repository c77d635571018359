#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "codestylo/eval.hpp"
#include "codestylo/synthetic.hpp"

using namespace stylo;

TEST_CASE("group_kfold balances fold sizes within one problem") {
    std::vector<std::string> pids;
    for (int i = 0; i < 399; ++i) pids.push_back("p" + std::to_string(i));
    FoldPlan plan = group_kfold(pids, 10, 1);
    std::map<int, int> sizes;
    for (const auto& [pid, fold] : plan.assignments) ++sizes[fold];
    REQUIRE(sizes.size() == 10);
    int mn = 1 << 30, mx = 0;
    for (const auto& [f, n] : sizes) {
        mn = std::min(mn, n);
        mx = std::max(mx, n);
    }
    CHECK(mx - mn <= 1);
    CHECK(mx == 40);
    CHECK(mn == 39);
}

TEST_CASE("group_kfold co-locates every record of a problem") {
    std::vector<std::string> pids = {"a", "b", "a", "c", "b", "a"};
    FoldPlan plan = group_kfold(pids, 3, 7);
    CHECK(plan.assignments.size() == 3);
    for (const auto& pid : pids) CHECK(plan.assignments.count(pid) == 1);
}

TEST_CASE("group_kfold validates k") {
    std::vector<std::string> pids = {"a", "b", "c"};
    CHECK_THROWS_AS(group_kfold(pids, 1, 0), Error);
    CHECK_THROWS_AS(group_kfold(pids, 4, 0), Error);  // more folds than problems
    CHECK_NOTHROW(group_kfold(pids, 3, 0));
}

TEST_CASE("group_kfold is seed-deterministic and seed-sensitive") {
    std::vector<std::string> pids;
    for (int i = 0; i < 50; ++i) pids.push_back("p" + std::to_string(i));
    FoldPlan a = group_kfold(pids, 5, 3);
    FoldPlan b = group_kfold(pids, 5, 3);
    CHECK(a.assignments == b.assignments);
    FoldPlan c = group_kfold(pids, 5, 4);
    CHECK(a.assignments != c.assignments);
}

TEST_CASE("feature set and subset names round-trip") {
    for (FeatureSet fs : {FeatureSet::all, FeatureSet::non_gameable, FeatureSet::no_halstead,
                          FeatureSet::ngram2, FeatureSet::ngram3})
        CHECK(feature_set_from_string(to_string(fs)) == fs);
    for (Subset s : {Subset::full, Subset::correct_only, Subset::random_matched,
                     Subset::easy, Subset::medium, Subset::hard})
        CHECK(subset_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(feature_set_from_string("bogus"), Error);
    CHECK_THROWS_AS(subset_from_string("bogus"), Error);
}

TEST_CASE("selected columns drop the right features") {
    const auto& names = canonical_feature_names();
    auto all = evaldetail::selected_columns(FeatureSet::all);
    CHECK(all.size() == names.size());

    auto ng = evaldetail::selected_columns(FeatureSet::non_gameable);
    CHECK(ng.size() == names.size() - 2);
    std::set<std::string> kept;
    for (int c : ng) kept.insert(names[c]);
    CHECK(!kept.count("emptyLinesDensity"));
    CHECK(!kept.count("whiteSpaceRatio"));

    auto nh = evaldetail::selected_columns(FeatureSet::no_halstead);
    CHECK(nh.size() == names.size() - 4);
    kept.clear();
    for (int c : nh) kept.insert(names[c]);
    for (const auto& h : halstead_features()) CHECK(!kept.count(h));
}

static ExperimentConfig quick_config(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.k = 5;
    cfg.seed = seed;
    cfg.boost.num_rounds = 25;
    cfg.with_summary = false;
    return cfg;
}

TEST_CASE("experiment runs leak-free and beats the naive baseline on synthetic data") {
    Corpus c = synthetic_corpus(40, 21);
    EvalReport r = run_experiment(c, quick_config(21));
    CHECK(r.num_records == 80);
    CHECK(r.num_problems == 40);
    REQUIRE(r.folds.size() == 5);
    CHECK(r.mean.f1 > r.naive.f1);
    CHECK(r.mean.accuracy > 0.9);
    CHECK(r.naive.accuracy == 0.5);
    CHECK(!r.naive.auc_roc.has_value());
}

TEST_CASE("experiments are reproducible: identical serialized reports") {
    Corpus c = synthetic_corpus(20, 33);
    std::string a = report_to_json(run_experiment(c, quick_config(33))).dump();
    std::string b = report_to_json(run_experiment(c, quick_config(33))).dump();
    CHECK(a == b);
}

TEST_CASE("auc on permuted labels is centered at chance") {
    Rng rng(808);
    int n = 1000;
    std::vector<double> scores(n);
    for (auto& s : scores) s = rng.uniform_real();
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i % 2;
    double total = 0.0;
    for (int t = 0; t < 50; ++t) {
        rng.shuffle(labels);
        total += *auc_roc(scores, labels);
    }
    double mean = total / 50.0;
    CHECK(mean > 0.4);
    CHECK(mean < 0.6);
}

TEST_CASE("label permutation collapses experiment AUC to chance") {
    // shuffling labels while keeping sources must destroy the signal
    Corpus c = synthetic_corpus(60, 55);
    Rng rng(Rng::derive(55, "permutation_test"));
    std::vector<Label> labels;
    for (const auto& r : c.records) labels.push_back(r.label);
    double auc_sum = 0.0;
    int runs = 3;
    for (int t = 0; t < runs; ++t) {
        rng.shuffle(labels);
        Corpus shuffled = c;
        for (std::size_t i = 0; i < labels.size(); ++i)
            shuffled.records[i].label = labels[i];
        ExperimentConfig cfg = quick_config(55 + t);
        cfg.boost.num_rounds = 8;
        EvalReport r = run_experiment(shuffled, cfg);
        REQUIRE(r.mean.auc_roc.has_value());
        auc_sum += *r.mean.auc_roc;
    }
    double mean_auc = auc_sum / runs;
    CHECK(mean_auc > 0.4);
    CHECK(mean_auc < 0.6);
}

TEST_CASE("correct-only subset keeps balanced correct records") {
    Corpus c = synthetic_corpus(30, 9);
    Corpus sel = evaldetail::select_subset(c, Subset::correct_only, 9);
    std::map<std::string, std::pair<int, int>> counts;
    for (const auto& r : sel.records) {
        CHECK(r.correct);
        auto& [h, a] = counts[r.problem_id];
        (r.label == Label::human ? h : a)++;
    }
    for (const auto& [pid, ha] : counts) CHECK(ha.first == ha.second);
}

TEST_CASE("random-matched subset mirrors the correct-only difficulty profile") {
    Corpus c = synthetic_corpus(60, 13);
    Corpus correct = evaldetail::select_subset(c, Subset::correct_only, 13);
    Corpus matched = evaldetail::select_subset(c, Subset::random_matched, 13);
    auto bin_counts = [&](const Corpus& s) {
        std::map<int, std::set<std::string>> per_bin;
        for (const auto& r : s.records)
            per_bin[s.difficulty_bins.at(r.problem_id)].insert(r.problem_id);
        std::map<int, int> out;
        for (const auto& [b, pids] : per_bin) out[b] = static_cast<int>(pids.size());
        return out;
    };
    CHECK(bin_counts(correct) == bin_counts(matched));
    // matched keeps one record per class per problem
    std::map<std::string, int> per_problem;
    for (const auto& r : matched.records) ++per_problem[r.problem_id];
    for (const auto& [pid, n] : per_problem) CHECK(n == 2);
}

TEST_CASE("difficulty subsets select only their bin") {
    Corpus c = synthetic_corpus(30, 17);
    for (auto [subset, bin] : {std::pair{Subset::easy, 0}, {Subset::medium, 1},
                               {Subset::hard, 2}}) {
        Corpus sel = evaldetail::select_subset(c, subset, 17);
        CHECK(!sel.records.empty());
        for (const auto& r : sel.records)
            CHECK(c.difficulty_bins.at(r.problem_id) == bin);
    }
}

TEST_CASE("ngram baselines run end to end and n=4 is refused") {
    Corpus c = synthetic_corpus(25, 41);
    ExperimentConfig cfg = quick_config(41);
    cfg.boost.num_rounds = 15;
    EvalReport r2 = run_baselines(c, 2, cfg);
    CHECK(r2.mean.accuracy > 0.5);
    EvalReport r3 = run_baselines(c, 3, cfg);
    CHECK(r3.mean.accuracy > 0.5);
    CHECK_THROWS_AS(run_baselines(c, 4, cfg), Error);
}

TEST_CASE("metrics table renders metric rows by experiment columns") {
    MetricsRow m;
    m.accuracy = 0.9;
    m.precision = 0.8;
    m.recall = 0.7;
    m.f1 = 0.74;
    m.auc_roc = 0.95;
    MetricsRow naive;
    naive.accuracy = naive.precision = naive.recall = naive.f1 = 0.5;
    std::string csv = metrics_table_csv({{"Classifier", m}, {"Naive", naive}});
    CHECK(csv ==
          "Metric,Classifier,Naive\n"
          "Accuracy,0.9000,0.5000\n"
          "Precision,0.8000,0.5000\n"
          "Recall,0.7000,0.5000\n"
          "F1-score,0.7400,0.5000\n"
          "AUC-ROC,0.9500,-\n");
}

TEST_CASE("synthetic corpus is paired, binned, and deterministic") {
    Corpus a = synthetic_corpus(12, 99);
    Corpus b = synthetic_corpus(12, 99);
    REQUIRE(a.records.size() == 24);
    CHECK(a.num_bins == 3);
    for (std::size_t i = 0; i < a.records.size(); i += 2) {
        CHECK(a.records[i].label == Label::ai);
        CHECK(a.records[i + 1].label == Label::human);
        CHECK(a.records[i].problem_id == a.records[i + 1].problem_id);
        CHECK(a.records[i].source == b.records[i].source);
    }
    Corpus c = synthetic_corpus(12, 100);
    CHECK(a.records[0].source != c.records[0].source);
}
