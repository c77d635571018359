#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "codestylo/model.hpp"
#include "codestylo/rng.hpp"
#include "codestylo/synthetic.hpp"

using namespace stylo;

static std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

TEST_CASE("single stump on a separable toy set") {
    std::vector<std::vector<double>> X = {{0}, {1}, {10}, {11}};
    std::vector<int> y = {0, 0, 1, 1};
    BoostParams p;
    p.num_rounds = 1;
    p.learning_rate = 1.0;
    p.max_depth = 1;
    p.min_child_weight = 0.0;  // child hessians are 0.5 each on this toy
    TreeEnsemble ens = train(X, y, p);
    REQUIRE(ens.trees.size() == 1);
    const Tree& t = ens.trees[0];
    REQUIRE(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold == 5.5);
    // G = -1, H = 0.5 on the positive side: -G/(H+1) = 2/3
    double pos_leaf = t.nodes[t.nodes[0].right].weight;
    CHECK(pos_leaf == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(t.nodes[t.nodes[0].left].weight == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
    CHECK(ens.base_score == 0.0);  // balanced classes
}

TEST_CASE("training loss decreases monotonically over 200 rounds") {
    Corpus c = synthetic_corpus(20, 5);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    Rng rng(9);
    for (const auto& r : c.records) {
        // cheap stand-in features with signal + noise
        double len = static_cast<double>(r.source.size());
        X.push_back({len, rng.uniform_real() * 10.0, static_cast<double>(r.source.find('\n'))});
        y.push_back(r.label == Label::ai ? 1 : 0);
    }
    BoostParams p;  // defaults: 200 rounds
    TreeEnsemble ens = train(X, y, p);
    REQUIRE(ens.train_loss.size() == 200);
    for (std::size_t i = 1; i < ens.train_loss.size(); ++i)
        CHECK(ens.train_loss[i] <= ens.train_loss[i - 1] + 1e-12);
}

// Reference split search by direct enumeration of every (feature, boundary).
static boostdetail::SplitChoice enumerate_best(const std::vector<std::vector<double>>& X,
                                               const std::vector<double>& g,
                                               const std::vector<double>& h,
                                               const BoostParams& p) {
    boostdetail::SplitChoice best;
    std::size_t nfeat = X[0].size();
    double gt = 0, ht = 0;
    for (std::size_t r = 0; r < X.size(); ++r) { gt += g[r]; ht += h[r]; }
    double parent = gt * gt / (ht + p.lambda);
    for (std::size_t f = 0; f < nfeat; ++f) {
        std::vector<double> cuts;
        for (const auto& row : X) cuts.push_back(row[f]);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            double thr = (cuts[i] + cuts[i + 1]) / 2.0;
            double gl = 0, hl = 0;
            for (std::size_t r = 0; r < X.size(); ++r) {
                if (X[r][f] < thr) { gl += g[r]; hl += h[r]; }
            }
            double gr = gt - gl, hr = ht - hl;
            if (hl < p.min_child_weight || hr < p.min_child_weight) continue;
            double gain = 0.5 * (gl * gl / (hl + p.lambda) + gr * gr / (hr + p.lambda) -
                                 parent) - p.gamma;
            if (gain <= 0.0) continue;
            bool better = gain > best.gain ||
                          (gain == best.gain &&
                           (static_cast<int>(f) < best.feature ||
                            (static_cast<int>(f) == best.feature && thr < best.threshold)));
            if (better) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = thr;
                best.gain = gain;
            }
        }
    }
    return best;
}

TEST_CASE("split search agrees with exhaustive enumeration on random instances") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 3 + static_cast<int>(rng.uniform_below(6));  // up to 8 rows
        int nfeat = 1 + static_cast<int>(rng.uniform_below(3));
        std::vector<std::vector<double>> X(n, std::vector<double>(nfeat));
        std::vector<double> g(n), h(n);
        std::vector<int> rows(n);
        for (int r = 0; r < n; ++r) {
            rows[r] = r;
            // dyadic grid values keep every partial sum exact, so the two
            // implementations see bit-identical gains even across tie groups
            g[r] = (static_cast<double>(rng.uniform_below(17)) - 8.0) * 0.25;
            h[r] = (1.0 + static_cast<double>(rng.uniform_below(8))) * 0.125;
            for (int f = 0; f < nfeat; ++f)
                X[r][f] = static_cast<double>(rng.uniform_below(4));  // ties likely
        }
        BoostParams p;
        p.min_child_weight = rng.uniform_real() < 0.5 ? 0.0 : 0.25;
        p.gamma = rng.uniform_real() < 0.5 ? 0.0 : 0.0625;
        auto got = boostdetail::best_split(X, g, h, rows, p);
        auto want = enumerate_best(X, g, h, p);
        CHECK(got.found == want.found);
        if (got.found) {
            CHECK(got.feature == want.feature);
            CHECK(got.threshold == want.threshold);
            CHECK(got.gain == doctest::Approx(want.gain).epsilon(1e-12));
        }
    }
}

TEST_CASE("save and load reproduce margins bit for bit") {
    Corpus c = synthetic_corpus(10, 3);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (const auto& r : c.records) {
        X.push_back({static_cast<double>(r.source.size()),
                     static_cast<double>(std::count(r.source.begin(), r.source.end(), '\n'))});
        y.push_back(r.label == Label::ai ? 1 : 0);
    }
    BoostParams p;
    p.num_rounds = 30;
    TreeEnsemble ens = train(X, y, p, {"a", "b"}, taxonomy_hash());
    std::string path = tmp_path("stylo_model_rt.json");
    save(ens, path);
    TreeEnsemble back = load(path);
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> x = {rng.uniform_real() * 300.0, rng.uniform_real() * 40.0};
        CHECK(ens.margin(x) == back.margin(x));  // exact, not approximate
    }
    CHECK(back.params.num_rounds == 30);
    CHECK(back.feature_names == ens.feature_names);
}

TEST_CASE("model files are rejected when corrupt or mismatched") {
    std::vector<std::vector<double>> X = {{0}, {1}, {10}, {11}};
    std::vector<int> y = {0, 0, 1, 1};
    BoostParams p;
    p.num_rounds = 2;
    p.min_child_weight = 0.0;
    TreeEnsemble ens = train(X, y, p, {"f0"}, taxonomy_hash());

    std::string path = tmp_path("stylo_model_bad.json");
    std::string dump = to_json(ens).dump();
    write_file(path, dump.substr(0, dump.size() / 2));  // truncated
    CHECK_THROWS_WITH_AS(load(path), doctest::Contains("corrupt model file"), Error);

    ens.taxonomy_hash = "deadbeefdeadbeef";
    save(ens, path);
    CHECK_THROWS_WITH_AS(load(path), doctest::Contains("taxonomy hash"), Error);
    CHECK_NOTHROW(load(path, true));  // force overrides the guard
}

TEST_CASE("training input validation") {
    BoostParams p;
    p.num_rounds = 1;
    CHECK_THROWS_AS(train({{1.0}}, {1}, p), Error);                    // too few rows
    CHECK_THROWS_AS(train({{1.0}, {2.0}}, {1, 1}, p), Error);          // one class
    CHECK_THROWS_AS(train({{1.0}, {2.0, 3.0}}, {0, 1}, p), Error);     // ragged
    CHECK_THROWS_AS(train({{std::nan("")}, {2.0}}, {0, 1}, p), Error); // NaN
}

TEST_CASE("training is deterministic: identical serialized models") {
    Corpus c = synthetic_corpus(8, 11);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (const auto& r : c.records) {
        X.push_back({static_cast<double>(r.source.size()),
                     static_cast<double>(r.difficulty_score)});
        y.push_back(r.label == Label::ai ? 1 : 0);
    }
    BoostParams p;
    p.num_rounds = 25;
    std::string a = to_json(train(X, y, p)).dump();
    std::string b = to_json(train(X, y, p)).dump();
    CHECK(a == b);
}

TEST_CASE("margin rejects wrong feature counts") {
    std::vector<std::vector<double>> X = {{0, 0}, {1, 1}, {10, 2}, {11, 3}};
    BoostParams p;
    p.num_rounds = 1;
    p.min_child_weight = 0.0;
    TreeEnsemble ens = train(X, {0, 0, 1, 1}, p);
    CHECK_THROWS_AS(ens.margin({1.0}), Error);
    CHECK(ens.probability({0.0, 0.0}) > 0.0);
    CHECK(ens.probability({0.0, 0.0}) < 1.0);
}
