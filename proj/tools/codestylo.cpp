#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "codestylo/corpus.hpp"
#include "codestylo/eval.hpp"
#include "codestylo/features.hpp"
#include "codestylo/metrics.hpp"
#include "codestylo/model.hpp"
#include "codestylo/shap.hpp"
#include "codestylo/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Global {
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string config_path;
    std::string out_dir = ".";
    json config;  // parsed --config document, may stay empty
};

std::string digest_file(const std::string& path) {
    return stylo::hex64(stylo::fnv1a64(stylo::read_file(path)));
}

// Every command writes a manifest binding inputs to outputs so a run can be
// re-verified and reproduced byte-for-byte.
void write_manifest(const Global& g, const std::string& command,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, json extra = {}) {
    json m{{"tool", "codestylo"},
           {"version", kVersion},
           {"command", command},
           {"seed", g.seed},
           {"taxonomy_hash", stylo::taxonomy_hash()}};
    json in = json::object(), out = json::object();
    for (const auto& p : inputs) in[p] = digest_file(p);
    for (const auto& p : outputs) out[p] = digest_file(p);
    m["inputs"] = in;
    m["outputs"] = out;
    if (!extra.empty()) m["extra"] = extra;
    stylo::write_file((fs::path(g.out_dir) / "manifest.json").string(), m.dump(1) + "\n");
}

int verify_manifest(const std::string& path) {
    json m = json::parse(stylo::read_file(path));
    int bad = 0;
    for (auto& [file, digest] : m.at("outputs").items()) {
        std::string actual;
        try {
            actual = digest_file(file);
        } catch (const std::exception&) {
            std::cout << "MISSING " << file << "\n";
            ++bad;
            continue;
        }
        if (actual != digest.get<std::string>()) {
            std::cout << "MISMATCH " << file << " expected " << digest.get<std::string>()
                      << " got " << actual << "\n";
            ++bad;
        } else {
            std::cout << "ok " << file << "\n";
        }
    }
    if (bad == 0) std::cout << "verified " << m.at("outputs").size() << " artifacts\n";
    return bad == 0 ? 0 : 1;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

stylo::BoostParams boost_from_config(const Global& g) {
    stylo::BoostParams p;
    const json& c = g.config;
    p.num_rounds = c.value("num_rounds", p.num_rounds);
    p.learning_rate = c.value("learning_rate", p.learning_rate);
    p.max_depth = c.value("max_depth", p.max_depth);
    p.lambda = c.value("lambda", p.lambda);
    p.gamma = c.value("gamma", p.gamma);
    p.min_child_weight = c.value("min_child_weight", p.min_child_weight);
    p.seed = g.seed;
    return p;
}

struct ExtractedRow {
    bool ok = false;
    std::string error;
    stylo::FeatureVector fv;
};

// Parallel per-record extraction; results land at their input index so the
// output order is independent of the job count.
std::vector<ExtractedRow> extract_all(const stylo::Corpus& corpus, int jobs) {
    std::vector<ExtractedRow> rows(corpus.records.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= corpus.records.size()) break;
            try {
                rows[i].fv = stylo::extract(stylo::strip_comments(corpus.records[i].source));
                rows[i].ok = true;
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        }
    };
    int n = std::max(1, jobs);
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

stylo::Corpus load_any_corpus(const std::string& path) {
    if (fs::is_directory(path)) return stylo::load_corpus_tree(path);
    return stylo::load_corpus(path);
}

int cmd_extract(const Global& g, const std::string& corpus_path) {
    stylo::Corpus corpus = load_any_corpus(corpus_path);
    auto rows = extract_all(corpus, g.jobs);
    const auto& names = stylo::canonical_feature_names();

    std::string csv = "id,problem_id,label,difficulty_bin,correct";
    for (const auto& n : names) csv += "," + n;
    csv += "\n";
    std::string rejects;
    int rejected = 0;
    bool binned = corpus.has_bins();
    stylo::Corpus binnable = corpus;
    if (!binned) {
        try {
            binnable = stylo::bin_difficulty(corpus, 3);
            binned = true;
        } catch (const stylo::Error&) {
        }
    }
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        const auto& r = corpus.records[i];
        if (!rows[i].ok) {
            rejects += r.id + "\t" + rows[i].error + "\n";
            ++rejected;
            continue;
        }
        csv += r.id + "," + r.problem_id + "," + stylo::to_string(r.label) + ",";
        csv += binned ? stylo::to_string(binnable.bin_of(r.problem_id)) : std::string("-");
        csv += r.correct ? ",1" : ",0";
        for (double v : rows[i].fv.values) csv += "," + fmt(v);
        csv += "\n";
    }
    fs::create_directories(g.out_dir);
    std::string csv_path = (fs::path(g.out_dir) / "features.csv").string();
    std::string rejects_path = (fs::path(g.out_dir) / "rejects.txt").string();
    stylo::write_file(csv_path, csv);
    stylo::write_file(rejects_path, rejects);
    write_manifest(g, "extract", fs::is_directory(corpus_path) ? std::vector<std::string>{} : std::vector<std::string>{corpus_path},
                   {csv_path, rejects_path},
                   json{{"records", corpus.records.size()}, {"rejected", rejected}});
    std::cout << "extracted " << (corpus.records.size() - rejected) << "/"
              << corpus.records.size() << " records -> " << csv_path << "\n";
    return rejected > 0 ? 2 : 0;
}

struct Matrix {
    std::vector<std::string> ids;
    std::vector<std::string> problems;
    std::vector<int> labels;
    std::vector<std::vector<double>> X;
    std::vector<std::string> feature_names;
};

Matrix read_matrix(const std::string& path) {
    Matrix m;
    auto lines = stylo::split_lines(stylo::read_file(path));
    if (lines.empty()) throw stylo::Error("empty feature matrix: " + path);
    std::vector<std::string> header;
    std::size_t start = 0, end;
    const std::string& h = lines[0];
    while (true) {
        end = h.find(',', start);
        header.push_back(h.substr(start, end - start));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    if (header.size() < 6 || header[0] != "id")
        throw stylo::Error("unrecognized feature matrix header in " + path);
    m.feature_names.assign(header.begin() + 5, header.end());
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        std::vector<std::string> cells;
        start = 0;
        const std::string& row = lines[ln];
        while (true) {
            end = row.find(',', start);
            cells.push_back(row.substr(start, end - start));
            if (end == std::string::npos) break;
            start = end + 1;
        }
        if (cells.size() != header.size())
            throw stylo::Error("row " + std::to_string(ln + 1) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
        m.ids.push_back(cells[0]);
        m.problems.push_back(cells[1]);
        m.labels.push_back(stylo::label_from_string(cells[2]) == stylo::Label::ai ? 1 : 0);
        std::vector<double> x;
        for (std::size_t c = 5; c < cells.size(); ++c) x.push_back(std::stod(cells[c]));
        m.X.push_back(std::move(x));
    }
    return m;
}

int cmd_train(const Global& g, const std::string& matrix_path) {
    Matrix m = read_matrix(matrix_path);
    stylo::BoostParams params = boost_from_config(g);
    stylo::TreeEnsemble ens =
        stylo::train(m.X, m.labels, params, m.feature_names, stylo::taxonomy_hash());
    fs::create_directories(g.out_dir);
    std::string model_path = (fs::path(g.out_dir) / "model.json").string();
    std::string loss_path = (fs::path(g.out_dir) / "training_loss.txt").string();
    stylo::save(ens, model_path);
    std::string loss;
    for (std::size_t i = 0; i < ens.train_loss.size(); ++i)
        loss += std::to_string(i) + "\t" + fmt(ens.train_loss[i]) + "\n";
    stylo::write_file(loss_path, loss);
    write_manifest(g, "train", {matrix_path}, {model_path, loss_path},
                   json{{"rows", m.X.size()}, {"features", m.feature_names.size()}});
    std::cout << "trained " << ens.trees.size() << " trees on " << m.X.size()
              << " rows -> " << model_path << "\n";
    return 0;
}

int cmd_predict(const Global& g, const std::string& model_path,
                const std::string& input_path) {
    stylo::TreeEnsemble ens = stylo::load(model_path);
    json out = json::array();
    auto add = [&](const std::string& id, const std::string& source) {
        stylo::FeatureVector fv = stylo::extract(stylo::strip_comments(source));
        if (ens.feature_names.size() != fv.values.size())
            throw stylo::Error("model expects " + std::to_string(ens.feature_names.size()) +
                               " features; extractor produced " +
                               std::to_string(fv.values.size()));
        double margin = ens.margin(fv.values);
        double p = 1.0 / (1.0 + std::exp(-margin));
        out.push_back({{"id", id},
                       {"probability_ai", p},
                       {"label", p >= 0.5 ? "ai" : "human"},
                       {"margin", margin}});
    };
    if (input_path.size() > 3 && input_path.substr(input_path.size() - 3) == ".py") {
        add(fs::path(input_path).stem().string(), stylo::read_file(input_path));
    } else {
        stylo::Corpus corpus = load_any_corpus(input_path);
        for (const auto& r : corpus.records) add(r.id, r.source);
    }
    fs::create_directories(g.out_dir);
    std::string pred_path = (fs::path(g.out_dir) / "predictions.json").string();
    stylo::write_file(pred_path, out.dump(1) + "\n");
    write_manifest(g, "predict", {model_path, input_path}, {pred_path});
    std::cout << "predicted " << out.size() << " inputs -> " << pred_path << "\n";
    return 0;
}

int cmd_explain(const Global& g, const std::string& model_path,
                const std::string& input_path, const std::string& background_path,
                int top_k, bool with_summary) {
    stylo::TreeEnsemble ens = stylo::load(model_path);
    Matrix bg = read_matrix(background_path);
    if (bg.feature_names != ens.feature_names)
        throw stylo::Error("background matrix feature names do not match the model");

    fs::create_directories(g.out_dir);
    std::vector<std::string> outputs;
    std::string src = stylo::read_file(input_path);
    stylo::FeatureVector fv = stylo::extract(stylo::strip_comments(src));
    stylo::Explanation ex = stylo::shap_values(ens, fv.values, bg.X);
    std::string id = fs::path(input_path).stem().string();
    json ej = stylo::explanation_to_json(ex, ens.feature_names, id);
    json wf = json::array();
    for (const auto& row : stylo::waterfall(ex, ens.feature_names, fv.values, top_k)) {
        wf.push_back({{"name", row.name},
                      {"value", row.value},
                      {"phi", row.phi},
                      {"aggregated", row.aggregated}});
    }
    ej["waterfall"] = wf;
    std::string ex_path = (fs::path(g.out_dir) / "explanation.json").string();
    stylo::write_file(ex_path, ej.dump(1) + "\n");
    outputs.push_back(ex_path);

    if (with_summary) {
        stylo::SummaryReport s = stylo::summarize(ens, bg.X, bg.X);
        json ranking = json::array();
        for (const auto& [f, v] : s.ranking)
            ranking.push_back({{"name", ens.feature_names[f]}, {"mean_abs_phi", v}});
        json points = json::array();
        for (std::size_t f = 0; f < s.points.size(); ++f) {
            for (const auto& [value, phi] : s.points[f]) {
                points.push_back(
                    {{"name", ens.feature_names[f]}, {"value", value}, {"phi", phi}});
            }
        }
        std::string sum_path = (fs::path(g.out_dir) / "summary.json").string();
        stylo::write_file(sum_path,
                          json{{"ranking", ranking}, {"points", points}}.dump(1) + "\n");
        outputs.push_back(sum_path);
    }
    write_manifest(g, "explain", {model_path, input_path, background_path}, outputs);
    std::cout << "explained " << id << " -> " << outputs[0] << "\n";
    return 0;
}

int cmd_evaluate(const Global& g, const std::string& corpus_path,
                 const std::string& feature_set, const std::string& subset, int k,
                 int baseline_n, bool tables, int synthetic_problems) {
    stylo::Corpus corpus;
    std::vector<std::string> inputs;
    if (synthetic_problems > 0) {
        corpus = stylo::synthetic_corpus(synthetic_problems, g.seed);
    } else {
        corpus = load_any_corpus(corpus_path);
        if (!fs::is_directory(corpus_path)) inputs.push_back(corpus_path);
        if (!corpus.has_bins()) {
            try {
                corpus = stylo::bin_difficulty(std::move(corpus), 3);
            } catch (const stylo::Error&) {
            }
        }
    }

    stylo::ExperimentConfig cfg;
    cfg.k = k;
    cfg.seed = g.seed;
    cfg.boost = boost_from_config(g);
    cfg.subset = stylo::subset_from_string(subset);

    fs::create_directories(g.out_dir);
    std::vector<std::string> outputs;
    if (baseline_n != 0) {
        if (baseline_n != 2 && baseline_n != 3)
            throw stylo::Error(
                "n-gram baseline supports n in {2, 3}; n=4 was reported to need "
                "hundreds of gigabytes of memory and is refused");
        cfg.feature_set = baseline_n == 2 ? stylo::FeatureSet::ngram2 : stylo::FeatureSet::ngram3;
    } else {
        cfg.feature_set = stylo::feature_set_from_string(feature_set);
    }

    auto write_report = [&](const stylo::EvalReport& r, const std::string& stem) {
        std::string jpath = (fs::path(g.out_dir) / (stem + ".json")).string();
        std::string cpath = (fs::path(g.out_dir) / (stem + ".csv")).string();
        stylo::write_file(jpath, stylo::report_to_json(r).dump(1) + "\n");
        stylo::write_file(cpath, stylo::metrics_table_csv(
                                     {{stylo::to_string(r.config.feature_set), r.mean},
                                      {"naive", r.naive}}));
        outputs.push_back(jpath);
        outputs.push_back(cpath);
    };

    if (!tables) {
        stylo::EvalReport report = stylo::run_experiment(corpus, cfg);
        write_report(report, "report");
        std::cout << "mean f1 " << report.mean.f1 << ", auc "
                  << (report.mean.auc_roc ? std::to_string(*report.mean.auc_roc) : "-")
                  << " over " << report.folds.size() << " folds\n";
    } else {
        // Full table suite: overall comparison, correct-vs-random, difficulty.
        auto run = [&](stylo::FeatureSet fs_, stylo::Subset sub, bool summary) {
            stylo::ExperimentConfig c = cfg;
            c.feature_set = fs_;
            c.subset = sub;
            c.with_summary = summary;
            return stylo::run_experiment(corpus, c);
        };
        using FS = stylo::FeatureSet;
        using SU = stylo::Subset;
        auto all = run(FS::all, SU::full, true);
        auto non_gameable = run(FS::non_gameable, SU::full, false);
        auto n2 = run(FS::ngram2, SU::full, false);
        auto n3 = run(FS::ngram3, SU::full, false);
        std::string t4 = stylo::metrics_table_csv({{"our_all", all.mean},
                                                   {"our_non_gameable", non_gameable.mean},
                                                   {"baseline_n2", n2.mean},
                                                   {"baseline_n3", n3.mean},
                                                   {"naive", all.naive}});
        auto correct = run(FS::all, SU::correct_only, false);
        auto random_m = run(FS::all, SU::random_matched, false);
        auto n2c = run(FS::ngram2, SU::correct_only, false);
        auto n2r = run(FS::ngram2, SU::random_matched, false);
        auto n3c = run(FS::ngram3, SU::correct_only, false);
        auto n3r = run(FS::ngram3, SU::random_matched, false);
        std::string t5 = stylo::metrics_table_csv({{"our_correct", correct.mean},
                                                   {"our_random", random_m.mean},
                                                   {"n2_correct", n2c.mean},
                                                   {"n2_random", n2r.mean},
                                                   {"n3_correct", n3c.mean},
                                                   {"n3_random", n3r.mean}});
        std::vector<std::pair<std::string, stylo::MetricsRow>> t6cols;
        for (auto sub : {SU::easy, SU::medium, SU::hard})
            t6cols.emplace_back("our_" + stylo::to_string(sub), run(FS::all, sub, false).mean);
        for (int n : {2, 3}) {
            for (auto sub : {SU::easy, SU::medium, SU::hard}) {
                t6cols.emplace_back(
                    "n" + std::to_string(n) + "_" + stylo::to_string(sub),
                    run(n == 2 ? FS::ngram2 : FS::ngram3, sub, false).mean);
            }
        }
        std::string t6 = stylo::metrics_table_csv(t6cols);
        for (auto& [stem, text] :
             std::vector<std::pair<std::string, std::string>>{{"table_overall", t4},
                                                              {"table_correct_vs_random", t5},
                                                              {"table_difficulty", t6}}) {
            std::string path = (fs::path(g.out_dir) / (stem + ".csv")).string();
            stylo::write_file(path, text);
            outputs.push_back(path);
        }
        std::string jpath = (fs::path(g.out_dir) / "report.json").string();
        stylo::write_file(jpath, stylo::report_to_json(all).dump(1) + "\n");
        outputs.push_back(jpath);
        std::cout << "wrote table suite to " << g.out_dir << "\n";
    }
    write_manifest(g, "evaluate", inputs, outputs,
                   json{{"feature_set", stylo::to_string(cfg.feature_set)},
                        {"subset", stylo::to_string(cfg.subset)},
                        {"k", cfg.k}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"code stylometry classifier: human-authored vs AI-generated Python"};
    app.require_subcommand(0, 1);

    Global g;
    std::string verify_path;
    app.add_option("--seed", g.seed, "master seed; all randomness derives from it");
    app.add_option("--jobs", g.jobs, "worker threads for per-file extraction")
        ->check(CLI::PositiveNumber);
    app.add_option("--config", g.config_path, "JSON config mirroring booster parameters");
    app.add_option("--out", g.out_dir, "output directory");
    app.add_option("--verify", verify_path, "verify artifact digests against a manifest");

    std::string corpus_path, matrix_path, model_path, input_path, background_path;
    std::string feature_set = "all", subset = "full";
    int top_k = 12, k = 10, baseline_n = 0, synthetic_problems = 0;
    bool tables = false, with_summary = false;

    auto* extract = app.add_subcommand("extract", "extract feature matrix from a corpus");
    extract->add_option("corpus", corpus_path, "corpus JSONL file or directory tree")
        ->required();

    auto* train = app.add_subcommand("train", "train a boosted-tree classifier");
    train->add_option("matrix", matrix_path, "feature matrix CSV")->required();

    auto* predict = app.add_subcommand("predict", "classify source files");
    predict->add_option("model", model_path, "model JSON")->required();
    predict->add_option("input", input_path, "a .py file or a corpus")->required();

    auto* explain = app.add_subcommand("explain", "Shapley explanation for a prediction");
    explain->add_option("model", model_path, "model JSON")->required();
    explain->add_option("input", input_path, "a .py file")->required();
    explain->add_option("--background", background_path, "background feature matrix CSV")
        ->required();
    explain->add_option("--top-k", top_k, "waterfall rows before aggregation");
    explain->add_flag("--summary", with_summary, "also write the global summary");

    auto* evaluate = app.add_subcommand("evaluate", "grouped cross-validation experiments");
    evaluate->add_option("corpus", corpus_path, "corpus JSONL file or directory tree");
    evaluate->add_option("--feature-set", feature_set,
                         "all | non-gameable | no-halstead | ngram2 | ngram3");
    evaluate->add_option("--subset", subset,
                         "full | correct-only | random-matched | easy | medium | hard");
    evaluate->add_option("--k", k, "number of folds");
    evaluate->add_option("--baseline", baseline_n, "token n-gram baseline (n = 2 or 3)");
    evaluate->add_flag("--tables", tables, "run the full table suite");
    evaluate->add_option("--synthetic", synthetic_problems,
                         "evaluate on a generated two-style corpus of this many problems");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!verify_path.empty()) return verify_manifest(verify_path);
        if (!g.config_path.empty()) g.config = json::parse(stylo::read_file(g.config_path));
        if (extract->parsed()) return cmd_extract(g, corpus_path);
        if (train->parsed()) return cmd_train(g, matrix_path);
        if (predict->parsed()) return cmd_predict(g, model_path, input_path);
        if (explain->parsed())
            return cmd_explain(g, model_path, input_path, background_path, top_k,
                               with_summary);
        if (evaluate->parsed()) {
            if (corpus_path.empty() && synthetic_problems == 0)
                throw stylo::Error("evaluate needs a corpus or --synthetic N");
            return cmd_evaluate(g, corpus_path, feature_set, subset, k, baseline_n,
                                tables, synthetic_problems);
        }
        std::cout << app.help();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
