#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "codestylo/common.hpp"
#include "codestylo/rng.hpp"
#include "codestylo/tokenizer.hpp"

namespace stylo {

enum class Label { human, ai };

inline std::string to_string(Label l) { return l == Label::human ? "human" : "ai"; }
inline Label label_from_string(const std::string& s) {
    if (s == "human") return Label::human;
    if (s == "ai") return Label::ai;
    throw Error("invalid label: " + s);
}

enum class DifficultyBin { easy, medium, hard };
inline std::string to_string(DifficultyBin b) {
    switch (b) {
        case DifficultyBin::easy: return "easy";
        case DifficultyBin::medium: return "medium";
        default: return "hard";
    }
}

struct SolutionRecord {
    std::string id;
    std::string problem_id;
    Label label = Label::human;
    int difficulty_score = 0;
    bool correct = false;
    std::string source;
    bool duplicate_flag = false;  // same (label, source) as an earlier record of the problem
};

struct Corpus {
    std::vector<SolutionRecord> records;
    std::map<std::string, int> difficulty_bins;  // problem_id -> bin index (0 = easiest)
    int num_bins = 0;

    bool has_bins() const { return num_bins > 0; }
    DifficultyBin bin_of(const std::string& problem_id) const {
        auto it = difficulty_bins.find(problem_id);
        if (it == difficulty_bins.end()) throw Error("no difficulty bin for problem " + problem_id);
        if (num_bins != 3) throw Error("difficulty bin labels require 3 bins");
        return static_cast<DifficultyBin>(it->second);
    }
};

// Removes comment tokens along with the run of spaces/tabs immediately before
// them. Layout is otherwise untouched; a comment-only line becomes empty.
inline std::string strip_comments(const std::string& source) {
    TokenStream toks = tokenize_raw(source);
    std::vector<std::pair<std::size_t, std::size_t>> cuts;  // [begin, end)
    for (const auto& t : toks) {
        if (t.kind != TokenKind::comment) continue;
        std::size_t begin = t.offset;
        while (begin > 0 && (source[begin - 1] == ' ' || source[begin - 1] == '\t')) --begin;
        cuts.emplace_back(begin, t.offset + t.text.size());
    }
    if (cuts.empty()) return source;
    std::string out;
    out.reserve(source.size());
    std::size_t pos = 0;
    for (auto [b, e] : cuts) {
        out.append(source, pos, b - pos);
        pos = e;
    }
    out.append(source, pos, source.size() - pos);
    return out;
}

inline SolutionRecord record_from_json(const nlohmann::json& j) {
    SolutionRecord r;
    r.id = j.at("id").get<std::string>();
    r.problem_id = j.at("problem_id").get<std::string>();
    r.label = label_from_string(j.at("label").get<std::string>());
    r.difficulty_score = j.at("difficulty_score").get<int>();
    r.correct = j.at("correct").get<bool>();
    r.source = j.at("source").get<std::string>();
    if (r.problem_id.empty()) throw Error("empty problem_id");
    return r;
}

inline nlohmann::json record_to_json(const SolutionRecord& r) {
    return nlohmann::json{{"id", r.id},
                          {"problem_id", r.problem_id},
                          {"label", to_string(r.label)},
                          {"difficulty_score", r.difficulty_score},
                          {"correct", r.correct},
                          {"source", r.source}};
}

// Loads a JSON-Lines corpus. Duplicate ids are an error; duplicate
// (label, source) pairs within a problem are flagged on the record.
inline Corpus load_corpus(const std::string& path) {
    if (!std::filesystem::exists(path)) throw Error("corpus file not found: " + path);
    Corpus corpus;
    std::set<std::string> ids;
    std::map<std::pair<std::string, std::string>, std::set<std::uint64_t>> seen_sources;
    auto lines = split_lines(read_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::exception& e) {
            throw Error("malformed corpus line " + std::to_string(i + 1) + ": " + e.what());
        }
        SolutionRecord r;
        try {
            r = record_from_json(j);
        } catch (const nlohmann::json::exception& e) {
            throw Error("invalid record at line " + std::to_string(i + 1) + ": " + e.what());
        }
        if (!ids.insert(r.id).second)
            throw Error("duplicate id '" + r.id + "' at line " + std::to_string(i + 1));
        auto key = std::make_pair(r.problem_id, to_string(r.label));
        std::uint64_t digest = fnv1a64(r.source);
        if (!seen_sources[key].insert(digest).second) r.duplicate_flag = true;
        corpus.records.push_back(std::move(r));
    }
    return corpus;
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
    std::string out;
    for (const auto& r : corpus.records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    write_file(path, out);
}

// Fallback ingester for a directory tree with human/ and ai/ subfolders of
// .py files named <problem_id>_<n>.py.
inline Corpus load_corpus_tree(const std::string& root) {
    namespace fs = std::filesystem;
    Corpus corpus;
    for (const char* sub : {"human", "ai"}) {
        fs::path dir = fs::path(root) / sub;
        if (!fs::exists(dir)) continue;
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.path().extension() == ".py") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            SolutionRecord r;
            r.id = std::string(sub) + "/" + f.stem().string();
            std::string stem = f.stem().string();
            auto us = stem.rfind('_');
            r.problem_id = us == std::string::npos ? stem : stem.substr(0, us);
            r.label = std::string(sub) == "human" ? Label::human : Label::ai;
            r.correct = true;
            r.source = read_file(f.string());
            corpus.records.push_back(std::move(r));
        }
    }
    return corpus;
}

// Sorts problems by (difficulty_score, problem_id) and cuts them into
// equal-count bins; remainder problems go to the lowest bins.
inline Corpus bin_difficulty(Corpus corpus, int bins = 3) {
    if (bins < 2) throw Error("bin_difficulty requires bins >= 2");
    std::map<std::string, int> problems;  // problem_id -> score
    for (const auto& r : corpus.records) problems[r.problem_id] = r.difficulty_score;
    if (static_cast<int>(problems.size()) < bins)
        throw Error("fewer distinct problems (" + std::to_string(problems.size()) +
                    ") than bins (" + std::to_string(bins) + ")");
    std::vector<std::pair<int, std::string>> ordered;
    ordered.reserve(problems.size());
    for (const auto& [pid, score] : problems) ordered.emplace_back(score, pid);
    std::sort(ordered.begin(), ordered.end());
    int n = static_cast<int>(ordered.size());
    int base = n / bins, rem = n % bins;
    corpus.difficulty_bins.clear();
    int idx = 0;
    for (int b = 0; b < bins; ++b) {
        int size = base + (b < rem ? 1 : 0);
        for (int i = 0; i < size; ++i) corpus.difficulty_bins[ordered[idx++].second] = b;
    }
    corpus.num_bins = bins;
    return corpus;
}

// Keeps correct records only and rebalances each problem's classes by
// downsampling the majority class (uniform, seeded).
inline Corpus filter_correct(Corpus corpus, std::uint64_t seed = 0) {
    std::map<std::string, std::vector<std::size_t>> by_problem_human, by_problem_ai;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        const auto& r = corpus.records[i];
        if (!r.correct) continue;
        (r.label == Label::human ? by_problem_human : by_problem_ai)[r.problem_id].push_back(i);
    }
    Rng rng(Rng::derive(seed, "filter_correct"));
    std::set<std::size_t> keep;
    std::set<std::string> problems;
    for (const auto& [pid, _] : by_problem_human) problems.insert(pid);
    for (const auto& [pid, _] : by_problem_ai) problems.insert(pid);
    for (const auto& pid : problems) {
        auto humans = by_problem_human.count(pid) ? by_problem_human[pid] : std::vector<std::size_t>{};
        auto ais = by_problem_ai.count(pid) ? by_problem_ai[pid] : std::vector<std::size_t>{};
        std::size_t k = std::min(humans.size(), ais.size());
        rng.shuffle(humans);
        rng.shuffle(ais);
        for (std::size_t i = 0; i < k; ++i) {
            keep.insert(humans[i]);
            keep.insert(ais[i]);
        }
    }
    Corpus out;
    out.difficulty_bins = corpus.difficulty_bins;
    out.num_bins = corpus.num_bins;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        if (keep.count(i)) out.records.push_back(corpus.records[i]);
    }
    return out;
}

}  // namespace stylo
