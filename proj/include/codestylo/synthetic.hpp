#pragma once

#include <string>
#include <vector>

#include "codestylo/corpus.hpp"
#include "codestylo/rng.hpp"

namespace stylo {

namespace syndetail {

// Both profiles draw identifiers from the same pool so name length alone does
// not separate the classes; the contrast is in line packing and blank lines.
inline std::string pick_name(Rng& rng) {
    static const char* pool[] = {"vals", "nums", "data", "items", "total",
                                 "result", "count", "acc", "temp", "val",
                                 "item", "num", "step", "factor", "metric",
                                 "report", "seq", "out", "base", "limit"};
    return pool[rng.uniform_below(20)];
}

inline std::string number_list(Rng& rng, int count, int modulus) {
    std::string out = "[";
    for (int i = 0; i < count; ++i) {
        if (i) out += ", ";
        out += std::to_string(rng.uniform_below(modulus));
    }
    out += "]";
    return out;
}

// Verbose style: many terms packed per line, blank-line separated blocks,
// sometimes helper functions with single-expression bodies.
inline std::string maybe_compound(Rng& rng, double p_compound) {
    std::string n = pick_name(rng);
    if (rng.uniform_real() < p_compound) n += "_" + pick_name(rng);
    return n;
}

inline std::string profile_a_program(Rng& rng) {
    std::string data = maybe_compound(rng, 0.4);
    std::string factor = pick_name(rng);
    std::string result = maybe_compound(rng, 0.4);
    int c1 = 1 + static_cast<int>(rng.uniform_below(9));
    int c2 = 2 + static_cast<int>(rng.uniform_below(7));
    int c3 = 3 + static_cast<int>(rng.uniform_below(6));
    int count = 8 + static_cast<int>(rng.uniform_below(6));
    std::string v = pick_name(rng);

    std::string src;
    if (rng.uniform_real() < 0.5) {
        std::string helper = "compute_" + pick_name(rng);
        std::string builder = "build_" + pick_name(rng);
        src += "def " + helper + "(" + data + ", " + factor + "):\n";
        src += "    return sum(" + v + " * " + factor + " + " + std::to_string(c1) +
               " for " + v + " in " + data + ") + max(" + data + ") * " +
               std::to_string(c2) + " - min(" + data + ") // " + std::to_string(c3) + "\n";
        src += "\n";
        src += "def " + builder + "(" + data + ", " + factor + "):\n";
        src += "    return [" + helper + "(" + data + ", " + factor + " + " + v +
               ") for " + v + " in range(" + std::to_string(c3) + ")]\n";
        src += "\n";
        src += data + " = " + number_list(rng, count, 50) + "\n";
        src += "\n";
        src += result + " = " + builder + "(" + data + ", " + std::to_string(c2) + ")\n";
        src += "\n";
        src += "print(" + result + "[0], " + result + "[-1], sum(" + result + "))\n";
    } else {
        std::string scaled = maybe_compound(rng, 0.4);
        src += data + " = " + number_list(rng, count, 50) + "\n";
        src += "\n";
        src += scaled + " = [" + v + " * " + std::to_string(c2) + " + " +
               std::to_string(c1) + " for " + v + " in " + data + " if " + v +
               " % " + std::to_string(c3) + " != 0]\n";
        src += "\n";
        src += result + " = sum(" + scaled + ") + len(" + scaled + ") * " +
               std::to_string(c1) + " - max(" + data + ") + min(" + data + ")\n";
        src += "\n";
        src += "print(" + result + ", max(" + scaled + "), min(" + scaled + "))\n";
    }
    return src;
}

// Terse style: one operation per line, no blank lines, explicit loops,
// sometimes a small multi-line helper.
inline std::string profile_b_program(Rng& rng) {
    std::string data = maybe_compound(rng, 0.4);
    std::string acc = maybe_compound(rng, 0.4);
    std::string var = pick_name(rng);
    std::string tmp = pick_name(rng);
    int c1 = 2 + static_cast<int>(rng.uniform_below(5));
    int c2 = 1 + static_cast<int>(rng.uniform_below(9));
    int count = 5 + static_cast<int>(rng.uniform_below(5));

    std::string src;
    bool with_helper = rng.uniform_real() < 0.5;
    if (with_helper) {
        src += "def f(" + var + "):\n";
        src += "    " + tmp + " = " + var + " * " + std::to_string(c1) + "\n";
        src += "    " + tmp + " += " + std::to_string(c2) + "\n";
        src += "    return " + tmp + "\n";
    }
    src += data + " = " + number_list(rng, count, 30) + "\n";
    src += acc + " = 0\n";
    src += "for " + var + " in " + data + ":\n";
    if (with_helper) {
        src += "    " + acc + " += f(" + var + ")\n";
    } else {
        src += "    if " + var + " % " + std::to_string(c1) + " == 0:\n";
        src += "        " + tmp + " = " + var + " * " + std::to_string(c2) + "\n";
        src += "        " + acc + " += " + tmp + "\n";
        src += "    else:\n";
        src += "        " + acc + " += " + var + "\n";
    }
    src += "print(" + acc + ")\n";
    return src;
}

}  // namespace syndetail

// Seeded generator of paired programs in two contrasting style profiles; one
// verbose ("ai") and one terse ("human") solution per synthetic problem.
inline Corpus synthetic_corpus(int num_problems, std::uint64_t seed) {
    Rng rng(Rng::derive(seed, "synthetic_corpus"));
    Corpus corpus;
    for (int p = 0; p < num_problems; ++p) {
        std::string pid = "synth" + std::to_string(p);
        SolutionRecord ai;
        ai.id = pid + "_ai";
        ai.problem_id = pid;
        ai.label = Label::ai;
        ai.difficulty_score = 100 + static_cast<int>(rng.uniform_below(900));
        ai.correct = true;
        ai.source = syndetail::profile_a_program(rng);
        SolutionRecord human;
        human.id = pid + "_human";
        human.problem_id = pid;
        human.label = Label::human;
        human.difficulty_score = ai.difficulty_score;
        human.correct = rng.uniform_real() < 0.85;
        human.source = syndetail::profile_b_program(rng);
        corpus.records.push_back(std::move(ai));
        corpus.records.push_back(std::move(human));
    }
    return bin_difficulty(std::move(corpus), 3);
}

}  // namespace stylo
