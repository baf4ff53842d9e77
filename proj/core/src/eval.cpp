#include "vitmm/eval.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "vitmm/errors.hpp"

namespace vitmm {

namespace {

const char *kPromptMmmuMathvista =
    "Analyze the image and question carefully, using step-by-step reasoning.\n"
    "First, describe any image provided in detail. Then, present your reasoning.\n"
    "And finally your final answer in this format:\n"
    "Final Answer: <answer>\n"
    "where <answer> is:\n"
    "- The single correct letter choice A, B, C, D, E, F, etc. when options are provided.\n"
    "Only include the letter.\n"
    "- Your direct answer if no options are given, as a single phrase or number.\n"
    "- If your answer is a number, only include the number without any unit.\n"
    "- If your answer is a word or phrase, do not paraphrase or reformat the text\n"
    "you see in the image.\n"
    "- You cannot answer that the question is unanswerable. You must either pick an\n"
    "option or provide a direct answer.\n"
    "IMPORTANT: Remember, to end your answer with Final Answer: <answer>.";

const char *kPromptChartqa =
    "Analyze the image and question carefully, using step-by-step reasoning.\n"
    "First, describe any image provided in detail. Then, present your reasoning.\n"
    "And finally your final answer in this format:\n"
    "Final Answer: <answer>\n"
    "where <answer> follows the following instructions:\n"
    "- <answer> should be a single phrase or number.\n"
    "- <answer> should not paraphrase or reformat the text in the image.\n"
    "- If <answer> is a ratio, it should be a decimal value like 0.25 instead of 1:4.\n"
    "- If the question is a Yes/No question, <answer> should be Yes/No.\n"
    "- If <answer> is a number, it should not contain any units.\n"
    "- If <answer> is a percentage, it should include a %.\n"
    "- If <answer> is an entity, it should include the full label from the graph.\n"
    "IMPORTANT: Remember, to end your answer with Final Answer: <answer>.";

const char *kPromptVqav2 =
    "- Answer the question using a single word, number, or short phrase.\n"
    "  Use as few words as possible.\n"
    "- If the answer is a number, report it as a number, i.e. 2, not Two,\n"
    "  and only include the number without any unit.\n"
    "- If the question is Yes/No, answer with Yes/No, and nothing else\n"
    "  (no likely, unknown, etc.).\n"
    "- You cannot answer that the question is unanswerable. You must answer.";

const char *kPromptDocvqa = "Answer the question using a single word or phrase.";

std::string trim(const std::string &s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

// Trim whitespace and strip one trailing period.
std::string clean_answer(const std::string &s) {
    std::string t = trim(s);
    if (!t.empty() && t.back() == '.') t.pop_back();
    return trim(t);
}

// Answer following the last case-insensitive occurrence of `marker`, valid
// only when it runs to the end of the response (no later line of prose).
std::optional<std::string> tail_after_marker(const std::string &response,
                                             const std::string &marker) {
    const std::string rlow = lower(response), mlow = lower(marker);
    const std::size_t pos = rlow.rfind(mlow);
    if (pos == std::string::npos) return std::nullopt;
    std::string candidate = trim(response.substr(pos + marker.size()));
    // markdown-decorated answers belong to the L2 rule
    if (candidate.empty() || candidate.find('\n') != std::string::npos ||
        candidate.find('*') != std::string::npos)
        return std::nullopt;
    candidate = clean_answer(candidate);
    if (candidate.empty()) return std::nullopt;
    return candidate;
}

// Markdown-decorated answer markers: "**Answer**", "**Answer:**",
// "*Answer: <ANSWER>*" and the "Final Answer" variants.
std::optional<std::string> markdown_answer(const std::string &response) {
    static const std::regex re(R"(\*+[ \t]*(?:final[ \t]+)?answer[ \t]*:?[ \t]*\**[ \t]*:?)",
                               std::regex::icase);
    std::optional<std::size_t> last_end;
    for (auto it = std::sregex_iterator(response.begin(), response.end(), re);
         it != std::sregex_iterator(); ++it)
        last_end = std::size_t(it->position()) + std::size_t(it->length());
    if (!last_end) return std::nullopt;
    std::string candidate = response.substr(*last_end);
    candidate.erase(std::remove(candidate.begin(), candidate.end(), '*'), candidate.end());
    candidate = trim(candidate);
    if (candidate.empty() || candidate.find('\n') != std::string::npos)
        return std::nullopt;
    candidate = clean_answer(candidate);
    if (candidate.empty()) return std::nullopt;
    return candidate;
}

std::string regex_escape(const std::string &s) {
    static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
    return std::regex_replace(s, special, R"(\$&)");
}

std::string strip_commas(const std::string &s) {
    std::string out;
    for (char c : s)
        if (c != ',') out.push_back(c);
    return out;
}

std::string with_thousands_commas(const std::string &digits) {
    std::string out;
    const std::size_t n = digits.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && (n - i) % 3 == 0) out.push_back(',');
        out.push_back(digits[i]);
    }
    return out;
}

// Reference-directed anywhere-in-response search. Deliberately generous for
// numbers: a plain digit-substring scan, so "6000" satisfies reference "6".
std::optional<std::string> search_reference(const std::string &response, AnswerType type,
                                            const std::string &reference) {
    const std::string ref = clean_answer(reference);
    if (ref.empty()) return std::nullopt;
    switch (type) {
        case AnswerType::LETTER: {
            const std::regex re("\\b" + regex_escape(ref) + "\\b");
            if (std::regex_search(response, re)) return ref;
            return std::nullopt;
        }
        case AnswerType::NUMBER: {
            const std::string plain = strip_commas(ref);
            if (response.find(plain) != std::string::npos) return ref;
            if (plain.find_first_not_of("0123456789") == std::string::npos && plain.size() > 3) {
                if (response.find(with_thousands_commas(plain)) != std::string::npos) return ref;
            }
            return std::nullopt;
        }
        case AnswerType::TEXT: {
            const std::regex re("\\b" + regex_escape(lower(ref)) + "\\b");
            if (std::regex_search(lower(response), re)) return ref;
            return std::nullopt;
        }
    }
    return std::nullopt;
}

} // namespace

std::string render_prompt(Task task, const std::string &question,
                          const std::vector<std::string> *options) {
    if (options && task != Task::MMMU_MATHVISTA)
        throw ConfigError("options are only valid for multiple-choice tasks");
    switch (task) {
        case Task::MMMU_MATHVISTA: {
            std::string out = "Question: " + question + "\n";
            if (options) {
                for (std::size_t i = 0; i < options->size(); ++i)
                    out += std::string(1, char('A' + i)) + ". " + (*options)[i] + "\n";
            }
            out += "\n";
            out += kPromptMmmuMathvista;
            return out;
        }
        case Task::CHARTQA:
            return "Question: " + question + "\n\n" + kPromptChartqa;
        case Task::VQAV2:
            return std::string(kPromptVqav2) + "\n" + question;
        case Task::DOCVQA:
            return std::string(kPromptDocvqa) + "\n" + question;
    }
    throw ConfigError("unknown task");
}

ParsingLevel parse_level_name(const std::string &name) {
    const std::string n = lower(trim(name));
    if (n == "baseline") return ParsingLevel::BASELINE;
    if (n == "l1") return ParsingLevel::L1;
    if (n == "l2") return ParsingLevel::L2;
    if (n == "l3") return ParsingLevel::L3;
    throw ConfigError("unknown parsing level: " + name);
}

std::string level_name(ParsingLevel level) {
    switch (level) {
        case ParsingLevel::BASELINE: return "baseline";
        case ParsingLevel::L1: return "l1";
        case ParsingLevel::L2: return "l2";
        case ParsingLevel::L3: return "l3";
    }
    return "?";
}

ParsedAnswer extract_answer(const std::string &response, ParsingLevel level,
                            AnswerType answer_type,
                            const std::vector<std::string> &references) {
    if (auto a = tail_after_marker(response, "Final Answer:"))
        return {a, ParsingLevel::BASELINE};
    if (level >= ParsingLevel::L1)
        if (auto a = tail_after_marker(response, "Answer:"))
            return {a, ParsingLevel::L1};
    if (level >= ParsingLevel::L2)
        if (auto a = markdown_answer(response))
            return {a, ParsingLevel::L2};
    if (level >= ParsingLevel::L3)
        for (const auto &ref : references)
            if (auto a = search_reference(response, answer_type, ref))
                return {a, ParsingLevel::L3};
    return {std::nullopt, level};
}

int exact_match(const std::string &extracted, const std::string &reference) {
    return lower(clean_answer(extracted)) == lower(clean_answer(reference)) ? 1 : 0;
}

std::size_t levenshtein(const std::string &a, const std::string &b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double anls(const std::string &candidate, const std::string &reference) {
    const std::string a = lower(candidate), b = lower(reference);
    const std::size_t mx = std::max(a.size(), b.size());
    if (mx == 0) return 1.0;
    const double nl = double(levenshtein(a, b)) / double(mx);
    return nl < 0.5 ? 1.0 - nl : 0.0;
}

double anls_multi(const std::string &candidate, const std::vector<std::string> &references) {
    double best = 0.0;
    for (const auto &ref : references) best = std::max(best, anls(candidate, ref));
    return best;
}

std::string vqa_normalize(const std::string &s) {
    static const std::map<std::string, std::string> numbers = {
        {"zero", "0"}, {"one", "1"}, {"two", "2"},   {"three", "3"}, {"four", "4"},
        {"five", "5"}, {"six", "6"}, {"seven", "7"}, {"eight", "8"}, {"nine", "9"},
        {"ten", "10"}};
    std::string depunct;
    for (char c : lower(s)) {
        if (std::ispunct(static_cast<unsigned char>(c))) continue;
        depunct.push_back(c);
    }
    std::istringstream words(depunct);
    std::string word, out;
    while (words >> word) {
        auto it = numbers.find(word);
        if (!out.empty()) out.push_back(' ');
        out += (it != numbers.end()) ? it->second : word;
    }
    return out;
}

double vqa_match(const std::string &candidate, const std::vector<std::string> &references) {
    if (references.empty()) throw DataError("vqa_match requires at least one reference");
    const std::string cand = vqa_normalize(candidate);
    std::size_t matches = 0;
    for (const auto &ref : references)
        if (cand == vqa_normalize(ref)) ++matches;
    if (references.size() == 1) return matches ? 1.0 : 0.0;
    return std::min(double(matches) / 3.0, 1.0);
}

Metric parse_metric_name(const std::string &name) {
    const std::string n = lower(trim(name));
    if (n == "exact") return Metric::EXACT;
    if (n == "anls") return Metric::ANLS;
    if (n == "vqa") return Metric::VQA;
    throw ConfigError("unknown metric: " + name);
}

double score_record(const PredictionRecord &rec, Metric metric, ParsingLevel level) {
    const ParsedAnswer parsed =
        extract_answer(rec.response, level, rec.answer_type, rec.references);
    if (!parsed.text) return 0.0;
    switch (metric) {
        case Metric::EXACT:
            for (const auto &ref : rec.references)
                if (exact_match(*parsed.text, ref)) return 1.0;
            return 0.0;
        case Metric::ANLS:
            return anls_multi(*parsed.text, rec.references);
        case Metric::VQA:
            return vqa_match(*parsed.text, rec.references);
    }
    return 0.0;
}

PredictionRecord record_from_json_line(const std::string &line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
        throw DataError(std::string("record parse error: ") + e.what());
    }
    PredictionRecord rec;
    try {
        rec.id = j.at("id").get<std::string>();
        rec.response = j.at("response").get<std::string>();
        const auto &ref = j.at("reference");
        if (ref.is_string()) {
            rec.references.push_back(ref.get<std::string>());
        } else if (ref.is_array()) {
            for (const auto &r : ref) rec.references.push_back(r.get<std::string>());
        } else {
            throw DataError("reference must be a string or array of strings");
        }
        const std::string t = lower(j.at("answer_type").get<std::string>());
        if (t == "letter") rec.answer_type = AnswerType::LETTER;
        else if (t == "number") rec.answer_type = AnswerType::NUMBER;
        else if (t == "text") rec.answer_type = AnswerType::TEXT;
        else throw DataError("unknown answer_type: " + t);
        if (j.contains("category")) rec.category = j["category"].get<std::string>();
    } catch (const nlohmann::json::exception &e) {
        throw DataError(std::string("record field error: ") + e.what());
    }
    if (rec.references.empty()) throw DataError("record has no references");
    return rec;
}

EvalReport evaluate_records(const std::string &jsonl, Metric metric,
                            const std::vector<ParsingLevel> &levels) {
    std::vector<PredictionRecord> records;
    EvalReport report;
    report.metric = metric;

    std::istringstream in(jsonl);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            records.push_back(record_from_json_line(line));
        } catch (const std::exception &e) {
            ++report.errors;
            report.error_messages.push_back("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (records.empty() && report.errors == 0)
        throw DataError("empty evaluation input");

    report.records = records.size();
    for (ParsingLevel level : levels) {
        LevelReport lr;
        lr.level = level;
        std::map<std::string, double> cat_sum;
        double total = 0.0;
        for (const auto &rec : records) {
            const double s = score_record(rec, metric, level);
            total += s;
            if (!rec.category.empty()) {
                cat_sum[rec.category] += s;
                lr.category_counts[rec.category]++;
            }
        }
        lr.count = records.size();
        lr.score = records.empty() ? 0.0 : total / double(records.size());
        for (const auto &[cat, sum] : cat_sum)
            lr.by_category[cat] = sum / double(lr.category_counts[cat]);
        report.levels.push_back(std::move(lr));
    }
    return report;
}

std::string report_to_json(const EvalReport &report) {
    nlohmann::json j;
    switch (report.metric) {
        case Metric::EXACT: j["metric"] = "exact"; break;
        case Metric::ANLS: j["metric"] = "anls"; break;
        case Metric::VQA: j["metric"] = "vqa"; break;
    }
    j["records"] = report.records;
    j["errors"] = report.errors;
    j["error_messages"] = report.error_messages;
    j["levels"] = nlohmann::json::object();
    for (const auto &lr : report.levels) {
        nlohmann::json lvl;
        lvl["score"] = lr.score;
        lvl["count"] = lr.count;
        lvl["by_category"] = lr.by_category;
        j["levels"][level_name(lr.level)] = lvl;
    }
    return j.dump(2);
}

std::string report_to_table(const EvalReport &report) {
    std::ostringstream out;
    out << "level      score     count\n";
    for (const auto &lr : report.levels) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%-10s %-9.4f %zu\n", level_name(lr.level).c_str(),
                      lr.score, lr.count);
        out << buf;
        for (const auto &[cat, score] : lr.by_category) {
            std::snprintf(buf, sizeof(buf), "  %-12s %.4f (%zu)\n", cat.c_str(), score,
                          lr.category_counts.at(cat));
            out << buf;
        }
    }
    out << "records " << report.records << ", errors " << report.errors << "\n";
    return out.str();
}

} // namespace vitmm
