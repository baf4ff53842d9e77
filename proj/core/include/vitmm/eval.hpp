#pragma once

// Standardized evaluation: explicit prompt templates, answer extraction at
// four progressively looser parsing levels, and the exact-match / ANLS /
// VQA-match metrics with per-level reports.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vitmm {

enum class Task { MMMU_MATHVISTA, CHARTQA, VQAV2, DOCVQA };

// Fills the task's prompt template. `options`, when given, are appended as
// lettered choices (A., B., ...); required iff the task is multiple-choice.
std::string render_prompt(Task task, const std::string &question,
                          const std::vector<std::string> *options = nullptr);

enum class ParsingLevel { BASELINE = 0, L1 = 1, L2 = 2, L3 = 3 };

ParsingLevel parse_level_name(const std::string &name);
std::string level_name(ParsingLevel level);

enum class AnswerType { LETTER, NUMBER, TEXT };

struct ParsedAnswer {
    std::optional<std::string> text;
    ParsingLevel matched_level = ParsingLevel::BASELINE;
};

// Rules apply cumulatively up to `level`; an earlier match is never
// overridden by a looser rule. L3 is reference-directed and requires the
// reference list. Extraction trims whitespace and one trailing period.
ParsedAnswer extract_answer(const std::string &response, ParsingLevel level,
                            AnswerType answer_type,
                            const std::vector<std::string> &references = {});

// Case-insensitive after trimming and one trailing-period strip; no numeric
// coercion ("6.0" vs "6" stays a mismatch).
int exact_match(const std::string &extracted, const std::string &reference);

std::size_t levenshtein(const std::string &a, const std::string &b);

// 1 - NL when NL < 0.5 else 0, NL = edit distance over max length after
// lowercasing; multi-reference takes the max.
double anls(const std::string &candidate, const std::string &reference);
double anls_multi(const std::string &candidate, const std::vector<std::string> &references);

std::string vqa_normalize(const std::string &s);

// min(matching references / 3, 1); a single-reference list degenerates to
// exact match.
double vqa_match(const std::string &candidate, const std::vector<std::string> &references);

struct PredictionRecord {
    std::string id;
    std::string response;
    std::vector<std::string> references;
    AnswerType answer_type = AnswerType::TEXT;
    std::string category; // optional
};

enum class Metric { EXACT, ANLS, VQA };

Metric parse_metric_name(const std::string &name);

double score_record(const PredictionRecord &rec, Metric metric, ParsingLevel level);

struct LevelReport {
    ParsingLevel level;
    double score = 0.0; // mean over scored records
    std::size_t count = 0;
    std::map<std::string, double> by_category;
    std::map<std::string, std::size_t> category_counts;
};

struct EvalReport {
    Metric metric;
    std::vector<LevelReport> levels;
    std::size_t records = 0;
    std::size_t errors = 0;
    std::vector<std::string> error_messages;
};

PredictionRecord record_from_json_line(const std::string &line);

// `jsonl` is the whole line-delimited input. Malformed records become error
// entries; the run continues. Empty input is an error.
EvalReport evaluate_records(const std::string &jsonl, Metric metric,
                            const std::vector<ParsingLevel> &levels);

std::string report_to_json(const EvalReport &report);
std::string report_to_table(const EvalReport &report);

} // namespace vitmm
