#pragma once

// Judged-benchmark orchestration: query a candidate chat-completion
// endpoint for every conversation turn with teacher-forced reference
// history, then an independent judge endpoint for a 1..10 rating, and
// aggregate per category and per turn depth.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vitmm {

struct ConversationTurn {
    std::string user;
    std::vector<std::string> images; // file paths; first turn has >= 1
    std::string reference;
};

struct Conversation {
    std::string id;
    std::string category; // chart|table|pdf|diagram|misc
    std::vector<ConversationTurn> turns;
};

std::vector<Conversation> load_conversations(const std::string &path);
std::vector<Conversation> conversations_from_json_text(const std::string &text);

// Judge prompt for turn k: system text, then past turns with the reference
// in the assistant slot (teacher forcing), then turn k with the reference
// in the reference slot and the candidate answer in the assistant slot.
std::string build_judge_prompt(const Conversation &conv, std::size_t turn,
                               const std::string &candidate_answer);

struct JudgeRating {
    std::size_t turn = 0;
    int rating = 0; // 1..10
    std::string raw;
};

// Extracts the last "[[n]]" (with or without a "Rating:" prefix).
JudgeRating parse_rating(const std::string &judge_output);

struct EndpointConfig {
    std::string base_url; // e.g. http://127.0.0.1:8080
    std::string model = "default";
    std::string api_key; // empty: no Authorization header
};

struct RunOptions {
    std::size_t concurrency = 4;
    int max_retries = 3;
    int backoff_ms = 100; // doubled per retry
    double temperature = 0.0;
};

struct TurnResult {
    std::string conversation_id;
    std::string category;
    std::size_t turn = 0;
    std::size_t depth = 0; // total turns in the conversation
    std::optional<int> rating;
    std::string error; // set when rating is absent
};

struct BenchmarkReport {
    double mean_rating = 0.0;
    std::size_t judged_turns = 0;
    std::size_t error_count = 0;
    std::map<std::string, double> category_means;
    std::map<std::size_t, double> depth_means;
    std::vector<TurnResult> results;
};

class ChatClient {
  public:
    explicit ChatClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {}

    // Throws RemoteError on transport or protocol failure.
    std::string complete(const std::string &request_body) const;

    const EndpointConfig &config() const { return cfg_; }

  private:
    EndpointConfig cfg_;
};

std::string build_candidate_request(const Conversation &conv, std::size_t turn,
                                    const EndpointConfig &cfg, double temperature);
std::string build_judge_request(const std::string &judge_prompt, const EndpointConfig &cfg,
                                double temperature);
std::string parse_completion_response(const std::string &body);

BenchmarkReport run_benchmark(const std::vector<Conversation> &dataset,
                              const EndpointConfig &candidate, const EndpointConfig &judge,
                              const RunOptions &opts = {});

std::string benchmark_report_to_json(const BenchmarkReport &report);
std::string benchmark_report_to_table(const BenchmarkReport &report);

} // namespace vitmm
