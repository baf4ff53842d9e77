#include "vitmm/judge.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "vitmm/errors.hpp"

namespace vitmm {

namespace {

const char *kJudgeSystem =
    "Please act as an impartial judge and evaluate the quality of the response\n"
    "provided by an AI assistant to the most recent question given the previous\n"
    "conversation as context. Your evaluation should consider correctness and\n"
    "helpfulness. You will be given a reference answer and the assistant's answer.\n"
    "Begin your evaluation by comparing the assistant's answer with the reference\n"
    "answer. Identify and correct any mistakes. Be as objective as possible. After\n"
    "providing your explanation, you must rate the response on a scale of 1 to 10 by\n"
    "strictly following this format: \"[[rating]]\", for example: \"Rating: [[5]]\".";

const char kBase64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<unsigned char> &in) {
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < in.size(); i += 3) {
        unsigned v = unsigned(in[i]) << 16;
        if (i + 1 < in.size()) v |= unsigned(in[i + 1]) << 8;
        if (i + 2 < in.size()) v |= unsigned(in[i + 2]);
        out.push_back(kBase64Chars[(v >> 18) & 63]);
        out.push_back(kBase64Chars[(v >> 12) & 63]);
        out.push_back(i + 1 < in.size() ? kBase64Chars[(v >> 6) & 63] : '=');
        out.push_back(i + 2 < in.size() ? kBase64Chars[v & 63] : '=');
    }
    return out;
}

std::string mime_for_path(const std::string &path) {
    auto ends_with = [&](const char *suf) {
        const std::size_t n = std::strlen(suf);
        return path.size() >= n &&
               std::equal(path.end() - std::ptrdiff_t(n), path.end(), suf);
    };
    if (ends_with(".png")) return "image/png";
    if (ends_with(".jpg") || ends_with(".jpeg")) return "image/jpeg";
    return "application/octet-stream";
}

nlohmann::json image_content_part(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image referenced by dataset: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return {{"type", "image_url"},
            {"image_url",
             {{"url", "data:" + mime_for_path(path) + ";base64," + base64_encode(bytes)}}}};
}

} // namespace

std::vector<Conversation> conversations_from_json_text(const std::string &text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        throw DataError(std::string("dataset parse error: ") + e.what());
    }
    if (!j.is_array()) throw DataError("dataset must be a JSON array of conversations");
    std::vector<Conversation> out;
    for (const auto &cj : j) {
        Conversation conv;
        try {
            conv.id = cj.at("id").get<std::string>();
            conv.category = cj.at("category").get<std::string>();
            for (const auto &tj : cj.at("turns")) {
                ConversationTurn turn;
                turn.user = tj.at("user").get<std::string>();
                turn.reference = tj.at("reference").get<std::string>();
                if (tj.contains("images"))
                    for (const auto &im : tj["images"])
                        turn.images.push_back(im.get<std::string>());
                conv.turns.push_back(std::move(turn));
            }
        } catch (const nlohmann::json::exception &e) {
            throw DataError(std::string("malformed conversation: ") + e.what());
        }
        if (conv.turns.empty())
            throw DataError("conversation " + conv.id + " has no turns");
        if (conv.turns.front().images.empty())
            throw DataError("conversation " + conv.id + " first turn references no image");
        for (const auto &turn : conv.turns)
            if (turn.reference.empty())
                throw DataError("conversation " + conv.id + " has a turn without a reference");
        out.push_back(std::move(conv));
    }
    return out;
}

std::vector<Conversation> load_conversations(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return conversations_from_json_text(text);
}

std::string build_judge_prompt(const Conversation &conv, std::size_t turn,
                               const std::string &candidate_answer) {
    if (turn >= conv.turns.size())
        throw DataError("judge prompt turn index out of range");
    if (candidate_answer.empty())
        throw DataError("judge prompt requires a non-empty candidate answer");

    std::ostringstream out;
    out << kJudgeSystem << "\n\n";
    out << "<|The Start of Conversation with User|>\n";
    for (std::size_t t = 0; t <= turn; ++t) {
        const auto &ct = conv.turns[t];
        out << "\n### User:\n";
        for (std::size_t i = 0; i < ct.images.size(); ++i) out << "<image> ";
        out << ct.user << "\n";
        if (t < turn) {
            // teacher forcing: the reference stands in for the assistant
            out << "\n### Assistant:\n" << ct.reference << "\n";
        } else {
            out << "\n### Reference answer:\n" << ct.reference << "\n";
            out << "\n### Assistant:\n" << candidate_answer << "\n";
        }
    }
    out << "\n<|The End of Conversation with User|>\n";
    return out.str();
}

JudgeRating parse_rating(const std::string &judge_output) {
    static const std::regex re(R"(\[\[\s*(-?\d+)\s*\]\])");
    std::optional<long> last;
    for (auto it = std::sregex_iterator(judge_output.begin(), judge_output.end(), re);
         it != std::sregex_iterator(); ++it)
        last = std::stol((*it)[1].str());
    if (!last) throw DataError("judge output contains no [[rating]]");
    if (*last < 1 || *last > 10)
        throw DataError("judge rating " + std::to_string(*last) + " outside 1..10");
    return JudgeRating{0, int(*last), judge_output};
}

std::string ChatClient::complete(const std::string &request_body) const {
    httplib::Client cli(cfg_.base_url);
    cli.set_connection_timeout(10, 0);
    cli.set_read_timeout(60, 0);
    httplib::Headers headers;
    if (!cfg_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    auto res = cli.Post("/v1/chat/completions", headers, request_body, "application/json");
    if (!res)
        throw RemoteError("endpoint unreachable: " + cfg_.base_url);
    if (res->status != 200)
        throw RemoteError("endpoint " + cfg_.base_url + " returned status " +
                          std::to_string(res->status));
    return parse_completion_response(res->body);
}

std::string build_candidate_request(const Conversation &conv, std::size_t turn,
                                    const EndpointConfig &cfg, double temperature) {
    if (turn >= conv.turns.size())
        throw DataError("candidate request turn index out of range");
    nlohmann::json messages = nlohmann::json::array();
    for (std::size_t t = 0; t <= turn; ++t) {
        const auto &ct = conv.turns[t];
        nlohmann::json content = nlohmann::json::array();
        for (const auto &img : ct.images) content.push_back(image_content_part(img));
        content.push_back({{"type", "text"}, {"text", ct.user}});
        messages.push_back({{"role", "user"}, {"content", content}});
        if (t < turn) // teacher-forced history
            messages.push_back({{"role", "assistant"}, {"content", ct.reference}});
    }
    nlohmann::json req = {{"model", cfg.model},
                          {"messages", messages},
                          {"temperature", temperature}};
    return req.dump();
}

std::string build_judge_request(const std::string &judge_prompt, const EndpointConfig &cfg,
                                double temperature) {
    nlohmann::json req = {
        {"model", cfg.model},
        {"messages", {{{"role", "user"}, {"content", judge_prompt}}}},
        {"temperature", temperature}};
    return req.dump();
}

std::string parse_completion_response(const std::string &body) {
    try {
        nlohmann::json j = nlohmann::json::parse(body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception &e) {
        throw RemoteError(std::string("malformed chat-completion response: ") + e.what());
    }
}

namespace {

std::string complete_with_retries(const ChatClient &client, const std::string &body,
                                  const RunOptions &opts) {
    int attempt = 0;
    for (;;) {
        try {
            return client.complete(body);
        } catch (const RemoteError &) {
            if (attempt >= opts.max_retries) throw;
            std::this_thread::sleep_for(
                std::chrono::milliseconds(opts.backoff_ms << attempt));
            ++attempt;
        }
    }
}

} // namespace

BenchmarkReport run_benchmark(const std::vector<Conversation> &dataset,
                              const EndpointConfig &candidate, const EndpointConfig &judge,
                              const RunOptions &opts) {
    struct Job {
        const Conversation *conv;
        std::size_t turn;
    };
    std::vector<Job> jobs;
    for (const auto &conv : dataset)
        for (std::size_t t = 0; t < conv.turns.size(); ++t) jobs.push_back({&conv, t});

    ChatClient candidate_client(candidate);
    ChatClient judge_client(judge);

    std::vector<TurnResult> results(jobs.size());
    std::mutex mtx;
    std::size_t next = 0;

    auto worker = [&] {
        for (;;) {
            std::size_t idx;
            {
                std::lock_guard<std::mutex> lock(mtx);
                if (next >= jobs.size()) return;
                idx = next++;
            }
            const Job &job = jobs[idx];
            TurnResult res;
            res.conversation_id = job.conv->id;
            res.category = job.conv->category;
            res.turn = job.turn;
            res.depth = job.conv->turns.size();
            try {
                const std::string creq =
                    build_candidate_request(*job.conv, job.turn, candidate, opts.temperature);
                const std::string answer =
                    complete_with_retries(candidate_client, creq, opts);
                if (answer.empty()) throw RemoteError("candidate returned empty answer");
                const std::string prompt = build_judge_prompt(*job.conv, job.turn, answer);
                const std::string jreq = build_judge_request(prompt, judge, opts.temperature);
                const std::string verdict = complete_with_retries(judge_client, jreq, opts);
                JudgeRating rating = parse_rating(verdict);
                rating.turn = job.turn;
                res.rating = rating.rating;
            } catch (const std::exception &e) {
                res.error = e.what();
            }
            results[idx] = std::move(res);
        }
    };

    const std::size_t nthreads = std::max<std::size_t>(1, std::min(opts.concurrency, jobs.size()));
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < nthreads; ++i) threads.emplace_back(worker);
    for (auto &t : threads) t.join();

    BenchmarkReport report;
    report.results = std::move(results);
    double sum = 0.0;
    std::map<std::string, std::pair<double, std::size_t>> cat;
    std::map<std::size_t, std::pair<double, std::size_t>> depth;
    for (const auto &r : report.results) {
        if (!r.rating) {
            ++report.error_count;
            continue;
        }
        sum += *r.rating;
        ++report.judged_turns;
        cat[r.category].first += *r.rating;
        cat[r.category].second += 1;
        depth[r.depth].first += *r.rating;
        depth[r.depth].second += 1;
    }
    report.mean_rating = report.judged_turns ? sum / double(report.judged_turns) : 0.0;
    for (const auto &[k, v] : cat) report.category_means[k] = v.first / double(v.second);
    for (const auto &[k, v] : depth) report.depth_means[k] = v.first / double(v.second);
    return report;
}

std::string benchmark_report_to_json(const BenchmarkReport &report) {
    nlohmann::json j;
    j["mean_rating"] = report.mean_rating;
    j["judged_turns"] = report.judged_turns;
    j["errors"] = report.error_count;
    j["category_means"] = report.category_means;
    j["depth_means"] = nlohmann::json::object();
    for (const auto &[k, v] : report.depth_means)
        j["depth_means"][std::to_string(k)] = v;
    j["turns"] = nlohmann::json::array();
    for (const auto &r : report.results) {
        nlohmann::json t = {{"conversation", r.conversation_id},
                            {"category", r.category},
                            {"turn", r.turn}};
        if (r.rating) t["rating"] = *r.rating;
        else t["error"] = r.error;
        j["turns"].push_back(t);
    }
    return j.dump(2);
}

std::string benchmark_report_to_table(const BenchmarkReport &report) {
    std::ostringstream out;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "mean rating %.4f over %zu turns (%zu errors)\n",
                  report.mean_rating, report.judged_turns, report.error_count);
    out << buf;
    for (const auto &[cat, mean] : report.category_means) {
        std::snprintf(buf, sizeof(buf), "  category %-10s %.4f\n", cat.c_str(), mean);
        out << buf;
    }
    for (const auto &[d, mean] : report.depth_means) {
        std::snprintf(buf, sizeof(buf), "  depth %zu turns      %.4f\n", d, mean);
        out << buf;
    }
    return out.str();
}

} // namespace vitmm
