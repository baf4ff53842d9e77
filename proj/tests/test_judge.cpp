#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "vitmm/errors.hpp"
#include "vitmm/judge.hpp"

using namespace vitmm;

namespace {

struct TempImage {
    std::string path = "vitmm_judge_img.png";
    TempImage() {
        std::ofstream out(path, std::ios::binary);
        out << "not a real png, never decoded";
    }
    ~TempImage() { std::remove(path.c_str()); }
};

Conversation make_conv(const std::string &id, const std::string &category,
                       std::size_t turns, const std::string &image_path) {
    Conversation conv;
    conv.id = id;
    conv.category = category;
    for (std::size_t t = 0; t < turns; ++t) {
        ConversationTurn turn;
        turn.user = "question " + std::to_string(t) + " of " + id;
        turn.reference = "reference " + std::to_string(t);
        if (t == 0) turn.images = {image_path};
        conv.turns.push_back(std::move(turn));
    }
    return conv;
}

// stub chat-completion endpoint running on a loopback port
struct StubServer {
    httplib::Server svr;
    int port = 0;
    std::thread th;

    explicit StubServer(std::function<std::string(const std::string &)> reply) {
        svr.Post("/v1/chat/completions",
                 [reply](const httplib::Request &req, httplib::Response &res) {
                     nlohmann::json j = {
                         {"choices",
                          {{{"message", {{"role", "assistant"}, {"content", reply(req.body)}}}}}}};
                     res.set_content(j.dump(), "application/json");
                 });
        port = svr.bind_to_any_port("127.0.0.1");
        th = std::thread([this] { svr.listen_after_bind(); });
        svr.wait_until_ready();
    }
    ~StubServer() {
        svr.stop();
        th.join();
    }
    EndpointConfig endpoint() const {
        return {"http://127.0.0.1:" + std::to_string(port), "stub", ""};
    }
};

} // namespace

TEST_CASE("dataset parsing") {
    const std::string good = R"([
        {"id":"c1","category":"chart","turns":[
            {"user":"what is this?","images":["a.png"],"reference":"a chart"},
            {"user":"and the peak?","reference":"42"}]}
    ])";
    auto convs = conversations_from_json_text(good);
    REQUIRE(convs.size() == 1);
    CHECK(convs[0].turns.size() == 2);
    CHECK(convs[0].turns[0].images == std::vector<std::string>{"a.png"});
    CHECK(convs[0].turns[1].images.empty());

    CHECK_THROWS_AS(conversations_from_json_text("{}"), DataError);
    CHECK_THROWS_AS(conversations_from_json_text(
                        R"([{"id":"x","category":"misc","turns":[]}])"),
                    DataError);
    // first turn must carry an image
    CHECK_THROWS_AS(conversations_from_json_text(
                        R"([{"id":"x","category":"misc","turns":[{"user":"u","reference":"r"}]}])"),
                    DataError);
    // every turn needs a reference
    CHECK_THROWS_AS(
        conversations_from_json_text(
            R"([{"id":"x","category":"misc","turns":[{"user":"u","images":["a.png"],"reference":""}]}])"),
        DataError);
    CHECK_THROWS_AS(load_conversations("no_such_file.json"), DataError);
}

TEST_CASE("judge prompt structure") {
    Conversation conv = make_conv("c1", "table", 2, "img.png");
    const std::string p = build_judge_prompt(conv, 1, "my answer");

    CHECK(p.find("Please act as an impartial judge") == 0);
    CHECK(p.find("strictly following this format: \"[[rating]]\", for example: "
                 "\"Rating: [[5]]\".") != std::string::npos);
    CHECK(p.find("<|The Start of Conversation with User|>") != std::string::npos);
    CHECK(p.find("<|The End of Conversation with User|>") != std::string::npos);
    CHECK(p.find("<image> question 0 of c1") != std::string::npos);

    // earlier turn answered by its reference, judged turn shows both
    const auto hist = p.find("### Assistant:\nreference 0");
    const auto ref = p.find("### Reference answer:\nreference 1");
    const auto cand = p.find("### Assistant:\nmy answer");
    CHECK(hist != std::string::npos);
    CHECK(ref != std::string::npos);
    CHECK(cand != std::string::npos);
    CHECK(hist < ref);
    CHECK(ref < cand);

    // first turn: no history block at all
    const std::string p0 = build_judge_prompt(conv, 0, "x");
    CHECK(p0.find("### Assistant:\nreference 0") == std::string::npos);
    CHECK(p0.find("### Reference answer:\nreference 0") != std::string::npos);

    CHECK_THROWS_AS(build_judge_prompt(conv, 2, "x"), DataError);
    CHECK_THROWS_AS(build_judge_prompt(conv, 0, ""), DataError);
}

TEST_CASE("rating extraction") {
    CHECK(parse_rating("Rating: [[5]]").rating == 5);
    CHECK(parse_rating("some text [[ 8 ]] more").rating == 8);
    CHECK(parse_rating("draft [[3]] but final Rating: [[7]]").rating == 7); // last wins
    CHECK(parse_rating("[[10]]").rating == 10);
    CHECK_THROWS_AS(parse_rating("I give it a 7 out of 10"), DataError);
    CHECK_THROWS_AS(parse_rating("Rating: [[0]]"), DataError);
    CHECK_THROWS_AS(parse_rating("Rating: [[11]]"), DataError);
    CHECK_THROWS_AS(parse_rating("Rating: [[-3]]"), DataError);
}

TEST_CASE("candidate request carries teacher-forced history") {
    TempImage img;
    Conversation conv = make_conv("c1", "pdf", 3, img.path);
    EndpointConfig cfg{"http://localhost:1", "model-x", ""};
    nlohmann::json req = nlohmann::json::parse(build_candidate_request(conv, 2, cfg, 0.25));

    CHECK(req["model"] == "model-x");
    CHECK(req["temperature"] == 0.25);
    // user,assistant,user,assistant,user
    REQUIRE(req["messages"].size() == 5);
    CHECK(req["messages"][0]["role"] == "user");
    CHECK(req["messages"][1]["role"] == "assistant");
    CHECK(req["messages"][1]["content"] == "reference 0");
    CHECK(req["messages"][3]["content"] == "reference 1");
    CHECK(req["messages"][4]["role"] == "user");

    // first user message embeds the image as a base64 data URL
    const auto &parts = req["messages"][0]["content"];
    REQUIRE(parts.size() == 2);
    CHECK(parts[0]["type"] == "image_url");
    const std::string url = parts[0]["image_url"]["url"].get<std::string>();
    CHECK(url.rfind("data:image/png;base64,", 0) == 0);
    CHECK(parts[1]["text"] == "question 0 of c1");

    CHECK_THROWS_AS(build_candidate_request(conv, 3, cfg, 0.0), DataError);

    Conversation missing = make_conv("c2", "pdf", 1, "definitely_missing.png");
    CHECK_THROWS_AS(build_candidate_request(missing, 0, cfg, 0.0), DataError);
}

TEST_CASE("completion response parsing") {
    CHECK(parse_completion_response(
              R"({"choices":[{"message":{"role":"assistant","content":"hi"}}]})") == "hi");
    CHECK_THROWS_AS(parse_completion_response("garbage"), RemoteError);
    CHECK_THROWS_AS(parse_completion_response(R"({"choices":[]})"), RemoteError);
}

TEST_CASE("benchmark over stub endpoints") {
    TempImage img;
    std::vector<Conversation> dataset = {
        make_conv("c1", "chart", 1, img.path),
        make_conv("c2", "table", 2, img.path),
    };
    StubServer candidate([](const std::string &) { return "candidate answer"; });
    StubServer judge([](const std::string &) { return "Good. Rating: [[10]]"; });

    RunOptions opts;
    opts.concurrency = 2;
    opts.max_retries = 0;
    BenchmarkReport rep = run_benchmark(dataset, candidate.endpoint(), judge.endpoint(), opts);

    CHECK(rep.judged_turns == 3);
    CHECK(rep.error_count == 0);
    CHECK(rep.mean_rating == doctest::Approx(10.0));
    CHECK(rep.category_means.at("chart") == doctest::Approx(10.0));
    CHECK(rep.depth_means.at(1) == doctest::Approx(10.0));
    CHECK(rep.depth_means.at(2) == doctest::Approx(10.0));

    // runs are reproducible against deterministic endpoints
    BenchmarkReport rep2 = run_benchmark(dataset, candidate.endpoint(), judge.endpoint(), opts);
    CHECK(rep2.mean_rating == rep.mean_rating);
    CHECK(rep2.judged_turns == rep.judged_turns);

    const std::string js = benchmark_report_to_json(rep);
    CHECK(js.find("\"judged_turns\": 3") != std::string::npos);
    CHECK(benchmark_report_to_table(rep).find("mean rating 10.0000 over 3 turns") !=
          std::string::npos);
}

TEST_CASE("judge failures are excluded from the mean, not fatal") {
    TempImage img;
    std::vector<Conversation> dataset = {
        make_conv("ok", "misc", 1, img.path),
        make_conv("bad", "misc", 1, img.path),
    };
    // the candidate flags one conversation; the judge then emits no rating for it
    StubServer candidate([](const std::string &body) {
        return body.find("of bad") != std::string::npos ? std::string("TRIGGER")
                                                        : std::string("fine answer");
    });
    StubServer judge([](const std::string &body) {
        return body.find("TRIGGER") != std::string::npos ? std::string("cannot rate this")
                                                         : std::string("Rating: [[6]]");
    });

    RunOptions opts;
    opts.concurrency = 2;
    opts.max_retries = 0;
    BenchmarkReport rep = run_benchmark(dataset, candidate.endpoint(), judge.endpoint(), opts);
    CHECK(rep.judged_turns == 1);
    CHECK(rep.error_count == 1);
    CHECK(rep.mean_rating == doctest::Approx(6.0));
    bool found_error = false;
    for (const auto &r : rep.results)
        if (r.conversation_id == "bad") {
            CHECK_FALSE(r.rating.has_value());
            CHECK_FALSE(r.error.empty());
            found_error = true;
        }
    CHECK(found_error);
}

TEST_CASE("unreachable endpoints surface as per-turn errors") {
    TempImage img;
    std::vector<Conversation> dataset = {make_conv("c1", "misc", 1, img.path)};
    EndpointConfig dead{"http://127.0.0.1:1", "none", ""};
    RunOptions opts;
    opts.concurrency = 1;
    opts.max_retries = 0;
    BenchmarkReport rep = run_benchmark(dataset, dead, dead, opts);
    CHECK(rep.judged_turns == 0);
    CHECK(rep.error_count == 1);
    CHECK(rep.mean_rating == 0.0);
}

TEST_CASE("full-size turn distribution") {
    // 92 conversations: 69 single turn, 18 with two, 4 with three, 1 with four
    TempImage img;
    const char *cats[] = {"chart", "table", "pdf", "diagram", "misc"};
    std::vector<Conversation> dataset;
    auto add = [&](std::size_t count, std::size_t turns) {
        for (std::size_t i = 0; i < count; ++i)
            dataset.push_back(make_conv("c" + std::to_string(dataset.size()),
                                        cats[dataset.size() % 5], turns, img.path));
    };
    add(69, 1);
    add(18, 2);
    add(4, 3);
    add(1, 4);
    REQUIRE(dataset.size() == 92);

    StubServer candidate([](const std::string &) { return "answer"; });
    StubServer judge([](const std::string &) { return "Rating: [[7]]"; });
    RunOptions opts;
    opts.concurrency = 8;
    opts.max_retries = 0;
    BenchmarkReport rep = run_benchmark(dataset, candidate.endpoint(), judge.endpoint(), opts);

    CHECK(rep.judged_turns == 121); // 69 + 36 + 12 + 4
    CHECK(rep.error_count == 0);
    CHECK(rep.mean_rating == doctest::Approx(7.0));
    CHECK(rep.depth_means.size() == 4);
    CHECK(rep.category_means.size() == 5);
    CHECK(rep.results.size() == 121);
}
