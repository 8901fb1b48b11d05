#include "doctest.h"

#include <random>

#include "dve/refinement.hpp"
#include "test_util.hpp"

using namespace dve;

namespace {

// Mock responses carry a round counter: the initial call answers
// "update-0|<hypothesis>", and each refinement call parses the prior counter
// out of the prompt and answers "update-<k+1>|<hypothesis>". Stateless, so it
// is safe under concurrent batch workers.
std::string scripted_response(const LvlmRequest& request) {
    const std::string& prompt = request.messages.at(0).text;
    std::string hypothesis;
    if (const auto pos = prompt.find("Hypothesis: "); pos != std::string::npos) {
        const auto end = prompt.find('\n', pos);
        hypothesis = prompt.substr(pos + 12, end - (pos + 12));
    }
    int round = 0;
    if (const auto pos = prompt.find("update-"); pos != std::string::npos) {
        round = std::stoi(prompt.substr(pos + 7)) + 1;
    }
    return "update-" + std::to_string(round) + "|" + hypothesis;
}

int parse_round(const std::string& update_text) {
    REQUIRE(update_text.rfind("update-", 0) == 0);
    return std::stoi(update_text.substr(7));
}

std::string parse_hypothesis(const std::string& update_text) {
    return update_text.substr(update_text.find('|') + 1);
}

class StubScorer final : public TripletScorer {
public:
    using Fn = std::function<double(const std::string& hypothesis, int round)>;

    explicit StubScorer(Fn fn) : fn_(std::move(fn)) {}

    double score(const ImagePremise&, const Hypothesis&,
                 const std::string& update_text) const override {
        return fn_(parse_hypothesis(update_text), parse_round(update_text));
    }

private:
    Fn fn_;
};

RefinementRequest request_for(const std::string& hypothesis, Goal goal = Goal::strengthen) {
    return RefinementRequest{ImagePremise{"img-" + hypothesis, "", {}, {}},
                             Hypothesis{hypothesis}, goal, std::nullopt};
}

}  // namespace

TEST_SUITE("refinement") {

TEST_CASE("critique reproduces the four anchor verdicts") {
    CHECK(critique(3.6413, Goal::strengthen, 1.0) == Verdict::pass);
    CHECK(critique(0.5, Goal::strengthen, 1.0) == Verdict::low_quality);
    CHECK(critique(-0.5, Goal::weaken, 1.0) == Verdict::low_quality);
    CHECK(critique(-2.9240, Goal::weaken, 1.0) == Verdict::pass);
}

TEST_CASE("critique boundary is inclusive") {
    CHECK(critique(1.0, Goal::strengthen, 1.0) == Verdict::pass);
    CHECK(critique(-1.0, Goal::weaken, 1.0) == Verdict::pass);
    CHECK(critique(0.9999, Goal::strengthen, 1.0) == Verdict::low_quality);
    CHECK(critique(-0.9999, Goal::weaken, 1.0) == Verdict::low_quality);
    CHECK_THROWS_AS(critique(0.0, Goal::strengthen, 0.0), ConfigError);
    CHECK_THROWS_AS(critique(0.0, Goal::strengthen, -1.0), ConfigError);
}

TEST_CASE("critique is antisymmetric across goals") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> score(-5.0, 5.0);
    std::uniform_real_distribution<double> eta(0.1, 3.0);
    for (int t = 0; t < 200; ++t) {
        const double s = score(rng);
        const double e = eta(rng);
        CHECK(critique(s, Goal::strengthen, e) == critique(-s, Goal::weaken, e));
    }
}

TEST_CASE("templates render the goal word and prior score verbatim") {
    const std::string initial =
        render_template(default_initial_template(), Hypothesis{"a dog runs"}, Goal::strengthen);
    CHECK(initial.find("strengthen") != std::string::npos);
    CHECK(initial.find("a dog runs") != std::string::npos);

    const std::string weaken_prompt =
        render_template(default_initial_template(), Hypothesis{"a dog runs"}, Goal::weaken);
    CHECK(weaken_prompt.find("weaken") != std::string::npos);

    const std::string refine = render_template(default_refine_template(),
                                               Hypothesis{"a dog runs"}, Goal::strengthen,
                                               "prior text", 0.1234);
    CHECK(refine.find("prior text") != std::string::npos);
    CHECK(refine.find("0.1234") != std::string::npos);
}

TEST_CASE("generate_initial passes mock text through and rejects empty output") {
    RefinementConfig config;
    MockLvlmClient fixed([](const LvlmRequest&) { return "a fixed update"; });
    const Update update = generate_initial(fixed, ImagePremise{"img", "", {}, {}},
                                           Hypothesis{"h"}, Goal::strengthen, config);
    CHECK(update.text == "a fixed update");
    CHECK_FALSE(update.label.has_value());

    MockLvlmClient empty([](const LvlmRequest&) { return "   "; });
    CHECK_THROWS_AS(generate_initial(empty, ImagePremise{"img", "", {}, {}}, Hypothesis{"h"},
                                     Goal::strengthen, config),
                    EmptyGeneration);
}

TEST_CASE("loop passes at refinement round 1 on the 0.2 + 1.5k schedule") {
    MockLvlmClient client(scripted_response);
    StubScorer scorer([](const std::string&, int round) { return 0.2 + 1.5 * round; });
    RefinementConfig config;  // eta 1, M 3

    const RefinementTrace trace = refine_loop(client, scorer, request_for("hyp"), config);
    REQUIRE(trace.rounds.size() == 2);
    CHECK(trace.rounds[0].score == doctest::Approx(0.2));
    CHECK(trace.rounds[0].verdict == Verdict::low_quality);
    CHECK(trace.rounds[1].score == doctest::Approx(1.7));
    CHECK(trace.rounds[1].verdict == Verdict::pass);
    CHECK(trace.status == TraceStatus::passed);
    CHECK(trace.refinements_used() == 1);
    CHECK(client.call_count() == 2);
}

TEST_CASE("a never-passing schedule exhausts after M + 1 rounds") {
    MockLvlmClient client(scripted_response);
    StubScorer scorer([](const std::string&, int) { return 0.0; });
    RefinementConfig config;

    const RefinementTrace trace = refine_loop(client, scorer, request_for("hyp"), config);
    CHECK(trace.rounds.size() == 4);  // initial + 3 refinements
    CHECK(trace.status == TraceStatus::exhausted);
    CHECK(client.call_count() == config.max_rounds + 1);
    for (std::size_t i = 0; i < trace.rounds.size(); ++i) {
        CHECK(trace.rounds[i].index == i);
        CHECK(trace.rounds[i].verdict == Verdict::low_quality);
    }
}

TEST_CASE("an immediately passing initial update makes no refinement calls") {
    MockLvlmClient client(scripted_response);
    StubScorer scorer([](const std::string&, int) { return 2.0; });
    RefinementConfig config;

    const RefinementTrace trace = refine_loop(client, scorer, request_for("hyp"), config);
    CHECK(trace.rounds.size() == 1);
    CHECK(trace.status == TraceStatus::passed);
    CHECK(trace.refinements_used() == 0);
    CHECK(client.call_count() == 1);
}

TEST_CASE("non-terminal verdicts are always low_quality") {
    MockLvlmClient client(scripted_response);
    StubScorer scorer([](const std::string&, int round) { return round >= 2 ? 3.0 : -1.0; });
    RefinementConfig config;
    const RefinementTrace trace = refine_loop(client, scorer, request_for("hyp"), config);
    REQUIRE(trace.rounds.size() == 3);
    for (std::size_t i = 0; i + 1 < trace.rounds.size(); ++i) {
        CHECK(trace.rounds[i].verdict == Verdict::low_quality);
    }
    CHECK(trace.rounds.back().verdict == Verdict::pass);
}

TEST_CASE("client failure aborts with the partial trace preserved") {
    std::atomic<int> calls{0};
    MockLvlmClient client([&](const LvlmRequest& request) -> std::string {
        if (calls.fetch_add(1) >= 1) throw TransportError("endpoint unreachable");
        return scripted_response(request);
    });
    StubScorer scorer([](const std::string&, int) { return 0.0; });
    RefinementConfig config;

    const RefinementTrace trace = refine_loop(client, scorer, request_for("hyp"), config);
    CHECK(trace.status == TraceStatus::aborted);
    CHECK(trace.rounds.size() == 1);  // the scored initial round survives
    CHECK(trace.error.find("endpoint unreachable") != std::string::npos);
}

TEST_CASE("empty generation mid-loop also aborts") {
    MockLvlmClient client([](const LvlmRequest&) { return ""; });
    StubScorer scorer([](const std::string&, int) { return 0.0; });
    RefinementConfig config;
    const RefinementTrace trace = refine_loop(client, scorer, request_for("hyp"), config);
    CHECK(trace.status == TraceStatus::aborted);
    CHECK(trace.rounds.empty());
}

TEST_CASE("batch of 10 mock requests gives cumulative rates 0.7, 0.9, 0.9") {
    // requests 0-4 pass at refinement 1, 5-6 at the initial call, 7-8 at
    // refinement 2, 9 never.
    auto schedule = [](const std::string& hypothesis, int round) -> double {
        const int i = std::stoi(hypothesis.substr(4));
        if (i <= 4) return round >= 1 ? 2.0 : 0.0;
        if (i <= 6) return 2.0;
        if (i <= 8) return round >= 2 ? 2.0 : 0.0;
        return 0.0;
    };
    MockLvlmClient client(scripted_response);
    StubScorer scorer(schedule);
    RefinementConfig config;

    std::vector<RefinementRequest> requests;
    for (int i = 0; i < 10; ++i) requests.push_back(request_for("req-" + std::to_string(i)));

    const BatchResult result = batch_refine(client, scorer, requests, config);
    CHECK(result.summary.total == 10);
    CHECK(result.summary.passed == 9);
    CHECK(result.summary.exhausted == 1);
    REQUIRE(result.summary.cumulative_pass_by_round.size() == 3);
    CHECK(result.summary.cumulative_pass_by_round[0] == doctest::Approx(0.7));
    CHECK(result.summary.cumulative_pass_by_round[1] == doctest::Approx(0.9));
    CHECK(result.summary.cumulative_pass_by_round[2] == doctest::Approx(0.9));
}

TEST_CASE("empty request list produces an empty summary and no calls") {
    MockLvlmClient client(scripted_response);
    StubScorer scorer([](const std::string&, int) { return 0.0; });
    RefinementConfig config;
    const BatchResult result = batch_refine(client, scorer, {}, config);
    CHECK(result.traces.empty());
    CHECK(result.summary.total == 0);
    CHECK(client.call_count() == 0);
}

TEST_CASE("concurrent batches reproduce the sequential traces") {
    auto schedule = [](const std::string& hypothesis, int round) -> double {
        return 0.3 * static_cast<double>(hypothesis.size() % 5) + 0.6 * round;
    };
    MockLvlmClient client(scripted_response);
    StubScorer scorer(schedule);
    RefinementConfig config;
    std::vector<RefinementRequest> requests;
    for (int i = 0; i < 16; ++i) requests.push_back(request_for("task-" + std::to_string(i)));

    const BatchResult sequential = batch_refine(client, scorer, requests, config, 1);
    const BatchResult parallel = batch_refine(client, scorer, requests, config, 4);
    REQUIRE(sequential.traces.size() == parallel.traces.size());
    for (std::size_t i = 0; i < sequential.traces.size(); ++i) {
        const auto& a = sequential.traces[i];
        const auto& b = parallel.traces[i];
        CHECK(a.status == b.status);
        REQUIRE(a.rounds.size() == b.rounds.size());
        for (std::size_t r = 0; r < a.rounds.size(); ++r) {
            CHECK(a.rounds[r].update_text == b.rounds[r].update_text);
            CHECK(a.rounds[r].score == b.rounds[r].score);
        }
    }
}

TEST_CASE("raising the threshold never raises a pass rate") {
    auto schedule = [](const std::string& hypothesis, int round) -> double {
        const int i = std::stoi(hypothesis.substr(4));
        return 0.2 * (i % 5) + 0.8 * round;
    };
    MockLvlmClient client(scripted_response);
    StubScorer scorer(schedule);
    RefinementConfig config;
    std::vector<RefinementRequest> requests;
    for (int i = 0; i < 12; ++i) requests.push_back(request_for("req-" + std::to_string(i)));

    const std::vector<double> etas{0.5, 1.0, 1.5, 2.0};
    const auto rows = run_threshold_sweep(client, scorer, requests, config, etas);
    REQUIRE(rows.size() == 4);
    for (std::size_t r = 0; r + 1 < rows.size(); ++r) {
        REQUIRE(rows[r].cumulative_pass_by_round.size() ==
                rows[r + 1].cumulative_pass_by_round.size());
        for (std::size_t round = 0; round < rows[r].cumulative_pass_by_round.size(); ++round) {
            CHECK(rows[r].cumulative_pass_by_round[round] >=
                  rows[r + 1].cumulative_pass_by_round[round]);
        }
    }
}

TEST_CASE("trace persistence round-trips through jsonl") {
    test::TempDir dir;
    MockLvlmClient client(scripted_response);
    StubScorer scorer([](const std::string&, int round) { return 0.7 * round; });
    RefinementConfig config;
    std::vector<RefinementRequest> requests{request_for("alpha"),
                                            request_for("beta", Goal::weaken)};
    const BatchResult result = batch_refine(client, scorer, requests, config);

    const std::string path = dir.file("traces.jsonl");
    write_traces_jsonl(result.traces, path);
    const auto replayed = read_traces_jsonl(path);
    REQUIRE(replayed.size() == result.traces.size());
    for (std::size_t i = 0; i < replayed.size(); ++i) {
        CHECK(replayed[i].hypothesis == result.traces[i].hypothesis);
        CHECK(replayed[i].goal == result.traces[i].goal);
        CHECK(replayed[i].status == result.traces[i].status);
        REQUIRE(replayed[i].rounds.size() == result.traces[i].rounds.size());
        for (std::size_t r = 0; r < replayed[i].rounds.size(); ++r) {
            CHECK(replayed[i].rounds[r].update_text == result.traces[i].rounds[r].update_text);
            CHECK(replayed[i].rounds[r].score == result.traces[i].rounds[r].score);
            CHECK(replayed[i].rounds[r].verdict == result.traces[i].rounds[r].verdict);
        }
    }
}

TEST_CASE("caption-relative scoring subtracts the caption baseline") {
    MockLvlmClient client(scripted_response);
    // Caption text is not an "update-k|..." string, so route on the prefix.
    class RelativeScorer final : public TripletScorer {
    public:
        double score(const ImagePremise&, const Hypothesis&,
                     const std::string& update_text) const override {
            return update_text.rfind("update-", 0) == 0 ? 2.5 : 1.0;
        }
    };
    RelativeScorer scorer;
    RefinementConfig config;
    config.caption_relative = true;

    RefinementRequest request = request_for("hyp");
    CHECK_THROWS_AS(refine_loop(client, scorer, request, config), ConfigError);

    request.caption = Caption{"the original caption"};
    const RefinementTrace trace = refine_loop(client, scorer, request, config);
    REQUIRE(trace.rounds.size() == 1);
    CHECK(trace.rounds[0].score == doctest::Approx(1.5));  // 2.5 - 1.0
    CHECK(trace.status == TraceStatus::passed);
}

TEST_CASE("config validation") {
    RefinementConfig config;
    config.eta = 0.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.eta = 1.0;
    config.max_rounds = 0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
}

}  // TEST_SUITE
