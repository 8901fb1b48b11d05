#include "dve/refinement.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>

#include "json.hpp"

namespace dve {

namespace {

std::string replace_all(std::string text, std::string_view needle, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

std::string format_score(double score) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", score);
    return buf;
}

std::optional<std::string> image_payload(const ImagePremise& premise) {
    if (premise.source_path.empty()) return std::nullopt;
    std::ifstream in(premise.source_path, std::ios::binary);
    if (!in) return std::nullopt;
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return base64_encode(bytes);
}

std::string call_lvlm(LvlmClient& client, const ImagePremise& premise, const std::string& prompt,
                      const RefinementConfig& config) {
    LvlmRequest request;
    request.model_id = config.model_id;
    request.max_tokens = config.max_tokens;
    LvlmMessage message{"user", prompt, image_payload(premise)};
    request.messages.push_back(std::move(message));
    const LvlmResponse response = client.generate(request);
    const std::string text = normalize_whitespace(response.text);
    if (text.empty()) {
        throw EmptyGeneration("LVLM returned empty text for prompt '" + prompt.substr(0, 80) +
                              "...'");
    }
    return text;
}

double score_update(const TripletScorer& scorer, const RefinementRequest& request,
                    const std::string& update_text, const RefinementConfig& config) {
    const double raw = scorer.score(request.premise, request.hypothesis, update_text);
    if (!config.caption_relative) return raw;
    if (!request.caption.has_value() || is_blank(request.caption->text)) {
        throw ConfigError("caption-relative scoring requested but the request has no caption");
    }
    return raw - scorer.score(request.premise, request.hypothesis, request.caption->text);
}

}  // namespace

void RefinementConfig::validate() const {
    if (!(eta > 0.0)) {
        throw ConfigError("RefinementConfig: eta must be positive, got " + std::to_string(eta));
    }
    if (max_rounds == 0) {
        throw ConfigError("RefinementConfig: max_rounds must be at least 1");
    }
}

const std::string& default_initial_template() {
    static const std::string tmpl =
        "You are shown an image and a hypothesis about it.\n"
        "Hypothesis: {hypothesis}\n"
        "Write one sentence of new information, consistent with the image, that would {goal} "
        "the hypothesis. Reply with the sentence only.";
    return tmpl;
}

const std::string& default_refine_template() {
    static const std::string tmpl =
        "You are shown an image and a hypothesis about it.\n"
        "Hypothesis: {hypothesis}\n"
        "Your previous update was: {prior_update}\n"
        "An entailment-strength evaluator scored that update {prior_score}, which is not good "
        "enough to {goal} the hypothesis.\n"
        "Write an improved one-sentence update that {goal}s the hypothesis more decisively. "
        "Reply with the sentence only.";
    return tmpl;
}

std::string render_template(const std::string& tmpl, const Hypothesis& hypothesis, Goal goal,
                            const std::string& prior_update, std::optional<double> prior_score) {
    std::string out = replace_all(tmpl, "{hypothesis}", hypothesis.text);
    out = replace_all(std::move(out), "{goal}", to_string(goal));
    out = replace_all(std::move(out), "{prior_update}", prior_update);
    out = replace_all(std::move(out), "{prior_score}",
                      prior_score.has_value() ? format_score(*prior_score) : "");
    return out;
}

Verdict critique(double score, Goal goal, double eta) {
    if (!(eta > 0.0)) {
        throw ConfigError("critique: eta must be positive, got " + std::to_string(eta));
    }
    if (goal == Goal::strengthen) {
        return score >= eta ? Verdict::pass : Verdict::low_quality;
    }
    return score <= -eta ? Verdict::pass : Verdict::low_quality;
}

std::string_view to_string(TraceStatus status) noexcept {
    switch (status) {
        case TraceStatus::passed: return "passed";
        case TraceStatus::exhausted: return "exhausted";
        default: return "aborted";
    }
}

std::string_view to_string(Verdict verdict) noexcept {
    return verdict == Verdict::pass ? "pass" : "low_quality";
}

Update generate_initial(LvlmClient& client, const ImagePremise& premise,
                        const Hypothesis& hypothesis, Goal goal, const RefinementConfig& config) {
    config.validate();
    const std::string& tmpl =
        config.initial_template.empty() ? default_initial_template() : config.initial_template;
    const std::string prompt = render_template(tmpl, hypothesis, goal);
    return Update{call_lvlm(client, premise, prompt, config), std::nullopt};
}

RefinementTrace refine_loop(LvlmClient& client, const TripletScorer& scorer,
                            const RefinementRequest& request, const RefinementConfig& config) {
    config.validate();
    RefinementTrace trace;
    trace.premise = request.premise;
    trace.hypothesis = request.hypothesis;
    trace.goal = request.goal;
    trace.eta = config.eta;

    const std::string& initial_tmpl =
        config.initial_template.empty() ? default_initial_template() : config.initial_template;
    const std::string& refine_tmpl =
        config.refine_template.empty() ? default_refine_template() : config.refine_template;

    try {
        std::string update = call_lvlm(
            client, request.premise, render_template(initial_tmpl, request.hypothesis,
                                                     request.goal),
            config);
        double score = score_update(scorer, request, update, config);
        Verdict verdict = critique(score, request.goal, config.eta);
        trace.rounds.push_back({0, update, score, verdict});

        std::size_t refinements = 0;
        while (verdict == Verdict::low_quality && refinements < config.max_rounds) {
            const std::string prompt = render_template(refine_tmpl, request.hypothesis,
                                                       request.goal, update, score);
            update = call_lvlm(client, request.premise, prompt, config);
            ++refinements;
            score = score_update(scorer, request, update, config);
            verdict = critique(score, request.goal, config.eta);
            trace.rounds.push_back({refinements, update, score, verdict});
        }
        trace.status = verdict == Verdict::pass ? TraceStatus::passed : TraceStatus::exhausted;
    } catch (const TransportError& e) {
        trace.status = TraceStatus::aborted;
        trace.error = e.what();
    } catch (const EmptyGeneration& e) {
        trace.status = TraceStatus::aborted;
        trace.error = e.what();
    }
    return trace;
}

BatchSummary summarize_traces(std::span<const RefinementTrace> traces, std::size_t max_rounds) {
    BatchSummary summary;
    summary.total = traces.size();
    summary.cumulative_pass_by_round.assign(max_rounds, 0.0);
    if (traces.empty()) return summary;
    for (const auto& trace : traces) {
        switch (trace.status) {
            case TraceStatus::passed: ++summary.passed; break;
            case TraceStatus::exhausted: ++summary.exhausted; break;
            case TraceStatus::aborted: ++summary.aborted; break;
        }
        if (trace.status == TraceStatus::passed) {
            // An initial-generation pass (0 refinements) counts toward round 1.
            const std::size_t used = std::max<std::size_t>(trace.refinements_used(), 1);
            for (std::size_t round = used; round <= max_rounds; ++round) {
                summary.cumulative_pass_by_round[round - 1] += 1.0;
            }
        }
    }
    for (double& rate : summary.cumulative_pass_by_round) {
        rate /= static_cast<double>(summary.total);
    }
    return summary;
}

BatchResult batch_refine(LvlmClient& client, const TripletScorer& scorer,
                         std::span<const RefinementRequest> requests,
                         const RefinementConfig& config, std::size_t concurrency) {
    config.validate();
    BatchResult result;
    result.traces.resize(requests.size());
    if (!requests.empty()) {
        const std::size_t workers = std::max<std::size_t>(1, std::min(concurrency,
                                                                      requests.size()));
        if (workers == 1) {
            for (std::size_t i = 0; i < requests.size(); ++i) {
                result.traces[i] = refine_loop(client, scorer, requests[i], config);
            }
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (;;) {
                        const std::size_t i = next.fetch_add(1);
                        if (i >= requests.size()) return;
                        result.traces[i] = refine_loop(client, scorer, requests[i], config);
                    }
                });
            }
            for (auto& t : pool) t.join();
        }
    }
    result.summary = summarize_traces(result.traces, config.max_rounds);
    return result;
}

std::vector<ThresholdSweepRow> run_threshold_sweep(LvlmClient& client,
                                                   const TripletScorer& scorer,
                                                   std::span<const RefinementRequest> requests,
                                                   RefinementConfig config,
                                                   std::span<const double> etas,
                                                   std::size_t concurrency) {
    std::vector<ThresholdSweepRow> rows;
    rows.reserve(etas.size());
    for (double eta : etas) {
        config.eta = eta;
        const BatchResult result = batch_refine(client, scorer, requests, config, concurrency);
        rows.push_back({eta, result.summary.cumulative_pass_by_round});
    }
    return rows;
}

void write_traces_jsonl(std::span<const RefinementTrace> traces, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("write_traces_jsonl: cannot open '" + path + "'");
    }
    for (const auto& trace : traces) {
        nlohmann::json rounds = nlohmann::json::array();
        for (const auto& round : trace.rounds) {
            rounds.push_back({{"round", round.index},
                              {"update", round.update_text},
                              {"score", round.score},
                              {"verdict", to_string(round.verdict)}});
        }
        nlohmann::json row{{"image_id", trace.premise.image_id},
                           {"image_path", trace.premise.source_path},
                           {"hypothesis", trace.hypothesis.text},
                           {"goal", to_string(trace.goal)},
                           {"eta", trace.eta},
                           {"status", to_string(trace.status)},
                           {"rounds", std::move(rounds)}};
        if (!trace.error.empty()) row["error"] = trace.error;
        out << row.dump() << '\n';
    }
}

std::vector<RefinementTrace> read_traces_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("read_traces_jsonl: cannot open '" + path + "'");
    }
    std::vector<RefinementTrace> traces;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            RefinementTrace trace;
            trace.premise.image_id = row.value("image_id", "");
            trace.premise.source_path = row.value("image_path", "");
            trace.hypothesis.text = row.at("hypothesis").get<std::string>();
            trace.goal = goal_from_string(row.at("goal").get<std::string>());
            trace.eta = row.value("eta", 1.0);
            const std::string status = row.at("status").get<std::string>();
            trace.status = status == "passed"      ? TraceStatus::passed
                           : status == "exhausted" ? TraceStatus::exhausted
                                                   : TraceStatus::aborted;
            trace.error = row.value("error", "");
            for (const auto& r : row.at("rounds")) {
                RefinementRound round;
                round.index = r.at("round").get<std::size_t>();
                round.update_text = r.at("update").get<std::string>();
                round.score = r.at("score").get<double>();
                round.verdict = r.at("verdict").get<std::string>() == "pass"
                                    ? Verdict::pass
                                    : Verdict::low_quality;
                trace.rounds.push_back(std::move(round));
            }
            traces.push_back(std::move(trace));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return traces;
}

}  // namespace dve
