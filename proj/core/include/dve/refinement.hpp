// Reward-driven update optimization: generate an initial update with an
// external LVLM, critique it against the threshold with the evaluator score,
// and refine until it passes or the round budget runs out.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dve/lvlm.hpp"
#include "dve/scorer.hpp"
#include "dve/types.hpp"

namespace dve {

struct RefinementConfig {
    double eta = 1.0;            // critique threshold
    std::size_t max_rounds = 3;  // refinement budget M (initial call excluded)
    std::string initial_template;  // empty -> built-in default
    std::string refine_template;
    std::string model_id;
    int max_tokens = 128;
    // Score the update relative to the caption triplet instead of raw.
    bool caption_relative = false;

    void validate() const;
};

const std::string& default_initial_template();
const std::string& default_refine_template();

// Placeholders: {hypothesis}, {goal}, {prior_update}, {prior_score}.
std::string render_template(const std::string& tmpl, const Hypothesis& hypothesis, Goal goal,
                            const std::string& prior_update = "",
                            std::optional<double> prior_score = std::nullopt);

enum class Verdict { pass, low_quality };

// A strengthener passes at score >= eta, a weakener at score <= -eta
// (boundary inclusive).
Verdict critique(double score, Goal goal, double eta);

struct RefinementRound {
    std::size_t index = 0;  // 0 = initial generation, k = k-th refinement
    std::string update_text;
    double score = 0.0;
    Verdict verdict = Verdict::low_quality;
};

enum class TraceStatus { passed, exhausted, aborted };

struct RefinementTrace {
    ImagePremise premise;
    Hypothesis hypothesis;
    Goal goal = Goal::strengthen;
    double eta = 1.0;
    std::vector<RefinementRound> rounds;
    TraceStatus status = TraceStatus::exhausted;
    std::string error;  // set when status == aborted

    std::size_t refinements_used() const noexcept {
        return rounds.empty() ? 0 : rounds.back().index;
    }
};

std::string_view to_string(TraceStatus status) noexcept;
std::string_view to_string(Verdict verdict) noexcept;

// One LVLM call; throws TransportError / EmptyGeneration.
Update generate_initial(LvlmClient& client, const ImagePremise& premise,
                        const Hypothesis& hypothesis, Goal goal, const RefinementConfig& config);

struct RefinementRequest {
    ImagePremise premise;
    Hypothesis hypothesis;
    Goal goal = Goal::strengthen;
    std::optional<Caption> caption;  // needed only for caption-relative scoring
};

// Sequential rounds for one request; client failures abort with the partial
// trace preserved and status set to aborted. Total LVLM calls <= M + 1.
RefinementTrace refine_loop(LvlmClient& client, const TripletScorer& scorer,
                            const RefinementRequest& request, const RefinementConfig& config);

struct BatchSummary {
    std::size_t total = 0;
    std::size_t passed = 0;
    std::size_t exhausted = 0;
    std::size_t aborted = 0;
    // Entry k-1: fraction of requests that passed using at most k refinements.
    std::vector<double> cumulative_pass_by_round;
};

struct BatchResult {
    std::vector<RefinementTrace> traces;
    BatchSummary summary;
};

// Distinct requests run concurrently up to `concurrency`; each request's
// rounds stay sequential. The client must tolerate concurrent generate calls.
BatchResult batch_refine(LvlmClient& client, const TripletScorer& scorer,
                         std::span<const RefinementRequest> requests,
                         const RefinementConfig& config, std::size_t concurrency = 1);

BatchSummary summarize_traces(std::span<const RefinementTrace> traces, std::size_t max_rounds);

struct ThresholdSweepRow {
    double eta = 0.0;
    std::vector<double> cumulative_pass_by_round;
};

// Re-runs the batch at each threshold; mirrors the threshold/round ablation.
std::vector<ThresholdSweepRow> run_threshold_sweep(LvlmClient& client,
                                                   const TripletScorer& scorer,
                                                   std::span<const RefinementRequest> requests,
                                                   RefinementConfig config,
                                                   std::span<const double> etas,
                                                   std::size_t concurrency = 1);

// One trace per line, replayable.
void write_traces_jsonl(std::span<const RefinementTrace> traces, const std::string& path);
std::vector<RefinementTrace> read_traces_jsonl(const std::string& path);

}  // namespace dve
