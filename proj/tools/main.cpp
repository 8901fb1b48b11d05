// dve: build the corpus, train and apply the evaluator, and run the
// reward-driven refinement loop.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dve/agreement.hpp"
#include "dve/config.hpp"
#include "dve/correlation.hpp"
#include "dve/dataset.hpp"
#include "dve/evaluator.hpp"
#include "dve/lvlm.hpp"
#include "dve/metrics.hpp"
#include "dve/refinement.hpp"

namespace {

using dve::RunConfig;

RunConfig load_config(const std::string& path) {
    return path.empty() ? RunConfig{} : RunConfig::load(path);
}

std::string require(const std::string& value, const std::string& what) {
    if (value.empty()) {
        throw dve::ConfigError(what + " not set (flag or config)");
    }
    return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    return cells;
}

dve::EvaluatorModel model_from(const std::string& checkpoint, const RunConfig& config) {
    if (!checkpoint.empty()) {
        return dve::EvaluatorModel::load(checkpoint);
    }
    // Untrained zero-initialized heads over the configured encoders; scores 0.
    return dve::EvaluatorModel(dve::make_visual_encoder(config.visual_encoder),
                               dve::make_text_encoder(config.text_encoder), config.train,
                               config.visual_encoder, config.text_encoder);
}

void print_split_stats(const char* name, const dve::SplitStats& stats) {
    if (stats.empty()) {
        std::printf("%-11s (empty)\n", name);
        return;
    }
    std::printf("%-11s total %zu | weakener %zu | strengthener %zu | avg premise %.2f | "
                "avg hypothesis %.2f | uniq premises %zu | uniq hypotheses %zu | "
                "updates/image %.2f | uniq images %zu\n",
                name, stats.total_samples, stats.weakener_count, stats.strengthener_count,
                stats.avg_premise_len, stats.avg_hypothesis_len, stats.unique_premises,
                stats.unique_hypotheses, stats.avg_updates_per_image, stats.unique_images);
}

bool print_verify_report(const char* split, const dve::StatsReport& report) {
    bool ok = true;
    for (const auto& check : report.checks) {
        std::printf("[%s] %s.%s: actual %.4f expected %.4f\n", check.pass ? "pass" : "FAIL",
                    split, check.field.c_str(), check.actual, check.expected);
        ok = ok && check.pass;
    }
    return ok;
}

// Deterministic stand-in for a live endpoint: replies carry a round counter
// parsed back out of the refine prompt.
dve::MockLvlmClient::Responder mock_responder() {
    return [](const dve::LvlmRequest& request) {
        const std::string& prompt = request.messages.at(0).text;
        int round = 0;
        if (const auto pos = prompt.find("[r"); pos != std::string::npos) {
            round = std::atoi(prompt.c_str() + pos + 2) + 1;
        }
        std::string hypothesis = "unknown";
        if (const auto pos = prompt.find("Hypothesis: "); pos != std::string::npos) {
            const auto end = prompt.find('\n', pos);
            hypothesis = prompt.substr(pos + 12, end - (pos + 12));
        }
        return "[r" + std::to_string(round) + "] mock update for: " + hypothesis;
    };
}

int cmd_build_dataset(const RunConfig& config, const std::string& out_path, bool verify_table1) {
    dve::JoinReport report;
    std::size_t malformed = 0;
    const auto snli = dve::read_snli_jsonl(require(config.paths.snli, "paths.snli"), malformed);

    std::vector<dve::SourceRecordDeltaNli> dnli;
    const std::pair<const std::string*, dve::Split> dnli_inputs[] = {
        {&config.paths.dnli_train, dve::Split::train},
        {&config.paths.dnli_validation, dve::Split::validation},
        {&config.paths.dnli_test, dve::Split::test},
    };
    bool any_dnli = false;
    for (const auto& [path, split] : dnli_inputs) {
        if (path->empty()) continue;
        any_dnli = true;
        auto records = dve::read_dnli_jsonl(*path, split, malformed);
        dnli.insert(dnli.end(), std::make_move_iterator(records.begin()),
                    std::make_move_iterator(records.end()));
    }
    if (!any_dnli) {
        throw dve::ConfigError("no delta-NLI inputs set (paths.dnli_train/validation/test)");
    }
    const auto flickr = dve::read_flickr_captions(
        require(config.paths.flickr_captions, "paths.flickr_captions"), malformed);
    report.malformed_records = malformed;

    const dve::DveDataset dataset =
        dve::join_sources(snli, dnli, flickr, config.paths.flickr_image_dir, report);
    const std::string out = require(!out_path.empty() ? out_path : config.paths.dataset, "--out");
    dve::write_jsonl(dataset, out);

    std::printf("wrote %zu samples to %s\n", dataset.samples.size(), out.c_str());
    std::printf("join: %zu pairs without update, %zu unresolved images, %zu non-neutral, "
                "%zu malformed records\n",
                report.pairs_without_update, report.unresolved_images, report.non_neutral_skipped,
                report.malformed_records);
    const dve::DatasetStats stats = dve::compute_stats(dataset);
    print_split_stats("train", stats.train);
    print_split_stats("validation", stats.validation);
    print_split_stats("test", stats.test);

    if (verify_table1) {
        const dve::DatasetStats expected = dve::reference_dataset_stats();
        bool ok = true;
        ok &= print_verify_report("train", dve::verify_stats(stats.train, expected.train));
        ok &= print_verify_report("validation",
                                  dve::verify_stats(stats.validation, expected.validation));
        ok &= print_verify_report("test", dve::verify_stats(stats.test, expected.test));
        if (!ok) {
            std::fprintf(stderr, "build-dataset: statistics verification failed\n");
            return 1;
        }
        std::printf("statistics verification passed\n");
    }
    return 0;
}

int cmd_train(const RunConfig& config, const std::string& dataset_path,
              const std::string& out_dir) {
    const dve::DveDataset dataset =
        dve::read_jsonl(require(!dataset_path.empty() ? dataset_path : config.paths.dataset,
                                "--dataset"));
    const dve::TrainResult result =
        dve::train(dataset, dve::make_visual_encoder(config.visual_encoder),
                   dve::make_text_encoder(config.text_encoder), config.train,
                   config.visual_encoder, config.text_encoder, &std::cout);
    const std::string out =
        require(!out_dir.empty() ? out_dir : config.paths.checkpoint_dir, "--out");
    result.model.save(out);
    std::printf("selected epoch %zu (val loss %.6f); checkpoint written to %s\n",
                result.selected_epoch,
                result.history[result.selected_epoch - 1].val_combined, out.c_str());
    return 0;
}

int cmd_score(const RunConfig& config, const std::string& checkpoint, const std::string& image_id,
              const std::string& image_path, const std::string& hypothesis,
              const std::string& update) {
    const dve::EvaluatorModel model = model_from(checkpoint, config);
    const dve::ImagePremise premise{image_id.empty() ? image_path : image_id, image_path, {}, {}};
    std::printf("%.6f\n", model.score(premise, dve::Hypothesis{hypothesis}, update));
    return 0;
}

int cmd_classify_eval(const RunConfig& config, const std::string& checkpoint,
                      const std::string& dataset_path, const std::string& split_name) {
    const dve::EvaluatorModel model = model_from(checkpoint, config);
    const dve::DveDataset dataset =
        dve::read_jsonl(require(!dataset_path.empty() ? dataset_path : config.paths.dataset,
                                "--dataset"));
    const dve::Split split = dve::split_from_string(split_name);
    std::vector<dve::UpdateLabel> predictions;
    std::vector<dve::UpdateLabel> gold;
    for (const auto& sample : dataset.samples) {
        if (sample.split != split || !sample.update.label.has_value()) continue;
        predictions.push_back(
            model.predict_label(sample.premise, sample.hypothesis, sample.update.text));
        gold.push_back(*sample.update.label);
    }
    if (gold.empty()) {
        throw dve::EmptyInput("classify-eval: no labeled samples in split '" + split_name + "'");
    }
    std::printf("split %s: %zu samples, accuracy %.4f\n", split_name.c_str(), gold.size(),
                dve::accuracy(predictions, gold));
    return 0;
}

int cmd_generate_eval(const RunConfig& config, const std::string& input_path,
                      const std::string& out_path) {
    std::ifstream in(require(input_path, "--input"));
    if (!in) {
        throw dve::IoError("generate-eval: cannot open '" + input_path + "'");
    }
    std::vector<dve::GenerationRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (dve::is_blank(line)) continue;
        try {
            const nlohmann::json row = nlohmann::json::parse(line);
            dve::GenerationRecord record;
            record.model = row.value("model", "model");
            record.goal = dve::goal_from_string(row.value("goal", "strengthen"));
            record.candidate = row.at("candidate").get<std::string>();
            record.references = row.at("references").get<std::vector<std::string>>();
            records.push_back(std::move(record));
        } catch (const nlohmann::json::exception& e) {
            throw dve::SchemaError(input_path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }

    const dve::MetricRegistry registry = dve::MetricRegistry::with_builtins();
    const auto rows = dve::evaluate_generations(registry, config.metrics, records);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::trunc);
        if (!file) throw dve::IoError("generate-eval: cannot write '" + out_path + "'");
        out = &file;
    }
    *out << "model,goal,metric,mean,count\n";
    for (const auto& row : rows) {
        *out << row.model << ',' << dve::to_string(row.goal) << ',' << row.metric << ','
             << row.mean << ',' << row.count << '\n';
    }
    return 0;
}

int cmd_correlate(const std::string& input_path, std::size_t x_col, std::size_t y_col) {
    std::ifstream in(require(input_path, "--input"));
    if (!in) {
        throw dve::IoError("correlate: cannot open '" + input_path + "'");
    }
    std::vector<double> x;
    std::vector<double> y;
    std::string line;
    while (std::getline(in, line)) {
        if (dve::is_blank(line)) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() <= std::max(x_col, y_col)) continue;
        try {
            x.push_back(std::stod(cells[x_col]));
            y.push_back(std::stod(cells[y_col]));
        } catch (const std::exception&) {
            continue;  // header or stray text row
        }
    }
    const dve::CorrelationReport report = dve::correlation_report(x, y);
    auto show = [](const char* name, const std::optional<double>& value) {
        if (value.has_value()) {
            std::printf("%s %.6f\n", name, *value);
        } else {
            std::printf("%s undefined (constant input)\n", name);
        }
    };
    show("pearson_r", report.pearson);
    show("spearman_rho", report.spearman);
    show("kendall_tau", report.kendall);
    return 0;
}

int cmd_agreement(const std::string& matrix_path, const std::string& ratings_path) {
    if (matrix_path.empty() == ratings_path.empty()) {
        throw dve::ConfigError("agreement: pass exactly one of --matrix or --ratings");
    }
    if (!matrix_path.empty()) {
        std::ifstream in(matrix_path);
        if (!in) throw dve::IoError("agreement: cannot open '" + matrix_path + "'");
        std::vector<std::vector<std::size_t>> counts;
        std::string line;
        while (std::getline(in, line)) {
            if (dve::is_blank(line)) continue;
            std::vector<std::size_t> row;
            for (const auto& cell : split_csv_line(line)) {
                row.push_back(static_cast<std::size_t>(std::stoul(cell)));
            }
            counts.push_back(std::move(row));
        }
        std::printf("fleiss_kappa %.6f\n", dve::fleiss_kappa(dve::AnnotationMatrix(counts)));
        return 0;
    }
    std::ifstream in(ratings_path);
    if (!in) throw dve::IoError("agreement: cannot open '" + ratings_path + "'");
    std::vector<std::vector<int>> ratings;
    std::string line;
    while (std::getline(in, line)) {
        if (dve::is_blank(line)) continue;
        std::vector<int> row;
        for (const auto& cell : split_csv_line(line)) row.push_back(std::stoi(cell));
        ratings.push_back(std::move(row));
    }
    const dve::AnnotationMatrix five_way = dve::matrix_from_scores(ratings);
    std::printf("fleiss_kappa_5way %.6f\n", dve::fleiss_kappa(five_way));
    std::printf("fleiss_kappa_polarity %.6f\n",
                dve::fleiss_kappa(dve::collapse_to_polarity(five_way)));
    return 0;
}

int cmd_refine(const RunConfig& config, const std::string& input_path,
               const std::string& checkpoint, const std::string& out_path, bool mock_lvlm,
               const std::vector<double>& eta_sweep) {
    std::ifstream in(require(input_path, "--input"));
    if (!in) {
        throw dve::IoError("refine: cannot open '" + input_path + "'");
    }
    std::vector<dve::RefinementRequest> requests;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (dve::is_blank(line)) continue;
        try {
            const nlohmann::json row = nlohmann::json::parse(line);
            dve::RefinementRequest request;
            request.premise.image_id = row.value("image_id", "");
            request.premise.source_path = row.value("image_path", "");
            request.hypothesis.text = row.at("hypothesis").get<std::string>();
            request.goal = dve::goal_from_string(row.at("goal").get<std::string>());
            if (row.contains("caption")) {
                request.caption = dve::Caption{row["caption"].get<std::string>()};
            }
            requests.push_back(std::move(request));
        } catch (const nlohmann::json::exception& e) {
            throw dve::SchemaError(input_path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }

    const dve::EvaluatorModel model = model_from(checkpoint, config);
    std::unique_ptr<dve::LvlmClient> client;
    if (mock_lvlm) {
        client = std::make_unique<dve::MockLvlmClient>(mock_responder());
    } else {
        dve::HttpLvlmConfig http;
        http.endpoint = require(config.refine.endpoint, "refine.endpoint");
        http.model_id = config.refine.loop.model_id;
        client = std::make_unique<dve::HttpLvlmClient>(http);
    }

    if (!eta_sweep.empty()) {
        const auto rows = dve::run_threshold_sweep(*client, model, requests, config.refine.loop,
                                                   eta_sweep, config.refine.concurrency);
        std::printf("eta");
        for (std::size_t r = 1; r <= config.refine.loop.max_rounds; ++r) {
            std::printf(",round%zu", r);
        }
        std::printf("\n");
        for (const auto& row : rows) {
            std::printf("%.2f", row.eta);
            for (double rate : row.cumulative_pass_by_round) std::printf(",%.4f", rate);
            std::printf("\n");
        }
        return 0;
    }

    const dve::BatchResult result = dve::batch_refine(*client, model, requests,
                                                      config.refine.loop,
                                                      config.refine.concurrency);
    if (!out_path.empty()) {
        dve::write_traces_jsonl(result.traces, out_path);
    }
    std::printf("%zu requests: %zu passed, %zu exhausted, %zu aborted\n", result.summary.total,
                result.summary.passed, result.summary.exhausted, result.summary.aborted);
    for (std::size_t r = 0; r < result.summary.cumulative_pass_by_round.size(); ++r) {
        std::printf("cumulative pass rate after round %zu: %.4f\n", r + 1,
                    result.summary.cumulative_pass_by_round[r]);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Defeasible visual entailment toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "JSON run configuration")->envname("DVE_CONFIG");
    app.add_option_function<std::uint64_t>(
           "--seed", [&](std::uint64_t s) { seed = s; seed_set = true; },
           "Override the configured seed");

    // build-dataset
    auto* build = app.add_subcommand("build-dataset", "Join the sources into the corpus");
    std::string build_out;
    bool verify_table1 = false;
    std::string snli_path, dnli_train, dnli_validation, dnli_test, flickr_captions, image_dir;
    build->add_option("--snli", snli_path, "SNLI JSONL path");
    build->add_option("--dnli-train", dnli_train, "delta-NLI train split JSONL");
    build->add_option("--dnli-validation", dnli_validation, "delta-NLI validation split JSONL");
    build->add_option("--dnli-test", dnli_test, "delta-NLI test split JSONL");
    build->add_option("--flickr-captions", flickr_captions, "Flickr caption TSV");
    build->add_option("--image-dir", image_dir, "Directory holding the images");
    build->add_option("--out", build_out, "Output dataset JSONL");
    build->add_flag("--verify-table1", verify_table1,
                    "Check the built statistics against the published corpus table");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the evaluator heads");
    std::string train_dataset, train_out;
    double alpha_override = -1.0;
    double lr_override = -1.0;
    std::size_t epochs_override = 0;
    train_cmd->add_option("--dataset", train_dataset, "Corpus JSONL");
    train_cmd->add_option("--out", train_out, "Checkpoint directory");
    train_cmd->add_option("--alpha", alpha_override, "Loss mixing weight");
    train_cmd->add_option("--learning-rate", lr_override, "Optimizer learning rate");
    train_cmd->add_option("--epochs", epochs_override, "Maximum epochs");

    // score
    auto* score_cmd = app.add_subcommand("score", "Score one (image, hypothesis, update) triplet");
    std::string score_checkpoint, score_image_id, score_image, score_hypothesis, score_update;
    score_cmd->add_option("--checkpoint", score_checkpoint, "Checkpoint directory");
    score_cmd->add_option("--image-id", score_image_id, "Image identifier");
    score_cmd->add_option("--image", score_image, "Image path");
    score_cmd->add_option("--hypothesis", score_hypothesis, "Hypothesis text")->required();
    score_cmd->add_option("--update", score_update, "Update text")->required();

    // classify-eval
    auto* classify_cmd = app.add_subcommand("classify-eval",
                                            "Accuracy of predicted update types on a split");
    std::string classify_checkpoint, classify_dataset, classify_split = "test";
    classify_cmd->add_option("--checkpoint", classify_checkpoint, "Checkpoint directory");
    classify_cmd->add_option("--dataset", classify_dataset, "Corpus JSONL");
    classify_cmd->add_option("--split", classify_split, "Split to evaluate");

    // generate-eval
    auto* generate_cmd = app.add_subcommand("generate-eval",
                                            "Reference metrics over generated updates");
    std::string generate_input, generate_out;
    generate_cmd->add_option("--input", generate_input, "Generations JSONL")->required();
    generate_cmd->add_option("--out", generate_out, "Report CSV (stdout when omitted)");

    // correlate
    auto* correlate_cmd = app.add_subcommand("correlate",
                                             "Correlations between two score columns");
    std::string correlate_input;
    std::size_t x_col = 0;
    std::size_t y_col = 1;
    correlate_cmd->add_option("--input", correlate_input, "CSV with score columns")->required();
    correlate_cmd->add_option("--x-col", x_col, "Column index of the first series");
    correlate_cmd->add_option("--y-col", y_col, "Column index of the second series");

    // agreement
    auto* agreement_cmd = app.add_subcommand("agreement", "Fleiss' kappa over annotations");
    std::string matrix_path, ratings_path;
    agreement_cmd->add_option("--matrix", matrix_path, "CSV of item x category counts");
    agreement_cmd->add_option("--ratings", ratings_path,
                              "CSV of per-item rater scores in [-2, 2]");

    // refine
    auto* refine_cmd = app.add_subcommand("refine", "Reward-driven update optimization");
    std::string refine_input, refine_checkpoint, refine_out;
    bool mock_lvlm = false;
    std::vector<double> eta_sweep;
    double eta_override = 0.0;
    std::size_t rounds_override = 0;
    refine_cmd->add_option("--input", refine_input, "Requests JSONL")->required();
    refine_cmd->add_option("--checkpoint", refine_checkpoint, "Checkpoint directory");
    refine_cmd->add_option("--out", refine_out, "Trace JSONL output");
    refine_cmd->add_flag("--mock-lvlm", mock_lvlm, "Use the deterministic mock client");
    refine_cmd->add_option("--eta", eta_override, "Critique threshold");
    refine_cmd->add_option("--max-rounds", rounds_override, "Refinement budget M");
    refine_cmd->add_option("--eta-sweep", eta_sweep,
                           "Run the batch at each threshold and print the rate table");

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        RunConfig config = load_config(config_path);
        if (seed_set) {
            config.seed = seed;
            config.train.seed = seed;
            config.visual_encoder.seed = seed;
            config.text_encoder.seed = seed;
        }

        if (build->parsed()) {
            if (!snli_path.empty()) config.paths.snli = snli_path;
            if (!dnli_train.empty()) config.paths.dnli_train = dnli_train;
            if (!dnli_validation.empty()) config.paths.dnli_validation = dnli_validation;
            if (!dnli_test.empty()) config.paths.dnli_test = dnli_test;
            if (!flickr_captions.empty()) config.paths.flickr_captions = flickr_captions;
            if (!image_dir.empty()) config.paths.flickr_image_dir = image_dir;
            return cmd_build_dataset(config, build_out, verify_table1);
        }
        if (train_cmd->parsed()) {
            if (alpha_override >= 0.0) config.train.alpha = alpha_override;
            if (lr_override > 0.0) config.train.learning_rate = lr_override;
            if (epochs_override > 0) config.train.max_epochs = epochs_override;
            config.train.validate();
            return cmd_train(config, train_dataset, train_out);
        }
        if (score_cmd->parsed()) {
            return cmd_score(config, score_checkpoint, score_image_id, score_image,
                             score_hypothesis, score_update);
        }
        if (classify_cmd->parsed()) {
            return cmd_classify_eval(config, classify_checkpoint, classify_dataset,
                                     classify_split);
        }
        if (generate_cmd->parsed()) {
            return cmd_generate_eval(config, generate_input, generate_out);
        }
        if (correlate_cmd->parsed()) {
            return cmd_correlate(correlate_input, x_col, y_col);
        }
        if (agreement_cmd->parsed()) {
            return cmd_agreement(matrix_path, ratings_path);
        }
        if (refine_cmd->parsed()) {
            if (eta_override > 0.0) config.refine.loop.eta = eta_override;
            if (rounds_override > 0) config.refine.loop.max_rounds = rounds_override;
            config.refine.loop.validate();
            return cmd_refine(config, refine_input, refine_checkpoint, refine_out, mock_lvlm,
                              eta_sweep);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s: %s\n", command.c_str(), e.what());
        return 1;
    }
    return 0;
}
