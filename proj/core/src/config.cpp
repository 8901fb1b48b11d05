#include "dve/config.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace dve {

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("config: cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

EncoderSpec parse_encoder(const nlohmann::json& section, std::uint64_t default_seed) {
    EncoderSpec spec = encoder_spec_from_json(section);
    if (!section.contains("seed")) spec.seed = default_seed;
    return spec;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
    return parse(read_text_file(path), path);
}

RunConfig RunConfig::parse(const std::string& json_text, const std::string& origin) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }

    RunConfig config;
    try {
        config.seed = root.value("seed", std::uint64_t{42});

        if (root.contains("paths")) {
            const auto& p = root["paths"];
            config.paths.snli = p.value("snli", "");
            config.paths.dnli_train = p.value("dnli_train", "");
            config.paths.dnli_validation = p.value("dnli_validation", "");
            config.paths.dnli_test = p.value("dnli_test", "");
            config.paths.flickr_captions = p.value("flickr_captions", "");
            config.paths.flickr_image_dir = p.value("flickr_image_dir", "");
            config.paths.dataset = p.value("dataset", "");
            config.paths.checkpoint_dir = p.value("checkpoint_dir", "");
            config.paths.out = p.value("out", "");
        }

        config.visual_encoder.seed = config.seed;
        config.text_encoder.seed = config.seed;
        if (root.contains("encoders")) {
            const auto& e = root["encoders"];
            if (e.contains("visual")) config.visual_encoder = parse_encoder(e["visual"],
                                                                            config.seed);
            if (e.contains("text")) config.text_encoder = parse_encoder(e["text"], config.seed);
        }
        if (config.visual_encoder.kind.empty()) config.visual_encoder.kind = "test-deterministic";
        if (config.text_encoder.kind.empty()) config.text_encoder.kind = "test-deterministic";

        if (root.contains("train")) {
            const auto& t = root["train"];
            config.train.alpha = t.value("alpha", config.train.alpha);
            config.train.learning_rate = t.value("learning_rate", config.train.learning_rate);
            config.train.weight_decay = t.value("weight_decay", config.train.weight_decay);
            config.train.batch_size = t.value("batch_size", config.train.batch_size);
            config.train.max_epochs = t.value("max_epochs", config.train.max_epochs);
            config.train.seed = t.value("seed", config.seed);
            config.train.freeze_encoders =
                t.value("freeze_encoders", config.train.freeze_encoders);
            if (t.contains("classifier_loss")) {
                config.train.classifier_loss =
                    classifier_loss_from_string(t["classifier_loss"].get<std::string>());
            }
        } else {
            config.train.seed = config.seed;
        }

        if (root.contains("refine")) {
            const auto& r = root["refine"];
            config.refine.loop.eta = r.value("eta", config.refine.loop.eta);
            config.refine.loop.max_rounds = r.value("max_rounds", config.refine.loop.max_rounds);
            config.refine.loop.model_id = r.value("model_id", "");
            config.refine.loop.max_tokens = r.value("max_tokens", config.refine.loop.max_tokens);
            config.refine.loop.caption_relative =
                r.value("caption_relative", config.refine.loop.caption_relative);
            config.refine.endpoint = r.value("endpoint", "");
            config.refine.initial_template_path = r.value("initial_template", "");
            config.refine.refine_template_path = r.value("refine_template", "");
            config.refine.concurrency = r.value("concurrency", config.refine.concurrency);
        }

        if (root.contains("metrics")) {
            config.metrics = root["metrics"].get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }

    if (!config.refine.initial_template_path.empty()) {
        config.refine.loop.initial_template = read_text_file(config.refine.initial_template_path);
    }
    if (!config.refine.refine_template_path.empty()) {
        config.refine.loop.refine_template = read_text_file(config.refine.refine_template_path);
    }

    config.validate();
    return config;
}

void RunConfig::validate() const {
    train.validate();
    refine.loop.validate();
    if (refine.concurrency == 0) {
        throw ConfigError("refine.concurrency must be at least 1");
    }
}

}  // namespace dve
