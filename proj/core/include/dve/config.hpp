// Run configuration: one JSON file, overridable per command by CLI flags.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dve/encoders.hpp"
#include "dve/evaluator.hpp"
#include "dve/refinement.hpp"

namespace dve {

struct PathsConfig {
    std::string snli;
    std::string dnli_train;
    std::string dnli_validation;
    std::string dnli_test;
    std::string flickr_captions;
    std::string flickr_image_dir;
    std::string dataset;
    std::string checkpoint_dir;
    std::string out;
};

struct RefineSection {
    RefinementConfig loop;
    std::string endpoint;
    std::string initial_template_path;
    std::string refine_template_path;
    std::size_t concurrency = 1;
};

struct RunConfig {
    std::uint64_t seed = 42;
    PathsConfig paths;
    EncoderSpec visual_encoder{"test-deterministic", 0, 42, "", 0};
    EncoderSpec text_encoder{"test-deterministic", 0, 42, "", 0};
    TrainConfig train;
    RefineSection refine;
    std::vector<std::string> metrics{"rouge-l", "bleu-4"};

    // Parses, threads the top-level seed through unseeded sections, loads
    // template files, and validates numeric invariants up front.
    static RunConfig load(const std::string& path);
    static RunConfig parse(const std::string& json_text, const std::string& origin = "<config>");

    void validate() const;
};

}  // namespace dve
