// Internal JSON conversions shared by checkpointing and config loading.
#pragma once

#include "json.hpp"

#include "dve/encoders.hpp"

namespace dve {

inline nlohmann::json encoder_spec_to_json(const EncoderSpec& spec) {
    return nlohmann::json{{"kind", spec.kind},
                          {"dim", spec.dim},
                          {"seed", spec.seed},
                          {"weights", spec.weights},
                          {"max_words", spec.max_words}};
}

inline EncoderSpec encoder_spec_from_json(const nlohmann::json& j) {
    EncoderSpec spec;
    spec.kind = j.at("kind").get<std::string>();
    spec.dim = j.value("dim", std::size_t{0});
    spec.seed = j.value("seed", std::uint64_t{42});
    spec.weights = j.value("weights", std::string{});
    spec.max_words = j.value("max_words", std::size_t{0});
    return spec;
}

}  // namespace dve
