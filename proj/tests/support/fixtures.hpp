// Deterministic fixtures shared by the unit and acceptance suites.
#pragma once

#include <cstdint>
#include <string>

#include "dve/dataset.hpp"
#include "dve/encoders.hpp"

namespace dve::test {

struct SeparableFixture {
    DveDataset dataset;  // 160 train / 40 validation samples
    EncoderSpec visual_spec;
    EncoderSpec text_spec;
};

// 200 samples whose labels follow a planted linear rule over the fused
// test-encoder features, with a margin, so a linear classification head can
// reach perfect validation accuracy.
inline SeparableFixture separable_fixture(std::uint64_t seed = 42) {
    constexpr std::size_t kVisualDim = 16;
    constexpr std::size_t kTextDim = 16;
    constexpr std::size_t kTotal = 200;
    constexpr std::size_t kValidation = 40;
    constexpr double kMargin = 2.0;

    SeparableFixture fixture;
    fixture.visual_spec = EncoderSpec{"test-deterministic", kVisualDim, seed, "", 0};
    fixture.text_spec = EncoderSpec{"test-deterministic", kTextDim, seed, "", 0};
    const DeterministicVisualEncoder visual(kVisualDim, seed);
    const DeterministicTextEncoder text(kTextDim, seed);

    const auto planted =
        deterministic_features("planted-direction", kVisualDim + kTextDim, seed + 1);

    std::size_t accepted = 0;
    for (std::size_t candidate = 0; accepted < kTotal; ++candidate) {
        const std::string tag = std::to_string(candidate);
        DveSample sample;
        sample.premise.image_id = "img-" + tag;
        sample.caption.text = "caption text " + tag;
        sample.hypothesis.text = "hypothesis text " + tag;
        sample.update.text = "update text " + tag;

        const auto i = visual.encode(sample.premise);
        const auto e = text.encode(sample.hypothesis, sample.update.text);
        double dot = 0.0;
        for (std::size_t k = 0; k < i.size(); ++k) dot += planted[k] * i[k];
        for (std::size_t k = 0; k < e.size(); ++k) dot += planted[i.size() + k] * e[k];
        if (dot > -kMargin && dot < kMargin) continue;  // margin filter

        sample.update.label = dot >= 0.0 ? UpdateLabel::strengthener : UpdateLabel::weakener;
        sample.split = accepted < kTotal - kValidation ? Split::train : Split::validation;
        fixture.dataset.samples.push_back(std::move(sample));
        ++accepted;
    }
    return fixture;
}

}  // namespace dve::test
