#pragma once

#include <string>

#include "dve/types.hpp"

namespace dve {

// Anything that can score a (premise, hypothesis, update) triplet; the
// refinement loop consumes this so tests can stub the evaluator.
class TripletScorer {
public:
    virtual ~TripletScorer() = default;

    virtual double score(const ImagePremise& premise, const Hypothesis& hypothesis,
                         const std::string& update_text) const = 0;
};

}  // namespace dve
