#pragma once

#include <array>
#include <string>

namespace tipgrade {

enum class RubricOrigin { Fixed, Generated };

/// Five-tier scoring guideline, one criterion per score 0..4.
struct RubricText {
    std::array<std::string, 5> tiers;
    RubricOrigin origin = RubricOrigin::Fixed;

    bool complete() const;

    /// Renders "0. <tier0>\n1. <tier1>\n..." with no trailing newline --
    /// the form the system prompts embed.
    std::string numbered_list() const;
};

/// The built-in generic rubric ("brookhart-generic"): field-agnostic tiers
/// usable for any question.
const RubricText& fixed_rubric();

} // namespace tipgrade
