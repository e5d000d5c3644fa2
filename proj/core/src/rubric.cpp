#include "tipgrade/rubric.hpp"

#include <algorithm>

namespace tipgrade {

bool RubricText::complete() const {
    return std::none_of(tiers.begin(), tiers.end(),
                        [](const std::string& t) { return t.empty(); });
}

std::string RubricText::numbered_list() const {
    std::string out;
    for (std::size_t i = 0; i < tiers.size(); ++i) {
        if (i > 0) {
            out += '\n';
        }
        out += std::to_string(i);
        out += ". ";
        out += tiers[i];
    }
    return out;
}

const RubricText& fixed_rubric() {
    static const RubricText rubric{
        {
            "The student's answer is nonsensical or unclear. It is not related to the question.",
            "The student's answer shows serious misconceptions or lack of understanding of the "
            "concept. The answer is factually wrong.",
            "The student's answer shows partial understanding of the relevant knowledge. The "
            "answer is not complete or contains wrong information.",
            "The student's answer shows a complete and correct understanding of the concept.",
            "The student's answer shows thorough understanding of the concept that was asked "
            "and offers and nuanced analysis thorough reasoning.",
        },
        RubricOrigin::Fixed,
    };
    return rubric;
}

} // namespace tipgrade
