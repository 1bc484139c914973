#pragma once

#include <string>

namespace driftlab {

// Porter stemming. Input must already be lowercase ASCII with tag
// punctuation stripped; the empty string maps to itself, and words of
// length <= 2 are returned unchanged (matching the reference Porter
// distribution and its test vocabulary).
std::string porter_stem(const std::string& word);

}  // namespace driftlab
