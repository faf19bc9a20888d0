#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace adaptutor {

/// Knowledge level categories, ordered Weak < Average < Good < VeryGood < Excellent.
enum class KnowledgeBand { Weak = 0, Average = 1, Good = 2, VeryGood = 3, Excellent = 4 };

inline constexpr std::array<KnowledgeBand, 5> kAllBands = {
    KnowledgeBand::Weak, KnowledgeBand::Average, KnowledgeBand::Good, KnowledgeBand::VeryGood,
    KnowledgeBand::Excellent};

/// Maps a score in [0, 100] to its band. The score is rounded half-up to an
/// integer first: 86-100 Excellent, 71-85 VeryGood, 51-70 Good, 31-50 Average,
/// 0-30 Weak. Throws Error(OutOfRange) outside [0, 100] or on NaN.
KnowledgeBand band(double score);

/// Identifier form used in documents and facts ("VeryGood").
std::string_view to_string(KnowledgeBand b);
/// Human label ("Very good").
std::string_view display_name(KnowledgeBand b);
std::optional<KnowledgeBand> parse_band(std::string_view text);

}  // namespace adaptutor
