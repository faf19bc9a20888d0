#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace adaptutor {

/// The five learning styles. Declaration order is the canonical order used
/// for every deterministic tie-break in the engine.
enum class LearningStyle { SS = 0, GOA = 1, EIA = 2, CA = 3, DLA = 4 };

inline constexpr std::size_t kStyleCount = 5;
inline constexpr std::array<LearningStyle, kStyleCount> kAllStyles = {
    LearningStyle::SS, LearningStyle::GOA, LearningStyle::EIA, LearningStyle::CA, LearningStyle::DLA};

constexpr std::size_t index_of(LearningStyle s) { return static_cast<std::size_t>(s); }

std::string_view to_string(LearningStyle s);
std::optional<LearningStyle> parse_style(std::string_view text);
/// Throws Error(MalformedDocument) on an unknown style string.
LearningStyle style_from_json(const nlohmann::json& j);

/// Dense per-style table indexed by canonical order.
template <typename T>
using PerStyle = std::array<T, kStyleCount>;

struct StyleVector {
  PerStyle<double> scores{};

  double operator[](LearningStyle s) const { return scores[index_of(s)]; }
  double& operator[](LearningStyle s) { return scores[index_of(s)]; }
  bool operator==(const StyleVector&) const = default;
};

nlohmann::json to_json(const StyleVector& v);
StyleVector style_vector_from_json(const nlohmann::json& j);

struct Item {
  std::string id;
  std::string prompt;
  LearningStyle style = LearningStyle::SS;
  bool reverse_scored = false;

  bool operator==(const Item&) const = default;
};

struct Instrument {
  std::string id;
  std::vector<Item> items;
  int scale_min = 1;
  int scale_max = 5;

  bool operator==(const Instrument&) const = default;
};

using Responses = std::map<std::string, int>;

/// Parses and checks an instrument document.
Instrument validate_instrument(const nlohmann::json& doc);
nlohmann::json to_json(const Instrument& instrument);

/// Mean of normalized item responses per style, on a 0-100 scale.
StyleVector score_questionnaire(const Instrument& instrument, const Responses& responses);

/// Argmax with ties resolved by canonical style order.
LearningStyle dominant_style(const StyleVector& v);

}  // namespace adaptutor
