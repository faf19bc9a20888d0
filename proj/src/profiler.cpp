#include "adaptutor/profiler.hpp"

#include <set>

#include "adaptutor/error.hpp"

namespace adaptutor {

namespace {
constexpr std::array<std::string_view, kStyleCount> kStyleNames = {"SS", "GOA", "EIA", "CA", "DLA"};

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(errc::kMalformedDocument, std::string("missing field '") + key + "'", {{"field", key}});
  }
  return j.at(key);
}
}  // namespace

std::string_view to_string(LearningStyle s) { return kStyleNames[index_of(s)]; }

std::optional<LearningStyle> parse_style(std::string_view text) {
  for (auto s : kAllStyles) {
    if (kStyleNames[index_of(s)] == text) return s;
  }
  return std::nullopt;
}

LearningStyle style_from_json(const nlohmann::json& j) {
  if (!j.is_string()) throw Error(errc::kMalformedDocument, "style must be a string");
  auto s = parse_style(j.get<std::string>());
  if (!s) {
    throw Error(errc::kMalformedDocument, "unknown learning style '" + j.get<std::string>() + "'",
                {{"style", j.get<std::string>()}});
  }
  return *s;
}

nlohmann::json to_json(const StyleVector& v) {
  nlohmann::json out = nlohmann::json::object();
  for (auto s : kAllStyles) out[std::string(to_string(s))] = v[s];
  return out;
}

StyleVector style_vector_from_json(const nlohmann::json& j) {
  StyleVector v;
  for (auto s : kAllStyles) {
    const auto& val = require(j, std::string(to_string(s)).c_str());
    double x = val.get<double>();
    if (!(x >= 0.0 && x <= 100.0)) {
      throw Error(errc::kMalformedDocument, "style score outside [0, 100]", {{"style", to_string(s)}});
    }
    v[s] = x;
  }
  return v;
}

Instrument validate_instrument(const nlohmann::json& doc) {
  Instrument ins;
  try {
    ins.id = require(doc, "id").get<std::string>();
    ins.scale_min = doc.value("scale_min", 1);
    ins.scale_max = doc.value("scale_max", 5);
    for (const auto& it : require(doc, "items")) {
      Item item;
      item.id = require(it, "id").get<std::string>();
      item.prompt = it.value("prompt", std::string{});
      item.style = style_from_json(require(it, "style"));
      item.reverse_scored = it.value("reverse_scored", false);
      ins.items.push_back(std::move(item));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::kMalformedDocument, std::string("instrument: ") + e.what());
  }

  if (ins.scale_min >= ins.scale_max) {
    throw Error(errc::kBadScaleBounds, "scale_min must be below scale_max",
                {{"scale_min", ins.scale_min}, {"scale_max", ins.scale_max}});
  }
  std::set<std::string> seen;
  for (const auto& item : ins.items) {
    if (!seen.insert(item.id).second) {
      throw Error(errc::kDuplicateItemId, "duplicate item id '" + item.id + "'", {{"item", item.id}});
    }
  }
  PerStyle<int> counts{};
  for (const auto& item : ins.items) ++counts[index_of(item.style)];
  for (auto s : kAllStyles) {
    if (counts[index_of(s)] == 0) {
      throw Error(errc::kMissingStyleCoverage, "no item targets style " + std::string(to_string(s)),
                  {{"style", to_string(s)}});
    }
  }
  return ins;
}

nlohmann::json to_json(const Instrument& ins) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : ins.items) {
    items.push_back({{"id", item.id},
                     {"prompt", item.prompt},
                     {"style", to_string(item.style)},
                     {"reverse_scored", item.reverse_scored}});
  }
  return {{"id", ins.id}, {"scale_min", ins.scale_min}, {"scale_max", ins.scale_max}, {"items", items}};
}

StyleVector score_questionnaire(const Instrument& ins, const Responses& responses) {
  for (const auto& [id, _] : responses) {
    bool known = false;
    for (const auto& item : ins.items) known = known || item.id == id;
    if (!known) throw Error(errc::kUnknownItem, "response for unknown item '" + id + "'", {{"item", id}});
  }

  const double span = ins.scale_max - ins.scale_min;
  PerStyle<double> sums{};
  PerStyle<int> counts{};
  for (const auto& item : ins.items) {
    auto it = responses.find(item.id);
    if (it == responses.end()) {
      throw Error(errc::kMissingResponse, "no response for item '" + item.id + "'", {{"item", item.id}});
    }
    const int r = it->second;
    if (r < ins.scale_min || r > ins.scale_max) {
      throw Error(errc::kOutOfRangeResponse, "response out of range for item '" + item.id + "'",
                  {{"item", item.id}, {"value", r}});
    }
    const double norm = item.reverse_scored ? (ins.scale_max - r) / span : (r - ins.scale_min) / span;
    sums[index_of(item.style)] += norm;
    ++counts[index_of(item.style)];
  }

  StyleVector v;
  for (auto s : kAllStyles) {
    const auto k = index_of(s);
    v.scores[k] = counts[k] == 0 ? 0.0 : 100.0 * sums[k] / counts[k];
  }
  return v;
}

LearningStyle dominant_style(const StyleVector& v) {
  LearningStyle best = LearningStyle::SS;
  for (auto s : kAllStyles) {
    if (v[s] > v[best]) best = s;
  }
  return best;
}

}  // namespace adaptutor
