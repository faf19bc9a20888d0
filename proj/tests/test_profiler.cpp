#include <doctest.h>

#include "adaptutor/error.hpp"
#include "support.hpp"

using namespace adaptutor;
using testsupport::demo_instrument;

namespace {

nlohmann::json instrument_doc(int per_style) {
  nlohmann::json items = nlohmann::json::array();
  int n = 0;
  for (auto s : kAllStyles) {
    for (int i = 0; i < per_style; ++i) {
      items.push_back({{"id", "q" + std::to_string(++n)}, {"prompt", "p"}, {"style", to_string(s)}, {"reverse_scored", false}});
    }
  }
  return {{"id", "t"}, {"scale_min", 1}, {"scale_max", 5}, {"items", items}};
}

std::string error_code(const nlohmann::json& doc) {
  try {
    validate_instrument(doc);
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

// Re-implementation of the scoring definition used as an oracle.
PerStyle<double> brute_scores(const Instrument& ins, const Responses& r) {
  PerStyle<double> sum{};
  PerStyle<int> n{};
  for (const auto& it : ins.items) {
    const double lo = ins.scale_min;
    const double hi = ins.scale_max;
    const double v = r.at(it.id);
    const double norm = it.reverse_scored ? (hi - v) / (hi - lo) : (v - lo) / (hi - lo);
    sum[static_cast<std::size_t>(it.style)] += norm;
    ++n[static_cast<std::size_t>(it.style)];
  }
  PerStyle<double> out{};
  for (std::size_t i = 0; i < 5; ++i) out[i] = 100.0 * sum[i] / n[i];
  return out;
}

}  // namespace

TEST_CASE("instrument validation") {
  CHECK(validate_instrument(instrument_doc(2)).items.size() == 10);

  auto partial = instrument_doc(1);
  partial["items"].erase(partial["items"].begin() + 2, partial["items"].end());
  CHECK(error_code(partial) == errc::kMissingStyleCoverage);

  auto dup = instrument_doc(1);
  dup["items"][1]["id"] = "q1";
  CHECK(error_code(dup) == errc::kDuplicateItemId);

  auto bounds = instrument_doc(1);
  bounds["scale_max"] = 1;
  CHECK(error_code(bounds) == errc::kBadScaleBounds);

  auto style = instrument_doc(1);
  style["items"][0]["style"] = "XYZ";
  CHECK(error_code(style) == errc::kMalformedDocument);
}

TEST_CASE("the shipped instrument has four items per style") {
  const auto& ins = *demo_instrument();
  CHECK(ins.items.size() == 20);
  for (auto s : kAllStyles) {
    CHECK(std::count_if(ins.items.begin(), ins.items.end(), [&](const Item& i) { return i.style == s; }) == 4);
  }
}

TEST_CASE("scoring") {
  const auto ins = validate_instrument(instrument_doc(2));
  Responses mid, top;
  for (const auto& it : ins.items) {
    mid[it.id] = 3;
    top[it.id] = 5;
  }
  for (auto s : kAllStyles) {
    CHECK(score_questionnaire(ins, mid)[s] == doctest::Approx(50.0));
    CHECK(score_questionnaire(ins, top)[s] == doctest::Approx(100.0));
  }

  SUBCASE("a reverse-scored item cancels its agreeing twin") {
    auto doc = instrument_doc(2);
    doc["items"][1]["reverse_scored"] = true;
    const auto rev = validate_instrument(doc);
    CHECK(score_questionnaire(rev, top)[LearningStyle::SS] == doctest::Approx(50.0));
  }

  SUBCASE("missing and out-of-range responses") {
    auto r = mid;
    r.erase("q1");
    CHECK_THROWS_WITH_AS(score_questionnaire(ins, r), doctest::Contains("q1"), Error);
    r = mid;
    r["q1"] = 6;
    try {
      score_questionnaire(ins, r);
      FAIL("accepted out-of-range response");
    } catch (const Error& e) {
      CHECK(e.code() == errc::kOutOfRangeResponse);
    }
  }

  SUBCASE("agrees with the brute-force formula on random sheets") {
    std::mt19937_64 rng(11);
    auto doc = instrument_doc(3);
    for (auto& it : doc["items"]) it["reverse_scored"] = rng() % 3 == 0;
    doc["scale_min"] = 0;
    doc["scale_max"] = 6;
    const auto ins7 = validate_instrument(doc);
    for (int t = 0; t < 200; ++t) {
      Responses r;
      for (const auto& it : ins7.items) r[it.id] = static_cast<int>(rng() % 7);
      const auto got = score_questionnaire(ins7, r);
      const auto want = brute_scores(ins7, r);
      for (auto s : kAllStyles) CHECK(got[s] == doctest::Approx(want[index_of(s)]).epsilon(1e-12));
    }
  }

  SUBCASE("translation shifts only the shifted style") {
    Responses base = mid;
    Responses shifted = mid;
    for (const auto& it : ins.items) {
      if (it.style == LearningStyle::EIA) shifted[it.id] += 1;
    }
    const auto a = score_questionnaire(ins, base);
    const auto b = score_questionnaire(ins, shifted);
    for (auto s : kAllStyles) {
      CHECK(b[s] - a[s] == doctest::Approx(s == LearningStyle::EIA ? 25.0 : 0.0));
    }
  }
}

TEST_CASE("dominant style breaks ties in canonical order") {
  CHECK(dominant_style({{50, 50, 50, 50, 50}}) == LearningStyle::SS);
  CHECK(dominant_style({{10, 90, 20, 20, 20}}) == LearningStyle::GOA);
  CHECK(dominant_style({{70, 70, 30, 30, 30}}) == LearningStyle::SS);
  CHECK(dominant_style({{0, 0, 0, 40, 40}}) == LearningStyle::CA);
}
