#include <gtest/gtest.h>

#include <regex>

#include "fixtures.hpp"

using namespace tvr;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Render, Deterministic) {
  const auto s = fixtures::generated(Setting::View, 1)[0];
  EXPECT_EQ(render_svg(s.initial, ViewTag::Left), render_svg(s.initial, ViewTag::Left));
}

TEST(Render, OneGlyphPerVisibleObject) {
  for (const auto& s : fixtures::generated(Setting::Event, 60)) {
    for (auto view : {ViewTag::Left, ViewTag::Center, ViewTag::Right}) {
      ASSERT_EQ(count_of(render_svg(s.initial, view), "class=\"obj\""),
                static_cast<std::size_t>(s.initial.visible_count()));
    }
  }
}

TEST(Render, ViewsDiffer) {
  auto s = fixtures::row_scene();
  s[0].position = {10, 20};
  EXPECT_NE(render_svg(s, ViewTag::Left), render_svg(s, ViewTag::Right));
  EXPECT_NE(render_svg(s, ViewTag::Left), render_svg(s, ViewTag::Center));
}

TEST(Render, GlyphsAndMaterials) {
  auto s = fixtures::row_scene();
  s[0].shape = fixtures::v("cube");
  s[0].material = fixtures::v("metal");
  s[0].color = fixtures::v("red");
  s[1].shape = fixtures::v("sphere");
  s[1].material = fixtures::v("glass");
  s[2].shape = fixtures::v("cylinder");
  s[2].material = fixtures::v("rubber");
  const auto svg = render_svg(s, ViewTag::Center);
  EXPECT_NE(svg.find("<rect class=\"obj\""), std::string::npos);
  EXPECT_NE(svg.find("<circle class=\"obj\""), std::string::npos);
  EXPECT_NE(svg.find("<polygon class=\"obj\""), std::string::npos);
  EXPECT_NE(svg.find("url(#hatch-red)"), std::string::npos);
  EXPECT_NE(svg.find("fill-opacity=\"0.5\""), std::string::npos);
  EXPECT_NE(svg.find("class=\"hidden-area\""), std::string::npos);
  EXPECT_NE(svg.find("class=\"frame\""), std::string::npos);
}

TEST(Render, SizeScalesGlyph) {
  auto s = fixtures::row_scene();
  s[0].shape = fixtures::v("sphere");
  s[0].size = fixtures::v("small");
  auto svg = render_svg(s, ViewTag::Center);
  EXPECT_NE(svg.find("r=\"15.00\""), std::string::npos);
  s[0].size = fixtures::v("large");
  svg = render_svg(s, ViewTag::Center);
  EXPECT_NE(svg.find("r=\"25.00\""), std::string::npos);
}

TEST(Stats, OptionCounts) {
  const auto r = balance_report(fixtures::generated(Setting::Event, 400));
  EXPECT_EQ(r.ngram[0].options, 33u);
  EXPECT_EQ(r.ngram[1].options, 1089u);
  EXPECT_EQ(r.samples, 400u);
}

TEST(Stats, FourStepSequenceContributesThreeBigrams) {
  auto samples = fixtures::generated(Setting::Event, 200);
  const auto it = std::find_if(samples.begin(), samples.end(), [](const Sample& s) { return s.reference.size() == 4; });
  ASSERT_NE(it, samples.end());
  const std::vector<Sample> one = {*it};
  const auto r = balance_report(one);
  EXPECT_EQ(r.ngram_counts[0].total(), 4u);
  EXPECT_EQ(r.ngram_counts[1].total(), 3u);
  EXPECT_EQ(r.ngram_counts[2].total(), 2u);
  EXPECT_EQ(r.ngram_counts[3].total(), 1u);
}

TEST(Stats, OptionStatsMatchDirectComputation) {
  CountTable<> t;
  t.increment("a", 4);
  t.increment("b", 2);
  t.increment("c", 6);
  const auto s = option_stats(t, 4);  // one option never observed
  EXPECT_EQ(s.observed, 3u);
  EXPECT_EQ(s.min, 0u);
  EXPECT_EQ(s.max, 6u);
  EXPECT_DOUBLE_EQ(s.median, 3.0);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt((9.0 + 1.0 + 1.0 + 9.0) / 4.0));
}

TEST(Stats, HistogramsCoverAllFactors) {
  const auto samples = fixtures::generated(Setting::Event, 400);
  const auto r = balance_report(samples);
  std::uint64_t n = 0;
  for (const auto& [k, c] : r.lengths) n += c;
  EXPECT_EQ(n, 400u);
  EXPECT_EQ(r.lengths.size(), 4u);
  EXPECT_EQ(r.visible_counts.size(), 6u);
  EXPECT_EQ(r.move_types.size(), 3u);
  EXPECT_EQ(r.move_types.count("hidden"), 0u);
  EXPECT_EQ(r.initial_attributes.at("color").size(), 8u);
  const auto text = balance_report_to_text(r);
  EXPECT_NE(text.find("1-gram"), std::string::npos);
  EXPECT_NE(text.find("transformation length"), std::string::npos);
  const auto j = balance_report_to_json(r);
  EXPECT_EQ(j["ngrams"]["1-gram"]["options"], 33);
}
