#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tslab/config.hpp"
#include "tslab/csv.hpp"
#include "tslab/svg.hpp"

namespace tslab {
namespace {

ExperimentConfig fancy_config() {
  ExperimentConfig c;
  c.d = 3;
  c.r = 0.75;
  c.sigma = 1.25;
  c.prior_kind = PriorKind::kCustom;
  c.prior_evals = {4.0, 1.0, 0.25};
  c.rotation_seed = 99;
  c.mu0 = {0.1, -0.2, 0.3};
  c.horizon = 128;
  c.replicates = 50;
  c.seed = 12345;
  c.instances = 777;
  c.mala_steps = 40;
  c.mala_step_size = 0.01;
  c.noise = NoiseKind::kSmoothedLaplace;
  c.scale_grid = {0.5, 8.0};
  c.bound_c3 = 2.5;
  return c;
}

TEST(Config, RoundTripsThroughSerialization) {
  for (const auto& c : {ExperimentConfig{}, fancy_config()}) {
    const auto again = parse_config(serialize_config(c));
    EXPECT_EQ(c, again);
    EXPECT_EQ(config_hash(c), config_hash(again));
  }
  ExperimentConfig poly;
  poly.prior_kind = PriorKind::kPolynomial;
  poly.prior_alpha = 1.5;
  EXPECT_EQ(poly, parse_config(serialize_config(poly)));
}

TEST(Config, HashIsStableAndSensitive) {
  EXPECT_EQ(config_hash_hex(ExperimentConfig{}), "a789f077359c521a");
  ExperimentConfig c;
  c.seed = 2;
  EXPECT_NE(config_hash_hex(c), config_hash_hex(ExperimentConfig{}));
}

TEST(Config, ParserToleratesCommentsAndRejectsJunk) {
  const auto c = parse_config("# comment\n  d = 5 # trailing\n\nsigma = 2.0\n");
  EXPECT_EQ(c.d, 5);
  EXPECT_EQ(c.sigma, 2.0);
  EXPECT_THROW(parse_config("unknown_key = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("d = abc\n"), ConfigError);
  EXPECT_THROW(parse_config("just junk\n"), ConfigError);
  EXPECT_THROW(parse_config("prior = dirac\n"), ConfigError);
  EXPECT_THROW(parse_config("noise = cauchy\n"), ConfigError);
}

TEST(Config, PriorConstruction) {
  ExperimentConfig c;
  c.d = 3;
  c.prior_kind = PriorKind::kScaled;
  c.prior_scale = 4.0;
  EXPECT_NEAR(build_prior_cov(c).trace(), 12.0, 1e-12);

  c.prior_kind = PriorKind::kPolynomial;
  c.prior_alpha = 1.0;
  const auto poly = build_prior_cov(c);
  EXPECT_NEAR(poly.trace(), 6.0, 1e-12);  // 4 + 1 + 1

  c.prior_kind = PriorKind::kCustom;
  c.prior_evals = {1.0, 2.0, 3.0};
  c.rotation_seed = 7;
  const auto rotated = build_prior_cov(c);
  const auto spec = spectral_decomposition(rotated);
  EXPECT_NEAR(spec.eigenvalues(0), 3.0, 1e-10);
  EXPECT_NEAR(spec.eigenvalues(2), 1.0, 1e-10);
  EXPECT_GT(std::fabs(rotated(0, 1)), 1e-6);  // rotation actually applied

  c.prior_evals = {1.0, 2.0};
  EXPECT_THROW(build_prior_cov(c), ConfigError);

  c = ExperimentConfig{};
  c.mu0 = {1.0};
  EXPECT_THROW(build_mu0(c), ConfigError);
}

TEST(Csv, HeaderOnlyForEmptyRows) {
  const auto text = render_csv({}, {"a", "b"});
  EXPECT_EQ(text, "a,b\n");
}

TEST(Csv, QuotingAndRoundTrip) {
  const std::vector<CsvRow> rows = {
      {std::string("plain"), 1.5, std::int64_t{-7}, std::monostate{}},
      {std::string("has,comma \"q\""), 0.1234567890123456789, std::int64_t{0},
       std::string("x")}};
  const auto text = render_csv(rows, {"s", "v", "n", "opt"});
  // minimal parser: split respecting quotes
  std::vector<std::vector<std::string>> parsed;
  std::string field;
  std::vector<std::string> current;
  bool in_quotes = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        in_quotes = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      current.push_back(field);
      field.clear();
    } else if (ch == '\n') {
      current.push_back(field);
      field.clear();
      parsed.push_back(current);
      current.clear();
    } else {
      field += ch;
    }
  }
  ASSERT_EQ(parsed.size(), 3u);
  EXPECT_EQ(parsed[1][0], "plain");
  EXPECT_EQ(parsed[2][0], "has,comma \"q\"");
  EXPECT_EQ(parsed[1][3], "");
  // doubles survive the text round trip bit-for-bit at 17 significant digits
  EXPECT_EQ(std::stod(parsed[1][1]), 1.5);
  EXPECT_EQ(std::stod(parsed[2][1]), 0.1234567890123456789);
}

TEST(Csv, RejectsNanAndSchemaMismatch) {
  EXPECT_THROW(
      render_csv({{std::numeric_limits<double>::quiet_NaN()}}, {"x"}),
      SchemaError);
  EXPECT_THROW(
      render_csv({{std::numeric_limits<double>::infinity()}}, {"x"}),
      SchemaError);
  EXPECT_THROW(render_csv({{1.0, 2.0}}, {"x"}), SchemaError);
  EXPECT_THROW(render_csv({}, {}), SchemaError);
}

TEST(Svg, WritesWellFormedPlot) {
  const std::string path = std::filesystem::temp_directory_path() / "tslab_plot.svg";
  write_line_plot(path, "title", "x", "y",
                  {{"series a", {0, 1, 2}, {0.0, 1.0, 0.5}, "#ff0000"},
                   {"series b", {0, 1, 2}, {1.0, 0.5, 2.0}, "#00ff00"}});
  std::ifstream in(path);
  ASSERT_TRUE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string svg = buf.str();
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '\n') > 5, true);
  std::size_t polylines = 0, pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    ++polylines;
    pos += 1;
  }
  EXPECT_EQ(polylines, 2u);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace tslab
