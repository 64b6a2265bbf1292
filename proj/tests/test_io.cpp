#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>

#include "sigcal/io.hpp"
#include "sigcal/pricing.hpp"

using namespace sigcal;

namespace {

std::string tmp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("sigcal_io_" + name)).string();
}

}  // namespace

TEST(Fmt, ShortestRoundTrip) {
  EXPECT_EQ(io::fmt(0.1), "0.1");
  EXPECT_EQ(io::fmt(1.0), "1");
  EXPECT_EQ(io::fmt(-2.5e-300), "-2.5e-300");
  EXPECT_EQ(io::fmt(std::nan("")), "nan");
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 20000; ++i) {
    std::uint64_t b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    const double back = std::strtod(io::fmt(v).c_str(), nullptr);
    ASSERT_EQ(std::memcmp(&back, &v, sizeof v), 0) << io::fmt(v);
  }
}

TEST(Csv, WriteReadRoundTrip) {
  const std::string f = tmp_file("table.csv");
  io::write_text(f, io::to_csv({"a", "b"}, {{1.5, -2}, {1e-20, 3}}));
  EXPECT_EQ(io::read_text(f), "a,b\n1.5,-2\n1e-20,3\n");
  io::Table t = io::read_csv(f);
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][0], "1e-20");
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_THROW(t.column("c"), std::invalid_argument);
  io::write_text(f, "a,b\n1,2,3\n");
  EXPECT_THROW(io::read_csv(f), std::runtime_error);
  EXPECT_THROW(io::read_csv(tmp_file("does_not_exist.csv")), std::runtime_error);
  std::remove(f.c_str());
}

TEST(Csv, ToleratesCrlfAndBlankLines) {
  const std::string f = tmp_file("crlf.csv");
  io::write_text(f, "t, x1\r\n0, 1\r\n\r\n1, 2\r\n");
  SamplePath p = io::read_path_csv(f);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.values(1, 0), 2.0);
  std::remove(f.c_str());
}

TEST(PathCsv, RoundTripIsExact) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  SamplePath p;
  p.values.resize(30, 3);
  for (int i = 0; i < 30; ++i) {
    p.times.push_back(i / 29.0);
    for (int c = 0; c < 3; ++c) p.values(i, c) = nd(rng);
  }
  const std::string f = tmp_file("path.csv");
  const std::string text = io::path_csv(p);
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,x1,x2,x3");
  io::write_text(f, text);
  SamplePath q = io::read_path_csv(f);
  EXPECT_EQ(q.times, p.times);
  EXPECT_EQ(q.values, p.values);
  EXPECT_EQ(io::path_csv(q), text);
  io::write_text(f, "s,x1\n0,1\n");
  EXPECT_THROW(io::read_path_csv(f), std::runtime_error);
  std::remove(f.c_str());
}

TEST(QuotesCsv, FillsMissingColumns) {
  const std::string f = tmp_file("quotes.csv");
  const double mid = bs_price(1, 1.1, 0.5, 0.2);
  io::write_text(f, "T,K,mid,iv\n0.5,0.9,,0.25\n0.5,1.1," + io::fmt(mid) + ",\n");
  QuoteSurface s = io::read_quotes_csv(f, 1.0);
  ASSERT_EQ(s.quotes.size(), 2u);
  EXPECT_NEAR(s.quotes[0].mid, bs_price(1, 0.9, 0.5, 0.25), 1e-15);
  EXPECT_NEAR(s.quotes[1].iv, 0.2, 1e-10);
  EXPECT_NEAR(s.quotes[1].vega, bs_vega(1, 1.1, 0.5, s.quotes[1].iv), 1e-15);

  io::write_text(f, io::quotes_csv(s));
  QuoteSurface r = io::read_quotes_csv(f, 1.0);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(r.quotes[i].mid, s.quotes[i].mid);
    EXPECT_EQ(r.quotes[i].iv, s.quotes[i].iv);
    EXPECT_EQ(r.quotes[i].vega, s.quotes[i].vega);
  }
  io::write_text(f, "T,K,mid\n0.5,0.9,\n");
  EXPECT_THROW(io::read_quotes_csv(f, 1.0), std::invalid_argument);
  io::write_text(f, "T,mid\n0.5,0.1\n");
  EXPECT_THROW(io::read_quotes_csv(f, 1.0), std::invalid_argument);
  std::remove(f.c_str());
}

TEST(SigStreamCsv, ShapeMatchesWords) {
  SamplePath p;
  p.times = {0, 0.5, 1};
  p.values.resize(3, 2);
  p.values << 0, 0, 1, 2, 3, -1;
  SigStream s = path_signature(p, 2);
  const std::string text = io::sig_stream_csv(s);
  std::size_t lines = 0, pos = 0;
  while ((pos = text.find('\n', pos)) != std::string::npos) ++lines, ++pos;
  EXPECT_EQ(lines, 4u);
  // Time-augmented: 1 + 3 + 9 quoted word labels at depth 2.
  ASSERT_EQ(s.alphabet(), 3);
  const std::string header = text.substr(0, text.find('\n'));
  EXPECT_EQ(std::count(header.begin(), header.end(), '"'), 2 * 13);
  EXPECT_EQ(series_dimension(3, 2), 13u);
}

TEST(Json, DumpIsStable) {
  nlohmann::json j = {{"b", 1.5}, {"a", {1, 2}}};
  EXPECT_EQ(io::dump_json(j), io::dump_json(nlohmann::json::parse(io::dump_json(j))));
  EXPECT_EQ(io::dump_json(j).back(), '\n');
}
