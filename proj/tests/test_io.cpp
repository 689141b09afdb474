#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qcspec/error.hpp"
#include "qcspec/evaluate.hpp"
#include "qcspec/grid_io.hpp"
#include "qcspec/heatmap.hpp"

using namespace qcspec;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("qcspec_io_" + name)).string();
}

Error input_error(const std::string& text) {
  std::istringstream in(text);
  try {
    (void)parse_series(in);
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected a parse error");
  return Error(ErrorKind::input, "");
}

}  // namespace

TEST_CASE("series parsing") {
  std::istringstream in("# header\n1.5\n\n-2e-3,\n  3\t\n4;  # trailing comment\n");
  const TimeSeries y = parse_series(in);
  REQUIRE(y.size() == 4);
  CHECK(y[0] == 1.5);
  CHECK(y[1] == -2e-3);
  CHECK(y[2] == 3.0);
  CHECK(y[3] == 4.0);
}

TEST_CASE("series parse errors name the line") {
  const Error e = input_error("3\nabc\n2\n");
  CHECK(e.kind() == ErrorKind::input);
  CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  CHECK(std::string(input_error("1\n2\n3 4\n").what()).find("line 3") != std::string::npos);
  CHECK(std::string(input_error("1\nnan\n").what()).find("line 2") != std::string::npos);
  CHECK(std::string(input_error("# only a comment\n").what()) == "empty input");
}

TEST_CASE("series round trip is exact") {
  const TimeSeries y = generate(SimSpec{2, 200, 4, 1000});
  std::stringstream s;
  write_series(s, y, "case 2");
  const TimeSeries z = parse_series(s);
  CHECK(std::equal(y.values().begin(), y.values().end(), z.values().begin(), z.values().end()));
}

TEST_CASE("QCS round trip") {
  const QcsMatrix q = qcser(generate(SimSpec{1, 100, 4, 1000}), QuantileGrid::standard());
  const std::string path = temp_path("rt.qcs");
  write_qcs(path, q);
  CHECK(is_qcs_file(path));
  const QcsMatrix r = read_qcs(path);
  CHECK(r.u == q.u);
  CHECK(r.alphas == q.alphas);
  CHECK(r.qhat == q.qhat);
  std::filesystem::remove(path);
}

TEST_CASE("spectrum grid round trip is bit-identical") {
  const QcsMatrix q = qcser(generate(SimSpec{1, 256, 4, 1000}), QuantileGrid::standard());
  SpectrumGrid g = estimate(q, {.kind = EstimatorKind::sar});
  REQUIRE(g.n == 256);
  std::stringstream s;
  write_grid(s, g);
  const std::string first = s.str();
  const GridFile f = parse_grid(s);
  CHECK(f.grid.s == g.s);
  CHECK(f.grid.freqs == g.freqs);
  CHECK(f.grid.alphas == g.alphas);
  CHECK(f.grid.n == 256);
  CHECK(f.grid.meta == g.meta);
  CHECK_FALSE(f.provenance.has_value());
  std::stringstream again;
  write_grid(again, f.grid);
  CHECK(again.str() == first);
}

TEST_CASE("explicit-frequency grids and truth grids round trip") {
  const QuantileGrid g({0.2, 0.5});
  const std::vector<double> w{0.1, 0.7, 3.0};
  const TruthGrid t = truth_gaussian(case1_coefficients(), g, kTruthMaxlag, w);
  std::stringstream s;
  write_grid(s, t);
  const GridFile f = parse_grid(s);
  CHECK(f.grid.s == t.grid.s);
  CHECK(f.grid.freqs == w);
  CHECK(f.provenance == TruthProvenance::semi_analytic);
  CHECK(f.truncation_bound == t.truncation_bound);

  TruthGrid mc = t;
  mc.provenance = TruthProvenance::monte_carlo;
  mc.se = Eigen::MatrixXd::Constant(3, 2, 1.0 / 3.0);
  std::stringstream m;
  write_grid(m, mc);
  const GridFile h = parse_grid(m);
  CHECK(h.provenance == TruthProvenance::monte_carlo);
  CHECK(h.se == mc.se);
  CHECK(h.to_truth().grid.s == mc.grid.s);
}

TEST_CASE("grid parse errors") {
  const SpectrumGrid g = truth_gaussian(case1_coefficients(), QuantileGrid({0.5}), kTruthMaxlag, fourier_frequencies(16)).grid;
  std::stringstream s;
  write_grid(s, g);
  const std::string text = s.str();
  const auto fails = [](const std::string& t) {
    std::istringstream in(t);
    CHECK_THROWS_AS(parse_grid(in), Error);
  };
  fails("");
  fails("qcspec-grid 2\n" + text.substr(text.find('\n') + 1));
  fails(text.substr(0, text.size() - 4));
  std::string bad = text;
  bad.replace(bad.find("values\n") + 7, 1, "x");
  fails(bad);
  std::string rows = text;
  rows.replace(rows.find("rows 7"), 6, "rows 8");
  fails(rows);
}

TEST_CASE("viridis ramp stops") {
  CHECK(viridis(0.0) == std::array<std::uint8_t, 3>{0x44, 0x01, 0x54});
  CHECK(viridis(1.0) == std::array<std::uint8_t, 3>{0xFD, 0xE7, 0x25});
  CHECK(viridis(0.5) == std::array<std::uint8_t, 3>{0x21, 0x91, 0x8C});
  CHECK(viridis(-3.0) == viridis(0.0));
}

TEST_CASE("heatmap layout and PNG round trip") {
  SpectrumGrid g;
  g.freqs = {0.1, 0.2, 0.3};
  g.alphas = QuantileGrid({0.25, 0.75});
  g.s = Eigen::MatrixXd::Constant(3, 2, 0.4);
  const RgbImage flat = render_heatmap(g, 5);
  CHECK(flat.width == 15);
  CHECK(flat.height == 10);
  for (int y = 0; y < flat.height; ++y)
    for (int x = 0; x < flat.width; ++x) CHECK(flat.at(x, y) == viridis(0.0));

  g.s(2, 1) = 1.0;  // highest frequency, highest level: top-right block
  g.s(0, 0) = 0.0;  // lowest frequency, lowest level: bottom-left block
  const RgbImage img = render_heatmap(g, 2);
  CHECK(img.at(5, 0) == viridis(1.0));
  CHECK(img.at(0, 3) == viridis(0.0));
  CHECK(img.at(2, 0) == viridis(0.4));

  const std::string path = temp_path("map.png");
  write_png(path, img);
  const RgbImage back = read_png(path);
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.pixels == img.pixels);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(render_heatmap(g, 0), Error);
}
