#include "qcspec/grid_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

#include "qcspec/error.hpp"

namespace qcspec {

namespace {

constexpr std::string_view kGridMagic = "qcspec-grid";
constexpr std::string_view kQcsMagic = "qcspec-qcs";
constexpr int kVersion = 1;

std::string format_double(double v) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_input("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_input("cannot write '" + path + "'");
  return out;
}

void write_row(std::ostream& out, const double* v, Eigen::Index count, Eigen::Index stride) {
  for (Eigen::Index j = 0; j < count; ++j) {
    if (j) out << ' ';
    out << format_double(v[j * stride]);
  }
  out << '\n';
}

// Line-oriented reader for the structured formats.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string next() {
    std::string line;
    if (!std::getline(in_, line)) fail("unexpected end of file");
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  // Reads "<key> <rest>" and returns rest.
  std::string expect(std::string_view key) {
    const std::string line = next();
    const std::string_view sv(line);
    if (sv.substr(0, key.size()) != key || (sv.size() > key.size() && sv[key.size()] != ' '))
      fail("expected '" + std::string(key) + "'");
    return std::string(trim(sv.substr(key.size())));
  }

  std::vector<double> numbers(std::string_view text, Eigen::Index expected) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
      const auto start = text.find_first_not_of(' ', pos);
      if (start == std::string_view::npos) break;
      auto end = text.find(' ', start);
      if (end == std::string_view::npos) end = text.size();
      const auto v = parse_double(text.substr(start, end - start));
      if (!v) fail("cannot parse '" + std::string(text.substr(start, end - start)) + "' as a number");
      out.push_back(*v);
      pos = end;
    }
    if (expected >= 0 && static_cast<Eigen::Index>(out.size()) != expected)
      fail("expected " + std::to_string(expected) + " values, found " + std::to_string(out.size()));
    return out;
  }

  Eigen::Index integer(std::string_view text) {
    Eigen::Index v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || v < 0) fail("expected a nonnegative integer");
    return v;
  }

  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const std::string line = next();
      const std::vector<double> v = numbers(line, cols);
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(j)];
    }
    return m;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw_input("line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

void check_header(Reader& r, std::string_view magic) {
  const std::string line = r.next();
  const std::string expected = std::string(magic) + " " + std::to_string(kVersion);
  if (line.rfind(std::string(magic), 0) != 0) r.fail("missing '" + std::string(magic) + "' header");
  if (line != expected) r.fail("unsupported format version");
}

}  // namespace

// ---------------------------------------------------------------------------
// Series files

TimeSeries parse_series(std::istream& in) {
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv(line);
    if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = trim(sv);
    if (sv.empty()) continue;
    if (sv.back() == ',' || sv.back() == ';') sv = trim(sv.substr(0, sv.size() - 1));
    const auto v = parse_double(sv);
    if (!v) throw_input("line " + std::to_string(line_no) + ": cannot parse '" + std::string(sv) + "' as a number");
    if (!std::isfinite(*v)) throw_input("line " + std::to_string(line_no) + ": non-finite value");
    values.push_back(*v);
  }
  if (values.empty()) throw_input("empty input");
  return TimeSeries(std::move(values));
}

TimeSeries read_series(const std::string& path) {
  std::ifstream in = open_in(path);
  return parse_series(in);
}

void write_series(std::ostream& out, const TimeSeries& y, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  for (double v : y.values()) out << format_double(v) << '\n';
}

void write_series(const std::string& path, const TimeSeries& y, const std::string& comment) {
  std::ofstream out = open_out(path);
  write_series(out, y, comment);
}

// ---------------------------------------------------------------------------
// QCS files

void write_qcs(std::ostream& out, const QcsMatrix& qcs) {
  out << kQcsMagic << ' ' << kVersion << '\n';
  out << "n " << qcs.n() << '\n';
  out << "cols " << qcs.levels() << '\n';
  out << "alphas ";
  write_row(out, qcs.alphas.levels().data(), qcs.levels(), 1);
  out << "qhat ";
  write_row(out, qcs.qhat.data(), static_cast<Eigen::Index>(qcs.qhat.size()), 1);
  out << "values\n";
  for (Eigen::Index t = 0; t < qcs.n(); ++t) write_row(out, qcs.u.data() + t, qcs.levels(), qcs.u.rows());
  out << "end\n";
}

void write_qcs(const std::string& path, const QcsMatrix& qcs) {
  std::ofstream out = open_out(path);
  write_qcs(out, qcs);
}

QcsMatrix parse_qcs(std::istream& in) {
  Reader r(in);
  check_header(r, kQcsMagic);
  const Eigen::Index n = r.integer(r.expect("n"));
  const Eigen::Index cols = r.integer(r.expect("cols"));
  QcsMatrix qcs;
  try {
    qcs.alphas = QuantileGrid(r.numbers(r.expect("alphas"), cols));
  } catch (const Error& e) {
    r.fail(e.what());
  }
  qcs.qhat = r.numbers(r.expect("qhat"), cols);
  r.expect("values");
  qcs.u = r.matrix(n, cols);
  r.expect("end");
  return qcs;
}

QcsMatrix read_qcs(const std::string& path) {
  std::ifstream in = open_in(path);
  return parse_qcs(in);
}

bool is_qcs_file(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  return in && std::getline(in, line) && line.rfind(std::string(kQcsMagic), 0) == 0;
}

// ---------------------------------------------------------------------------
// Grid files

std::string provenance_name(TruthProvenance p) {
  return p == TruthProvenance::semi_analytic ? "semi-analytic" : "monte-carlo";
}

TruthGrid GridFile::to_truth() const {
  TruthGrid t;
  t.grid = grid;
  t.provenance = provenance.value_or(TruthProvenance::semi_analytic);
  t.se = se;
  t.truncation_bound = truncation_bound;
  return t;
}

namespace {

bool is_fourier_grid(const SpectrumGrid& g) { return g.n > 0 && g.freqs == fourier_frequencies(g.n); }

void write_grid_impl(std::ostream& out, const SpectrumGrid& g, const TruthGrid* truth) {
  const Eigen::Index rows = g.s.rows();
  const Eigen::Index cols = g.s.cols();
  if (static_cast<Eigen::Index>(g.freqs.size()) != rows || static_cast<Eigen::Index>(g.alphas.size()) != cols)
    throw_consistency("grid axes do not match the value matrix");
  out << kGridMagic << ' ' << kVersion << '\n';
  out << "n " << g.n << '\n';
  out << "rows " << rows << '\n';
  out << "cols " << cols << '\n';
  out << "normalized " << (g.normalized ? 1 : 0) << '\n';
  out << "freq_grid " << (is_fourier_grid(g) ? "fourier" : "explicit") << '\n';
  out << "freqs ";
  write_row(out, g.freqs.data(), rows, 1);
  out << "alphas ";
  write_row(out, g.alphas.levels().data(), cols, 1);
  for (const auto& [k, v] : g.meta) out << "meta " << k << ' ' << v << '\n';
  if (truth) {
    out << "provenance " << provenance_name(truth->provenance) << '\n';
    out << "truncation_bound " << format_double(truth->truncation_bound) << '\n';
  }
  out << "values\n";
  for (Eigen::Index i = 0; i < rows; ++i) write_row(out, g.s.data() + i, cols, rows);
  if (truth && truth->se.size() > 0) {
    if (truth->se.rows() != rows || truth->se.cols() != cols) throw_consistency("standard-error block shape mismatch");
    out << "se\n";
    for (Eigen::Index i = 0; i < rows; ++i) write_row(out, truth->se.data() + i, cols, rows);
  }
  out << "end\n";
}

}  // namespace

void write_grid(std::ostream& out, const SpectrumGrid& grid) { write_grid_impl(out, grid, nullptr); }
void write_grid(std::ostream& out, const TruthGrid& truth) { write_grid_impl(out, truth.grid, &truth); }

void write_grid(const std::string& path, const SpectrumGrid& grid) {
  std::ofstream out = open_out(path);
  write_grid(out, grid);
}

void write_grid(const std::string& path, const TruthGrid& truth) {
  std::ofstream out = open_out(path);
  write_grid(out, truth);
}

GridFile parse_grid(std::istream& in) {
  Reader r(in);
  check_header(r, kGridMagic);
  GridFile f;
  SpectrumGrid& g = f.grid;
  g.n = r.integer(r.expect("n"));
  const Eigen::Index rows = r.integer(r.expect("rows"));
  const Eigen::Index cols = r.integer(r.expect("cols"));
  const std::string norm = r.expect("normalized");
  if (norm != "0" && norm != "1") r.fail("normalized must be 0 or 1");
  g.normalized = norm == "1";
  const std::string kind = r.expect("freq_grid");
  if (kind != "fourier" && kind != "explicit") r.fail("unknown frequency grid kind");
  g.freqs = r.numbers(r.expect("freqs"), rows);
  if (kind == "fourier" && g.freqs != fourier_frequencies(g.n)) r.fail("frequencies are not the Fourier grid of n");
  try {
    g.alphas = QuantileGrid(r.numbers(r.expect("alphas"), cols));
  } catch (const Error& e) {
    r.fail(e.what());
  }
  std::string line = r.next();
  while (line.rfind("meta ", 0) == 0) {
    const std::string_view rest = trim(std::string_view(line).substr(5));
    const auto sp = rest.find(' ');
    if (sp == std::string_view::npos) r.fail("meta line needs a key and a value");
    g.meta.emplace_back(std::string(rest.substr(0, sp)), std::string(trim(rest.substr(sp + 1))));
    line = r.next();
  }
  if (line.rfind("provenance ", 0) == 0) {
    const std::string_view p = trim(std::string_view(line).substr(11));
    if (p == "semi-analytic")
      f.provenance = TruthProvenance::semi_analytic;
    else if (p == "monte-carlo")
      f.provenance = TruthProvenance::monte_carlo;
    else
      r.fail("unknown provenance");
    line = r.next();
    if (line.rfind("truncation_bound ", 0) != 0) r.fail("expected 'truncation_bound'");
    const auto v = parse_double(trim(std::string_view(line).substr(17)));
    if (!v) r.fail("cannot parse truncation bound");
    f.truncation_bound = *v;
    line = r.next();
  }
  if (line != "values") r.fail("expected 'values'");
  g.s = r.matrix(rows, cols);
  line = r.next();
  if (line == "se") {
    f.se = r.matrix(rows, cols);
    line = r.next();
  }
  if (line != "end") r.fail("expected 'end'");
  return f;
}

GridFile read_grid(const std::string& path) {
  std::ifstream in = open_in(path);
  return parse_grid(in);
}

}  // namespace qcspec
