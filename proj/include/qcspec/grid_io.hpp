#pragma once

// Text file formats: series files, crossing-series (QCS) files and versioned
// grid files. Numbers are written with 17 significant digits, so a write/read
// round trip reproduces every double exactly.
//
// Grid file layout:
//   qcspec-grid 1
//   n <series length, 0 if not a Fourier grid>
//   rows <F>
//   cols <L>
//   normalized <0|1>
//   freq_grid <fourier|explicit>
//   freqs <F values>
//   alphas <L values>
//   meta <key> <value>            (zero or more)
//   provenance <semi-analytic|monte-carlo>   (truth grids only)
//   truncation_bound <value>      (truth grids only)
//   values
//   <F lines of L values>         rows are frequencies, columns levels
//   se                            (Monte Carlo truth only)
//   <F lines of L values>
//   end

#include <iosfwd>
#include <optional>
#include <string>

#include "qcspec/estimators.hpp"
#include "qcspec/series.hpp"
#include "qcspec/simulate.hpp"

namespace qcspec {

/// One value per line; blank lines and text after '#' are ignored. A trailing
/// delimiter (',', ';', tab) is tolerated; anything else is an input error
/// naming the line.
TimeSeries parse_series(std::istream& in);
TimeSeries read_series(const std::string& path);
void write_series(std::ostream& out, const TimeSeries& y, const std::string& comment = {});
void write_series(const std::string& path, const TimeSeries& y, const std::string& comment = {});

void write_qcs(std::ostream& out, const QcsMatrix& qcs);
void write_qcs(const std::string& path, const QcsMatrix& qcs);
QcsMatrix parse_qcs(std::istream& in);
QcsMatrix read_qcs(const std::string& path);
/// True if the file starts with the QCS header line.
bool is_qcs_file(const std::string& path);

struct GridFile {
  SpectrumGrid grid;
  std::optional<TruthProvenance> provenance;
  Eigen::MatrixXd se;
  double truncation_bound = 0.0;

  TruthGrid to_truth() const;
};

void write_grid(std::ostream& out, const SpectrumGrid& grid);
void write_grid(std::ostream& out, const TruthGrid& truth);
void write_grid(const std::string& path, const SpectrumGrid& grid);
void write_grid(const std::string& path, const TruthGrid& truth);
GridFile parse_grid(std::istream& in);
GridFile read_grid(const std::string& path);

std::string provenance_name(TruthProvenance p);

}  // namespace qcspec
