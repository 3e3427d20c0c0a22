#ifndef GEOMED_CLI_IO_HPP
#define GEOMED_CLI_IO_HPP

#include "geomed/core.hpp"
#include "geomed/sgd_estimator.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geomed {

// ---------------------------------------------------------------- CSV
//
// Rows of comma-separated decimals. A first row containing any non-numeric
// cell is taken as a header and skipped. Blank lines are ignored. Ragged
// rows, unparsable cells and non-finite values are DataErrors naming the
// 1-based line.

Dataset read_csv(const std::filesystem::path& path);
Dataset read_csv(std::istream& in);

// Shortest decimal that parses back to the same double.
std::string format_double(double x);

void write_csv(std::ostream& out, const Dataset& data);
void write_csv(const std::filesystem::path& path, const Dataset& data);

// Parses "a,b,c" into a vector.
Vector parse_vector(std::string_view text);

// One row at a time from a text stream; holds a single observation.
class CsvStreamSource : public ObservationSource {
 public:
  explicit CsvStreamSource(std::istream& in) : in_(in) {}
  bool next(Vector& out) override;

 private:
  std::istream& in_;
  std::string line_;
  std::size_t line_no_ = 0;
  std::size_t dim_ = 0;
  bool header_checked_ = false;
};

// ------------------------------------------------------------- Binary
//
//   offset 0   "GMED"
//   offset 4   0x01 (format version)
//   offset 5   n, uint64 little-endian
//   offset 13  d, uint64 little-endian
//   offset 21  n*d float64 little-endian, row-major

inline constexpr std::uint8_t kBinaryVersion = 0x01;
inline constexpr std::size_t kBinaryHeaderBytes = 21;

Dataset read_binary(const std::filesystem::path& path);
void write_binary(const std::filesystem::path& path, const Dataset& data);

// Streams rows from a binary file without loading it; rewindable.
class BinaryFileSource : public ObservationSource {
 public:
  explicit BinaryFileSource(const std::filesystem::path& path);
  bool next(Vector& out) override;
  bool rewind() override;

  std::uint64_t rows() const { return n_; }
  std::uint64_t dim() const { return d_; }

 private:
  std::ifstream in_;
  std::uint64_t n_ = 0;
  std::uint64_t d_ = 0;
  std::uint64_t row_ = 0;
  std::vector<unsigned char> buffer_;
  std::filesystem::path path_;
};

// Chooses the reader by extension: .gmed and .bin are binary, anything else
// CSV.
bool is_binary_path(const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

// ------------------------------------------------------------ Reports

struct RunParameters {
  std::optional<double> c_gamma;
  std::optional<double> alpha;
  std::optional<std::uint64_t> starts;
  std::optional<std::uint64_t> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<std::uint64_t> max_iter;
  std::optional<std::vector<double>> quantile_v;
};

struct RunReport {
  std::string method;
  RunParameters parameters;
  // Exactly one of these is set: the estimate inline (d <= kInlineEstimateDim)
  // or the path of a binary file holding it as a single row.
  std::optional<std::vector<double>> estimate;
  std::optional<std::string> estimate_path;
  std::size_t dim = 0;
  std::optional<double> empirical_loss;
  std::uint64_t observations = 0;
  double elapsed_seconds = 0.0;
  std::optional<std::uint64_t> start_index;
  std::optional<std::uint64_t> iterations;
  std::optional<bool> converged;
};

inline constexpr std::size_t kInlineEstimateDim = 100;

// Key order is fixed; absent optionals serialise as null.
nlohmann::ordered_json to_json(const RunReport& report);
RunReport run_report_from_json(const nlohmann::ordered_json& j);

// Fills a RunReport from an estimate. For d > kInlineEstimateDim the
// estimate is written to estimate_path, which must then be provided.
RunReport make_run_report(const EstimateReport& estimate, RunParameters parameters,
                          const std::optional<std::filesystem::path>& estimate_path);

// ---------------------------------------------------------------- CLI

// Exit codes: 0 success, 1 usage error, 2 data error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

int cli_main(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace geomed

#endif  // GEOMED_CLI_IO_HPP
