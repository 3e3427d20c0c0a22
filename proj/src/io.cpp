#include "geomed/cli_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace geomed {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view cell, double& out) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void csv_error(std::size_t line_no, const std::string& what) {
  std::ostringstream os;
  os << "CSV line " << line_no << ": " << what;
  throw DataError(os.str());
}

// Parses one line into out. Returns false for a header line (only allowed
// when allow_header is set); throws on anything else malformed.
bool parse_row(std::string_view line, std::size_t line_no, std::size_t expected_dim, bool allow_header,
               std::vector<double>& out) {
  const auto cells = split_cells(line);
  out.resize(cells.size());
  bool all_numeric = true;
  for (std::size_t j = 0; j < cells.size(); ++j) {
    if (!parse_double(cells[j], out[j])) all_numeric = false;
  }
  if (!all_numeric) {
    if (allow_header) return false;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double tmp;
      if (!parse_double(cells[j], tmp)) {
        csv_error(line_no, "cannot parse cell " + std::to_string(j + 1) + " '" + std::string(trim(cells[j])) + "'");
      }
    }
  }
  if (expected_dim != 0 && cells.size() != expected_dim) {
    csv_error(line_no, "ragged row: expected " + std::to_string(expected_dim) + " columns, found " +
                           std::to_string(cells.size()));
  }
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (!std::isfinite(out[j])) csv_error(line_no, "non-finite value in column " + std::to_string(j + 1));
  }
  return true;
}

}  // namespace

bool CsvStreamSource::next(Vector& out) {
  std::vector<double> row;
  while (std::getline(in_, line_)) {
    ++line_no_;
    if (trim(line_).empty()) continue;
    const bool first = !header_checked_;
    header_checked_ = true;
    if (!parse_row(line_, line_no_, dim_, first, row)) continue;
    if (dim_ == 0) dim_ = row.size();
    out = Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(row.size()));
    return true;
  }
  return false;
}

Dataset read_csv(std::istream& in) {
  CsvStreamSource source(in);
  std::vector<double> values;
  std::size_t dim = 0;
  Vector row;
  while (source.next(row)) {
    dim = static_cast<std::size_t>(row.size());
    values.insert(values.end(), row.data(), row.data() + row.size());
  }
  if (values.empty()) throw DataError("CSV: no data rows");
  return Dataset(std::move(values), dim);
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_csv(in);
}

std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

void write_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      if (j > 0) out << ',';
      out << format_double(row[j]);
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(out, data);
}

Vector parse_vector(std::string_view text) {
  const auto cells = split_cells(text);
  Vector v(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t j = 0; j < cells.size(); ++j) {
    double x;
    if (!parse_double(cells[j], x) || !std::isfinite(x)) {
      throw std::invalid_argument("cannot parse vector component '" + std::string(trim(cells[j])) + "'");
    }
    v[static_cast<Eigen::Index>(j)] = x;
  }
  return v;
}

// ------------------------------------------------------------- Binary

namespace {

static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);

std::uint64_t load_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | p[k];
  return v;
}

void store_u64(unsigned char* p, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) {
    p[k] = static_cast<unsigned char>(v & 0xff);
    v >>= 8;
  }
}

struct BinaryHeader {
  std::uint64_t n = 0;
  std::uint64_t d = 0;
};

BinaryHeader read_header(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, kBinaryHeaderBytes> h{};
  in.read(reinterpret_cast<char*>(h.data()), h.size());
  if (in.gcount() != static_cast<std::streamsize>(h.size())) {
    throw DataError(path.string() + ": file shorter than the " + std::to_string(kBinaryHeaderBytes) + "-byte header");
  }
  if (h[0] != 'G' || h[1] != 'M' || h[2] != 'E' || h[3] != 'D') throw DataError(path.string() + ": bad magic");
  if (h[4] != kBinaryVersion) {
    throw DataError(path.string() + ": unsupported format version " + std::to_string(h[4]));
  }
  BinaryHeader header{load_u64(h.data() + 5), load_u64(h.data() + 13)};
  if (header.n == 0 || header.d == 0) throw DataError(path.string() + ": n and d must be positive");

  const auto actual = std::filesystem::file_size(path);
  const std::uint64_t expected = kBinaryHeaderBytes + header.n * header.d * 8;
  if (header.d > (std::uint64_t{1} << 40) / header.n || actual != expected) {
    std::ostringstream os;
    os << path.string() << ": payload size mismatch, expected " << expected << " bytes, found " << actual;
    throw DataError(os.str());
  }
  return header;
}

void decode_row(const unsigned char* bytes, std::uint64_t row, std::uint64_t d, const std::filesystem::path& path,
                double* out) {
  for (std::uint64_t j = 0; j < d; ++j) {
    const double x = std::bit_cast<double>(load_u64(bytes + 8 * j));
    if (!std::isfinite(x)) {
      std::ostringstream os;
      os << path.string() << ": non-finite value at row " << row << ", column " << j;
      throw DataError(os.str());
    }
    out[j] = x;
  }
}

}  // namespace

Dataset read_binary(const std::filesystem::path& path) {
  BinaryFileSource source(path);
  std::vector<double> values(source.rows() * source.dim());
  Vector row;
  std::size_t offset = 0;
  while (source.next(row)) {
    std::copy(row.data(), row.data() + row.size(), values.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += static_cast<std::size_t>(row.size());
  }
  return Dataset(std::move(values), source.dim());
}

void write_binary(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  std::array<unsigned char, kBinaryHeaderBytes> h{'G', 'M', 'E', 'D', kBinaryVersion};
  store_u64(h.data() + 5, data.size());
  store_u64(h.data() + 13, data.dim());
  out.write(reinterpret_cast<const char*>(h.data()), h.size());
  std::vector<unsigned char> row(8 * data.dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    for (std::size_t j = 0; j < data.dim(); ++j) {
      store_u64(row.data() + 8 * j, std::bit_cast<std::uint64_t>(x[static_cast<Eigen::Index>(j)]));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw DataError("write failed for " + path.string());
}

BinaryFileSource::BinaryFileSource(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) throw DataError("cannot open " + path.string());
  const BinaryHeader header = read_header(in_, path);
  n_ = header.n;
  d_ = header.d;
  buffer_.resize(8 * d_);
  path_ = path;
}

bool BinaryFileSource::next(Vector& out) {
  if (row_ >= n_) return false;
  in_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
  if (in_.gcount() != static_cast<std::streamsize>(buffer_.size())) {
    throw DataError(path_.string() + ": unexpected end of payload at row " + std::to_string(row_));
  }
  out.resize(static_cast<Eigen::Index>(d_));
  decode_row(buffer_.data(), row_, d_, path_, out.data());
  ++row_;
  return true;
}

bool BinaryFileSource::rewind() {
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(kBinaryHeaderBytes));
  row_ = 0;
  return static_cast<bool>(in_);
}

bool is_binary_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".gmed" || ext == ".bin";
}

Dataset read_dataset(const std::filesystem::path& path) {
  return is_binary_path(path) ? read_binary(path) : read_csv(path);
}

// ------------------------------------------------------------ Reports

namespace {

template <typename T>
nlohmann::ordered_json optional_json(const std::optional<T>& value) {
  return value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const nlohmann::ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

nlohmann::ordered_json to_json(const RunReport& report) {
  nlohmann::ordered_json params;
  params["c_gamma"] = optional_json(report.parameters.c_gamma);
  params["alpha"] = optional_json(report.parameters.alpha);
  params["starts"] = optional_json(report.parameters.starts);
  params["epochs"] = optional_json(report.parameters.epochs);
  params["seed"] = optional_json(report.parameters.seed);
  params["tol"] = optional_json(report.parameters.tol);
  params["max_iter"] = optional_json(report.parameters.max_iter);
  params["quantile_v"] = optional_json(report.parameters.quantile_v);

  nlohmann::ordered_json j;
  j["method"] = report.method;
  j["parameters"] = std::move(params);
  j["dim"] = report.dim;
  j["estimate"] = optional_json(report.estimate);
  j["estimate_path"] = optional_json(report.estimate_path);
  j["empirical_loss"] = optional_json(report.empirical_loss);
  j["observations"] = report.observations;
  j["start_index"] = optional_json(report.start_index);
  j["iterations"] = optional_json(report.iterations);
  j["converged"] = optional_json(report.converged);
  j["elapsed_seconds"] = report.elapsed_seconds;
  return j;
}

RunReport run_report_from_json(const nlohmann::ordered_json& j) {
  RunReport r;
  r.method = j.at("method").get<std::string>();
  const auto& p = j.at("parameters");
  r.parameters.c_gamma = optional_from<double>(p, "c_gamma");
  r.parameters.alpha = optional_from<double>(p, "alpha");
  r.parameters.starts = optional_from<std::uint64_t>(p, "starts");
  r.parameters.epochs = optional_from<std::uint64_t>(p, "epochs");
  r.parameters.seed = optional_from<std::uint64_t>(p, "seed");
  r.parameters.tol = optional_from<double>(p, "tol");
  r.parameters.max_iter = optional_from<std::uint64_t>(p, "max_iter");
  r.parameters.quantile_v = optional_from<std::vector<double>>(p, "quantile_v");
  r.dim = j.at("dim").get<std::size_t>();
  r.estimate = optional_from<std::vector<double>>(j, "estimate");
  r.estimate_path = optional_from<std::string>(j, "estimate_path");
  r.empirical_loss = optional_from<double>(j, "empirical_loss");
  r.observations = j.at("observations").get<std::uint64_t>();
  r.start_index = optional_from<std::uint64_t>(j, "start_index");
  r.iterations = optional_from<std::uint64_t>(j, "iterations");
  r.converged = optional_from<bool>(j, "converged");
  r.elapsed_seconds = j.at("elapsed_seconds").get<double>();
  return r;
}

RunReport make_run_report(const EstimateReport& estimate, RunParameters parameters,
                          const std::optional<std::filesystem::path>& estimate_path) {
  RunReport r;
  r.method = estimate.method;
  r.parameters = std::move(parameters);
  r.dim = static_cast<std::size_t>(estimate.estimate.size());
  if (r.dim <= kInlineEstimateDim) {
    r.estimate.emplace(estimate.estimate.data(), estimate.estimate.data() + estimate.estimate.size());
  } else {
    if (!estimate_path) throw std::invalid_argument("an estimate path is required for d > 100");
    std::vector<double> values(estimate.estimate.data(), estimate.estimate.data() + estimate.estimate.size());
    write_binary(*estimate_path, Dataset(std::move(values), r.dim));
    r.estimate_path = estimate_path->string();
  }
  r.empirical_loss = estimate.empirical_loss;
  r.observations = estimate.observations;
  r.elapsed_seconds = estimate.elapsed_seconds;
  if (estimate.start_index) r.start_index = *estimate.start_index;
  if (estimate.iterations) r.iterations = *estimate.iterations;
  r.converged = estimate.converged;
  return r;
}

}  // namespace geomed
