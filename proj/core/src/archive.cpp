#include "ttnmf/archive.hpp"

#include "ttnmf/csv_io.hpp"
#include "ttnmf/errors.hpp"

#include <fmt/format.h>

#include <bit>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

namespace ttnmf {

namespace {

constexpr const char* kMagic = "TTNMF-MODEL";

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((v >> (8 * b)) & 0xffU);
  out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ParseError("archive truncated");
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | bytes[b];
  return v;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_u64(out, std::bit_cast<std::uint64_t>(m(i, j)));
}

Matrix get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols, const char* name) {
  const auto r = static_cast<Eigen::Index>(get_u64(in));
  const auto c = static_cast<Eigen::Index>(get_u64(in));
  if (r != rows || c != cols)
    throw ParseError(fmt::format("archive matrix {} is {}x{}, header says {}x{}", name, r, c, rows,
                                 cols));
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = std::bit_cast<double>(get_u64(in));
  return m;
}

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

}  // namespace

void write_archive(std::ostream& out, const ModelArchive& a) {
  const FactorModel& m = a.model;
  out << kMagic << ' ' << ModelArchive::kFormatVersion << '\n';
  out << "rank " << m.rank() << '\n';
  out << "od_pairs " << m.od_pairs() << '\n';
  out << "links " << a.routing.links() << '\n';
  out << "timestamps " << m.timestamps() << '\n';
  out << "lags " << (m.lags().empty() ? "-" : m.lags().to_string()) << '\n';
  out << "lambda_h " << format_double(a.weights.lambda_h) << '\n';
  out << "lambda_a " << format_double(a.weights.lambda_a) << '\n';
  out << "beta_h " << format_double(a.weights.beta_h) << '\n';
  out << "beta_a " << format_double(a.weights.beta_a) << '\n';
  out << "config_hash " << hex(a.config_hash) << '\n';
  out << "traffic_checksum " << hex(a.traffic_checksum) << '\n';
  out << "routing_checksum " << hex(a.routing_checksum) << '\n';
  out << "end\n";
  put_matrix(out, m.w());
  put_matrix(out, m.h());
  put_matrix(out, m.omega());
  put_matrix(out, a.routing.entries());
  if (!out) throw ParseError("failed writing archive");
}

ModelArchive read_archive(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty archive");
  const std::string expected = fmt::format("{} {}", kMagic, ModelArchive::kFormatVersion);
  if (line != expected)
    throw ParseError(fmt::format("unsupported archive header '{}', expected '{}'", line, expected));

  std::map<std::string, std::string> header;
  while (true) {
    if (!std::getline(in, line)) throw ParseError("archive header not terminated");
    if (line == "end") break;
    const auto space = line.find(' ');
    if (space == std::string::npos) throw ParseError(fmt::format("bad header line '{}'", line));
    header[line.substr(0, space)] = line.substr(space + 1);
  }
  auto field = [&header](const char* key) -> const std::string& {
    const auto it = header.find(key);
    if (it == header.end()) throw ParseError(fmt::format("archive header lacks '{}'", key));
    return it->second;
  };
  auto as_index = [&](const char* key) {
    try {
      return static_cast<Eigen::Index>(std::stoll(field(key)));
    } catch (const std::logic_error&) {
      throw ParseError(fmt::format("archive field '{}' is not an integer", key));
    }
  };
  auto as_double = [&](const char* key) {
    try {
      return std::stod(field(key));
    } catch (const std::logic_error&) {
      throw ParseError(fmt::format("archive field '{}' is not a number", key));
    }
  };
  auto as_hex = [&](const char* key) {
    try {
      return static_cast<std::uint64_t>(std::stoull(field(key), nullptr, 16));
    } catch (const std::logic_error&) {
      throw ParseError(fmt::format("archive field '{}' is not hexadecimal", key));
    }
  };

  const Eigen::Index k = as_index("rank");
  const Eigen::Index n = as_index("od_pairs");
  const Eigen::Index links = as_index("links");
  const Eigen::Index t = as_index("timestamps");
  const std::string& lag_text = field("lags");
  LagSet lags = lag_text == "-" ? LagSet() : LagSet::parse(lag_text);

  ModelArchive a;
  a.weights.lambda_h = as_double("lambda_h");
  a.weights.lambda_a = as_double("lambda_a");
  a.weights.beta_h = as_double("beta_h");
  a.weights.beta_a = as_double("beta_a");
  a.config_hash = as_hex("config_hash");
  a.traffic_checksum = as_hex("traffic_checksum");
  a.routing_checksum = as_hex("routing_checksum");

  Matrix w = get_matrix(in, n, k, "W");
  Matrix h = get_matrix(in, k, t, "H");
  Matrix omega = get_matrix(in, k, static_cast<Eigen::Index>(lags.size()), "Omega");
  a.routing = RoutingMatrix(get_matrix(in, links, n, "routing"));
  a.model = FactorModel(std::move(w), std::move(h), std::move(omega), std::move(lags), a.routing);
  return a;
}

void save_archive(const std::filesystem::path& path, const ModelArchive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(fmt::format("cannot write {}", path.string()));
  write_archive(out, archive);
}

ModelArchive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open {}", path.string()));
  try {
    return read_archive(in);
  } catch (const ConfigError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const ShapeError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace ttnmf
