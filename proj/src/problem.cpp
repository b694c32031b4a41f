#include "coevae/problem.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace coevae {

namespace {

void flip_bits(std::span<std::uint8_t> row, double q, Rng& rng) {
  for (auto& b : row) {
    if (bernoulli(rng, q)) b ^= 1U;
  }
}

void check_q(double q) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("flip probability q must lie in [0, 1]");
  }
}

}  // namespace

CentroidSet generate_centroids(std::size_t k, std::size_t n, std::uint64_t seed) {
  if (k == 0 || n == 0) throw std::invalid_argument("centroid count and dimension must be >= 1");
  CentroidSet c;
  c.bits.rows = k;
  c.bits.cols = n;
  c.bits.bits.resize(k * n);
  Rng rng(seed);
  for (auto& b : c.bits.bits) b = bernoulli(rng, 0.5) ? 1 : 0;
  return c;
}

BitDataset generate_dataset(const CentroidSet& centroids, std::size_t samples_per_centroid,
                            double q, std::uint64_t seed, Split split) {
  check_q(q);
  if (samples_per_centroid == 0) throw std::invalid_argument("samples_per_centroid must be >= 1");
  const std::size_t k = centroids.k();
  const std::size_t n = centroids.n();
  BitDataset d;
  d.samples.rows = k * samples_per_centroid;
  d.samples.cols = n;
  d.samples.bits.resize(d.samples.rows * n);
  d.source_index.resize(d.samples.rows);
  d.samples_per_centroid = samples_per_centroid;
  d.k = k;
  d.q = q;
  d.seed = seed;
  d.split = split;
  Rng rng(seed);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < samples_per_centroid; ++j) {
      const std::size_t i = c * samples_per_centroid + j;
      auto row = d.samples.row(i);
      auto src = centroids.bits.row(c);
      std::copy(src.begin(), src.end(), row.begin());
      flip_bits(row, q, rng);
      d.source_index[i] = c;
    }
  }
  return d;
}

BitDataset generate_heldout(const CentroidSet& centroids, std::size_t h, double q,
                            std::uint64_t seed) {
  check_q(q);
  if (h == 0) throw std::invalid_argument("held-out sample count must be >= 1");
  BitDataset d;
  d.samples.rows = h;
  d.samples.cols = centroids.n();
  d.samples.bits.resize(h * centroids.n());
  d.source_index.resize(h);
  d.k = centroids.k();
  d.q = q;
  d.seed = seed;
  d.split = Split::heldout;
  Rng rng(seed);
  for (std::size_t i = 0; i < h; ++i) {
    const std::size_t c = uniform_index(rng, centroids.k());
    auto src = centroids.bits.row(c);
    auto row = d.samples.row(i);
    std::copy(src.begin(), src.end(), row.begin());
    flip_bits(row, q, rng);
    d.source_index[i] = c;
  }
  return d;
}

std::size_t hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming: length mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]) ? 1 : 0;
  return d;
}

ClusterAssignment assign_clusters(const BitMatrix& samples, const CentroidSet& centroids) {
  if (samples.rows == 0) throw std::invalid_argument("cluster assignment needs samples");
  if (samples.cols != centroids.n()) throw std::invalid_argument("sample/centroid dimension mismatch");
  ClusterAssignment out;
  out.nearest.resize(samples.rows);
  std::size_t total = 0;
  for (std::size_t i = 0; i < samples.rows; ++i) {
    std::size_t best = 0;
    std::size_t best_d = std::numeric_limits<std::size_t>::max();
    for (std::size_t c = 0; c < centroids.k(); ++c) {
      const std::size_t d = hamming(samples.row(i), centroids.bits.row(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    out.nearest[i] = best;
    total += best_d;
  }
  out.loss = static_cast<double>(total) /
             (static_cast<double>(samples.rows) * static_cast<double>(samples.cols));
  return out;
}

double oracle_cluster_loss(const BitDataset& data, const CentroidSet& centroids) {
  if (data.size() == 0) throw std::invalid_argument("oracle_cluster_loss: empty dataset");
  return assign_clusters(data.samples, centroids).loss;
}

void write_dataset(std::ostream& out, const BitDataset& data) {
  char qbuf[64];
  std::snprintf(qbuf, sizeof qbuf, "%.17g", data.q);
  out << data.k << ' ' << data.n() << ' ' << data.samples_per_centroid << ' ' << qbuf << ' '
      << data.seed << '\n';
  std::string line(data.n(), '0');
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto row = data.samples.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) line[j] = row[j] ? '1' : '0';
    out << line << ' ' << data.source_index[i] << '\n';
  }
}

BitDataset read_dataset(std::istream& in) {
  BitDataset d;
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("dataset: missing header");
  std::size_t n = 0;
  {
    std::istringstream hs(header);
    std::string qtext;
    if (!(hs >> d.k >> n >> d.samples_per_centroid >> qtext >> d.seed)) {
      throw std::runtime_error("dataset: malformed header '" + header + "'");
    }
    d.q = std::strtod(qtext.c_str(), nullptr);
  }
  if (n == 0) throw std::runtime_error("dataset: zero dimension");
  d.samples.cols = n;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space != n) {
      throw std::runtime_error("dataset: line " + std::to_string(line_no) + " has wrong width");
    }
    for (std::size_t j = 0; j < n; ++j) {
      const char ch = line[j];
      if (ch != '0' && ch != '1') {
        throw std::runtime_error("dataset: line " + std::to_string(line_no) + " has non-bit character");
      }
      d.samples.bits.push_back(static_cast<std::uint8_t>(ch - '0'));
    }
    std::size_t src = 0;
    const char* first = line.data() + space + 1;
    const char* last = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(first, last, src);
    if (ec != std::errc{} || ptr != last) {
      throw std::runtime_error("dataset: line " + std::to_string(line_no) + " has bad source index");
    }
    if (d.k != 0 && src >= d.k) {
      throw std::runtime_error("dataset: line " + std::to_string(line_no) + " source index out of range");
    }
    d.source_index.push_back(src);
    ++d.samples.rows;
  }
  return d;
}

void save_dataset(const std::string& path, const BitDataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_dataset(out, data);
}

BitDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_dataset(in);
}

BitDataset centroids_as_dataset(const CentroidSet& centroids, std::uint64_t seed) {
  BitDataset d;
  d.samples = centroids.bits;
  d.source_index.resize(centroids.k());
  for (std::size_t i = 0; i < centroids.k(); ++i) d.source_index[i] = i;
  d.samples_per_centroid = 1;
  d.k = centroids.k();
  d.q = 0.0;
  d.seed = seed;
  return d;
}

CentroidSet centroids_from_dataset(const BitDataset& data) {
  CentroidSet c;
  c.bits = data.samples;
  return c;
}

}  // namespace coevae
