#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "coevae/rng.hpp"

namespace coevae {

// Row-major matrix of 0/1 bytes.
struct BitMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;

  std::span<const std::uint8_t> row(std::size_t i) const {
    return {bits.data() + i * cols, cols};
  }
  std::span<std::uint8_t> row(std::size_t i) { return {bits.data() + i * cols, cols}; }
};

struct CentroidSet {
  BitMatrix bits;  // k x n

  std::size_t k() const { return bits.rows; }
  std::size_t n() const { return bits.cols; }
};

enum class Split { train, test, heldout };

struct BitDataset {
  BitMatrix samples;                      // m x n
  std::vector<std::size_t> source_index;  // generating centroid per sample
  std::size_t samples_per_centroid = 0;
  std::size_t k = 0;
  double q = 0.0;
  std::uint64_t seed = 0;
  Split split = Split::train;

  std::size_t size() const { return samples.rows; }
  std::size_t n() const { return samples.cols; }
};

CentroidSet generate_centroids(std::size_t k, std::size_t n, std::uint64_t seed);

// Each sample copies its centroid and flips every bit independently with
// probability q. Samples are laid out centroid-major.
BitDataset generate_dataset(const CentroidSet& centroids, std::size_t samples_per_centroid,
                            double q, std::uint64_t seed, Split split = Split::train);

// h samples whose source centroids are drawn uniformly; used as held-out probes.
// samples_per_centroid is recorded as 0.
BitDataset generate_heldout(const CentroidSet& centroids, std::size_t h, double q,
                            std::uint64_t seed);

std::size_t hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

struct ClusterAssignment {
  std::vector<std::size_t> nearest;  // per-sample nearest centroid
  double loss = 0.0;                 // mean distance per bit
};

// Nearest-centroid assignment; ties go to the lowest index.
ClusterAssignment assign_clusters(const BitMatrix& samples, const CentroidSet& centroids);

double oracle_cluster_loss(const BitDataset& data, const CentroidSet& centroids);

// Text format: "k n per q seed" header, then one "<bits> <source>" line per sample.
void write_dataset(std::ostream& out, const BitDataset& data);
BitDataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const BitDataset& data);
BitDataset load_dataset(const std::string& path);

// Centroids reuse the dataset text format with per=1 and q=0.
BitDataset centroids_as_dataset(const CentroidSet& centroids, std::uint64_t seed);
CentroidSet centroids_from_dataset(const BitDataset& data);

}  // namespace coevae
