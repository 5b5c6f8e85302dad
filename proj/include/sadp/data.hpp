// Copyright 2026 The SA-DPSGD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Datasets: IDX (MNIST-style) and CSV ingestion, synthetic linear data,
// seeded splitting and Poisson subsampling.

#pragma once

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sadp/error.hpp"
#include "sadp/rng.hpp"
#include "sadp/types.hpp"

namespace sadp {

struct LabeledDataset {
  FeatureMatrix features;
  // Class index (as a double) for classification, real value for regression.
  Eigen::VectorXd targets;
  // 0 marks a regression dataset.
  int num_classes = 0;
  // Image height and width when loaded from IDX; 0 otherwise.
  std::array<std::uint32_t, 2> image_shape{0, 0};

  Index size() const { return features.rows(); }
  Index dims() const { return features.cols(); }
  bool is_classification() const { return num_classes > 0; }

  LabeledDataset Subset(std::span<const Index> indices) const {
    LabeledDataset out;
    out.features.resize(static_cast<Index>(indices.size()), dims());
    out.targets.resize(static_cast<Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) {
      internal::Require(indices[i] >= 0 && indices[i] < size(),
                        ErrorCode::kInvalidParameter, "index out of range");
      out.features.row(static_cast<Index>(i)) = features.row(indices[i]);
      out.targets[static_cast<Index>(i)] = targets[indices[i]];
    }
    out.num_classes = num_classes;
    out.image_shape = image_shape;
    return out;
  }

  void Validate() const {
    internal::Require(features.rows() == targets.size(),
                      ErrorCode::kCountMismatch,
                      "feature and target counts differ");
    internal::Require(features.allFinite() && targets.allFinite(),
                      ErrorCode::kNonFiniteInput, "dataset has NaN or Inf");
    if (is_classification()) {
      for (Index i = 0; i < targets.size(); ++i) {
        internal::Require(targets[i] >= 0 && targets[i] < num_classes &&
                              targets[i] == std::floor(targets[i]),
                          ErrorCode::kInvalidParameter,
                          "label outside 0..num_classes-1");
      }
    }
  }
};

namespace internal {

// Reads plain or gzip-compressed files alike.
class GzReader {
 public:
  explicit GzReader(const std::string& path)
      : path_(path), file_(gzopen(path.c_str(), "rb"), &gzclose) {
    if (!file_) throw Error(ErrorCode::kIoError, "cannot open " + path);
  }

  // Big-endian 32-bit word.
  std::uint32_t ReadU32() {
    unsigned char b[4];
    ReadExact(b, 4, "header");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
           (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
  }

  void ReadExact(unsigned char* dst, std::size_t n, const char* what) {
    std::size_t done = 0;
    while (done < n) {
      const unsigned chunk =
          static_cast<unsigned>(std::min<std::size_t>(n - done, 1u << 30));
      const int got = gzread(file_.get(), dst + done, chunk);
      if (got < 0) throw Error(ErrorCode::kIoError, "read error in " + path_);
      if (got == 0) {
        throw Error(ErrorCode::kTruncatedFile,
                    std::string(what) + " truncated in " + path_);
      }
      done += static_cast<std::size_t>(got);
    }
  }

 private:
  std::string path_;
  std::unique_ptr<gzFile_s, decltype(&gzclose)> file_;
};

class GzWriter {
 public:
  // Compresses when the path ends in ".gz".
  explicit GzWriter(const std::string& path)
      : path_(path),
        file_(gzopen(path.c_str(),
                     path.ends_with(".gz") ? "wb9" : "wbT"),
              &gzclose) {
    if (!file_) throw Error(ErrorCode::kIoError, "cannot open " + path);
  }

  void WriteU32(std::uint32_t v) {
    const unsigned char b[4] = {
        static_cast<unsigned char>(v >> 24),
        static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    Write(b, 4);
  }

  void Write(const unsigned char* src, std::size_t n) {
    if (n == 0) return;
    if (gzwrite(file_.get(), src, static_cast<unsigned>(n)) !=
        static_cast<int>(n)) {
      throw Error(ErrorCode::kIoError, "write failed for " + path_);
    }
  }

 private:
  std::string path_;
  std::unique_ptr<gzFile_s, decltype(&gzclose)> file_;
};

inline bool ParseDouble(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::vector<std::string_view> SplitCommas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace internal

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Loads an IDX image/label pair. Pixels are scaled by 1/255 into [0, 1].
inline LabeledDataset LoadIdx(const std::string& images_path,
                              const std::string& labels_path) {
  internal::GzReader images(images_path);
  internal::GzReader labels(labels_path);

  const std::uint32_t image_magic = images.ReadU32();
  if (image_magic != kIdxImagesMagic) {
    throw Error(ErrorCode::kBadMagic,
                images_path + " is not an IDX unsigned-byte 3-D tensor");
  }
  const std::uint32_t label_magic = labels.ReadU32();
  if (label_magic != kIdxLabelsMagic) {
    throw Error(ErrorCode::kBadMagic,
                labels_path + " is not an IDX unsigned-byte vector");
  }
  const std::uint32_t n_images = images.ReadU32();
  const std::uint32_t rows = images.ReadU32();
  const std::uint32_t cols = images.ReadU32();
  const std::uint32_t n_labels = labels.ReadU32();
  if (n_images != n_labels) {
    throw Error(ErrorCode::kCountMismatch,
                std::to_string(n_images) + " images but " +
                    std::to_string(n_labels) + " labels");
  }

  const std::size_t dims = std::size_t{rows} * cols;
  std::vector<unsigned char> pixels(std::size_t{n_images} * dims);
  images.ReadExact(pixels.data(), pixels.size(), "pixel data");
  std::vector<unsigned char> label_bytes(n_labels);
  labels.ReadExact(label_bytes.data(), label_bytes.size(), "label data");

  LabeledDataset ds;
  ds.features.resize(n_images, static_cast<Index>(dims));
  ds.targets.resize(n_images);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    ds.features.data()[i] = pixels[i] / 255.0;
  }
  int max_label = 0;
  for (std::uint32_t i = 0; i < n_labels; ++i) {
    ds.targets[i] = label_bytes[i];
    max_label = std::max<int>(max_label, label_bytes[i]);
  }
  ds.num_classes = max_label + 1;
  ds.image_shape = {rows, cols};
  return ds;
}

// Inverse of LoadIdx for datasets whose features are multiples of 1/255.
inline void WriteIdx(const LabeledDataset& ds, const std::string& images_path,
                     const std::string& labels_path) {
  internal::Require(ds.is_classification(), ErrorCode::kInvalidParameter,
                    "IDX labels must be class indices");
  std::uint32_t rows = ds.image_shape[0];
  std::uint32_t cols = ds.image_shape[1];
  if (rows == 0 || cols == 0 ||
      Index{rows} * Index{cols} != ds.dims()) {
    rows = 1;
    cols = static_cast<std::uint32_t>(ds.dims());
  }
  const auto n = static_cast<std::uint32_t>(ds.size());
  std::vector<unsigned char> pixels(static_cast<std::size_t>(ds.features.size()));
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double v = std::clamp(ds.features.data()[i], 0.0, 1.0);
    pixels[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  std::vector<unsigned char> labels(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    labels[i] = static_cast<unsigned char>(ds.targets[i]);
  }
  {
    internal::GzWriter out(images_path);
    out.WriteU32(kIdxImagesMagic);
    out.WriteU32(n);
    out.WriteU32(rows);
    out.WriteU32(cols);
    out.Write(pixels.data(), pixels.size());
  }
  internal::GzWriter out(labels_path);
  out.WriteU32(kIdxLabelsMagic);
  out.WriteU32(n);
  out.Write(labels.data(), labels.size());
}

struct CsvOptions {
  // Last column holds a class index (true) or a real target (false).
  bool classification = true;
};

// Comma-separated, '.' decimal point, label in the last column. A first row
// containing any non-numeric field is taken as a header and skipped. Blank
// lines are ignored.
inline LabeledDataset LoadCsv(const std::string& path,
                              const CsvOptions& options = {}) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = internal::SplitCommas(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      numeric = numeric && internal::ParseDouble(fields[i], row[i]);
    }
    if (first && !numeric) {
      first = false;
      continue;
    }
    first = false;
    internal::Require(numeric, ErrorCode::kInvalidParameter,
                      path + ":" + std::to_string(line_no) +
                          ": non-numeric field");
    if (cols < 0) cols = static_cast<Index>(fields.size());
    internal::Require(static_cast<Index>(fields.size()) == cols,
                      ErrorCode::kCountMismatch,
                      path + ":" + std::to_string(line_no) +
                          ": inconsistent column count");
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  internal::Require(cols >= 2, ErrorCode::kInvalidParameter,
                    path + ": need at least one feature and a label column");
  LabeledDataset ds;
  ds.features.resize(rows, cols - 1);
  ds.targets.resize(rows);
  int max_label = -1;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c + 1 < cols; ++c) ds.features(r, c) = values[r * cols + c];
    const double y = values[r * cols + cols - 1];
    if (options.classification) {
      internal::Require(y >= 0 && y == std::floor(y) && y < 1e6,
                        ErrorCode::kInvalidParameter,
                        path + ": class labels must be non-negative integers");
      max_label = std::max(max_label, static_cast<int>(y));
    }
    ds.targets[r] = y;
  }
  ds.num_classes = options.classification ? max_label + 1 : 0;
  ds.Validate();
  return ds;
}

struct SamplerConfig {
  double q = 1.0;
  std::uint64_t seed = 0;

  void Validate() const {
    internal::Require(q > 0.0 && q <= 1.0, ErrorCode::kInvalidParameter,
                      "inclusion probability must lie in (0, 1]");
  }
};

// Each of 0..n-1 is kept independently with probability q; ascending order.
inline std::vector<Index> PoissonSample(Index n, double q, Rng& rng) {
  internal::Require(q > 0.0 && q <= 1.0, ErrorCode::kInvalidParameter,
                    "inclusion probability must lie in (0, 1]");
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(std::ceil(q * n * 1.1)) + 8);
  for (Index i = 0; i < n; ++i) {
    if (rng.Uniform() < q) out.push_back(i);
  }
  return out;
}

class PoissonSampler {
 public:
  explicit PoissonSampler(const SamplerConfig& config)
      : config_(config), rng_(config.seed) {
    config_.Validate();
  }

  std::vector<Index> Sample(Index n) { return PoissonSample(n, config_.q, rng_); }

 private:
  SamplerConfig config_;
  Rng rng_;
};

// x ~ U[-1, 1]^d, y = <weights, x> + N(0, noise_std^2).
inline LabeledDataset SynthLinear(Index n, std::span<const double> weights,
                                  double noise_std, std::uint64_t seed) {
  internal::Require(n >= 1, ErrorCode::kInvalidParameter, "n must be >= 1");
  internal::Require(!weights.empty(), ErrorCode::kInvalidParameter,
                    "need at least one weight");
  internal::Require(noise_std >= 0.0 && std::isfinite(noise_std),
                    ErrorCode::kInvalidParameter, "noise_std must be >= 0");
  const auto d = static_cast<Index>(weights.size());
  Rng rng(seed);
  LabeledDataset ds;
  ds.features.resize(n, d);
  ds.targets.resize(n);
  for (Index i = 0; i < n; ++i) {
    double y = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double x = rng.Uniform(-1.0, 1.0);
      ds.features(i, j) = x;
      y += weights[static_cast<std::size_t>(j)] * x;
    }
    if (noise_std > 0.0) y += noise_std * rng.Normal();
    ds.targets[i] = y;
  }
  return ds;
}

// Seeded shuffle; the evaluation part receives floor(N * eval_fraction)
// examples and the training part the remainder.
inline std::pair<LabeledDataset, LabeledDataset> Split(
    const LabeledDataset& ds, double eval_fraction, std::uint64_t seed) {
  internal::Require(eval_fraction > 0.0 && eval_fraction < 1.0,
                    ErrorCode::kInvalidParameter,
                    "eval fraction must lie in (0, 1)");
  std::vector<Index> order(static_cast<std::size_t>(ds.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.NextU64() % i]);
  }
  const auto n_eval = static_cast<std::size_t>(
      std::floor(static_cast<double>(ds.size()) * eval_fraction));
  const std::span<const Index> all(order);
  return {ds.Subset(all.subspan(n_eval)), ds.Subset(all.first(n_eval))};
}

}  // namespace sadp
