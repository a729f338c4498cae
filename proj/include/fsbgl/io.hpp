#pragma once
// File formats: CSV matrices/points/triplets and flat key = value files.
// All writers go through a temp-file + rename so partial output never
// replaces a good file; all numbers use 17 significant digits so values
// round-trip exactly.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fsbgl/dcfit.hpp"

namespace fsbgl {

std::string read_text(const std::filesystem::path& file);
void write_text_atomic(const std::filesystem::path& file,
                       const std::string& content);

void write_matrix_csv(const std::filesystem::path& file,
                      const Eigen::MatrixXd& M,
                      const std::vector<std::string>& header = {});
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& file,
                                std::vector<std::string>* header = nullptr);

void write_points_csv(const std::filesystem::path& file, const PointSet& pts);
PointSet read_points_csv(const std::filesystem::path& file);

void write_triplets_csv(const std::filesystem::path& file,
                        const SparseSymmetric& M);
SparseSymmetric read_triplets_csv(const std::filesystem::path& file);

// Flat "key = value" file with '#' comments; keys keep insertion order.
struct KeyValueFile {
  std::vector<std::pair<std::string, std::string>> items;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;

  std::string serialize() const;
  static KeyValueFile parse(const std::string& text);
};

void write_spec_file(const std::filesystem::path& file,
                     const SmallScaleSpec& spec);
SmallScaleSpec read_spec_file(const std::filesystem::path& file);

std::string metric_name(Metric metric);
Metric metric_from_name(const std::string& name);

// A fitted model is two files in a directory: model.ini (spec, basis,
// lambda, alpha) and Q.csv (precision triplets).
void write_model_files(const std::filesystem::path& dir,
                       const FittedModel& model);
FittedModel read_model_files(const std::filesystem::path& dir);

}  // namespace fsbgl
