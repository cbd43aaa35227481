#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "zeus/datagen.hpp"

namespace zeus {

// Matrix csv with a header row; values are printed with enough digits to
// round trip doubles exactly.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header);

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

CsvTable read_matrix_csv(const std::string& path);

std::string provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& name);

// Dataset on disk: a csv with feature columns c0..c{d-1} and a trailing
// integer label column, plus a json sidecar carrying column_kinds, k,
// provenance, and the generating seed.
void write_dataset(const std::string& csv_path, const std::string& meta_path,
                   const Dataset& ds);
Dataset read_dataset(const std::string& csv_path, const std::string& meta_path);

// Assignment exports: "row_index,label" for hard labels,
// "row_index,p_0,...,p_{k-1}" for soft ones.
void write_hard_assignment(const std::string& path,
                           const std::vector<int>& labels);
void write_soft_assignment(const std::string& path, const Eigen::MatrixXd& soft);

struct AssignmentFile {
  bool soft = false;
  std::vector<int> labels;  // hard file contents, or per-row argmax
  Eigen::MatrixXd probs;    // soft only; 0 x 0 for hard files
};

AssignmentFile read_assignment(const std::string& path);

}  // namespace zeus
