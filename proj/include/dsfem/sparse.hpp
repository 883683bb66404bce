#pragma once

#include <iosfwd>
#include <span>
#include <vector>

namespace dsfem {

/// Global coefficient vector over the DOFs of a finite element space.
using CoefVec = std::vector<double>;

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed sparse row matrix. Column indices are sorted and unique
/// within each row.
class SparseMatrix {
public:
  SparseMatrix() = default;
  SparseMatrix(int n_rows, int n_cols, std::vector<int> row_offsets,
               std::vector<int> col_indices, std::vector<double> values);

  int rows() const { return n_rows_; }
  int cols() const { return n_cols_; }
  int nnz() const { return static_cast<int>(values_.size()); }

  std::span<const int> row_offsets() const { return row_offsets_; }
  std::span<const int> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Value at (row, col), zero if the entry is not stored.
  double at(int row, int col) const;
  /// Pointer to the stored value at (row, col), nullptr if absent.
  double* find(int row, int col);

  bool same_pattern(const SparseMatrix& other) const;

  /// Coordinate-format text dump, one `row col value` line per entry.
  void dump(std::ostream& os) const;

private:
  int n_rows_ = 0;
  int n_cols_ = 0;
  std::vector<int> row_offsets_;
  std::vector<int> col_indices_;
  std::vector<double> values_;
};

/// Build CSR from triplets. Duplicate (row, col) pairs are summed in
/// their original order, so the result is deterministic regardless of
/// how the triplets were produced.
SparseMatrix csr_from_triplets(int n_rows, int n_cols, std::vector<Triplet> triplets);

/// a*A + b*B. Fast path when the patterns coincide, general merge otherwise.
SparseMatrix csr_add(double a, const SparseMatrix& A, double b, const SparseMatrix& B);

CoefVec matvec(const SparseMatrix& A, const CoefVec& x);

double dot(const CoefVec& a, const CoefVec& b);
double norm2(const CoefVec& a);
/// y += alpha * x
void axpy(CoefVec& y, double alpha, const CoefVec& x);

}  // namespace dsfem
