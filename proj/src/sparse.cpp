#include "dsfem/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace dsfem {

SparseMatrix::SparseMatrix(int n_rows, int n_cols, std::vector<int> row_offsets,
                           std::vector<int> col_indices, std::vector<double> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (n_rows_ < 0 || n_cols_ < 0 || row_offsets_.size() != static_cast<size_t>(n_rows_) + 1 ||
      col_indices_.size() != values_.size() ||
      row_offsets_.back() != static_cast<int>(values_.size()))
    throw std::invalid_argument("SparseMatrix: inconsistent CSR arrays");
  for (int r = 0; r < n_rows_; ++r) {
    for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      if (col_indices_[k] < 0 || col_indices_[k] >= n_cols_)
        throw std::invalid_argument("SparseMatrix: column index out of range");
      if (k > row_offsets_[r] && col_indices_[k] <= col_indices_[k - 1])
        throw std::invalid_argument("SparseMatrix: columns not sorted/unique in row");
    }
  }
}

double SparseMatrix::at(int row, int col) const {
  auto begin = col_indices_.begin() + row_offsets_[row];
  auto end = col_indices_.begin() + row_offsets_[row + 1];
  auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return values_[it - col_indices_.begin()];
}

double* SparseMatrix::find(int row, int col) {
  auto begin = col_indices_.begin() + row_offsets_[row];
  auto end = col_indices_.begin() + row_offsets_[row + 1];
  auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return nullptr;
  return &values_[it - col_indices_.begin()];
}

bool SparseMatrix::same_pattern(const SparseMatrix& other) const {
  return n_rows_ == other.n_rows_ && n_cols_ == other.n_cols_ &&
         row_offsets_ == other.row_offsets_ && col_indices_ == other.col_indices_;
}

void SparseMatrix::dump(std::ostream& os) const {
  auto old_precision = os.precision(17);
  for (int r = 0; r < n_rows_; ++r)
    for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      os << r << ' ' << col_indices_[k] << ' ' << values_[k] << '\n';
  os.precision(old_precision);
}

SparseMatrix csr_from_triplets(int n_rows, int n_cols, std::vector<Triplet> triplets) {
  // Stable sort keeps the insertion order among duplicates, so the
  // per-entry summation order below is well defined.
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<int> row_offsets(n_rows + 1, 0);
  std::vector<int> cols;
  std::vector<double> vals;
  cols.reserve(triplets.size());
  vals.reserve(triplets.size());
  size_t i = 0;
  for (int r = 0; r < n_rows; ++r) {
    while (i < triplets.size() && triplets[i].row == r) {
      if (triplets[i].row < 0 || triplets[i].col < 0 || triplets[i].col >= n_cols)
        throw std::invalid_argument("csr_from_triplets: index out of range");
      int c = triplets[i].col;
      double v = 0.0;
      while (i < triplets.size() && triplets[i].row == r && triplets[i].col == c) {
        v += triplets[i].value;
        ++i;
      }
      cols.push_back(c);
      vals.push_back(v);
    }
    row_offsets[r + 1] = static_cast<int>(cols.size());
  }
  if (i != triplets.size()) throw std::invalid_argument("csr_from_triplets: row index out of range");
  return SparseMatrix(n_rows, n_cols, std::move(row_offsets), std::move(cols), std::move(vals));
}

SparseMatrix csr_add(double a, const SparseMatrix& A, double b, const SparseMatrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw std::invalid_argument("csr_add: dimension mismatch");
  if (A.same_pattern(B)) {
    std::vector<double> vals(A.nnz());
    auto va = A.values();
    auto vb = B.values();
    for (int k = 0; k < A.nnz(); ++k) vals[k] = a * va[k] + b * vb[k];
    return SparseMatrix(A.rows(), A.cols(),
                        std::vector<int>(A.row_offsets().begin(), A.row_offsets().end()),
                        std::vector<int>(A.col_indices().begin(), A.col_indices().end()),
                        std::move(vals));
  }
  std::vector<int> offsets(A.rows() + 1, 0);
  std::vector<int> cols;
  std::vector<double> vals;
  auto ra = A.row_offsets(), rb = B.row_offsets();
  auto ca = A.col_indices(), cb = B.col_indices();
  auto va = A.values(), vb = B.values();
  for (int r = 0; r < A.rows(); ++r) {
    int ia = ra[r], ib = rb[r];
    while (ia < ra[r + 1] || ib < rb[r + 1]) {
      int col_a = ia < ra[r + 1] ? ca[ia] : A.cols();
      int col_b = ib < rb[r + 1] ? cb[ib] : B.cols();
      if (col_a == col_b) {
        cols.push_back(col_a);
        vals.push_back(a * va[ia++] + b * vb[ib++]);
      } else if (col_a < col_b) {
        cols.push_back(col_a);
        vals.push_back(a * va[ia++]);
      } else {
        cols.push_back(col_b);
        vals.push_back(b * vb[ib++]);
      }
    }
    offsets[r + 1] = static_cast<int>(cols.size());
  }
  return SparseMatrix(A.rows(), A.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

CoefVec matvec(const SparseMatrix& A, const CoefVec& x) {
  if (static_cast<int>(x.size()) != A.cols())
    throw std::invalid_argument("matvec: dimension mismatch");
  CoefVec y(A.rows(), 0.0);
  auto offsets = A.row_offsets();
  auto cols = A.col_indices();
  auto vals = A.values();
  for (int r = 0; r < A.rows(); ++r) {
    double s = 0.0;
    for (int k = offsets[r]; k < offsets[r + 1]; ++k) s += vals[k] * x[cols[k]];
    y[r] = s;
  }
  return y;
}

double dot(const CoefVec& a, const CoefVec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const CoefVec& a) { return std::sqrt(dot(a, a)); }

void axpy(CoefVec& y, double alpha, const CoefVec& x) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: dimension mismatch");
  for (size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace dsfem
