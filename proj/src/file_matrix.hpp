#ifndef PLMM_FILE_MATRIX_HPP
#define PLMM_FILE_MATRIX_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace plmm {

enum class ElementKind { uint8_dosage, float64 };

constexpr std::uint8_t kMissingDosage = 255;

// Handle to an on-disk column-major matrix. The backing file is a raw
// little-endian array with no header; dimensions and names live in an
// adjacent <path>.meta text sidecar. Data is accessed through a shared
// memory mapping, so nothing is resident beyond the pages actually touched.
class FileMatrix {
 public:
  FileMatrix() = default;  // empty handle, assign before use

  static FileMatrix create(const std::string &path, std::int64_t n_rows,
                           std::int64_t n_cols, ElementKind kind,
                           bool force = false);
  static FileMatrix open(const std::string &path, bool writable = false);

  FileMatrix(FileMatrix &&) noexcept;
  FileMatrix &operator=(FileMatrix &&) noexcept;
  FileMatrix(const FileMatrix &) = delete;
  FileMatrix &operator=(const FileMatrix &) = delete;
  ~FileMatrix();

  std::int64_t n_rows() const { return n_rows_; }
  std::int64_t n_cols() const { return n_cols_; }
  ElementKind kind() const { return kind_; }
  const std::string &path() const { return path_; }
  bool writable() const { return writable_; }

  std::vector<std::string> col_names;
  std::vector<std::string> row_ids;
  void save_meta() const;  // rewrite sidecar (names changed after create)

  // Dense float64 view of columns [first_col, first_col + n_block_cols).
  // uint8 dosages are widened; the missing sentinel maps to NaN.
  Eigen::MatrixXd read_col_block(std::int64_t first_col,
                                 std::int64_t n_block_cols) const;
  void write_col_block(std::int64_t first_col, const Eigen::MatrixXd &block);
  void write_col_block_u8(std::int64_t first_col, std::int64_t n_block_cols,
                          const std::uint8_t *data);

  // Zero-copy column access, float64 matrices only.
  const double *col_ptr(std::int64_t col) const;
  double *col_ptr_mut(std::int64_t col);
  Eigen::Map<const Eigen::VectorXd> col(std::int64_t col) const {
    return {col_ptr(col), n_rows_};
  }

  // Tell the kernel we are done with a column range (streaming traversals).
  void advise_dontneed(std::int64_t first_col, std::int64_t n_block_cols) const;

  std::int64_t element_width() const {
    return kind_ == ElementKind::float64 ? 8 : 1;
  }
  std::int64_t byte_size() const {
    return n_rows_ * n_cols_ * element_width();
  }

 private:
  void map_file(bool create_new);
  void unmap();
  void check_block(std::int64_t first_col, std::int64_t n_block_cols) const;

  std::string path_;
  std::int64_t n_rows_ = 0;
  std::int64_t n_cols_ = 0;
  ElementKind kind_ = ElementKind::float64;
  bool writable_ = false;
  int fd_ = -1;
  void *map_ = nullptr;
};

std::string meta_path(const std::string &path);

}  // namespace plmm

#endif  // PLMM_FILE_MATRIX_HPP
