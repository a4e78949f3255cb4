#include "file_matrix.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <utility>

#include "util.hpp"

namespace plmm {

std::string meta_path(const std::string &path) { return path + ".meta"; }

static std::string kind_name(ElementKind k) {
  return k == ElementKind::float64 ? "float64" : "uint8";
}

FileMatrix FileMatrix::create(const std::string &path, std::int64_t n_rows,
                              std::int64_t n_cols, ElementKind kind,
                              bool force) {
  if (n_rows < 1 || n_cols < 1) fail_usage("matrix dimensions must be >= 1");
  if (!force) {
    struct stat st;
    if (::stat(path.c_str(), &st) == 0)
      fail_data("refusing to overwrite existing file: " + path);
  }
  FileMatrix m;
  m.path_ = path;
  m.n_rows_ = n_rows;
  m.n_cols_ = n_cols;
  m.kind_ = kind;
  m.writable_ = true;
  m.map_file(true);
  m.save_meta();
  return m;
}

FileMatrix FileMatrix::open(const std::string &path, bool writable) {
  std::ifstream meta(meta_path(path));
  if (!meta) fail_data("missing sidecar: " + meta_path(path));
  FileMatrix m;
  m.path_ = path;
  m.writable_ = writable;
  std::string line;
  enum { kv, cols, rows } section = kv;
  while (std::getline(meta, line)) {
    if (line == "col_names:") {
      section = cols;
      continue;
    }
    if (line == "row_ids:") {
      section = rows;
      continue;
    }
    if (section == cols) {
      m.col_names.push_back(line);
    } else if (section == rows) {
      m.row_ids.push_back(line);
    } else {
      auto pos = line.find(':');
      if (pos == std::string::npos) continue;
      std::string key = line.substr(0, pos);
      std::string val = line.substr(pos + 1);
      if (key == "n_rows") m.n_rows_ = std::stoll(val);
      else if (key == "n_cols") m.n_cols_ = std::stoll(val);
      else if (key == "kind")
        m.kind_ = (val == "float64") ? ElementKind::float64
                                     : ElementKind::uint8_dosage;
    }
  }
  if (m.n_rows_ < 1 || m.n_cols_ < 1)
    fail_data("sidecar missing dimensions: " + meta_path(path));
  struct stat st;
  if (::stat(path.c_str(), &st) != 0)
    fail_data("missing backing file: " + path);
  if (st.st_size != m.byte_size())
    fail_data("corrupt matrix: " + path + " is " + std::to_string(st.st_size) +
              " bytes, sidecar implies " + std::to_string(m.byte_size()));
  m.map_file(false);
  return m;
}

void FileMatrix::map_file(bool create_new) {
  int flags = writable_ ? O_RDWR : O_RDONLY;
  if (create_new) flags |= O_CREAT | O_TRUNC;
  fd_ = ::open(path_.c_str(), flags, 0644);
  if (fd_ < 0) fail_data("cannot open " + path_ + ": " + std::strerror(errno));
  if (create_new && ::ftruncate(fd_, byte_size()) != 0) {
    ::close(fd_);
    fd_ = -1;
    fail_data("cannot size " + path_ + ": " + std::strerror(errno));
  }
  int prot = PROT_READ | (writable_ ? PROT_WRITE : 0);
  map_ = ::mmap(nullptr, static_cast<size_t>(byte_size()), prot, MAP_SHARED,
                fd_, 0);
  if (map_ == MAP_FAILED) {
    map_ = nullptr;
    ::close(fd_);
    fd_ = -1;
    fail_data("mmap failed for " + path_ + ": " + std::strerror(errno));
  }
}

void FileMatrix::unmap() {
  if (map_) {
    ::munmap(map_, static_cast<size_t>(byte_size()));
    map_ = nullptr;
  }
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

FileMatrix::~FileMatrix() { unmap(); }

FileMatrix::FileMatrix(FileMatrix &&o) noexcept { *this = std::move(o); }

FileMatrix &FileMatrix::operator=(FileMatrix &&o) noexcept {
  if (this != &o) {
    unmap();
    path_ = std::move(o.path_);
    n_rows_ = o.n_rows_;
    n_cols_ = o.n_cols_;
    kind_ = o.kind_;
    writable_ = o.writable_;
    fd_ = o.fd_;
    map_ = o.map_;
    col_names = std::move(o.col_names);
    row_ids = std::move(o.row_ids);
    o.fd_ = -1;
    o.map_ = nullptr;
  }
  return *this;
}

void FileMatrix::save_meta() const {
  std::ofstream meta(meta_path(path_), std::ios::trunc);
  if (!meta) fail_data("cannot write sidecar: " + meta_path(path_));
  meta << "n_rows:" << n_rows_ << "\n";
  meta << "n_cols:" << n_cols_ << "\n";
  meta << "kind:" << kind_name(kind_) << "\n";
  meta << "col_names:\n";
  for (const auto &s : col_names) meta << s << "\n";
  meta << "row_ids:\n";
  for (const auto &s : row_ids) meta << s << "\n";
}

void FileMatrix::check_block(std::int64_t first_col,
                             std::int64_t n_block_cols) const {
  if (first_col < 0 || n_block_cols < 0 || first_col + n_block_cols > n_cols_)
    fail_usage("column block [" + std::to_string(first_col) + ", " +
               std::to_string(first_col + n_block_cols) +
               ") out of range for " + std::to_string(n_cols_) + " columns");
}

Eigen::MatrixXd FileMatrix::read_col_block(std::int64_t first_col,
                                           std::int64_t n_block_cols) const {
  check_block(first_col, n_block_cols);
  Eigen::MatrixXd out(n_rows_, n_block_cols);
  if (kind_ == ElementKind::float64) {
    const double *src =
        static_cast<const double *>(map_) + first_col * n_rows_;
    std::memcpy(out.data(), src,
                static_cast<size_t>(n_rows_ * n_block_cols) * sizeof(double));
  } else {
    const std::uint8_t *src =
        static_cast<const std::uint8_t *>(map_) + first_col * n_rows_;
    double *dst = out.data();
    std::int64_t count = n_rows_ * n_block_cols;
    for (std::int64_t i = 0; i < count; ++i)
      dst[i] = (src[i] == kMissingDosage)
                   ? std::numeric_limits<double>::quiet_NaN()
                   : static_cast<double>(src[i]);
  }
  return out;
}

void FileMatrix::write_col_block(std::int64_t first_col,
                                 const Eigen::MatrixXd &block) {
  if (!writable_) fail_usage("matrix opened read-only: " + path_);
  if (block.rows() != n_rows_)
    fail_usage("block row count " + std::to_string(block.rows()) +
               " != matrix rows " + std::to_string(n_rows_));
  check_block(first_col, block.cols());
  if (kind_ != ElementKind::float64)
    fail_usage("write_col_block requires a float64 matrix");
  double *dst = static_cast<double *>(map_) + first_col * n_rows_;
  std::memcpy(dst, block.data(),
              static_cast<size_t>(n_rows_ * block.cols()) * sizeof(double));
}

void FileMatrix::write_col_block_u8(std::int64_t first_col,
                                    std::int64_t n_block_cols,
                                    const std::uint8_t *data) {
  if (!writable_) fail_usage("matrix opened read-only: " + path_);
  check_block(first_col, n_block_cols);
  if (kind_ != ElementKind::uint8_dosage)
    fail_usage("write_col_block_u8 requires a uint8 matrix");
  std::memcpy(static_cast<std::uint8_t *>(map_) + first_col * n_rows_, data,
              static_cast<size_t>(n_rows_ * n_block_cols));
}

const double *FileMatrix::col_ptr(std::int64_t col) const {
  check_block(col, 1);
  if (kind_ != ElementKind::float64)
    fail_usage("col_ptr requires a float64 matrix");
  return static_cast<const double *>(map_) + col * n_rows_;
}

double *FileMatrix::col_ptr_mut(std::int64_t col) {
  if (!writable_) fail_usage("matrix opened read-only: " + path_);
  return const_cast<double *>(col_ptr(col));
}

void FileMatrix::advise_dontneed(std::int64_t first_col,
                                 std::int64_t n_block_cols) const {
  check_block(first_col, n_block_cols);
  std::int64_t begin = first_col * n_rows_ * element_width();
  std::int64_t len = n_block_cols * n_rows_ * element_width();
  long page = ::sysconf(_SC_PAGESIZE);
  // Dirty shared pages must hit the file before being dropped.
  std::int64_t a_begin = (begin + page - 1) / page * page;
  std::int64_t a_end = (begin + len) / page * page;
  if (a_end <= a_begin) return;
  char *base = static_cast<char *>(map_);
  if (writable_)
    ::msync(base + a_begin, static_cast<size_t>(a_end - a_begin), MS_SYNC);
  ::madvise(base + a_begin, static_cast<size_t>(a_end - a_begin),
            MADV_DONTNEED);
}

}  // namespace plmm
