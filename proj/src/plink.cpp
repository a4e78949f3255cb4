#include "plink.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <unordered_set>
#include <utility>

#include "util.hpp"

namespace plmm {

SampleTable parse_fam(const std::string &path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open .fam file: " + path);
  SampleTable out;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_ws(line);
    if (f.size() < 6)
      fail_data(path + ":" + std::to_string(lineno) + ": expected 6 fields, got " +
                std::to_string(f.size()));
    if (f[1].empty())
      fail_data(path + ":" + std::to_string(lineno) + ": empty sample id");
    SampleRecord r;
    r.fid = f[0];
    r.iid = f[1];
    r.sex = std::atoi(f[4].c_str());
    r.phenotype_raw = f[5];
    out.push_back(std::move(r));
  }
  if (out.empty()) fail_data("empty .fam file: " + path);
  return out;
}

VariantTable parse_bim(const std::string &path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open .bim file: " + path);
  VariantTable out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_ws(line);
    if (f.size() < 6)
      fail_data(path + ":" + std::to_string(lineno) + ": expected 6 fields, got " +
                std::to_string(f.size()));
    if (!seen.insert(f[1]).second)
      fail_data(path + ": duplicate variant id '" + f[1] + "'");
    VariantRecord r;
    r.chrom = f[0];
    r.id = f[1];
    r.genetic_dist = std::atof(f[2].c_str());
    r.bp_position = std::atoll(f[3].c_str());
    r.allele1 = f[4];
    r.allele2 = f[5];
    out.push_back(std::move(r));
  }
  if (out.empty()) fail_data("empty .bim file: " + path);
  return out;
}

// A1-count decode of one packed byte: 2-bit codes from the least-significant
// pair upward; 00 -> 2, 10 -> 1, 11 -> 0, 01 -> missing.
static inline std::uint8_t decode2(unsigned code) {
  switch (code) {
    case 0: return 2;
    case 2: return 1;
    case 3: return 0;
    default: return kMissingDosage;  // 01
  }
}

IngestReport decode_bed(const std::string &bed_path, std::int64_t n_samples,
                        std::int64_t n_variants, FileMatrix &out) {
  std::ifstream in(bed_path, std::ios::binary);
  if (!in) fail_data("cannot open .bed file: " + bed_path);
  in.seekg(0, std::ios::end);
  std::int64_t file_size = in.tellg();
  in.seekg(0);
  std::int64_t bytes_per_variant = (n_samples + 3) / 4;
  if (file_size != 3 + n_variants * bytes_per_variant)
    fail_data(bed_path + ": size " + std::to_string(file_size) +
              " does not match " + std::to_string(n_samples) + " samples x " +
              std::to_string(n_variants) + " variants");
  unsigned char magic[3];
  in.read(reinterpret_cast<char *>(magic), 3);
  if (magic[0] != 0x6C || magic[1] != 0x1B)
    fail_data(bed_path + ": bad magic bytes");
  if (magic[2] == 0x00)
    fail_data(bed_path + ": sample-major .bed files are not supported");
  if (magic[2] != 0x01) fail_data(bed_path + ": unknown mode byte");
  if (out.n_rows() != n_samples || out.n_cols() != n_variants ||
      out.kind() != ElementKind::uint8_dosage)
    fail_usage("output matrix does not match .bed dimensions");

  IngestReport rep;
  rep.n_samples = n_samples;
  rep.n_variants_read = n_variants;

  std::int64_t bw = Runtime::block_width();
  std::vector<char> raw;
  std::vector<std::uint8_t> block;
  for (std::int64_t v0 = 0; v0 < n_variants; v0 += bw) {
    std::int64_t nb = std::min(bw, n_variants - v0);
    raw.resize(static_cast<size_t>(nb * bytes_per_variant));
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!in) fail_data(bed_path + ": truncated read");
    block.assign(static_cast<size_t>(nb * n_samples), 0);
    for (std::int64_t v = 0; v < nb; ++v) {
      const unsigned char *src =
          reinterpret_cast<unsigned char *>(raw.data()) + v * bytes_per_variant;
      std::uint8_t *dst = block.data() + v * n_samples;
      for (std::int64_t i = 0; i < n_samples; ++i) {
        unsigned byte = src[i >> 2];
        unsigned code = (byte >> ((i & 3) * 2)) & 3u;
        std::uint8_t d = decode2(code);
        if (d == kMissingDosage) ++rep.n_missing_imputed;
        dst[i] = d;
      }
    }
    out.write_col_block_u8(v0, nb, block.data());
    out.advise_dontneed(v0, nb);
  }
  // n_missing_imputed here counts missing entries seen; imputation itself
  // happens in impute_and_filter.
  return rep;
}

std::pair<FileMatrix, IngestReport> impute_and_filter(
    const FileMatrix &m, double maf_min, const std::string &out_path) {
  if (m.kind() != ElementKind::uint8_dosage)
    fail_usage("impute_and_filter expects a uint8 dosage matrix");
  std::int64_t n = m.n_rows(), p = m.n_cols();
  std::int64_t bw = Runtime::block_width();

  struct ColStat {
    double sum = 0;
    std::int64_t n_obs = 0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
  };
  std::vector<ColStat> stats(static_cast<size_t>(p));

  std::int64_t n_blocks = (p + bw - 1) / bw;
  parallel_blocks(n_blocks, [&](std::int64_t b) {
    std::int64_t c0 = b * bw;
    std::int64_t nb = std::min(bw, p - c0);
    Eigen::MatrixXd block = m.read_col_block(c0, nb);
    for (std::int64_t j = 0; j < nb; ++j) {
      ColStat &s = stats[static_cast<size_t>(c0 + j)];
      for (std::int64_t i = 0; i < n; ++i) {
        double x = block(i, j);
        if (std::isnan(x)) continue;
        s.sum += x;
        ++s.n_obs;
        s.lo = std::min(s.lo, x);
        s.hi = std::max(s.hi, x);
      }
    }
    m.advise_dontneed(c0, nb);
  });

  IngestReport rep;
  rep.n_samples = n;
  rep.n_variants_read = p;
  std::vector<std::int64_t> keep;
  std::vector<double> col_mean(static_cast<size_t>(p), 0.0);
  for (std::int64_t j = 0; j < p; ++j) {
    const ColStat &s = stats[static_cast<size_t>(j)];
    if (s.n_obs == 0 || s.lo == s.hi) {
      ++rep.n_variants_dropped_constant;
      continue;
    }
    double mean = s.sum / static_cast<double>(s.n_obs);
    double af = mean / 2.0;
    double maf = std::min(af, 1.0 - af);
    if (maf < maf_min) {
      ++rep.n_variants_dropped_maf;
      continue;
    }
    col_mean[static_cast<size_t>(j)] = mean;
    rep.maf.push_back(maf);
    rep.missing_rate.push_back(static_cast<double>(n - s.n_obs) /
                               static_cast<double>(n));
    keep.push_back(j);
  }
  if (keep.empty()) fail_data("all columns dropped by impute_and_filter");

  FileMatrix out = FileMatrix::create(out_path, n,
                                      static_cast<std::int64_t>(keep.size()),
                                      ElementKind::float64, true);
  out.row_ids = m.row_ids;
  if (m.col_names.size() == static_cast<size_t>(p)) {
    out.col_names.reserve(keep.size());
    for (std::int64_t j : keep) out.col_names.push_back(m.col_names[j]);
  }
  out.save_meta();

  std::int64_t kp = static_cast<std::int64_t>(keep.size());
  std::int64_t kb = (kp + bw - 1) / bw;
  std::int64_t imputed = 0;
  std::mutex mu;
  parallel_blocks(kb, [&](std::int64_t b) {
    std::int64_t c0 = b * bw;
    std::int64_t nb = std::min(bw, kp - c0);
    Eigen::MatrixXd block(n, nb);
    std::int64_t local_imputed = 0;
    for (std::int64_t j = 0; j < nb; ++j) {
      std::int64_t src = keep[static_cast<size_t>(c0 + j)];
      Eigen::MatrixXd col = m.read_col_block(src, 1);
      for (std::int64_t i = 0; i < n; ++i) {
        double x = col(i, 0);
        if (std::isnan(x)) {
          x = col_mean[static_cast<size_t>(src)];
          ++local_imputed;
        }
        block(i, j) = x;
      }
    }
    out.write_col_block(c0, block);
    out.advise_dontneed(c0, nb);
    std::lock_guard<std::mutex> lock(mu);
    imputed += local_imputed;
  });
  rep.n_missing_imputed = imputed;
  return {std::move(out), std::move(rep)};
}

FileMatrix process_delimited(const std::string &path, char delimiter,
                             bool has_header, const std::string &out_path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open delimited file: " + path);
  std::string line;
  std::vector<std::string> header;
  if (has_header) {
    if (!std::getline(in, line)) fail_data("empty delimited file: " + path);
    header = split_delim(line, delimiter);
  }
  std::vector<std::vector<double>> rows;
  std::vector<std::string> row_ids;
  bool id_col = false;
  std::int64_t lineno = has_header ? 1 : 0;
  size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_delim(line, delimiter);
    if (rows.empty()) {
      double tmp;
      id_col = !parse_double(f[0], tmp);
      width = f.size();
    }
    if (f.size() != width)
      fail_data(path + ":" + std::to_string(lineno) + ": ragged row, expected " +
                std::to_string(width) + " fields, got " +
                std::to_string(f.size()));
    size_t start = id_col ? 1 : 0;
    if (id_col) row_ids.push_back(f[0]);
    std::vector<double> vals;
    vals.reserve(width - start);
    for (size_t k = start; k < f.size(); ++k) {
      double v;
      if (!parse_double(f[k], v))
        fail_data(path + ":" + std::to_string(lineno) + ": non-numeric cell '" +
                  f[k] + "'");
      vals.push_back(v);
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) fail_data("no data rows in " + path);

  std::int64_t n = static_cast<std::int64_t>(rows.size());
  std::int64_t p = static_cast<std::int64_t>(rows[0].size());
  FileMatrix out = FileMatrix::create(out_path, n, p, ElementKind::float64, true);
  size_t start = id_col ? 1 : 0;
  if (has_header && header.size() == static_cast<size_t>(p) + start)
    out.col_names.assign(header.begin() + start, header.end());
  out.row_ids = std::move(row_ids);
  out.save_meta();

  std::int64_t bw = Runtime::block_width();
  for (std::int64_t c0 = 0; c0 < p; c0 += bw) {
    std::int64_t nb = std::min(bw, p - c0);
    Eigen::MatrixXd block(n, nb);
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < nb; ++j)
        block(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(c0 + j)];
    out.write_col_block(c0, block);
  }
  return out;
}

}  // namespace plmm
