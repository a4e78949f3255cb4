#ifndef PLMM_PLINK_HPP
#define PLMM_PLINK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "file_matrix.hpp"

namespace plmm {

struct SampleRecord {
  std::string fid;
  std::string iid;
  int sex = 0;
  std::string phenotype_raw;
};
using SampleTable = std::vector<SampleRecord>;

struct VariantRecord {
  std::string chrom;
  std::string id;
  double genetic_dist = 0;
  std::int64_t bp_position = 0;
  std::string allele1;
  std::string allele2;
};
using VariantTable = std::vector<VariantRecord>;

struct IngestReport {
  std::int64_t n_samples = 0;
  std::int64_t n_variants_read = 0;
  std::int64_t n_variants_dropped_constant = 0;
  std::int64_t n_variants_dropped_maf = 0;
  std::int64_t n_missing_imputed = 0;
  std::vector<double> maf;           // per retained column
  std::vector<double> missing_rate;  // per retained column
  std::int64_t n_retained() const {
    return n_variants_read - n_variants_dropped_constant -
           n_variants_dropped_maf;
  }
};

SampleTable parse_fam(const std::string &path);
VariantTable parse_bim(const std::string &path);

// Decodes a SNP-major .bed into `out`, an n_samples x n_variants uint8
// dosage matrix counting copies of allele A1. Missing genotypes become
// the sentinel. `out` must already have matching dimensions.
IngestReport decode_bed(const std::string &bed_path, std::int64_t n_samples,
                        std::int64_t n_variants, FileMatrix &out);

// Replaces missing dosages with the observed column mean and drops constant
// columns plus columns with MAF < maf_min. Writes a float64 matrix at
// out_path and returns it with the drop report.
std::pair<FileMatrix, IngestReport> impute_and_filter(const FileMatrix &m,
                                                      double maf_min,
                                                      const std::string &out_path);

// Parses a rectangular numeric delimited file into a float64 FileMatrix.
// A non-numeric first column is treated as row ids.
FileMatrix process_delimited(const std::string &path, char delimiter,
                             bool has_header, const std::string &out_path);

}  // namespace plmm

#endif  // PLMM_PLINK_HPP
