#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "mtmrc/inversion.hpp"
#include "mtmrc/kernel.hpp"
#include "mtmrc/matrix_seq.hpp"
#include "mtmrc/renewal.hpp"
#include "mtmrc/simulate.hpp"

namespace mtmrc {

using json = nlohmann::json;

// {"d": int, "s": int, "bounds": [...], "data": [...]}; "data" is the flat
// row-major list or, on input only, any nesting of it.
json to_json(const MatrixSeq& a);
MatrixSeq matrix_seq_from_json(const json& j);

// List of {"kind", "i", "j"?, "alpha"?}; row indices are 1-based.
json to_json(const GaussFactorization& f);
GaussFactorization factorization_from_json(const json& j);

struct KernelFile {
  std::optional<MatrixSeq> dense;
  std::optional<ParametricKernelSpec> parametric;
  std::optional<std::vector<std::size_t>> bounds;  // grid for the parametric form
  double tail_tol = 1e-6;
};
KernelFile kernel_file_from_json(const json& j);
// Dense data wins over a parametric block. The parametric form needs a grid,
// taken from `grid` or the file's "bounds".
SemiMarkovKernel load_kernel(const KernelFile& file, const std::optional<Grid>& grid);
json to_json(const ParametricKernelSpec& spec);

json to_json(const MrcAnalysis& a);
// Plain-text table in the order: p, nu, sojourn moments, passage means,
// recurrence moments, variances, covariances, correlations.
std::string summary_table(const MrcAnalysis& a);

json to_json(const EstimatorReport& r);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mtmrc
