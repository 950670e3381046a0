#pragma once

#include <string>
#include <vector>

namespace perfpred::confidence {

/// Pairwise agreement between n sampled outputs: symmetric, unit diagonal,
/// entries in [0,1].
struct SimilarityMatrix {
  int n = 0;
  std::vector<double> w;  // row-major n*n
  std::string backend_id;

  double at(int i, int j) const { return w[static_cast<size_t>(i) * n + j]; }
  double& at(int i, int j) { return w[static_cast<size_t>(i) * n + j]; }
};

std::vector<std::string> whitespace_tokens(const std::string& text);

/// ROUGE-L F1 over whitespace tokens: P = LCS/|b|, R = LCS/|a|,
/// F1 = 2PR/(P+R); 0 when either side is empty.
double rouge_l_f1(const std::string& a, const std::string& b);

/// Builds a SimilarityMatrix from directional scores a[i][j] (row-major):
/// w[i][j] = (a[i][j] + a[j][i]) / 2, diagonal forced to 1. Entries must be
/// in [0,1].
SimilarityMatrix symmetrize(const std::vector<double>& directional, int n,
                            const std::string& backend_id);

/// Lexical backend: ROUGE-L F1 between every pair. n >= 2 required.
SimilarityMatrix pairwise_similarity_lexical(const std::vector<std::string>& outputs);

/// Precomputed backend: validates shape/range and symmetrizes.
SimilarityMatrix pairwise_similarity_precomputed(const std::vector<double>& entries, int n);

}  // namespace perfpred::confidence
