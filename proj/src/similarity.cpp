#include "perfpred/similarity.hpp"

#include <algorithm>
#include <cctype>

#include "perfpred/error.hpp"

namespace perfpred::confidence {

std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

double rouge_l_f1(const std::string& a, const std::string& b) {
  const auto ta = whitespace_tokens(a);
  const auto tb = whitespace_tokens(b);
  if (ta.empty() || tb.empty()) return 0.0;

  // LCS length, rolling rows
  const size_t m = ta.size(), n = tb.size();
  std::vector<size_t> prev(n + 1, 0), cur(n + 1, 0);
  for (size_t i = 1; i <= m; ++i) {
    for (size_t j = 1; j <= n; ++j) {
      if (ta[i - 1] == tb[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[n]);
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(n);
  const double recall = lcs / static_cast<double>(m);
  return 2.0 * precision * recall / (precision + recall);
}

SimilarityMatrix symmetrize(const std::vector<double>& directional, int n,
                            const std::string& backend_id) {
  if (n < 2) fail(ErrorKind::arity, "similarity matrix needs n >= 2");
  if (directional.size() != static_cast<size_t>(n) * n)
    fail(ErrorKind::integrity, "similarity matrix shape mismatch: expected " +
                                   std::to_string(n * n) + " entries, got " +
                                   std::to_string(directional.size()));
  for (double x : directional)
    if (!(x >= 0.0 && x <= 1.0))
      fail(ErrorKind::range, "similarity entries must be in [0,1]");

  SimilarityMatrix sim;
  sim.n = n;
  sim.backend_id = backend_id;
  sim.w.assign(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    sim.at(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (directional[static_cast<size_t>(i) * n + j] +
                              directional[static_cast<size_t>(j) * n + i]);
      sim.at(i, j) = v;
      sim.at(j, i) = v;
    }
  }
  return sim;
}

SimilarityMatrix pairwise_similarity_lexical(const std::vector<std::string>& outputs) {
  const int n = static_cast<int>(outputs.size());
  if (n < 2) fail(ErrorKind::arity, "pairwise similarity needs at least 2 outputs");
  std::vector<double> a(static_cast<size_t>(n) * n, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double f1 = rouge_l_f1(outputs[i], outputs[j]);
      a[static_cast<size_t>(i) * n + j] = f1;
      a[static_cast<size_t>(j) * n + i] = f1;
    }
  return symmetrize(a, n, "lexical_rouge_l");
}

SimilarityMatrix pairwise_similarity_precomputed(const std::vector<double>& entries, int n) {
  return symmetrize(entries, n, "precomputed");
}

}  // namespace perfpred::confidence
