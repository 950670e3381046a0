#include "perfpred/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <json.hpp>

#include "perfpred/error.hpp"
#include "perfpred/mathx.hpp"

namespace perfpred::confidence {

namespace {

void check_matrix(const SimilarityMatrix& w) {
  if (w.n < 2 || w.w.size() != static_cast<size_t>(w.n) * w.n)
    fail(ErrorKind::arity, "similarity matrix needs n >= 2");
}

std::vector<double> row_sums(const SimilarityMatrix& w) {
  std::vector<double> d(w.n, 0.0);
  for (int i = 0; i < w.n; ++i)
    for (int j = 0; j < w.n; ++j) d[i] += w.at(i, j);
  return d;
}

/// L = I - D^-1/2 W D^-1/2 (row-major). Degrees are >= 1 because of the unit
/// diagonal, so the scaling is always defined.
std::vector<double> normalized_laplacian(const SimilarityMatrix& w) {
  const int n = w.n;
  const auto d = row_sums(w);
  std::vector<double> l(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double a = w.at(i, j) / std::sqrt(d[i] * d[j]);
      l[static_cast<size_t>(i) * n + j] = (i == j ? 1.0 : 0.0) - a;
    }
  return l;
}

// eigenvalues below this carry cluster structure; higher ones are noise
constexpr double kEccEigenvalueCutoff = 0.9;

}  // namespace

DegMatResult degmat(const SimilarityMatrix& w) {
  check_matrix(w);
  const int n = w.n;
  const auto d = row_sums(w);
  DegMatResult out;
  double trace = 0.0;
  out.confidence.resize(n);
  for (int j = 0; j < n; ++j) {
    trace += static_cast<double>(n) - d[j];
    out.confidence[j] = d[j] / static_cast<double>(n);
  }
  out.uncertainty = trace / (static_cast<double>(n) * n);
  return out;
}

double eigv(const SimilarityMatrix& w) {
  check_matrix(w);
  const auto l = normalized_laplacian(w);
  const auto eig = mathx::jacobi_eigen_sym(l, w.n);
  double u = 0.0;
  for (double lambda : eig.values) u += std::max(0.0, 1.0 - lambda);
  return u;
}

EccentricityResult eccentricity(const SimilarityMatrix& w, int k) {
  check_matrix(w);
  const int n = w.n;
  if (k < 1 || k > n) fail(ErrorKind::range, "eccentricity: k must be in [1, n]");
  const auto l = normalized_laplacian(w);
  const auto eig = mathx::jacobi_eigen_sym(l, n);

  // keep the k smallest eigenvectors that stay below the cutoff (at least one:
  // the constant eigenvector at lambda = 0)
  int dims = 0;
  while (dims < k && (dims == 0 || eig.values[dims] < kEccEigenvalueCutoff)) ++dims;

  // embedding row j = (u_1[j], ..., u_dims[j]); offsets from the column mean
  std::vector<double> mean(dims, 0.0);
  for (int c = 0; c < dims; ++c) {
    for (int j = 0; j < n; ++j) mean[c] += eig.vec(j, c);
    mean[c] /= static_cast<double>(n);
  }
  EccentricityResult out;
  out.confidence.resize(n);
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    double sq = 0.0;
    for (int c = 0; c < dims; ++c) {
      const double o = eig.vec(j, c) - mean[c];
      sq += o * o;
    }
    total += sq;
    out.confidence[j] = -std::sqrt(sq);
  }
  out.uncertainty = std::sqrt(total);
  return out;
}

int num_semantic_sets(const SimilarityMatrix& w, double tau) {
  check_matrix(w);
  if (!(tau > 0.0 && tau < 1.0)) fail(ErrorKind::range, "num_semantic_sets: tau must be in (0,1)");
  const int n = w.n;
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (w.at(i, j) >= tau) {
        const int ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
  int components = 0;
  for (int i = 0; i < n; ++i)
    if (find(i) == i) ++components;
  return components;
}

double lexsim(const std::vector<std::string>& outputs) {
  const int n = static_cast<int>(outputs.size());
  if (n < 2) fail(ErrorKind::arity, "lexsim needs at least 2 outputs");
  double sum = 0.0;
  int pairs = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      sum += rouge_l_f1(outputs[i], outputs[j]);
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

std::string extract_first_json_object(const std::string& text) {
  const size_t start = text.find('{');
  if (start == std::string::npos) fail(ErrorKind::parse, "no JSON object in response");
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"')
      in_string = true;
    else if (c == '{')
      ++depth;
    else if (c == '}') {
      --depth;
      if (depth == 0) return text.substr(start, i - start + 1);
    }
  }
  fail(ErrorKind::parse, "unbalanced JSON object in response");
}

namespace {

nlohmann::json parse_object(const std::string& response) {
  const std::string body = extract_first_json_object(response);
  nlohmann::json obj = nlohmann::json::parse(body, nullptr, false);
  if (obj.is_discarded()) fail(ErrorKind::parse, "invalid JSON object in response");
  return obj;
}

}  // namespace

Verbalized1S parse_verbalized_1s(const std::string& response) {
  const auto obj = parse_object(response);
  if (!obj.contains("Answer") || !obj.contains("Confidence"))
    fail(ErrorKind::parse, "verbalized 1S response missing Answer/Confidence");
  Verbalized1S out;
  if (obj["Answer"].is_string())
    out.answer = obj["Answer"].get<std::string>();
  else
    out.answer = obj["Answer"].dump();
  if (!obj["Confidence"].is_number())
    fail(ErrorKind::parse, "verbalized 1S confidence is not numeric");
  double c = obj["Confidence"].get<double>();
  if (c < 0.0 || c > 100.0)
    fail(ErrorKind::parse, "verbalized 1S confidence outside [0,100]");
  if (c > 1.0) c /= 100.0;  // percent scale
  out.confidence = c;
  return out;
}

double parse_verbalized_2s(const std::string& response) {
  const auto obj = parse_object(response);
  if (!obj.contains("P1") || !obj["P1"].is_number())
    fail(ErrorKind::parse, "verbalized 2S response missing numeric P1");
  const double p = obj["P1"].get<double>();
  if (p < 0.0 || p > 1.0) fail(ErrorKind::parse, "verbalized 2S probability outside [0,1]");
  return p;
}

}  // namespace perfpred::confidence
