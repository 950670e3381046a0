#pragma once

#include <map>
#include <string>
#include <vector>

#include "perfpred/similarity.hpp"

namespace perfpred::confidence {

/// Confidence features for one (instance, sample) row. Consistency features
/// are shared by all samples of an instance; verbalized features come from
/// dedicated prompts. Values are finite; missing features are absent keys.
struct FeatureVector {
  std::string instance_id;
  int sample_index = 0;
  std::map<std::string, double> features;
};

// canonical feature ids
inline constexpr const char* kDegMat = "DegMat";
inline constexpr const char* kEcc = "Ecc";
inline constexpr const char* kEigV = "EigV";
inline constexpr const char* kLexSim = "LexSim";
inline constexpr const char* kNumSet = "NumSet";
inline constexpr const char* kVerb1S = "Verb1S";
inline constexpr const char* kVerb2S = "Verb2S";
// optional per-response variants of the degree/eccentricity confidences
inline constexpr const char* kDegMatResp = "DegMatResp";
inline constexpr const char* kEccResp = "EccResp";

struct DegMatResult {
  double uncertainty = 0.0;          // trace(n I - D) / n^2
  std::vector<double> confidence;    // D_jj / n per output, in [0,1]
};

/// Degree-matrix uncertainty over the similarity graph.
DegMatResult degmat(const SimilarityMatrix& w);

/// Sum over eigenvalues of the normalized Laplacian L = I - D^-1/2 W D^-1/2
/// of max(0, 1 - lambda): a continuous estimate of the number of semantic
/// clusters, in [0, n].
double eigv(const SimilarityMatrix& w);

struct EccentricityResult {
  double uncertainty = 0.0;          // norm of all embedding offsets from the mean
  std::vector<double> confidence;    // -||offset_j|| per output (<= 0)
};

/// Spectral-embedding eccentricity: rows are per-output embeddings built from
/// the eigenvectors of the k smallest Laplacian eigenvalues below 0.9 (the
/// informative subspace; eigenvalues >= 0.9 carry no cluster structure).
EccentricityResult eccentricity(const SimilarityMatrix& w, int k);

/// Number of connected components of the graph with edges w[i][j] >= tau;
/// clustering is transitive (union-find). tau in (0,1).
int num_semantic_sets(const SimilarityMatrix& w, double tau);

/// Mean ROUGE-L F1 over all unordered output pairs. n >= 2 required.
double lexsim(const std::vector<std::string>& outputs);

/// Parses a verbalized 1S response: first balanced JSON object, keys
/// "Answer" (string) and "Confidence" (number). Confidence in [0,1] is taken
/// as-is, in (1,100] treated as a percentage, anything else rejected.
struct Verbalized1S {
  std::string answer;
  double confidence = 0.0;
};
Verbalized1S parse_verbalized_1s(const std::string& response);

/// Parses a verbalized 2S response: first balanced JSON object, key "P1"
/// holding a probability in [0,1]; values outside that range are rejected.
double parse_verbalized_2s(const std::string& response);

/// Extracts the first balanced JSON object from free-form text (string
/// escapes respected). Throws a parse error when none exists.
std::string extract_first_json_object(const std::string& text);

}  // namespace perfpred::confidence
