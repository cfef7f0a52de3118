#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "radialplan/grid.hpp"

namespace radialplan {

struct BlockMask;
struct TokenMask;

// Multi-head projections for a token sequence, one matrix per head, each
// tokens x head_dim.  values may be empty when the batch is only used for
// scoring.
struct FeatureBatch {
  std::int64_t tokens = 0;
  int heads = 0;
  int head_dim = 0;
  std::vector<Eigen::MatrixXf> queries;
  std::vector<Eigen::MatrixXf> keys;
  std::vector<Eigen::MatrixXf> values;

  void validate(bool need_values) const;
};

// Scaled dot-product logits per head: Q K^T / sqrt(head_dim).
std::vector<Eigen::MatrixXf> attention_logits(const FeatureBatch& batch);

// Soft-masked attention: logits plus log(mask + epsilon), then row softmax,
// then the value product.  Inactive positions keep a log(epsilon) floor
// instead of being dropped, which mirrors how a fused kernel folds the mask
// into the logits.  Rows are the padded token axis; query/key/value rows
// past batch.tokens are treated as zero.
std::vector<Eigen::MatrixXf> masked_attention(const FeatureBatch& batch,
                                              const TokenMask& mask,
                                              double epsilon = 1e-10);

// Hard-masked variant: inactive logits are minus infinity (dropped from the
// softmax entirely).  Throws std::domain_error if any row has no active key.
std::vector<Eigen::MatrixXf> masked_attention_exact(const FeatureBatch& batch,
                                                    const TokenMask& mask);

// Row-stochastic attention matrix of a single fused feature matrix against
// itself: softmax of h h^T / sqrt(dim), optionally with hard zero masking
// applied before renormalization.  A fully masked row falls back to a point
// mass on its diagonal entry; *fallback_rows counts how many rows did.
Eigen::MatrixXf attention_matrix(const Eigen::MatrixXf& features,
                                 const TokenMask* mask = nullptr,
                                 int* fallback_rows = nullptr);

// Relative reconstruction error: |a - b|_F^2 / |a|_F^2, accumulated in
// double in a fixed traversal order.  Throws std::invalid_argument when the
// reference has zero norm.
double normalized_mse(const Eigen::MatrixXf& reference,
                      const Eigen::MatrixXf& approx);

// Deterministic synthetic batch for tests and the eval path: every entry an
// independent unit normal keyed by (seed, role, head, token, dim).
FeatureBatch random_batch(std::int64_t tokens, int heads, int head_dim,
                          std::uint64_t seed, bool with_values = true);

}  // namespace radialplan
