#include "radialplan/attention.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "radialplan/mask.hpp"
#include "radialplan/rng.hpp"

namespace radialplan {

void FeatureBatch::validate(bool need_values) const {
  if (tokens < 1 || heads < 1 || head_dim < 1)
    throw std::invalid_argument("feature batch: empty dimensions");
  auto check = [&](const std::vector<Eigen::MatrixXf>& m, const char* name) {
    if (static_cast<int>(m.size()) != heads)
      throw std::invalid_argument(std::string("feature batch: ") + name +
                                  " head count mismatch");
    for (const auto& x : m)
      if (x.rows() != tokens || x.cols() != head_dim)
        throw std::invalid_argument(std::string("feature batch: ") + name +
                                    " shape mismatch");
  };
  check(queries, "queries");
  check(keys, "keys");
  if (need_values) check(values, "values");
}

std::vector<Eigen::MatrixXf> attention_logits(const FeatureBatch& batch) {
  batch.validate(false);
  const float scale =
      1.0f / std::sqrt(static_cast<float>(batch.head_dim));
  std::vector<Eigen::MatrixXf> out;
  out.reserve(static_cast<std::size_t>(batch.heads));
  for (int h = 0; h < batch.heads; ++h)
    out.push_back(scale * (batch.queries[h] * batch.keys[h].transpose()));
  return out;
}

namespace {

// Zero-pad a head matrix up to the padded token count.
Eigen::MatrixXf padded(const Eigen::MatrixXf& m, std::int64_t rows) {
  if (m.rows() == rows) return m;
  Eigen::MatrixXf p = Eigen::MatrixXf::Zero(rows, m.cols());
  p.topRows(m.rows()) = m;
  return p;
}

std::vector<Eigen::MatrixXf> masked_attention_impl(const FeatureBatch& batch,
                                                   const TokenMask& mask,
                                                   double epsilon,
                                                   bool exact) {
  batch.validate(true);
  if (mask.dim < batch.tokens)
    throw std::invalid_argument("masked attention: mask smaller than batch");
  const std::int64_t n = mask.dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(batch.head_dim));
  const double log_active = std::log1p(epsilon);
  const double log_inactive = std::log(epsilon);

  std::vector<Eigen::MatrixXf> out;
  out.reserve(static_cast<std::size_t>(batch.heads));
  std::vector<double> p(static_cast<std::size_t>(n));
  for (int h = 0; h < batch.heads; ++h) {
    const Eigen::MatrixXf q = padded(batch.queries[h], n);
    const Eigen::MatrixXf k = padded(batch.keys[h], n);
    const Eigen::MatrixXf v = padded(batch.values[h], n);
    Eigen::MatrixXf logits = q * k.transpose();
    Eigen::MatrixXf res(n, batch.head_dim);
    for (std::int64_t r = 0; r < n; ++r) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::int64_t c = 0; c < n; ++c) {
        const bool active = mask.get(r, c);
        if (exact && !active) {
          p[static_cast<std::size_t>(c)] =
              -std::numeric_limits<double>::infinity();
          continue;
        }
        const double l = static_cast<double>(logits(r, c)) * scale +
                         (exact ? 0.0 : (active ? log_active : log_inactive));
        p[static_cast<std::size_t>(c)] = l;
        if (l > m) m = l;
      }
      if (m == -std::numeric_limits<double>::infinity())
        throw std::domain_error("masked attention: row has no active key");
      double sum = 0.0;
      for (std::int64_t c = 0; c < n; ++c) {
        double& pc = p[static_cast<std::size_t>(c)];
        pc = pc == -std::numeric_limits<double>::infinity()
                 ? 0.0
                 : std::exp(pc - m);
        sum += pc;
      }
      for (int d = 0; d < batch.head_dim; ++d) {
        double acc = 0.0;
        for (std::int64_t c = 0; c < n; ++c)
          acc += p[static_cast<std::size_t>(c)] *
                 static_cast<double>(v(c, d));
        res(r, d) = static_cast<float>(acc / sum);
      }
    }
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace

std::vector<Eigen::MatrixXf> masked_attention(const FeatureBatch& batch,
                                              const TokenMask& mask,
                                              double epsilon) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("masked attention: epsilon must be positive");
  return masked_attention_impl(batch, mask, epsilon, false);
}

std::vector<Eigen::MatrixXf> masked_attention_exact(const FeatureBatch& batch,
                                                    const TokenMask& mask) {
  return masked_attention_impl(batch, mask, 0.0, true);
}

Eigen::MatrixXf attention_matrix(const Eigen::MatrixXf& features,
                                 const TokenMask* mask, int* fallback_rows) {
  const std::int64_t n = features.rows();
  if (n < 1) throw std::invalid_argument("attention_matrix: empty features");
  if (mask && mask->dim < n)
    throw std::invalid_argument("attention_matrix: mask smaller than batch");
  const float scale = 1.0f / std::sqrt(static_cast<float>(features.cols()));
  Eigen::MatrixXf a = scale * (features * features.transpose());
  if (fallback_rows) *fallback_rows = 0;
  for (std::int64_t r = 0; r < n; ++r) {
    double m = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::int64_t c = 0; c < n; ++c) {
      if (mask && !mask->get(r, c)) continue;
      any = true;
      const double l = static_cast<double>(a(r, c));
      if (l > m) m = l;
    }
    if (!any) {
      // Fully masked row: keep it a distribution by pointing at itself.
      a.row(r).setZero();
      a(r, r) = 1.0f;
      if (fallback_rows) ++*fallback_rows;
      continue;
    }
    double sum = 0.0;
    for (std::int64_t c = 0; c < n; ++c) {
      if (mask && !mask->get(r, c)) {
        a(r, c) = 0.0f;
        continue;
      }
      const double e = std::exp(static_cast<double>(a(r, c)) - m);
      a(r, c) = static_cast<float>(e);
      sum += e;
    }
    for (std::int64_t c = 0; c < n; ++c)
      a(r, c) = static_cast<float>(static_cast<double>(a(r, c)) / sum);
  }
  return a;
}

double normalized_mse(const Eigen::MatrixXf& reference,
                      const Eigen::MatrixXf& approx) {
  if (reference.rows() != approx.rows() || reference.cols() != approx.cols())
    throw std::invalid_argument("normalized_mse: shape mismatch");
  // Fixed row-major traversal, double accumulation.
  double num = 0.0, den = 0.0;
  for (Eigen::Index r = 0; r < reference.rows(); ++r)
    for (Eigen::Index c = 0; c < reference.cols(); ++c) {
      const double a = static_cast<double>(reference(r, c));
      const double d = a - static_cast<double>(approx(r, c));
      num += d * d;
      den += a * a;
    }
  if (den == 0.0)
    throw std::invalid_argument("normalized_mse: reference has zero norm");
  return num / den;
}

FeatureBatch random_batch(std::int64_t tokens, int heads, int head_dim,
                          std::uint64_t seed, bool with_values) {
  FeatureBatch b;
  b.tokens = tokens;
  b.heads = heads;
  b.head_dim = head_dim;
  auto fill = [&](std::vector<Eigen::MatrixXf>& dst, std::uint64_t role) {
    for (int h = 0; h < heads; ++h) {
      Eigen::MatrixXf m(tokens, head_dim);
      const std::uint64_t base = mix64(seed, role, static_cast<std::uint64_t>(h));
      for (std::int64_t t = 0; t < tokens; ++t)
        for (int d = 0; d < head_dim; ++d)
          m(t, d) = static_cast<float>(gaussian_at(
              mix64(base, static_cast<std::uint64_t>(t),
                    static_cast<std::uint64_t>(d))));
      dst.push_back(std::move(m));
    }
  };
  fill(b.queries, 1);
  fill(b.keys, 2);
  if (with_values) fill(b.values, 3);
  return b;
}

}  // namespace radialplan
