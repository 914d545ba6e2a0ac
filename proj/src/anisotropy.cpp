#include "styleprobe/anisotropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "styleprobe/base64.hpp"
#include "styleprobe/error.hpp"

namespace styleprobe {

CorrectionMethod parse_correction(std::string_view s) {
  if (s == "none") return CorrectionMethod::none;
  if (s == "abtt") return CorrectionMethod::abtt;
  if (s == "standardization" || s == "std") return CorrectionMethod::standardization;
  if (s == "rank") return CorrectionMethod::rank;
  throw UsageError("unknown correction '" + std::string(s) +
                   "' (expected none, abtt, standardization or rank)");
}

std::string_view correction_name(CorrectionMethod m) {
  switch (m) {
    case CorrectionMethod::none: return "none";
    case CorrectionMethod::abtt: return "abtt";
    case CorrectionMethod::standardization: return "standardization";
    case CorrectionMethod::rank: return "rank";
  }
  return "none";
}

std::size_t default_abtt_k(std::size_t dim, std::size_t sample_count) {
  auto k = static_cast<std::size_t>(std::llround(static_cast<double>(dim) / 100.0));
  std::size_t upper = std::min(dim, sample_count > 0 ? sample_count - 1 : 0);
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(upper, 1));
}

CorrectionStats fit_correction(const MatrixD& samples, CorrectionMethod method,
                               std::optional<std::size_t> k_override) {
  CorrectionStats stats;
  stats.method = method;
  if (method == CorrectionMethod::none || method == CorrectionMethod::rank) return stats;

  const std::size_t n = samples.rows();
  const std::size_t d = samples.cols();
  if (n < 2) {
    throw NumericError("correction fit needs at least 2 sample vectors, got " + std::to_string(n));
  }
  stats.sample_count = n;

  stats.mu.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = samples.row(r);
    for (std::size_t c = 0; c < d; ++c) stats.mu[c] += row[c];
  }
  for (auto& m : stats.mu) m /= static_cast<double>(n);

  stats.sigma.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = samples.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      double diff = row[c] - stats.mu[c];
      stats.sigma[c] += diff * diff;
    }
  }
  for (auto& s : stats.sigma) s = std::max(std::sqrt(s / static_cast<double>(n)), kSigmaFloor);

  if (method != CorrectionMethod::abtt) return stats;

  std::size_t k = k_override ? *k_override : default_abtt_k(d, n);
  if (k == 0) throw UsageError("abtt needs k >= 1");
  stats.requested_k = k;
  k = std::min(k, std::min(d, n - 1));

  Eigen::MatrixXd centered(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = samples.row(r);
    for (std::size_t c = 0; c < d; ++c) centered(r, c) = row[c] - stats.mu[c];
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const auto& v = svd.matrixV();

  double tol = sv.size() > 0
                   ? sv(0) * static_cast<double>(std::max(n, d)) *
                         std::numeric_limits<double>::epsilon()
                   : 0.0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol && sv(i) > 0.0) ++rank;
  }
  k = std::min(k, rank);
  stats.k = k;

  stats.components = MatrixD(k, d);
  stats.singular_values.assign(sv.data(), sv.data() + sv.size());
  for (std::size_t i = 0; i < k; ++i) {
    auto col = v.col(static_cast<Eigen::Index>(i));
    std::size_t arg = 0;
    for (std::size_t c = 1; c < d; ++c) {
      if (std::abs(col(static_cast<Eigen::Index>(c))) >
          std::abs(col(static_cast<Eigen::Index>(arg)))) {
        arg = c;
      }
    }
    double sign = col(static_cast<Eigen::Index>(arg)) < 0 ? -1.0 : 1.0;
    for (std::size_t c = 0; c < d; ++c) {
      stats.components(i, c) = sign * col(static_cast<Eigen::Index>(c));
    }
  }
  return stats;
}

VectorD apply_abtt(std::span<const double> x, const CorrectionStats& stats,
                   bool centered_projection) {
  const std::size_t d = stats.dim();
  if (x.size() != d) {
    throw NumericError("abtt: vector of dimension " + std::to_string(x.size()) +
                       " for stats of dimension " + std::to_string(d));
  }
  VectorD out(d);
  for (std::size_t c = 0; c < d; ++c) out[c] = x[c] - stats.mu[c];
  for (std::size_t i = 0; i < stats.k; ++i) {
    auto u = stats.components.row(i);
    double proj = 0.0;
    for (std::size_t c = 0; c < d; ++c) proj += u[c] * (centered_projection ? out[c] : x[c]);
    for (std::size_t c = 0; c < d; ++c) out[c] -= proj * u[c];
  }
  return out;
}

VectorD apply_standardization(std::span<const double> x, const CorrectionStats& stats) {
  const std::size_t d = stats.dim();
  if (x.size() != d) {
    throw NumericError("standardization: vector of dimension " + std::to_string(x.size()) +
                       " for stats of dimension " + std::to_string(d));
  }
  VectorD out(d);
  for (std::size_t c = 0; c < d; ++c) out[c] = (x[c] - stats.mu[c]) / stats.sigma[c];
  return out;
}

VectorD rank_transform(std::span<const double> x) {
  const std::size_t d = x.size();
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  VectorD ranks(d);
  std::size_t i = 0;
  while (i < d) {
    std::size_t j = i;
    while (j + 1 < d && x[order[j + 1]] == x[order[i]]) ++j;
    // positions i..j (0-based) share ranks i+1..j+1
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

VectorD Correction::apply(std::span<const double> x) const {
  switch (method) {
    case CorrectionMethod::abtt:
      if (!stats) throw NumericError("abtt correction without fitted stats");
      return apply_abtt(x, *stats, centered_projection);
    case CorrectionMethod::standardization:
      if (!stats) throw NumericError("standardization without fitted stats");
      return apply_standardization(x, *stats);
    case CorrectionMethod::none:
    case CorrectionMethod::rank:
      break;
  }
  return VectorD(x.begin(), x.end());
}

nlohmann::ordered_json stats_to_json(const CorrectionStats& stats) {
  nlohmann::ordered_json j;
  j["method"] = correction_name(stats.method);
  j["dim"] = stats.dim();
  j["k"] = stats.k;
  j["requested_k"] = stats.requested_k;
  j["sample_count"] = stats.sample_count;
  j["dtype"] = "float64-le";
  j["mu"] = encode_f64_le(stats.mu);
  j["sigma"] = encode_f64_le(stats.sigma);
  j["components"] = encode_f64_le(stats.components.data());
  j["singular_values"] = encode_f64_le(stats.singular_values);
  return j;
}

CorrectionStats stats_from_json(const nlohmann::json& j) {
  CorrectionStats s;
  try {
    s.method = parse_correction(j.at("method").get<std::string>());
    s.k = j.at("k").get<std::size_t>();
    s.requested_k = j.value("requested_k", s.k);
    s.sample_count = j.at("sample_count").get<std::size_t>();
    s.mu = decode_f64_le(j.at("mu").get<std::string>());
    s.sigma = decode_f64_le(j.at("sigma").get<std::string>());
    auto comps = decode_f64_le(j.at("components").get<std::string>());
    s.singular_values = decode_f64_le(j.value("singular_values", std::string()));
    std::size_t d = j.at("dim").get<std::size_t>();
    if (s.mu.size() != d || s.sigma.size() != d || comps.size() != s.k * d) {
      throw FormatError("correction stats arrays do not match dim/k");
    }
    s.components = MatrixD(s.k, d, std::move(comps));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad correction stats: ") + e.what());
  }
  return s;
}

}  // namespace styleprobe
