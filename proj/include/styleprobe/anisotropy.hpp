#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include <json.hpp>

#include "styleprobe/matrix.hpp"

namespace styleprobe {

enum class CorrectionMethod { none, abtt, standardization, rank };

CorrectionMethod parse_correction(std::string_view s);
std::string_view correction_name(CorrectionMethod m);

inline constexpr double kSigmaFloor = 1e-8;

/// Parameters of a local anisotropy correction, fitted on seed token vectors.
struct CorrectionStats {
  CorrectionMethod method = CorrectionMethod::none;
  VectorD mu;
  VectorD sigma;          // population std, clamped below at kSigmaFloor
  MatrixD components;     // k x d, orthonormal rows, descending singular value
  VectorD singular_values;
  std::size_t k = 0;
  std::size_t requested_k = 0;  // k before clamping to the numerical rank
  std::size_t sample_count = 0;

  std::size_t dim() const { return mu.size(); }
  bool k_reduced() const { return k < requested_k; }
};

// clamp(round(d / 100), 1, min(d, n - 1))
std::size_t default_abtt_k(std::size_t dim, std::size_t sample_count);

// samples: n x d. rank and none need no fit and return empty stats.
CorrectionStats fit_correction(const MatrixD& samples, CorrectionMethod method,
                               std::optional<std::size_t> k_override = std::nullopt);

// x - mu - sum_i (u_i . x) u_i; with centered_projection, u_i . (x - mu).
VectorD apply_abtt(std::span<const double> x, const CorrectionStats& stats,
                   bool centered_projection = false);
VectorD apply_standardization(std::span<const double> x, const CorrectionStats& stats);
// Ascending ranks 1..d, ties get the average rank.
VectorD rank_transform(std::span<const double> x);

/// Correction applied to token vectors before similarity.
/// rank and none leave vectors untouched; rank acts through the similarity metric.
struct Correction {
  CorrectionMethod method = CorrectionMethod::none;
  std::optional<CorrectionStats> stats;
  bool centered_projection = false;

  VectorD apply(std::span<const double> x) const;
  bool needs_fit() const {
    return method == CorrectionMethod::abtt || method == CorrectionMethod::standardization;
  }
};

nlohmann::ordered_json stats_to_json(const CorrectionStats& stats);
CorrectionStats stats_from_json(const nlohmann::json& j);

}  // namespace styleprobe
