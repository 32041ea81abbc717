#pragma once

#include <map>
#include <string>
#include <vector>

#include "laq/dataset.hpp"

namespace laq {

enum class ForwardMode { Tabular, SharedLinear };

/// Latent-action future predictor f(o, a_hat) with squared-L2 loss.
///
/// Tabular: one predicted next observation per (observation key, latent).
/// SharedLinear: f(o, a_hat) = W[a_hat] o + b[a_hat], shared across states.
class ForwardModel {
 public:
  ForwardModel() = default;

  static ForwardModel tabular(int num_latent, int dim, std::vector<Observation> keys,
                              std::vector<double> means);
  static ForwardModel shared_linear(int num_latent, int dim, std::vector<double> weights,
                                    std::vector<double> bias);

  ForwardMode mode() const noexcept { return mode_; }
  int num_latent() const noexcept { return num_latent_; }
  int dim() const noexcept { return dim_; }

  /// Writes f(o, latent) into `out` (length dim). Throws std::invalid_argument
  /// on a dimension mismatch or, in tabular mode, an unknown observation.
  void predict(const Observation& o, int latent, double* out) const;
  double loss(const Observation& o, int latent, const Observation& next) const;

  /// Loss-minimizing latent (ties toward the lowest index). When `allowed` is
  /// given only latents with allowed[l] != 0 are considered.
  int best_latent(const Observation& o, const Observation& next,
                  const std::vector<char>* allowed = nullptr) const;

  // Tabular accessors.
  const std::vector<Observation>& keys() const noexcept { return keys_; }
  int key_index(const Observation& o) const;
  const double* mean(int key, int latent) const {
    return means_.data() + (static_cast<std::size_t>(key) * static_cast<std::size_t>(num_latent_) +
                            static_cast<std::size_t>(latent)) * static_cast<std::size_t>(dim_);
  }

  // Shared-linear accessors.
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& bias() const noexcept { return bias_; }

  std::string to_json_string() const;
  static ForwardModel from_json_string(const std::string& text);
  void save(const std::string& path) const;
  static ForwardModel load(const std::string& path);

 private:
  void check_dim(const Observation& o) const;

  ForwardMode mode_ = ForwardMode::Tabular;
  int num_latent_ = 0;
  int dim_ = 0;
  std::vector<Observation> keys_;
  std::map<Observation, int> lookup_;
  std::vector<double> means_;    // keys * latent * dim
  std::vector<double> weights_;  // latent * dim * dim, row-major per latent
  std::vector<double> bias_;     // latent * dim
};

}  // namespace laq
