#pragma once

// Flow-matching and KTO objectives at desk scale, with analytic gradients
// for checking against finite differences.

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ocular {

struct FmSample {
  std::vector<double> x0;
  std::vector<double> x1;
  double t = 0.0;
  std::vector<double> xt;
  std::vector<double> target_v;
};

/// Linear path x_t = (1 - t) x0 + t x1 with target velocity x1 - x0.
/// Throws on a shape mismatch or t outside [0, 1].
FmSample fm_interpolate(const std::vector<double>& x0, const std::vector<double>& x1, double t);

/// Mean squared error between pred_v and target_v.
double fm_loss(const std::vector<double>& pred_v, const FmSample& sample);
/// d fm_loss / d pred_v.
std::vector<double> fm_loss_grad(const std::vector<double>& pred_v, const FmSample& sample);

enum class Desirability { Desirable, Undesirable };

struct KtoBatch {
  std::vector<double> log_ratios;
  std::vector<Desirability> desirability;
  double beta = 625.0;
  double w_desirable = 1.0;
  double w_undesirable = 1.0;
  double z_ref = 0.0;
};

double sigmoid(double x);

/// Mean of w_d (1 - sigmoid(beta r - z)) over desirable samples and
/// w_u (1 - sigmoid(z - beta r)) over undesirable ones. Throws on an empty
/// batch, mismatched lengths, beta <= 0 or non-positive weights.
double kto_loss(const KtoBatch& batch);
/// d kto_loss / d r_i.
std::vector<double> kto_loss_grad(const KtoBatch& batch);

/// max(0, mean(log_ratios)). Throws on an empty batch.
double estimate_z_ref(const std::vector<double>& log_ratios);

struct KtoManifestEntry {
  std::string id;
  bool desirable = true;
  double log_ratio = 0.0;
};

/// JSON list of {"id": str, "desirable": bool, "log_ratio": num}.
std::vector<KtoManifestEntry> kto_manifest_from_json(std::string_view text);
std::vector<KtoManifestEntry> load_kto_manifest(const std::filesystem::path& path);
/// Batch with z_ref estimated from the manifest's ratios.
KtoBatch kto_batch_from_manifest(const std::vector<KtoManifestEntry>& entries, double beta = 625.0,
                                 double w_desirable = 1.0, double w_undesirable = 1.0);

/// Two-parameter toy for the combined objective. The velocity model is
/// v(x, t) = theta0 * x + theta1 * t (elementwise) and each preference sample
/// has log-ratio theta . feature.
struct ToyProblem {
  std::vector<FmSample> fm;
  std::vector<std::array<double, 2>> kto_features;
  std::vector<Desirability> kto_flags;
  double beta = 625.0;
  double z_ref = 0.0;
  double w_desirable = 1.0;
  double w_undesirable = 1.0;
};

/// Mean FM loss over samples plus KTO loss, at equal weight.
double toy_combined_loss(const std::array<double, 2>& theta, const ToyProblem& problem);
std::array<double, 2> toy_combined_grad(const std::array<double, 2>& theta, const ToyProblem& problem);

}  // namespace ocular
