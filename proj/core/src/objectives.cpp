#include "ocular/objectives.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json_util.h"
#include "ocular/control_io.h"
#include "ocular/error.h"

namespace ocular {

FmSample fm_interpolate(const std::vector<double>& x0, const std::vector<double>& x1, double t) {
  if (x0.size() != x1.size()) throw Error("fm_interpolate: x0 and x1 differ in shape");
  if (!(t >= 0.0 && t <= 1.0)) throw Error("fm_interpolate: t must lie in [0, 1]");
  FmSample s{x0, x1, t, std::vector<double>(x0.size()), std::vector<double>(x0.size())};
  for (std::size_t i = 0; i < x0.size(); ++i) {
    s.xt[i] = (1.0 - t) * x0[i] + t * x1[i];
    s.target_v[i] = x1[i] - x0[i];
  }
  return s;
}

double fm_loss(const std::vector<double>& pred_v, const FmSample& sample) {
  if (pred_v.size() != sample.target_v.size()) throw Error("fm_loss: shape mismatch");
  if (pred_v.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < pred_v.size(); ++i) {
    const double d = pred_v[i] - sample.target_v[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred_v.size());
}

std::vector<double> fm_loss_grad(const std::vector<double>& pred_v, const FmSample& sample) {
  if (pred_v.size() != sample.target_v.size()) throw Error("fm_loss_grad: shape mismatch");
  std::vector<double> g(pred_v.size());
  const double scale = 2.0 / static_cast<double>(std::max<std::size_t>(pred_v.size(), 1));
  for (std::size_t i = 0; i < pred_v.size(); ++i) g[i] = scale * (pred_v[i] - sample.target_v[i]);
  return g;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void check_batch(const KtoBatch& b) {
  if (b.log_ratios.empty()) throw Error("kto: empty batch");
  if (b.log_ratios.size() != b.desirability.size()) throw Error("kto: flags and ratios differ in length");
  if (!(b.beta > 0.0)) throw Error("kto: beta must be positive");
  if (!(b.w_desirable > 0.0) || !(b.w_undesirable > 0.0)) throw Error("kto: weights must be positive");
}

}  // namespace

double kto_loss(const KtoBatch& b) {
  check_batch(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < b.log_ratios.size(); ++i) {
    const double x = b.beta * b.log_ratios[i] - b.z_ref;
    acc += b.desirability[i] == Desirability::Desirable ? b.w_desirable * (1.0 - sigmoid(x))
                                                        : b.w_undesirable * (1.0 - sigmoid(-x));
  }
  return acc / static_cast<double>(b.log_ratios.size());
}

std::vector<double> kto_loss_grad(const KtoBatch& b) {
  check_batch(b);
  const double n = static_cast<double>(b.log_ratios.size());
  std::vector<double> g(b.log_ratios.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = b.beta * b.log_ratios[i] - b.z_ref;
    const double s = sigmoid(x);
    const double ds = s * (1.0 - s) * b.beta;
    g[i] = (b.desirability[i] == Desirability::Desirable ? -b.w_desirable * ds : b.w_undesirable * ds) / n;
  }
  return g;
}

double estimate_z_ref(const std::vector<double>& log_ratios) {
  if (log_ratios.empty()) throw Error("estimate_z_ref: empty batch");
  const double mean = std::accumulate(log_ratios.begin(), log_ratios.end(), 0.0) /
                      static_cast<double>(log_ratios.size());
  return std::max(0.0, mean);
}

std::vector<KtoManifestEntry> kto_manifest_from_json(std::string_view text) {
  const auto j = detail::parse_json(text, "KTO manifest");
  if (!j.is_array()) throw ParseError("$: expected an array");
  std::vector<KtoManifestEntry> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "$[" + std::to_string(i) + "]";
    KtoManifestEntry e;
    const auto& id = detail::require(j[i], "id", path);
    if (!id.is_string()) throw ParseError(path + ".id: expected a string");
    e.id = id.get<std::string>();
    const auto& des = detail::require(j[i], "desirable", path);
    if (!des.is_boolean()) throw ParseError(path + ".desirable: expected a boolean");
    e.desirable = des.get<bool>();
    e.log_ratio = detail::require_number(detail::require(j[i], "log_ratio", path), path + ".log_ratio");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<KtoManifestEntry> load_kto_manifest(const std::filesystem::path& path) {
  return kto_manifest_from_json(read_text_file(path));
}

KtoBatch kto_batch_from_manifest(const std::vector<KtoManifestEntry>& entries, double beta,
                                 double w_desirable, double w_undesirable) {
  KtoBatch b;
  b.beta = beta;
  b.w_desirable = w_desirable;
  b.w_undesirable = w_undesirable;
  for (const auto& e : entries) {
    b.log_ratios.push_back(e.log_ratio);
    b.desirability.push_back(e.desirable ? Desirability::Desirable : Desirability::Undesirable);
  }
  b.z_ref = estimate_z_ref(b.log_ratios);
  return b;
}

namespace {

std::vector<double> toy_velocity(const std::array<double, 2>& theta, const FmSample& s) {
  std::vector<double> v(s.xt.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = theta[0] * s.xt[i] + theta[1] * s.t;
  return v;
}

KtoBatch toy_batch(const std::array<double, 2>& theta, const ToyProblem& p) {
  KtoBatch b;
  b.beta = p.beta;
  b.z_ref = p.z_ref;
  b.w_desirable = p.w_desirable;
  b.w_undesirable = p.w_undesirable;
  b.desirability = p.kto_flags;
  for (const auto& f : p.kto_features) b.log_ratios.push_back(theta[0] * f[0] + theta[1] * f[1]);
  return b;
}

}  // namespace

double toy_combined_loss(const std::array<double, 2>& theta, const ToyProblem& p) {
  double fm = 0.0;
  for (const auto& s : p.fm) fm += fm_loss(toy_velocity(theta, s), s);
  if (!p.fm.empty()) fm /= static_cast<double>(p.fm.size());
  const double kto = p.kto_features.empty() ? 0.0 : kto_loss(toy_batch(theta, p));
  return fm + kto;
}

std::array<double, 2> toy_combined_grad(const std::array<double, 2>& theta, const ToyProblem& p) {
  std::array<double, 2> g{0.0, 0.0};
  for (const auto& s : p.fm) {
    const auto dv = fm_loss_grad(toy_velocity(theta, s), s);
    for (std::size_t i = 0; i < dv.size(); ++i) {
      g[0] += dv[i] * s.xt[i];
      g[1] += dv[i] * s.t;
    }
  }
  if (!p.fm.empty()) {
    g[0] /= static_cast<double>(p.fm.size());
    g[1] /= static_cast<double>(p.fm.size());
  }
  if (!p.kto_features.empty()) {
    const auto dr = kto_loss_grad(toy_batch(theta, p));
    for (std::size_t i = 0; i < dr.size(); ++i) {
      g[0] += dr[i] * p.kto_features[i][0];
      g[1] += dr[i] * p.kto_features[i][1];
    }
  }
  return g;
}

}  // namespace ocular
