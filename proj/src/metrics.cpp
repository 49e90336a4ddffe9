#include "cmcm/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cmcm/error.hpp"

namespace cmcm {

Roc roc(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty()) throw InvalidArgument("roc: need genuine and impostor scores");
  for (double s : genuine)
    if (!std::isfinite(s)) throw InvalidArgument("roc: non-finite genuine score");
  for (double s : impostor)
    if (!std::isfinite(s)) throw InvalidArgument("roc: non-finite impostor score");

  std::vector<double> g(genuine.begin(), genuine.end());
  std::vector<double> im(impostor.begin(), impostor.end());
  std::sort(g.begin(), g.end(), std::greater<>());
  std::sort(im.begin(), im.end(), std::greater<>());
  std::vector<double> thresholds;
  thresholds.reserve(g.size() + im.size());
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(thresholds), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double ng = static_cast<double>(g.size());
  const double ni = static_cast<double>(im.size());
  Roc out;
  out.points.push_back({0.0, 0.0});
  std::size_t gi = 0;
  std::size_t ii = 0;
  for (double t : thresholds) {
    while (gi < g.size() && g[gi] >= t) ++gi;
    while (ii < im.size() && im[ii] >= t) ++ii;
    out.points.push_back({static_cast<double>(ii) / ni, static_cast<double>(gi) / ng});
  }

  bool eer_found = false;
  for (std::size_t k = 1; k < out.points.size(); ++k) {
    const RocPoint& a = out.points[k - 1];
    const RocPoint& b = out.points[k];
    out.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    if (!eer_found) {
      const double fa = a.fpr + a.tpr - 1.0;
      const double fb = b.fpr + b.tpr - 1.0;
      if (fb >= 0.0) {
        const double s = fb == fa ? 0.0 : -fa / (fb - fa);
        out.eer = a.fpr + s * (b.fpr - a.fpr);
        eer_found = true;
      }
    }
  }
  return out;
}

int otsu_threshold(std::span<const std::uint8_t> values) {
  std::array<std::uint64_t, 256> hist{};
  for (std::uint8_t v : values) ++hist[v];
  const auto total = static_cast<long double>(values.size());
  long double sum_all = 0.0L;
  for (int v = 0; v < 256; ++v) sum_all += static_cast<long double>(v) * hist[v];

  // Between-class variance times total^2 is (s0*T - S*w0)^2 / (w0*w1).
  int best_t = 0;
  long double best = -1.0L;
  long double w0 = 0.0L;
  long double sum0 = 0.0L;
  for (int t = 0; t < 256; ++t) {
    w0 += hist[t];
    sum0 += static_cast<long double>(t) * hist[t];
    const long double w1 = total - w0;
    long double between = 0.0L;
    if (w0 > 0.0L && w1 > 0.0L) {
      const long double diff = sum0 * total - sum_all * w0;
      between = diff * diff / (w0 * w1);
    }
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

}  // namespace cmcm
