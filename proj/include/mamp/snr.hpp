#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace mamp {

// Receive-SNR formulas for a cascade of K_a amplifying surfaces.
//
// `gamma` holds the K_a+1 per-hop SNRs: gamma[0] = P_B f_0 / sigma_F^2,
// gamma[k] = P_k f_k / sigma_F^2 for the inter-active hops, and the last one
// uses the receiver noise sigma^2. `n` holds the K_a active element counts.
// With K_a = 0 the single entry of `gamma` is already the end-to-end SNR.
//
// Everything is accumulated as 1/SNR so no N^{K_a} product is ever formed.

namespace detail {
inline void check_chain(std::span<const double> gamma, std::span<const double> n) {
  if (gamma.size() != n.size() + 1) throw std::invalid_argument("need exactly one more per-hop SNR than active surfaces");
  for (double g : gamma)
    if (!(g > 0.0)) throw std::invalid_argument("per-hop SNRs must be positive");
  for (double v : n)
    if (!(v >= 1.0)) throw std::invalid_argument("element counts must be >= 1");
}
}  // namespace detail

// Exact SNR with amplification factors that ignore upstream noise. After the
// first rank-1 hop the forwarded noise is coherent across the next array, so
// it collects the same N^2 array gain as the signal:
//   u_1 = 1/g_1,  u_{k+1} = (1 + u_k) / (N_k g_{k+1}),
//   1/SNR = sum_{k<=K_a} u_k / N_k + u_{K_a+1}.
inline double cascade_snr(std::span<const double> gamma, std::span<const double> n) {
  detail::check_chain(gamma, n);
  if (n.empty()) return gamma[0];
  double u = 1.0 / gamma[0];
  double inv = 0.0;
  for (std::size_t k = 0; k < n.size(); ++k) {
    inv += u / n[k];
    u = (1.0 + u) / (n[k] * gamma[k + 1]);
  }
  return 1.0 / (inv + u);
}

// High-SNR form: every product of two or more 1/g terms dropped.
//   1/SNR = 1/(N_1 g_1) + sum_{k=2..K_a} 1/(N_{k-1} N_k g_k) + 1/(N_{K_a} g_{K_a+1}).
// Never below cascade_snr.
inline double cascade_snr_approx(std::span<const double> gamma, std::span<const double> n) {
  detail::check_chain(gamma, n);
  if (n.empty()) return gamma[0];
  const std::size_t ka = n.size();
  double inv = 1.0 / (n[0] * gamma[0]);
  for (std::size_t k = 1; k < ka; ++k) inv += 1.0 / (n[k - 1] * n[k] * gamma[k]);
  inv += 1.0 / (n[ka - 1] * gamma[ka]);
  return 1.0 / inv;
}

// The textbook cascade that treats forwarded amplification noise as spatially
// white at every downstream array (array gain N instead of N^2):
//   N^{K_a} / sum_{k=1}^{K_a+1} sum_{t=1}^{k} prod_{i=t}^{k}(1/g_i) N^{max(t-2,0)}.
// Matches cascade_snr for K_a = 1 and overestimates it beyond.
inline double snr_white_forwarded_noise(std::span<const double> gamma, double n) {
  const std::vector<double> ns(gamma.empty() ? 0 : gamma.size() - 1, n);
  detail::check_chain(gamma, ns);
  const int ka = static_cast<int>(ns.size());
  if (ka == 0) return gamma[0];
  double inv = 0.0;
  for (int k = 1; k <= ka + 1; ++k)
    for (int t = 1; t <= k; ++t) {
      double prod = 1.0;
      for (int i = t; i <= k; ++i) prod /= gamma[static_cast<std::size_t>(i - 1)];
      inv += prod * std::pow(n, std::max(t - 2, 0) - ka);
    }
  return 1.0 / inv;
}

//   N^{K_a} / sum_{k=1}^{K_a+1} (1/g_k) N^{max(k-2,0)}.
inline double approx_snr_white_forwarded_noise(std::span<const double> gamma, double n) {
  const std::vector<double> ns(gamma.empty() ? 0 : gamma.size() - 1, n);
  detail::check_chain(gamma, ns);
  const int ka = static_cast<int>(ns.size());
  if (ka == 0) return gamma[0];
  double inv = 0.0;
  for (int k = 1; k <= ka + 1; ++k)
    inv += std::pow(n, std::max(k - 2, 0) - ka) / gamma[static_cast<std::size_t>(k - 1)];
  return 1.0 / inv;
}

// Single active surface in terms of the raw link quantities.
inline double samp_snr(double p_bs, double p_amp, double n, double f_ba, double f_au, double sigma2,
                       double sigma2_f) {
  return p_bs * n * f_au * f_ba / (f_au * sigma2_f + sigma2 * (p_bs * f_ba + sigma2_f) / p_amp);
}

inline double achievable_rate(double snr) {
  if (!(snr >= 0.0)) throw std::domain_error("SNR must be non-negative");
  return std::log2(1.0 + snr);
}

}  // namespace mamp
