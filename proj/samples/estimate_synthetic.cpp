// Draws one linear-Pareto dataset and prints all four estimates next to the
// ground truth.

#include <cstdio>

#include "nete/nete.hpp"

int main() {
  nete::SyntheticConfig cfg;
  cfg.alpha = 1.0;
  cfg.beta = 2.5;
  cfg.d_z = 30;
  cfg.d_u = 5;
  cfg.n = 10000;

  nete::Rng rng(7);
  const nete::SyntheticDraw draw = nete::generate_synthetic(cfg, rng);
  std::printf("ground truth %.4f\n", draw.ground_truth);

  nete::NetePipeline pipeline(draw.table, nete::NeteConfig{}, nete::Rng(11));
  for (nete::Method m : nete::kAllMethods) {
    const nete::NeteEstimate est = pipeline.estimate(m);
    std::printf("%-10s theta=%9.4f eta=%8.4f mu=%.4f t=%.3f n_tail=%zu\n", nete::to_string(m), est.theta_hat,
                est.eta_hat, est.mu_hat, est.threshold_t, est.n_tail);
  }
}
