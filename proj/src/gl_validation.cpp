#include "committor/gl_validation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

namespace committor {

HitStatistics hitting_test(const IsoSurfaceBatch& batch, const PotentialSpec& spec,
                           const RegionSpec& region, std::size_t trajectories, double dt,
                           long max_steps, double beta, const Rng& master, int workers) {
  if (trajectories < 1) throw std::invalid_argument("hitting_test: need at least 1 trajectory");
  if (batch.states.empty()) throw std::invalid_argument("hitting_test: empty state batch");

  const std::size_t m = batch.states.size();
  HitStatistics stats;
  stats.trajectories_per_state = trajectories;
  stats.fractions.assign(m, 0.0);
  stats.hits.assign(m, 0);
  stats.timeouts.assign(m, 0);
  stats.null_sd = 0.5 / std::sqrt(static_cast<double>(trajectories));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;

  auto run_state = [&](std::size_t j) {
    const Vec& x0 = batch.states[j];
    Rng rng = master.stream(fnv1a(x0.data(), x0.size() * sizeof(double)));
    std::size_t hit_b = 0, usable = 0, timed_out = 0;
    for (std::size_t k = 0; k < trajectories; ++k) {
      const HitOutcome out = simulate_until_hit(spec, region, x0, dt, max_steps, rng, beta);
      if (out == HitOutcome::Timeout) {
        ++timed_out;
      } else {
        ++usable;
        if (out == HitOutcome::HitB) ++hit_b;
      }
    }
    if (usable == 0) {
      bool expected = false;
      if (failed.compare_exchange_strong(expected, true))
        failure = "hitting_test: all trajectories timed out for state " + std::to_string(j);
      return;
    }
    stats.hits[j] = hit_b;
    stats.timeouts[j] = timed_out;
    stats.fractions[j] = static_cast<double>(hit_b) / static_cast<double>(usable);
  };

  if (workers <= 1) {
    for (std::size_t j = 0; j < m && !failed.load(); ++j) run_state(j);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t j = next.fetch_add(1);
          if (j >= m || failed.load()) return;
          run_state(j);
        }
      });
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw ValidationError(failure);

  for (std::size_t t : stats.timeouts) stats.timeout_count += t;
  // summaries run over sorted fractions so they are exactly invariant under
  // reordering of the states
  Vec sorted = stats.fractions;
  std::sort(sorted.begin(), sorted.end());
  stats.mean = mean(sorted);
  stats.variance = (m >= 2) ? variance(sorted) : 0.0;
  const KsResult ks = ks_test_normal(sorted, 0.5, stats.null_sd);
  stats.ks_statistic = ks.statistic;
  stats.ks_p_value = ks.p_value;
  stats.qq = qq_pairs_normal(sorted, 0.5, stats.null_sd);
  return stats;
}

void write_hit_statistics(const HitStatistics& stats, const std::string& dir) {
  {
    std::ofstream os(dir + "/fractions.csv");
    if (!os) throw std::runtime_error("write_hit_statistics: cannot open fractions.csv");
    os << "state,fraction,hits,timeouts\n";
    os.precision(17);
    for (std::size_t j = 0; j < stats.fractions.size(); ++j)
      os << j << ',' << stats.fractions[j] << ',' << stats.hits[j] << ',' << stats.timeouts[j]
         << '\n';
  }
  {
    std::ofstream os(dir + "/qq.csv");
    os << "empirical_quantile,normal_quantile\n";
    os.precision(17);
    for (const auto& [e, n] : stats.qq) os << e << ',' << n << '\n';
  }
  {
    // histogram over mean +- 4 null sd, matched to the reference density scale
    const int bins = 21;
    const double lo = 0.5 - 4.0 * stats.null_sd, hi = 0.5 + 4.0 * stats.null_sd;
    const double w = (hi - lo) / bins;
    std::vector<std::size_t> counts(bins, 0);
    for (double f : stats.fractions) {
      int b = static_cast<int>((f - lo) / w);
      if (b >= 0 && b < bins) ++counts[static_cast<std::size_t>(b)];
    }
    std::ofstream os(dir + "/histogram.csv");
    os << "bin_center,count,density\n";
    os.precision(17);
    const double n = static_cast<double>(stats.fractions.size());
    for (int b = 0; b < bins; ++b)
      os << lo + (b + 0.5) * w << ',' << counts[static_cast<std::size_t>(b)] << ','
         << static_cast<double>(counts[static_cast<std::size_t>(b)]) / (n * w) << '\n';
  }
  {
    std::ofstream os(dir + "/ks_summary.json");
    os.precision(17);
    os << "{\n"
       << "  \"states\": " << stats.fractions.size() << ",\n"
       << "  \"trajectories_per_state\": " << stats.trajectories_per_state << ",\n"
       << "  \"mean\": " << stats.mean << ",\n"
       << "  \"variance\": " << stats.variance << ",\n"
       << "  \"null_sd\": " << stats.null_sd << ",\n"
       << "  \"ks_statistic\": " << stats.ks_statistic << ",\n"
       << "  \"ks_p_value\": " << stats.ks_p_value << ",\n"
       << "  \"timeout_count\": " << stats.timeout_count << "\n"
       << "}\n";
  }
}

}  // namespace committor
