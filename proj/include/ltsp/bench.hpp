#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ltsp/lti.hpp"
#include "ltsp/sysid.hpp"

namespace ltsp::bench {

enum class Method { lts_p, ho_kalman_full };
enum class Mode { length_sweep, count_sweep };
enum class NoiseMode { process_and_observation, observation_only };

std::string to_string(Method m);
std::string to_string(Mode m);
std::string to_string(NoiseMode m);

// One experiment: sweep either rollout length (M fixed at m_multiplier * n)
// or rollout count (T fixed) until the synthesized controller stabilizes the
// ground-truth plant, per (n, sigma, trial) cell and per method.
struct ExperimentSpec {
    int k = 5;
    std::vector<int> n_list;
    std::vector<double> sigma_list;
    int trials = 30;
    std::vector<Method> methods = {Method::lts_p, Method::ho_kalman_full};
    Mode mode = Mode::length_sweep;
    int m = 4;  // lift for lts_p

    // length_sweep: M = m_multiplier * n, T over {t_start, +t_step, .., t_cap}
    int m_multiplier = 4;
    int t_start = 10;
    int t_step = 4;
    int t_cap = 200;

    // count_sweep: T = fixed_t, M over {m_start, +m_step, .., m_cap}
    int fixed_t = 70;
    int m_start = 5;
    int m_step = 5;
    int m_cap = 400;

    // plant generation
    int d_u = 0;  // 0: defaults to k
    int d_y = 0;
    double unstable_min = 1.1;
    double unstable_max = 2.0;
    double stable_min = 0.0;
    double stable_max = 0.5;
    double basis_conditioning_cap = 100.0;
    double stable_coupling = 1.0;

    double sigma_u = 1.0;
    NoiseMode noise_mode = NoiseMode::process_and_observation;
    bool auto_k = false;  // lts_p order detection instead of the planted k

    std::uint64_t seed = 0;
    int threads = 0;  // 0: hardware concurrency

    void validate() const;
};

struct TrialRecord {
    Method method = Method::lts_p;
    int n = 0;
    double sigma = 0.0;
    int trial = 0;
    int cost = 0;  // minimal T (length mode) or minimal M (count mode); cap if censored
    bool censored = false;
    bool stabilized = false;
    double closed_loop_radius = 0.0;  // at the recorded sweep point
};

std::vector<TrialRecord> run_length_sweep(const ExperimentSpec& spec);
std::vector<TrialRecord> run_count_sweep(const ExperimentSpec& spec);

// Full-order realization baseline: identify with k = full_order, m = 0 and
// the widest centered window p = q = floor(T / 2).
sysid::ReducedModel ho_kalman_full_baseline(const lti::RolloutSet& data, int full_order);

// Aggregates per (method, n, sigma):
//   method,n,sigma,trials,median_cost,mean_cost,std_cost,censored_frac
// median_cost reads "censored" when at least half the cell is censored.
std::string summarize(const std::vector<TrialRecord>& records);

}  // namespace ltsp::bench
