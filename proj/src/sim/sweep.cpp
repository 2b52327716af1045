#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "bcfl/sim/simulation.hpp"

namespace bcfl::sim {

std::vector<RunResult> run_many(const std::vector<ScenarioConfig>& configs, unsigned threads) {
    std::vector<RunResult> results(configs.size());
    std::vector<std::exception_ptr> errors(configs.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, configs.size())));

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < configs.size(); k = next++) {
            try {
                results[k] = run_scenario(configs[k]);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

std::vector<ScalingPoint> scaling_sweep(const ScenarioConfig& base, const std::vector<std::size_t>& worker_counts,
                                        const std::vector<std::uint64_t>& seeds, unsigned threads) {
    std::vector<ScenarioConfig> configs;
    for (auto n : worker_counts) {
        for (auto s : seeds) {
            auto c = base;
            c.workers = n;
            c.seed = s;
            c.trace = false;
            configs.push_back(c);
        }
    }
    auto runs = run_many(configs, threads);

    std::vector<ScalingPoint> points;
    std::size_t k = 0;
    for (auto n : worker_counts) {
        ScalingPoint p;
        p.workers = n;
        for (std::size_t s = 0; s < seeds.size(); ++s, ++k) {
            const auto& m = runs[k].metrics;
            p.mon_busy_per_round_ms += m.mon_busy_per_round_ms();
            p.fl_busy_per_round_ms += m.fl_busy_per_round_ms();
            p.fl_delay_ms += m.mean_e2e_delay_ms;
        }
        const auto count = static_cast<double>(seeds.size());
        p.mon_busy_per_round_ms /= count;
        p.fl_busy_per_round_ms /= count;
        p.fl_delay_ms /= count;
        points.push_back(p);
    }
    return points;
}

std::vector<AttackerPoint> attacker_sweep(const ScenarioConfig& base, const std::vector<std::size_t>& attacker_counts,
                                          const std::vector<std::uint64_t>& seeds,
                                          const std::vector<Scenario>& scenarios, unsigned threads) {
    std::vector<ScenarioConfig> configs;
    for (auto sc : scenarios) {
        for (auto a : attacker_counts) {
            if (2 * a >= base.workers) throw SimulationError("attackers must be fewer than half the workers");
            for (auto s : seeds) {
                auto c = base;
                c.scenario = sc;
                c.attackers = a;
                c.seed = s;
                c.trace = false;
                configs.push_back(c);
            }
        }
    }
    auto runs = run_many(configs, threads);

    std::vector<AttackerPoint> points;
    std::size_t k = 0;
    for (auto sc : scenarios) {
        for (auto a : attacker_counts) {
            AttackerPoint p;
            p.attackers = a;
            p.scenario = sc;
            double sum = 0.0;
            bool all = true;
            for (std::size_t s = 0; s < seeds.size(); ++s, ++k) {
                const auto& t = runs[k].metrics.convergence_time_ms;
                p.convergence_times_ms.push_back(t);
                if (t) {
                    sum += *t;
                } else {
                    all = false;
                }
            }
            if (all && !seeds.empty()) p.mean_convergence_ms = sum / static_cast<double>(seeds.size());
            points.push_back(p);
        }
    }
    return points;
}

}  // namespace bcfl::sim
