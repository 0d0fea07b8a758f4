#include <benchmark/benchmark.h>

#include <vector>

#include "ppdtd/algorithm.hpp"
#include "ppdtd/mdp.hpp"
#include "ppdtd/network.hpp"
#include "ppdtd/sampling.hpp"

namespace {

using namespace ppdtd;

// One PP-DTD iteration on a factored navigation task with n agents.
void BM_PpdtdStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const NavigationTask task = build_factored_navigation(n, 4, 1);
  const PolicyChain chain = induce_chain(task.mdp, task.policy);
  const FeatureMap features = rbf_features(task.state_coordinates, 5, 1.0, 1);
  const MixingMatrices mixing = build_weights(ring_plus_random(n, 0.3, 1));
  const Sampler sampler(task.mdp, task.policy, chain);
  const StepContext ctx{&mixing, &features, task.mdp.gamma(), {}};
  SwarmState swarm = initial_swarm(n, Eigen::VectorXd::Zero(5));
  StepWorkspace ws;
  Rng rng(1);
  std::vector<AgentSample> xs;
  std::size_t t = 0;
  for (auto _ : state) {
    sampler.iid(rng).split(xs);
    ppdtd_step(swarm, xs, {1.0 / static_cast<double>(t + 5), 0.1 / static_cast<double>(t + 5)}, ctx, ws);
    ++t;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PpdtdStep)->Arg(20)->Arg(40)->Arg(80);

void BM_PushSaStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const NavigationTask task = build_factored_navigation(n, 4, 1);
  const PolicyChain chain = induce_chain(task.mdp, task.policy);
  const FeatureMap features = rbf_features(task.state_coordinates, 5, 1.0, 1);
  const MixingMatrices mixing = build_weights(ring_plus_random(n, 0.3, 1));
  const Sampler sampler(task.mdp, task.policy, chain);
  const StepContext ctx{&mixing, &features, task.mdp.gamma(), {}};
  PushSaState swarm = initial_push_sa(n, Eigen::VectorXd::Zero(5));
  Rng rng(1);
  std::vector<AgentSample> xs;
  std::size_t t = 0;
  for (auto _ : state) {
    sampler.iid(rng).split(xs);
    push_sa_step(swarm, xs, 1.0 / static_cast<double>(t + 5), ctx);
    ++t;
  }
}
BENCHMARK(BM_PushSaStep)->Arg(20)->Arg(80);

void BM_InduceChain(benchmark::State& state) {
  const NavigationTask task = build_cooperative_navigation(2, static_cast<std::size_t>(state.range(0)), 0.5, 1);
  for (auto _ : state) benchmark::DoNotOptimize(induce_chain(task.mdp, task.policy));
}
BENCHMARK(BM_InduceChain)->Arg(2)->Arg(3);

void BM_StationaryDistribution(benchmark::State& state) {
  const auto S = static_cast<std::size_t>(state.range(0));
  const TabularMdp mdp = random_mdp({S, 1, 2, 1.0, 0.9}, 1);
  const PolicyChain chain = induce_chain(mdp, JointPolicy::uniform(mdp));
  for (auto _ : state) benchmark::DoNotOptimize(stationary_distribution(chain.P));
}
BENCHMARK(BM_StationaryDistribution)->Arg(10)->Arg(100);

void BM_MixingTime(benchmark::State& state) {
  const NavigationTask task = build_factored_navigation(3, static_cast<std::size_t>(state.range(0)), 1);
  const PolicyChain chain = induce_chain(task.mdp, task.policy);
  for (auto _ : state) benchmark::DoNotOptimize(mixing_time(chain.P, chain.d, 1e-6));
}
BENCHMARK(BM_MixingTime)->Arg(3)->Arg(6);

}  // namespace
BENCHMARK_MAIN();
