#include "alamp/engine.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <stdexcept>
#include <thread>

#include "alamp/random.hpp"

namespace alamp {

namespace {

constexpr std::uint64_t kSelectionStream = 0x5e1ec7;
constexpr std::uint64_t kCvStream = 0xc0ffee;

struct NamedStrategy {
  Strategy strategy;
  std::string_view name;
};

constexpr NamedStrategy kNames[] = {
    {Strategy::kRandom, "random"},      {Strategy::kMargin, "margin"},
    {Strategy::kCoreset, "coreset"},    {Strategy::kAlamp, "alamp"},
    {Strategy::kAlampDiv, "alamp-div"}, {Strategy::kRandDiv, "rand-div"},
    {Strategy::kMargDiv, "marg-div"},
};

std::vector<SampleId> sorted(std::vector<SampleId> ids) {
  std::sort(ids.begin(), ids.end());
  return ids;
}

IterationRecord make_record(const Dataset& train, const Dataset& test, const PoolState& state,
                            const Model& model, std::vector<SampleId> selected) {
  IterationRecord rec;
  rec.iteration = state.iteration;
  rec.labeled_count = static_cast<std::int64_t>(state.labeled_ids.size());
  rec.accuracy = accuracy(model, test);
  rec.class_counts = count_classes(train.gather_labels(state.labeled_ids), train.n_classes());
  rec.imbalance = imbalance_ratio(rec.class_counts);
  rec.selected = std::move(selected);
  return rec;
}

/// Runs `task(i)` for i in [0, n) on up to `threads` workers.
template <typename Task>
void parallel_for(std::size_t n, int threads, Task&& task) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  for (const auto& n : kNames)
    if (n.strategy == s) return n.name;
  throw std::invalid_argument("unknown strategy");
}

Strategy parse_strategy(std::string_view name) {
  for (const auto& n : kNames)
    if (n.name == name) return n.strategy;
  throw std::invalid_argument("unknown acquisition function '" + std::string(name) +
                              "' (expected random, margin, coreset, alamp, alamp-div, rand-div "
                              "or marg-div)");
}

void BudgetPlan::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (total_budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (total_budget % iterations != 0)
    throw std::invalid_argument("budget " + std::to_string(total_budget) +
                                " is not divisible by iterations " + std::to_string(iterations));
}

void BudgetPlan::validate(std::int64_t pool_size) const {
  validate();
  if (total_budget >= pool_size)
    throw std::invalid_argument("budget " + std::to_string(total_budget) +
                                " must be smaller than the pool size " + std::to_string(pool_size));
}

std::uint64_t selection_seed(std::uint64_t run_seed, int iteration) {
  return derive_seed(derive_seed(run_seed, kSelectionStream), static_cast<std::uint64_t>(iteration));
}

std::uint64_t cv_seed(std::uint64_t run_seed, int iteration) {
  return derive_seed(derive_seed(run_seed, kCvStream), static_cast<std::uint64_t>(iteration));
}

Model fit_pool_model(const Dataset& train, std::span<const SampleId> labeled_ids,
                     std::uint64_t seed, const EngineOptions& options) {
  const Matrix x = train.gather(labeled_ids);
  const std::vector<int> y = train.gather_labels(labeled_ids);
  const ClassCounts counts = count_classes(y, train.n_classes());
  const std::vector<double> weights =
      options.cost_sensitive ? class_weights(counts)
                             : std::vector<double>(static_cast<std::size_t>(train.n_classes()), 1.0);

  // cross-validate on the classes that can be split
  std::vector<Eigen::Index> cv_rows;
  int cv_classes = 0;
  for (auto c : counts.counts) cv_classes += c >= 2;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (counts.counts[static_cast<std::size_t>(y[i])] >= 2) cv_rows.push_back(static_cast<Eigen::Index>(i));

  double reg = options.fallback_reg;
  if (cv_classes >= 2) {
    const Matrix cv_x = x(cv_rows, Eigen::all);
    std::vector<int> cv_y;
    cv_y.reserve(cv_rows.size());
    for (auto r : cv_rows) cv_y.push_back(y[static_cast<std::size_t>(r)]);
    reg = select_reg_param(cv_x, cv_y, train.n_classes(), options.reg_grid, options.folds, seed,
                           weights, options.train);
  }
  return alamp::train(x, y, weights, reg, options.train);
}

InitResult init_pool(const Dataset& train, const BudgetPlan& plan, std::uint64_t seed,
                     const EngineOptions& options) {
  plan.validate(train.n_samples());
  const std::vector<SampleId> all = sorted(train.sample_ids());
  const auto batch = static_cast<std::size_t>(plan.batch());

  for (int attempt = 0; attempt < options.max_init_attempts; ++attempt) {
    std::vector<SampleId> picked = random_select(all, batch, seed + static_cast<std::uint64_t>(attempt));
    const auto labels = train.gather_labels(picked);
    if (std::adjacent_find(labels.begin(), labels.end(), std::not_equal_to<>()) == labels.end())
      continue;  // a single class cannot be trained on

    InitResult init;
    init.state.labeled_ids = sorted(picked);
    std::set_difference(all.begin(), all.end(), init.state.labeled_ids.begin(),
                        init.state.labeled_ids.end(), std::back_inserter(init.state.unlabeled_ids));
    init.state.iteration = 0;
    init.model = fit_pool_model(train, init.state.labeled_ids, cv_seed(seed, 0), options);
    return init;
  }
  throw std::runtime_error("initial batch covered a single class in " +
                           std::to_string(options.max_init_attempts) + " draws");
}

std::vector<SampleId> select_batch(Strategy strategy, const PoolState& state,
                                   const ProbMatrix& current, std::size_t batch,
                                   std::uint64_t seed, const Dataset& coreset_space) {
  if (batch > state.unlabeled_ids.size())
    throw std::invalid_argument("unlabeled pool exhausted: " + std::to_string(state.unlabeled_ids.size()) +
                                " left, batch " + std::to_string(batch));

  const auto take = [batch](const std::vector<SampleId>& order) {
    return std::vector<SampleId>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(batch));
  };
  // alamp ordering, or plain margin ordering before a previous model exists
  const auto shift_order = [&] {
    const ScoredPool curr = margin_scores(current);
    if (!state.prev_probs) return curr.order;
    return alamp_scores(margin_scores(*state.prev_probs), curr).order;
  };

  switch (strategy) {
    case Strategy::kRandom:
      return random_select(state.unlabeled_ids, batch, seed);
    case Strategy::kMargin:
      return take(margin_scores(current).order);
    case Strategy::kCoreset:
      return coreset_select(coreset_space, state.labeled_ids, state.unlabeled_ids, batch);
    case Strategy::kAlamp:
      return take(shift_order());
    case Strategy::kAlampDiv: {
      const PseudoClassMap pseudo = state.prev_pseudo ? *state.prev_pseudo : pseudo_classes(current);
      return diversify(shift_order(), pseudo, batch);
    }
    case Strategy::kRandDiv:
      return diversify(random_order(state.unlabeled_ids, seed), pseudo_classes(current), batch);
    case Strategy::kMargDiv:
      return diversify(margin_scores(current).order, pseudo_classes(current), batch);
  }
  throw std::invalid_argument("unknown strategy");
}

StepResult step(const PoolState& state, const Model& model, Strategy strategy,
                const Dataset& train, const BudgetPlan& plan, std::uint64_t run_seed,
                const EngineOptions& options) {
  const auto batch = static_cast<std::size_t>(plan.batch());
  const int next = state.iteration + 1;

  ProbMatrix current = predict_proba(model, train.gather(state.unlabeled_ids), state.unlabeled_ids);
  std::optional<Dataset> space;
  if (strategy == Strategy::kCoreset)
    space.emplace(model.standardizer.apply(train.features()), train.labels(), train.n_classes(),
                  train.sample_ids());
  std::vector<SampleId> selected =
      select_batch(strategy, state, current, batch, selection_seed(run_seed, next),
                   space ? *space : train);

  StepResult out;
  std::vector<SampleId> picked = sorted(selected);
  if (std::adjacent_find(picked.begin(), picked.end()) != picked.end())
    throw std::logic_error("selection contains duplicates");
  std::set_union(state.labeled_ids.begin(), state.labeled_ids.end(), picked.begin(), picked.end(),
                 std::back_inserter(out.state.labeled_ids));
  std::set_difference(state.unlabeled_ids.begin(), state.unlabeled_ids.end(), picked.begin(),
                      picked.end(), std::back_inserter(out.state.unlabeled_ids));
  if (out.state.labeled_ids.size() != state.labeled_ids.size() + batch ||
      out.state.unlabeled_ids.size() + batch != state.unlabeled_ids.size())
    throw std::logic_error("selection left the unlabeled pool");
  out.state.iteration = next;
  out.state.prev_pseudo = pseudo_classes(current);
  out.state.prev_probs = std::move(current);
  out.model = fit_pool_model(train, out.state.labeled_ids, cv_seed(run_seed, next), options);
  out.selected = std::move(selected);
  return out;
}

Report run_experiment(const Dataset& train, const Dataset& test, Strategy strategy,
                      const BudgetPlan& plan, std::uint64_t seed, const InitResult& init,
                      const EngineOptions& options, std::string dataset_name) {
  if (train.dim() != test.dim())
    throw std::invalid_argument("train and test dimensions differ");
  if (train.n_classes() != test.n_classes())
    throw std::invalid_argument("train and test class counts differ");

  Report report;
  report.meta = {std::string(strategy_name(strategy)), seed, plan.total_budget, plan.iterations,
                 std::move(dataset_name), options.cost_sensitive};
  report.records.push_back(
      make_record(train, test, init.state, init.model, init.state.labeled_ids));

  PoolState state = init.state;
  Model model = init.model;
  for (int k = 1; k < plan.iterations; ++k) {
    StepResult r = step(state, model, strategy, train, plan, seed, options);
    report.records.push_back(make_record(train, test, r.state, r.model, std::move(r.selected)));
    state = std::move(r.state);
    model = std::move(r.model);
  }
  return report;
}

Report run_experiment(const Dataset& train, const Dataset& test, Strategy strategy,
                      const BudgetPlan& plan, std::uint64_t seed, const EngineOptions& options,
                      std::string dataset_name) {
  const InitResult init = init_pool(train, plan, seed, options);
  return run_experiment(train, test, strategy, plan, seed, init, options, std::move(dataset_name));
}

std::vector<Report> run_batch(const Dataset& train, const Dataset& test,
                              std::span<const Strategy> strategies,
                              std::span<const std::uint64_t> seeds, const BudgetPlan& plan,
                              const EngineOptions& options, int threads,
                              const std::string& dataset_name) {
  std::vector<std::optional<InitResult>> inits(seeds.size());
  parallel_for(seeds.size(), threads,
               [&](std::size_t i) { inits[i] = init_pool(train, plan, seeds[i], options); });

  std::vector<Report> reports(strategies.size() * seeds.size());
  parallel_for(reports.size(), threads, [&](std::size_t i) {
    const std::size_t s = i / seeds.size();
    const std::size_t r = i % seeds.size();
    reports[i] = run_experiment(train, test, strategies[s], plan, seeds[r], *inits[r], options,
                                dataset_name);
  });
  return reports;
}

}  // namespace alamp
