#include "diffusion/scheduler.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace diffusion {

std::string_view to_string(DispatchPolicy policy) {
  switch (policy) {
    case DispatchPolicy::FirstAvailable: return "first-available";
    case DispatchPolicy::FirstCacheAvailable: return "first-cache-available";
    case DispatchPolicy::MaxCacheHit: return "max-cache-hit";
    case DispatchPolicy::MaxComputeUtil: return "max-compute-util";
  }
  return "?";
}

std::optional<DispatchPolicy> parse_dispatch_policy(std::string_view text) {
  for (auto p : {DispatchPolicy::FirstAvailable, DispatchPolicy::FirstCacheAvailable, DispatchPolicy::MaxCacheHit,
                 DispatchPolicy::MaxComputeUtil}) {
    if (text == to_string(p)) return p;
  }
  return std::nullopt;
}

namespace {

struct Candidate {
  ExecutorId id;
  double score;
};

class Round {
 public:
  Round(const SchedulerConfig& config, std::span<const ExecutorSlot> executors, const LocationIndex& index,
        const ObjectWeight& weight)
      : config_(config), index_(index), weight_(weight) {
    slot_of_.reserve(executors.size());
    for (std::size_t i = 0; i < executors.size(); ++i) {
      if (!slot_of_.emplace(executors[i].id, i).second) {
        throw std::logic_error("executor " + std::to_string(to_underlying(executors[i].id)) +
                               " listed twice in scheduling round");
      }
      if (executors[i].idle) idle_.push_back(executors[i].id);
    }
    std::sort(idle_.begin(), idle_.end());
    free_.assign(idle_.size(), true);
    free_count_ = idle_.size();
  }

  std::size_t free_count() const { return free_count_; }
  std::size_t lookups() const { return lookups_; }

  bool is_free(ExecutorId id) const {
    auto it = std::lower_bound(idle_.begin(), idle_.end(), id);
    return it != idle_.end() && *it == id && free_[static_cast<std::size_t>(it - idle_.begin())];
  }

  void take(ExecutorId id) {
    auto it = std::lower_bound(idle_.begin(), idle_.end(), id);
    free_[static_cast<std::size_t>(it - idle_.begin())] = false;
    --free_count_;
  }

  std::optional<ExecutorId> first_free() const {
    for (std::size_t i = 0; i < idle_.size(); ++i) {
      if (free_[i]) return idle_[i];
    }
    return std::nullopt;
  }

  // Scores every known executor holding at least one required object and
  // fills the per-object hints. Candidates come back in ascending id order.
  std::vector<Candidate> score(const Task& task, std::vector<Hint>& hints) {
    std::vector<Candidate> scores;
    hints.clear();
    hints.reserve(task.required_objects.size());
    for (ObjectId obj : task.required_objects) {
      ++lookups_;
      const double w = config_.byte_weighted && weight_ ? weight_(obj) : 1.0;
      Hint hint{obj, {}};
      for (ExecutorId e : index_.locate(obj)) {
        if (!slot_of_.contains(e)) continue;
        hint.sources.push_back(e);
        auto it = std::find_if(scores.begin(), scores.end(), [e](const Candidate& c) { return c.id == e; });
        if (it == scores.end()) {
          scores.push_back({e, w});
        } else {
          it->score += w;
        }
      }
      hints.push_back(std::move(hint));
    }
    std::sort(scores.begin(), scores.end(), [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
    return scores;
  }

  double score_of(const std::vector<Candidate>& scores, ExecutorId id) const {
    for (const auto& c : scores) {
      if (c.id == id) return c.score;
    }
    return 0;
  }

  // Highest-scoring free executor; lowest id on ties, first free if nobody scores.
  std::optional<ExecutorId> best_free(const std::vector<Candidate>& scores) const {
    std::optional<Candidate> best;
    for (const auto& c : scores) {
      if (is_free(c.id) && (!best || c.score > best->score)) best = c;
    }
    if (best && best->score > 0) return best->id;
    return first_free();
  }

 private:
  const SchedulerConfig& config_;
  const LocationIndex& index_;
  const ObjectWeight& weight_;
  std::unordered_map<ExecutorId, std::size_t> slot_of_;
  std::vector<ExecutorId> idle_;
  std::vector<bool> free_;
  std::size_t free_count_ = 0;
  std::size_t lookups_ = 0;
};

}  // namespace

SelectResult select(const SchedulerConfig& config, std::span<const QueuedTask> queue,
                    std::span<const ExecutorSlot> executors, const LocationIndex& index,
                    const ObjectWeight& weight) {
  Round round(config, executors, index, weight);
  SelectResult result;

  const std::size_t window = std::min(queue.size(), std::max<std::size_t>(config.lookahead, 1));
  std::vector<Hint> hints;
  std::vector<bool> placed(window, false);

  if (config.window_match && config.policy == DispatchPolicy::MaxComputeUtil) {
    for (std::size_t pos = 0; pos < window && round.free_count() > 0; ++pos) {
      const Task& task = *queue[pos].task;
      auto scores = round.score(task, hints);
      std::optional<Candidate> best;
      for (const auto& c : scores) {
        if (round.is_free(c.id) && (!best || c.score > best->score)) best = c;
      }
      if (!best || best->score <= 0) continue;
      DispatchDecision d;
      d.task = task.id;
      d.queue_position = pos;
      d.executor = best->id;
      d.overlap = best->score;
      d.hints = hints;
      round.take(d.executor);
      placed[pos] = true;
      result.decisions.push_back(std::move(d));
    }
  }

  for (std::size_t pos = 0; pos < window && round.free_count() > 0; ++pos) {
    if (placed[pos]) continue;
    const Task& task = *queue[pos].task;
    DispatchDecision d;
    d.task = task.id;
    d.queue_position = pos;

    switch (config.policy) {
      case DispatchPolicy::FirstAvailable: {
        d.executor = *round.first_free();
        break;
      }
      case DispatchPolicy::FirstCacheAvailable: {
        auto scores = round.score(task, hints);
        d.executor = *round.first_free();
        d.overlap = round.score_of(scores, d.executor);
        d.hints = hints;
        break;
      }
      case DispatchPolicy::MaxComputeUtil: {
        auto scores = round.score(task, hints);
        d.executor = *round.best_free(scores);
        d.overlap = round.score_of(scores, d.executor);
        d.hints = hints;
        break;
      }
      case DispatchPolicy::MaxCacheHit: {
        auto scores = round.score(task, hints);
        double top = 0;
        for (const auto& c : scores) top = std::max(top, c.score);
        std::optional<ExecutorId> chosen;
        if (top == 0) {
          // Every executor ties at zero; any free one is a best candidate.
          chosen = round.first_free();
        } else {
          for (const auto& c : scores) {
            if (c.score == top && round.is_free(c.id)) {
              chosen = c.id;
              break;
            }
          }
        }
        if (!chosen && config.max_defer && queue[pos].deferrals >= *config.max_defer) {
          chosen = round.best_free(scores);
          d.forced = true;
        }
        if (!chosen) {
          result.deferred.push_back(pos);
          continue;
        }
        d.executor = *chosen;
        d.overlap = round.score_of(scores, d.executor);
        d.hints = hints;
        break;
      }
    }
    round.take(d.executor);
    result.decisions.push_back(std::move(d));
  }
  result.index_lookups = round.lookups();
  return result;
}

std::size_t WaitQueue::enqueue(const Task& task) {
  std::lock_guard lock(mutex_);
  tasks_.push_back({&task, 0});
  return tasks_.size();
}

std::size_t WaitQueue::size() const {
  std::lock_guard lock(mutex_);
  return tasks_.size();
}

std::vector<QueuedTask> WaitQueue::peek(std::size_t n) const {
  std::lock_guard lock(mutex_);
  n = std::min(n, tasks_.size());
  return {tasks_.begin(), tasks_.begin() + static_cast<std::ptrdiff_t>(n)};
}

void WaitQueue::remove(std::vector<std::size_t> positions) {
  std::sort(positions.begin(), positions.end());
  std::lock_guard lock(mutex_);
  // Removals cluster near the head, so compact the prefix in one pass.
  if (positions.empty()) return;
  const std::size_t end = positions.back() + 1;
  std::size_t write = 0;
  std::size_t next = 0;
  for (std::size_t read = 0; read < end; ++read) {
    if (next < positions.size() && positions[next] == read) {
      ++next;
      continue;
    }
    tasks_[write++] = tasks_[read];
  }
  tasks_.erase(tasks_.begin() + static_cast<std::ptrdiff_t>(write), tasks_.begin() + static_cast<std::ptrdiff_t>(end));
}

void WaitQueue::note_deferred(std::span<const std::size_t> positions) {
  std::lock_guard lock(mutex_);
  for (std::size_t p : positions) ++tasks_[p].deferrals;
}

}  // namespace diffusion
